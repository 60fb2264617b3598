#include "opal/checkpoint.hpp"

#include <fstream>

namespace opal {

using nlohmann::json;

PolicyParams Checkpoint::policy() const {
    PolicyParams p(arch);
    p.set_flat(params);
    return p;
}

json to_json(const Architecture& a) {
    return {{"input", a.input},       {"hidden", a.hidden},   {"layers", a.layers},
            {"operators", a.operators}, {"phases", a.phases}, {"classes", a.classes},
            {"aux_hidden", a.aux_hidden}};
}

Architecture architecture_from_json(const json& j) {
    Architecture a;
    a.input = j.at("input").get<int>();
    a.hidden = j.at("hidden").get<int>();
    a.layers = j.at("layers").get<int>();
    a.operators = j.at("operators").get<int>();
    a.phases = j.at("phases").get<int>();
    a.classes = j.at("classes").get<int>();
    a.aux_hidden = j.at("aux_hidden").get<int>();
    return a;
}

json to_json(const Checkpoint& ck) {
    return {{"format", kCheckpointFormat},
            {"version", kCheckpointVersion},
            {"architecture", to_json(ck.arch)},
            {"parameter_count", ck.params.size()},
            {"params", std::vector<double>(ck.params.data(), ck.params.data() + ck.params.size())},
            {"seed", ck.seed},
            {"episode", ck.episode},
            {"metadata", ck.metadata}};
}

Checkpoint checkpoint_from_json(const json& j) {
    if (j.value("format", std::string{}) != kCheckpointFormat)
        throw std::invalid_argument("checkpoint: unrecognized format tag");
    if (j.at("version").get<int>() != kCheckpointVersion)
        throw std::invalid_argument("checkpoint: unsupported version " + j.at("version").dump());
    Checkpoint ck;
    ck.arch = architecture_from_json(j.at("architecture"));
    const auto values = j.at("params").get<std::vector<double>>();
    if (values.size() != ck.arch.parameter_count())
        throw std::invalid_argument("checkpoint: " + std::to_string(values.size()) +
                                    " parameters, architecture requires " +
                                    std::to_string(ck.arch.parameter_count()));
    ck.params = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    ck.seed = j.at("seed").get<std::uint64_t>();
    ck.episode = j.at("episode").get<std::size_t>();
    ck.metadata = j.value("metadata", json::object());
    return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream os(tmp);
        if (!os) throw IoError("cannot write checkpoint " + tmp.string());
        os << to_json(ck).dump() << '\n';
        if (!os) throw IoError("failed writing checkpoint " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open checkpoint " + path.string());
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw IoError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
    }
    return checkpoint_from_json(j);
}

}  // namespace opal
