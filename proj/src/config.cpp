#include "opal/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace opal {

namespace {

constexpr std::array<std::pair<Mode, std::string_view>, 6> kModes = {{
    {Mode::train, "train"},
    {Mode::evaluate, "evaluate"},
    {Mode::compare, "compare"},
    {Mode::ablate, "ablate"},
    {Mode::graph_dump, "graph_dump"},
    {Mode::inspect_program, "inspect_program"},
}};

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string fmt(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

template <class T>
std::string join(const std::vector<T>& v) {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    return os.str();
}

std::vector<std::string> split_list(const std::string& field, const std::string& value) {
    std::vector<std::string> out;
    std::istringstream is(value);
    std::string item;
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError(field, "empty list item in '" + value + "'");
        out.push_back(item);
    }
    return out;
}

template <class T>
T parse_number(const std::string& field, const std::string& value) {
    T out{};
    const char* first = value.data();
    const char* last = first + value.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last) throw ConfigError(field, "cannot parse '" + value + "'");
    return out;
}

std::vector<std::size_t> parse_dims(const std::string& field, const std::string& value) {
    std::vector<std::size_t> dims;
    for (const auto& s : split_list(field, value)) dims.push_back(parse_number<std::size_t>(field, s));
    return dims;
}

template <class F>
auto wrap(const std::string& field, F&& f) {
    try {
        return f();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(field, e.what());
    }
}

void set_train(TrainConfig& t, const std::string& key, const std::string& v) {
    const std::string field = "train." + key;
    if (key == "episodes") t.episodes = parse_number<std::size_t>(field, v);
    else if (key == "rho") t.rho = parse_number<double>(field, v);
    else if (key == "beta") t.beta = parse_number<double>(field, v);
    else if (key == "lambda_aux") t.lambda_aux = parse_number<double>(field, v);
    else if (key == "alpha") t.alpha = parse_number<double>(field, v);
    else if (key == "lr") t.lr = parse_number<double>(field, v);
    else if (key == "clip_norm") t.clip_norm = parse_number<double>(field, v);
    else if (key == "hidden") t.hidden = parse_number<int>(field, v);
    else if (key == "checkpoint_every") t.checkpoint_every = parse_number<std::size_t>(field, v);
    else if (key == "task_pool") t.task_pool = wrap(field, [&] { return task_pool_from_string(v); });
    else if (key == "graph_mode") t.graph_mode = wrap(field, [&] { return graph_mode_from_string(v); });
    else if (key == "dims") t.tasks.dims = parse_dims(field, v);
    else if (key == "families") {
        t.tasks.families.clear();
        if (!v.empty())
            for (const auto& s : split_list(field, v))
                t.tasks.families.push_back(wrap(field, [&] { return family_from_string(s); }));
    } else if (key == "budget_multiplier") t.tasks.budget_per_dim = parse_number<std::size_t>(field, v);
    else if (key == "noise_fraction") t.tasks.noise_fraction = parse_number<double>(field, v);
    else if (key == "noise_scale") t.tasks.noise_scale = parse_number<double>(field, v);
    else throw ConfigError(field, "unknown key");
}

void set_eval(EvalConfig& e, const std::string& key, const std::string& v) {
    const std::string field = "eval." + key;
    if (key == "functions") e.functions = v.empty() ? std::vector<std::string>{} : split_list(field, v);
    else if (key == "dims") e.dims = parse_dims(field, v);
    else if (key == "runs") e.runs = parse_number<std::size_t>(field, v);
    else if (key == "budget_multiplier") e.budget_multiplier = parse_number<std::size_t>(field, v);
    else if (key == "rho") e.rho = parse_number<double>(field, v);
    else if (key == "algorithms") e.algorithms = split_list(field, v);
    else if (key == "workers") e.workers = parse_number<std::size_t>(field, v);
    else throw ConfigError(field, "unknown key");
}

void set_paths(PathsConfig& p, const std::string& key, const std::string& v) {
    if (key == "out_dir") p.out_dir = v;
    else if (key == "checkpoint_in") p.checkpoint_in = v;
    else if (key == "checkpoint_out") p.checkpoint_out = v;
    else if (key == "records_out") p.records_out = v;
    else if (key == "report_out") p.report_out = v;
    else throw ConfigError("paths." + key, "unknown key");
}

}  // namespace

std::string_view to_string(Mode m) {
    for (const auto& [mode, name] : kModes)
        if (mode == m) return name;
    return "?";
}

Mode mode_from_string(std::string_view name) {
    for (const auto& [mode, n] : kModes)
        if (n == name) return mode;
    throw ConfigError("mode", "unknown mode '" + std::string(name) + "'");
}

std::vector<std::string> EvalConfig::function_list() const {
    if (!functions.empty()) return functions;
    std::vector<std::string> all;
    for (Family f : kAllFamilies) all.emplace_back(to_string(f));
    return all;
}

std::filesystem::path PathsConfig::checkpoint_out_or_default() const {
    return checkpoint_out.empty() ? out_dir / "policy.json" : checkpoint_out;
}
std::filesystem::path PathsConfig::records_out_or_default() const {
    return records_out.empty() ? out_dir / "records.csv" : records_out;
}
std::filesystem::path PathsConfig::report_out_or_default() const {
    return report_out.empty() ? out_dir / "report" : report_out;
}

void ExperimentConfig::validate() const {
    if (profile != "paper" && profile != "desk") throw ConfigError("profile", "expected paper or desk");
    try {
        train.validate();
    } catch (const ConfigError& e) {
        throw ConfigError("train." + e.field(), std::string(e.what()).substr(e.field().size() + 2));
    }
    if (!(eval.rho > 0.0 && eval.rho < 1.0)) throw ConfigError("eval.rho", "must lie in (0, 1), got " + fmt(eval.rho));
    if (eval.runs == 0) throw ConfigError("eval.runs", "must be positive");
    if (eval.budget_multiplier == 0) throw ConfigError("eval.budget_multiplier", "must be positive");
    if (eval.dims.empty()) throw ConfigError("eval.dims", "at least one dimension is required");
    for (std::size_t d : eval.dims) {
        if (d < 2) throw ConfigError("eval.dims", "dimensions must be at least 2");
        const auto design = static_cast<std::size_t>(eval.rho * static_cast<double>(eval.budget(d)));
        if (design < 50)
            throw ConfigError("eval.budget_multiplier", "design phase at d=" + std::to_string(d) +
                                                            " is shorter than one population");
    }
    for (const auto& f : eval.function_list()) wrap("eval.functions", [&] { return family_from_string(f); });
    if (eval.algorithms.empty()) throw ConfigError("eval.algorithms", "at least one algorithm is required");
    for (const auto& a : eval.algorithms)
        if (a != "opal" && a != "de" && a != "pso") throw ConfigError("eval.algorithms", "unknown algorithm '" + a + "'");
}

ExperimentConfig profile_defaults(std::string_view name) {
    ExperimentConfig c;
    if (name == "paper") return c;
    if (name != "desk") throw ConfigError("profile", "unknown profile '" + std::string(name) + "'");
    c.profile = "desk";
    c.train.episodes = 500;
    c.train.tasks.dims = {10};
    c.eval.dims = {10};
    c.eval.runs = 10;
    c.eval.budget_multiplier = 1000;
    return c;
}

void set_config_value(ExperimentConfig& cfg, std::string_view dotted, const std::string& value) {
    const std::string key(dotted);
    const auto dot = key.find('.');
    if (dot == std::string::npos) {
        if (key == "mode") cfg.mode = mode_from_string(value);
        else if (key == "profile") {
            if (value != "paper" && value != "desk") throw ConfigError("profile", "expected paper or desk");
            cfg.profile = value;
        } else if (key == "seed") {
            cfg.seed = parse_number<std::uint64_t>("seed", value);
            cfg.train.seed = cfg.seed;
        } else
            throw ConfigError(key, "unknown key");
        return;
    }
    const std::string section = key.substr(0, dot), name = key.substr(dot + 1);
    if (section == "train") set_train(cfg.train, name, value);
    else if (section == "eval") set_eval(cfg.eval, name, value);
    else if (section == "paths") set_paths(cfg.paths, name, value);
    else throw ConfigError(key, "unknown section '" + section + "'");
}

std::string format_config(const ExperimentConfig& c) {
    std::ostringstream os;
    const auto& t = c.train;
    std::vector<std::string> fams;
    for (Family f : t.tasks.families) fams.emplace_back(to_string(f));
    os << "mode = " << to_string(c.mode) << '\n'
       << "profile = " << c.profile << '\n'
       << "seed = " << c.seed << "\n\n"
       << "[train]\n"
       << "episodes = " << t.episodes << '\n'
       << "rho = " << fmt(t.rho) << '\n'
       << "beta = " << fmt(t.beta) << '\n'
       << "lambda_aux = " << fmt(t.lambda_aux) << '\n'
       << "alpha = " << fmt(t.alpha) << '\n'
       << "lr = " << fmt(t.lr) << '\n'
       << "clip_norm = " << fmt(t.clip_norm) << '\n'
       << "hidden = " << t.hidden << '\n'
       << "checkpoint_every = " << t.checkpoint_every << '\n'
       << "task_pool = " << to_string(t.task_pool) << '\n'
       << "graph_mode = " << to_string(t.graph_mode) << '\n'
       << "dims = " << join(t.tasks.dims) << '\n'
       << "families = " << join(fams) << '\n'
       << "budget_multiplier = " << t.tasks.budget_per_dim << '\n'
       << "noise_fraction = " << fmt(t.tasks.noise_fraction) << '\n'
       << "noise_scale = " << fmt(t.tasks.noise_scale) << "\n\n"
       << "[eval]\n"
       << "functions = " << join(c.eval.functions) << '\n'
       << "dims = " << join(c.eval.dims) << '\n'
       << "runs = " << c.eval.runs << '\n'
       << "budget_multiplier = " << c.eval.budget_multiplier << '\n'
       << "rho = " << fmt(c.eval.rho) << '\n'
       << "algorithms = " << join(c.eval.algorithms) << '\n'
       << "workers = " << c.eval.workers << "\n\n"
       << "[paths]\n"
       << "out_dir = " << c.paths.out_dir.string() << '\n'
       << "checkpoint_in = " << c.paths.checkpoint_in.string() << '\n'
       << "checkpoint_out = " << c.paths.checkpoint_out.string() << '\n'
       << "records_out = " << c.paths.records_out.string() << '\n'
       << "report_out = " << c.paths.report_out.string() << '\n';
    return os.str();
}

ExperimentConfig parse_config(const std::string& text, const std::optional<std::string>& profile_override) {
    struct Entry {
        std::string key, value;
        int line;
    };
    std::vector<Entry> entries;
    std::string section;
    std::istringstream is(text);
    std::string raw;
    int lineno = 0;
    std::string profile = "paper";
    while (std::getline(is, raw)) {
        ++lineno;
        std::string line = trim(raw.substr(0, raw.find('#')));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno), "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno), "expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (!section.empty()) key = section + "." + key;
        if (key == "profile") profile = value;
        entries.push_back({key, value, lineno});
    }
    if (profile_override) profile = *profile_override;
    ExperimentConfig cfg = profile_defaults(profile);
    for (const auto& e : entries) {
        if (e.key == "profile") continue;
        // empty paths fall back to their defaults
        if (e.value.empty() && e.key.rfind("paths.", 0) != 0 && e.key != "eval.functions" &&
            e.key != "train.families")
            throw ConfigError(e.key, "missing value on line " + std::to_string(e.line));
        set_config_value(cfg, e.key, e.value);
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::optional<std::string>& profile) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), profile);
}

void save_config(const std::filesystem::path& path, const ExperimentConfig& cfg) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot write config " + path.string());
    out << format_config(cfg);
}

}  // namespace opal
