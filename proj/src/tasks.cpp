#include "opal/tasks.hpp"

#include <Eigen/QR>

#include <cmath>
#include <map>
#include <memory>
#include <sstream>

namespace opal {

namespace {

/// Input scaling that maps [-100, 100] onto each analytic form's usual
/// search window.
double input_scale(Family f) {
    switch (f) {
        case Family::rastrigin: return 5.12 / 100.0;
        case Family::rosenbrock: return 2.048 / 100.0;
        default: return 1.0;
    }
}

double cec_bias(Family f) { return 100.0 * (static_cast<double>(f) + 1.0); }

}  // namespace

std::string_view to_string(TaskPool p) { return p == TaskPool::mixed ? "mixed" : "restricted"; }

TaskPool task_pool_from_string(std::string_view name) {
    if (name == "mixed") return TaskPool::mixed;
    if (name == "restricted") return TaskPool::restricted;
    throw std::invalid_argument("unknown task pool '" + std::string(name) + "'");
}

Eigen::MatrixXd random_rotation(std::size_t dim, Rng& rng) {
    const auto d = static_cast<Eigen::Index>(dim);
    std::normal_distribution<double> g;
    Eigen::MatrixXd a(d, d);
    for (auto& v : a.reshaped()) v = g(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < d; ++j)
        if (r(j, j) < 0) q.col(j) *= -1.0;
    return q;
}

TaskSpec make_task(Family family, std::size_t dim, std::uint64_t seed, std::size_t budget,
                   double noise_sigma, bool cec_like) {
    if (family == Family::rosenbrock && dim < 2)
        throw std::invalid_argument("make_task: rosenbrock needs dim >= 2");
    TaskSpec spec;
    spec.family = family;
    spec.dim = dim;
    spec.seed = seed;
    spec.budget = budget;
    spec.noise_sigma = noise_sigma;
    spec.label = label_for(family);
    spec.cec_like = cec_like;
    spec.bias = cec_like ? cec_bias(family) : 0.0;
    Rng rng(derive_seed(seed, 0xAFF1));
    spec.rotation = random_rotation(dim, rng);
    spec.shift.resize(static_cast<Eigen::Index>(dim));
    std::uniform_real_distribution<double> u(-80.0, 80.0);
    for (auto& v : spec.shift) v = u(rng);
    return spec;
}

Objective task_objective(const TaskSpec& spec) {
    struct Affine {
        Eigen::MatrixXd rotation;
        Eigen::VectorXd shift;
        double scale;
        double offset;
        double bias;
        Objective base;
    };
    auto a = std::make_shared<Affine>();
    a->rotation = spec.rotation;
    a->shift = spec.shift;
    a->scale = input_scale(spec.family);
    a->offset = spec.family == Family::rosenbrock ? 1.0 : 0.0;
    a->bias = spec.bias;
    a->base = make_function(spec.family, spec.dim, derive_seed(spec.seed, 0xBA5E));
    return [a](std::span<const double> x) {
        const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
        Eigen::VectorXd z = a->rotation * (xv - a->shift);
        z = (z.array() * a->scale + a->offset).matrix();
        return a->base(std::span<const double>(z.data(), static_cast<std::size_t>(z.size()))) + a->bias;
    };
}

Environment make_environment(const TaskSpec& spec) {
    const auto d = static_cast<Eigen::Index>(spec.dim);
    return Environment(task_objective(spec), Eigen::VectorXd::Constant(d, kDomainLower),
                       Eigen::VectorXd::Constant(d, kDomainUpper), spec.budget, spec.noise_sigma,
                       derive_seed(spec.seed, 0x4015E), spec.bias);
}

double estimate_f_range(const TaskSpec& spec, std::size_t samples) {
    const Objective f = task_objective(spec);
    Rng rng(derive_seed(spec.seed, 0xF4A6));
    std::uniform_real_distribution<double> u(kDomainLower, kDomainUpper);
    std::vector<double> x(spec.dim);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t s = 0; s < samples; ++s) {
        for (auto& v : x) v = u(rng);
        const double y = f(x);
        if (!std::isfinite(y)) continue;
        lo = std::min(lo, y);
        hi = std::max(hi, y);
    }
    return hi >= lo ? hi - lo : 0.0;
}

const std::vector<Family>& restricted_families() {
    static const std::vector<Family> fams = {Family::rosenbrock, Family::rastrigin,
                                             Family::hybrid_blend, Family::composition_blend};
    return fams;
}

SampledTask sample_task(Rng& rng, TaskPool pool, const TaskSamplingOptions& opts) {
    if (opts.dims.empty()) throw std::invalid_argument("sample_task: no dimensions to draw from");
    const bool restricted = pool == TaskPool::restricted;
    std::vector<Family> fams = opts.families;
    if (fams.empty())
        fams = restricted ? restricted_families()
                          : std::vector<Family>(kAllFamilies.begin(), kAllFamilies.end());
    if (restricted) {
        for (Family f : fams)
            if (std::find(restricted_families().begin(), restricted_families().end(), f) ==
                restricted_families().end())
                throw std::invalid_argument("sample_task: family '" + std::string(to_string(f)) +
                                            "' is not in the restricted pool");
    }
    std::uniform_int_distribution<std::size_t> pick_family(0, fams.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_dim(0, opts.dims.size() - 1);
    const Family family = fams[pick_family(rng)];
    const std::size_t dim = opts.dims[pick_dim(rng)];
    const std::uint64_t seed = rng();
    const bool noisy = !restricted && std::bernoulli_distribution(opts.noise_fraction)(rng);

    TaskSpec spec = make_task(family, dim, seed, opts.budget_per_dim * dim, 0.0, restricted);
    if (noisy) spec.noise_sigma = opts.noise_scale * std::abs(estimate_f_range(spec));
    Environment env = make_environment(spec);
    return {std::move(spec), std::move(env)};
}

std::string to_record(const TaskSpec& spec) {
    std::ostringstream os;
    os.precision(17);
    os << "family=" << to_string(spec.family) << " dim=" << spec.dim << " seed=" << spec.seed
       << " noise=" << spec.noise_sigma << " label=" << to_string(spec.label)
       << " budget=" << spec.budget << " cec=" << (spec.cec_like ? 1 : 0);
    return os.str();
}

TaskSpec task_from_record(const std::string& record) {
    std::map<std::string, std::string> kv;
    std::istringstream is(record);
    std::string tok;
    while (is >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("task record: malformed token '" + tok + "'");
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    auto need = [&](const char* key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw std::invalid_argument(std::string("task record: missing ") + key);
        return it->second;
    };
    const Family family = family_from_string(need("family"));
    TaskSpec spec = make_task(family, std::stoull(need("dim")), std::stoull(need("seed")),
                              std::stoull(need("budget")), std::stod(need("noise")),
                              kv.count("cec") && kv["cec"] == "1");
    if (kv.count("label") && label_from_string(kv["label"]) != spec.label)
        throw std::invalid_argument("task record: label does not match family");
    return spec;
}

}  // namespace opal
