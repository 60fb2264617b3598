#include "opal/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace opal {

namespace {

constexpr std::array<std::string_view, kNumOperators> kTokenNames = {
    "de_rand_1_bin",          "de_best_1_bin",          "uniform_crossover_pairs",
    "pso_global_step",        "gaussian_mutation_self", "gaussian_mutation_best",
    "restart_worst_fraction", "local_search_best_axis",
};

const std::array<Theta, kNumOperators>& theta_table() {
    static const std::array<Theta, kNumOperators> table = {
        Theta{{"F", 0.7}, {"CR", 0.9}},
        Theta{{"F", 0.7}, {"CR", 0.9}},
        Theta{{"q_pair", 0.5}},
        Theta{{"w", 0.7}, {"c1", 1.5}, {"c2", 1.5}, {"v_max", 0.2}},
        Theta{{"sigma_self", 0.1}},
        // n_samp <= 0 means one sample per population member
        Theta{{"sigma_best", 0.05}, {"n_samp", 0.0}},
        Theta{{"q_restart", 0.2}},
        Theta{{"delta", 0.01}},
    };
    return table;
}

/// Resolved hyperparameters: declared defaults overridden by the call's theta.
class Params {
public:
    explicit Params(const OperatorCall& call) : values_(default_theta(call.token)) {
        for (const auto& [k, v] : call.theta) {
            auto it = values_.find(k);
            if (it == values_.end())
                throw std::invalid_argument("operator " + std::string(to_string(call.token)) +
                                            " has no hyperparameter '" + k + "'");
            it->second = v;
        }
    }
    double operator[](std::string_view key) const { return values_.find(key)->second; }

private:
    Theta values_;
};

Eigen::Index pick_other(Rng& rng, Eigen::Index n, std::initializer_list<Eigen::Index> avoid) {
    std::uniform_int_distribution<Eigen::Index> u(0, n - 1);
    for (;;) {
        const Eigen::Index r = u(rng);
        if (std::find(avoid.begin(), avoid.end(), r) == avoid.end()) return r;
    }
}

double eval_row(Environment& env, Eigen::Ref<Eigen::RowVectorXd> x) {
    env.clip(std::span<double>(x.data(), static_cast<std::size_t>(x.size())));
    return env.evaluate(x);
}

Eigen::Index restart_count(double q, Eigen::Index pop) {
    const auto n = static_cast<Eigen::Index>(std::ceil(q * static_cast<double>(pop) - 1e-9));
    return std::clamp<Eigen::Index>(n, 1, pop);
}

Eigen::Index sample_count(double n_samp, Eigen::Index pop) {
    return n_samp > 0.0 ? std::max<Eigen::Index>(1, std::llround(n_samp)) : pop;
}

Eigen::Index pair_count(double q, Eigen::Index pop) {
    return static_cast<Eigen::Index>(std::floor(q * static_cast<double>(pop) / 2.0 + 1e-9));
}

std::size_t uniform_crossover_pairs(PopulationState& s, Environment& env, Rng& rng, const Params& p) {
    const Eigen::Index pop = s.size();
    if (pop < 2) throw std::invalid_argument("uniform_crossover_pairs needs at least two individuals");
    const Eigen::Index pairs = std::clamp<Eigen::Index>(pair_count(p["q_pair"], pop), 1, pop / 2);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(pop));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::bernoulli_distribution coin(0.5);
    std::size_t cost = 0;
    for (Eigen::Index k = 0; k < pairs; ++k) {
        const Eigen::Index a = order[static_cast<std::size_t>(2 * k)];
        const Eigen::Index b = order[static_cast<std::size_t>(2 * k + 1)];
        Eigen::RowVectorXd c1 = s.X.row(a), c2 = s.X.row(b);
        for (Eigen::Index j = 0; j < s.dim(); ++j)
            if (coin(rng)) std::swap(c1[j], c2[j]);
        const std::array<std::pair<Eigen::Index, Eigen::RowVectorXd*>, 2> kids = {{{a, &c1}, {b, &c2}}};
        for (const auto& [parent, child] : kids) {
            if (env.remaining() == 0) return cost;
            const double f = eval_row(env, *child);
            ++cost;
            if (f < s.fitness[parent]) {
                s.X.row(parent) = *child;
                s.fitness[parent] = f;
            }
        }
    }
    return cost;
}

std::size_t pso_global_step(PopulationState& s, Environment& env, Rng& rng, const Params& p) {
    const Eigen::Index pop = s.size(), d = s.dim();
    if (!s.velocities) {
        s.velocities = RowMatrix::Zero(pop, d);
        s.pbest_X = s.X;
        s.pbest_f = s.fitness;
    }
    RowMatrix& V = *s.velocities;
    RowMatrix& PB = *s.pbest_X;
    Eigen::VectorXd& PF = *s.pbest_f;
    // other operators may have improved positions since the last PSO step
    for (Eigen::Index i = 0; i < pop; ++i)
        if (s.fitness[i] < PF[i]) {
            PF[i] = s.fitness[i];
            PB.row(i) = s.X.row(i);
        }
    Eigen::Index g = 0;
    PF.minCoeff(&g);
    const Eigen::RowVectorXd gbest = PB.row(g);
    const Eigen::RowVectorXd vmax = p["v_max"] * env.range().transpose();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double w = p["w"], c1 = p["c1"], c2 = p["c2"];
    std::size_t cost = 0;
    for (Eigen::Index i = 0; i < pop; ++i) {
        if (env.remaining() == 0) break;
        Eigen::RowVectorXd v(d);
        for (Eigen::Index j = 0; j < d; ++j) {
            const double x = s.X(i, j);
            v[j] = w * V(i, j) + c1 * u(rng) * (PB(i, j) - x) + c2 * u(rng) * (gbest[j] - x);
            v[j] = std::clamp(v[j], -vmax[j], vmax[j]);
        }
        Eigen::RowVectorXd x = s.X.row(i) + v;
        const double f = eval_row(env, x);
        ++cost;
        V.row(i) = v;
        s.X.row(i) = x;
        s.fitness[i] = f;
        if (f < PF[i]) {
            PF[i] = f;
            PB.row(i) = x;
        }
    }
    return cost;
}

std::size_t gaussian_mutation_self(PopulationState& s, Environment& env, Rng& rng, const Params& p) {
    const Eigen::RowVectorXd scale = p["sigma_self"] * env.range().transpose();
    std::normal_distribution<double> g;
    std::size_t cost = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (env.remaining() == 0) break;
        Eigen::RowVectorXd x = s.X.row(i);
        for (Eigen::Index j = 0; j < s.dim(); ++j) x[j] += scale[j] * g(rng);
        const double f = eval_row(env, x);
        ++cost;
        if (f < s.fitness[i]) {
            s.X.row(i) = x;
            s.fitness[i] = f;
        }
    }
    return cost;
}

std::size_t gaussian_mutation_best(PopulationState& s, Environment& env, Rng& rng, const Params& p) {
    const Eigen::RowVectorXd scale = p["sigma_best"] * env.range().transpose();
    const Eigen::RowVectorXd center = s.X.row(s.best_index);
    const Eigen::Index n = sample_count(p["n_samp"], s.size());
    std::normal_distribution<double> g;
    std::size_t cost = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
        if (env.remaining() == 0) break;
        Eigen::RowVectorXd x = center;
        for (Eigen::Index j = 0; j < s.dim(); ++j) x[j] += scale[j] * g(rng);
        const double f = eval_row(env, x);
        ++cost;
        Eigen::Index worst = 0;
        s.fitness.maxCoeff(&worst);
        if (f < s.fitness[worst]) {
            s.X.row(worst) = x;
            s.fitness[worst] = f;
        }
    }
    return cost;
}

std::size_t restart_worst_fraction(PopulationState& s, Environment& env, Rng& rng, const Params& p) {
    const Eigen::Index n = restart_count(p["q_restart"], s.size());
    std::vector<Eigen::Index> order(static_cast<std::size_t>(s.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return s.fitness[a] > s.fitness[b]; });
    std::size_t cost = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
        if (env.remaining() == 0) break;
        const Eigen::Index i = order[static_cast<std::size_t>(k)];
        for (Eigen::Index j = 0; j < s.dim(); ++j)
            s.X(i, j) = std::uniform_real_distribution<double>(env.lower()[j], env.upper()[j])(rng);
        s.fitness[i] = env.evaluate(s.X.row(i));
        ++cost;
        if (s.velocities) {
            s.velocities->row(i).setZero();
            s.pbest_X->row(i) = s.X.row(i);
            (*s.pbest_f)[i] = s.fitness[i];
        }
    }
    return cost;
}

std::size_t local_search_best_axis(PopulationState& s, Environment& env, const Params& p) {
    const Eigen::Index b = s.best_index;
    const Eigen::VectorXd range = env.range();
    std::size_t cost = 0;
    for (Eigen::Index j = 0; j < s.dim(); ++j) {
        const double step = p["delta"] * range[j];
        std::optional<std::pair<Eigen::RowVectorXd, double>> accepted;
        for (double sign : {1.0, -1.0}) {
            if (env.remaining() == 0) break;
            Eigen::RowVectorXd x = s.X.row(b);
            x[j] += sign * step;
            const double f = eval_row(env, x);
            ++cost;
            if (!accepted && f < s.fitness[b]) accepted.emplace(std::move(x), f);
        }
        if (accepted) {
            s.X.row(b) = accepted->first;
            s.fitness[b] = accepted->second;
        }
        if (env.remaining() == 0) break;
    }
    return cost;
}

}  // namespace

void PopulationState::refresh_best() {
    best_index = 0;
    for (Eigen::Index i = 1; i < fitness.size(); ++i)
        if (fitness[i] < fitness[best_index]) best_index = i;
}

PopulationState random_population(Environment& env, Eigen::Index size, Rng& rng) {
    if (size < 1) throw std::invalid_argument("random_population: size must be positive");
    const auto d = static_cast<Eigen::Index>(env.dim());
    PopulationState s;
    s.X.resize(size, d);
    s.fitness.resize(size);
    for (Eigen::Index i = 0; i < size; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            s.X(i, j) = std::uniform_real_distribution<double>(env.lower()[j], env.upper()[j])(rng);
    for (Eigen::Index i = 0; i < size; ++i) s.fitness[i] = env.evaluate(s.X.row(i));
    s.refresh_best();
    return s;
}

std::string_view to_string(OpToken t) { return kTokenNames.at(static_cast<std::size_t>(t)); }

OpToken token_from_string(std::string_view name) {
    for (std::size_t i = 0; i < kTokenNames.size(); ++i)
        if (kTokenNames[i] == name) return static_cast<OpToken>(i);
    throw std::invalid_argument("unknown operator token '" + std::string(name) + "'");
}

bool is_de_token(OpToken t) { return t == OpToken::de_rand_1_bin || t == OpToken::de_best_1_bin; }

const Theta& default_theta(OpToken t) { return theta_table().at(static_cast<std::size_t>(t)); }

std::vector<OpToken> OperatorProgram::tokens() const {
    std::vector<OpToken> out;
    out.reserve(calls.size());
    for (const auto& c : calls) out.push_back(c.token);
    return out;
}

OperatorProgram OperatorProgram::from_tokens(const std::vector<OpToken>& tokens) {
    OperatorProgram p;
    for (OpToken t : tokens) p.calls.push_back({t, {}});
    return p;
}

std::string format_program(const OperatorProgram& program) {
    std::ostringstream os;
    os.precision(17);
    for (const auto& call : program.calls) {
        os << to_string(call.token);
        for (const auto& [k, v] : call.theta) os << ' ' << k << '=' << v;
        os << '\n';
    }
    return os.str();
}

OperatorProgram parse_program(std::string_view text) {
    OperatorProgram program;
    std::istringstream is{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string word;
        if (!(ls >> word)) continue;
        OperatorCall call{token_from_string(word), {}};
        while (ls >> word) {
            const auto eq = word.find('=');
            if (eq == std::string::npos || eq == 0)
                throw std::invalid_argument("program line " + std::to_string(lineno) +
                                            ": expected key=value, got '" + word + "'");
            const std::string key = word.substr(0, eq);
            if (!default_theta(call.token).contains(key))
                throw std::invalid_argument("program line " + std::to_string(lineno) + ": operator " +
                                            std::string(to_string(call.token)) +
                                            " has no hyperparameter '" + key + "'");
            call.theta[key] = std::stod(word.substr(eq + 1));
        }
        program.calls.push_back(std::move(call));
    }
    return program;
}

Eigen::RowVectorXd de_mutation_rand1(const Eigen::Ref<const Eigen::RowVectorXd>& base,
                                     const Eigen::Ref<const Eigen::RowVectorXd>& a,
                                     const Eigen::Ref<const Eigen::RowVectorXd>& b, double F) {
    return base + F * (a - b);
}

std::size_t de_generation(PopulationState& s, Environment& env, Rng& rng, double F, double CR,
                          bool from_best) {
    const Eigen::Index pop = s.size(), d = s.dim();
    if (pop < (from_best ? 3 : 4))
        throw std::invalid_argument("DE generation needs a population of at least " +
                                    std::to_string(from_best ? 3 : 4));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<Eigen::Index> pick_dim(0, d - 1);
    RowMatrix trials(pop, d);
    Eigen::VectorXd trial_f(pop);
    Eigen::Index evaluated = 0;
    for (Eigen::Index i = 0; i < pop && env.remaining() > 0; ++i) {
        Eigen::RowVectorXd donor;
        if (from_best) {
            const Eigen::Index r1 = pick_other(rng, pop, {i});
            const Eigen::Index r2 = pick_other(rng, pop, {i, r1});
            donor = de_mutation_rand1(s.X.row(s.best_index), s.X.row(r1), s.X.row(r2), F);
        } else {
            const Eigen::Index r1 = pick_other(rng, pop, {i});
            const Eigen::Index r2 = pick_other(rng, pop, {i, r1});
            const Eigen::Index r3 = pick_other(rng, pop, {i, r1, r2});
            donor = de_mutation_rand1(s.X.row(r1), s.X.row(r2), s.X.row(r3), F);
        }
        const Eigen::Index jrand = pick_dim(rng);
        for (Eigen::Index j = 0; j < d; ++j)
            trials(i, j) = (j == jrand || u(rng) < CR) ? donor[j] : s.X(i, j);
        trial_f[i] = eval_row(env, trials.row(i));
        evaluated = i + 1;
    }
    for (Eigen::Index i = 0; i < evaluated; ++i)
        if (trial_f[i] < s.fitness[i]) {
            s.X.row(i) = trials.row(i);
            s.fitness[i] = trial_f[i];
        }
    s.refresh_best();
    return static_cast<std::size_t>(evaluated);
}

std::size_t apply_operator(const OperatorCall& call, PopulationState& state, Environment& env,
                           Rng& rng) {
    const Params p(call);
    if (state.size() == 0) throw std::invalid_argument("apply_operator: empty population");
    if (env.remaining() == 0) return 0;
    std::size_t cost = 0;
    switch (call.token) {
        case OpToken::de_rand_1_bin: cost = de_generation(state, env, rng, p["F"], p["CR"], false); break;
        case OpToken::de_best_1_bin: cost = de_generation(state, env, rng, p["F"], p["CR"], true); break;
        case OpToken::uniform_crossover_pairs: cost = uniform_crossover_pairs(state, env, rng, p); break;
        case OpToken::pso_global_step: cost = pso_global_step(state, env, rng, p); break;
        case OpToken::gaussian_mutation_self: cost = gaussian_mutation_self(state, env, rng, p); break;
        case OpToken::gaussian_mutation_best: cost = gaussian_mutation_best(state, env, rng, p); break;
        case OpToken::restart_worst_fraction: cost = restart_worst_fraction(state, env, rng, p); break;
        case OpToken::local_search_best_axis: cost = local_search_best_axis(state, env, p); break;
        default: throw std::invalid_argument("apply_operator: unknown token");
    }
    state.refresh_best();
    return cost;
}

std::size_t max_call_cost(const OperatorCall& call, Eigen::Index pop, Eigen::Index dim) {
    const Params p(call);
    switch (call.token) {
        case OpToken::uniform_crossover_pairs:
            return static_cast<std::size_t>(
                2 * std::clamp<Eigen::Index>(pair_count(p["q_pair"], pop), 1, std::max<Eigen::Index>(1, pop / 2)));
        case OpToken::gaussian_mutation_best:
            return static_cast<std::size_t>(sample_count(p["n_samp"], pop));
        case OpToken::restart_worst_fraction:
            return static_cast<std::size_t>(restart_count(p["q_restart"], pop));
        case OpToken::local_search_best_axis: return static_cast<std::size_t>(2 * dim);
        default: return static_cast<std::size_t>(pop);
    }
}

}  // namespace opal
