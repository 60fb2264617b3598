// Acceptance checks, one line per criterion. Run with no arguments for all
// of them, or name one criterion to run it alone (ctest does the latter).

#include "opal/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

using namespace opal;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// ---------------------------------------------------------------- gradient

Outcome gradient_oracle() {
    const auto t0 = Clock::now();
    Architecture arch;
    arch.hidden = 8;
    Rng rng(20240601);
    std::normal_distribution<double> g;
    double worst = 0.0;
    std::size_t checked = 0;
    for (int inst = 0; inst < 20; ++inst) {
        PolicyParams p = PolicyParams::initialized(arch, derive_seed(7, inst));
        for (auto& b : p.flat()) b += 0.05 * g(rng);  // nonzero biases too
        RowMatrix X(12, 5);
        for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = g(rng);
        std::vector<double> f(12);
        for (int i = 0; i < 12; ++i) f[static_cast<std::size_t>(i)] = X.row(i).squaredNorm() + 0.1 * g(rng);
        GraphConfig cfg;
        Rng grng(inst);
        const TrajectoryGraph graph = build_graph(X, f, 5, cfg, grng);
        std::uniform_int_distribution<int> tok(0, kNumOperators - 1);
        const LossTerms terms{{tok(rng), tok(rng), tok(rng)}, g(rng), inst % kNumLandscapeLabels, 0.01 + 0.1 * inst / 20.0,
                              0.3};
        const LossResult r = loss_and_gradient(graph.H, graph.A, terms, p);
        for (Eigen::Index i = 0; i < p.flat().size(); ++i) {
            PolicyParams hi = p, lo = p;
            hi.flat()[i] += 1e-5;
            lo.flat()[i] -= 1e-5;
            const double fd = (loss_value(graph.H, graph.A, terms, hi) - loss_value(graph.H, graph.A, terms, lo)) / 2e-5;
            const double scale = std::max({std::abs(fd), std::abs(r.grad[i]), 1e-8});
            worst = std::max(worst, std::abs(fd - r.grad[i]) / scale);
            ++checked;
        }
    }
    const double secs = seconds_since(t0);
    return {worst < 1e-4 && secs < 30.0,
            fmt("max relative error %.3g over %zu partials on 20 instances (< 1e-4), %.2f s (< 30 s)", worst, checked,
                secs)};
}

// ---------------------------------------------------------------- reward

Outcome reward_exactness() {
    const double a = reward(100.0, 1.0, 1e-12);
    bool same_zero = true;
    Rng rng(3);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double x = u(rng);
        same_zero = same_zero && reward(x, x, 1e-12) == 0.0 && reward(std::abs(x), std::abs(x), 1e-12) == 0.0;
    }
    const double c = reward(1.0, 0.0, 1e-12);
    const bool ok = std::abs(a - 2.0) < 1e-9 && same_zero && c >= 11.9 && c <= 12.1;
    return {ok, fmt("reward(100,1)=%.15g, reward(x,x)=0 exactly on 1000 draws: %s, reward(1,0)=%.6f", a,
                    same_zero ? "yes" : "no", c)};
}

// ---------------------------------------------------------------- executor

Outcome executor_budget_law() {
    Rng rng(99);
    std::size_t violations = 0, monotone_violations = 0;
    std::size_t max_overshoot = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const Family fam = kAllFamilies[rng() % kAllFamilies.size()];
        const std::size_t dim = 2 + rng() % 19;
        const Eigen::Index pop = 4 + static_cast<Eigen::Index>(rng() % 57);
        const std::size_t t_run = rng() % 4001;
        const std::size_t len = 1 + rng() % 5;
        OperatorProgram prog;
        std::size_t max_cost = 0;
        for (std::size_t i = 0; i < len; ++i) {
            OperatorCall call{token_from_index(static_cast<int>(rng() % kNumOperators)), {}};
            // perturb the size-controlling hyperparameters now and then
            std::uniform_real_distribution<double> u(0.05, 1.0);
            if (call.token == OpToken::restart_worst_fraction && rng() % 2) call.theta["q_restart"] = u(rng);
            if (call.token == OpToken::uniform_crossover_pairs && rng() % 2) call.theta["q_pair"] = u(rng);
            if (call.token == OpToken::gaussian_mutation_best && rng() % 2)
                call.theta["n_samp"] = static_cast<double>(1 + rng() % 80);
            max_cost = std::max(max_cost, max_call_cost(call, pop, static_cast<Eigen::Index>(dim)));
            prog.calls.push_back(call);
        }
        const TaskSpec spec = make_task(fam, dim, rng(), t_run + 10 * static_cast<std::size_t>(pop), 0.0, rng() % 2);
        Environment env = make_environment(spec);
        env.permit_overshoot(max_cost + static_cast<std::size_t>(pop));
        Rng init(rng());
        const PopulationState s0 = random_population(env, pop, init);
        const std::size_t before = env.evals_used();
        const RunTrace tr = execute_program(env, s0, prog, t_run, rng());
        const std::size_t used = tr.fe_used();
        const bool in_range = used >= t_run && used < t_run + max_cost && env.evals_used() - before == used;
        if (!in_range) ++violations;
        if (used > t_run) max_overshoot = std::max(max_overshoot, used - t_run);
        for (std::size_t i = 1; i < tr.best.size(); ++i)
            if (tr.best[i] > tr.best[i - 1] || tr.fe[i] <= tr.fe[i - 1]) {
                ++monotone_violations;
                break;
            }
    }
    return {violations == 0 && monotone_violations == 0,
            fmt("1000 fuzzed (program, T_run): %zu budget-law violations, %zu non-monotone traces, largest "
                "overshoot %zu",
                violations, monotone_violations, max_overshoot)};
}

// ---------------------------------------------------------------- graph

Outcome graph_invariants() {
    const auto t0 = Clock::now();
    Rng rng(4242);
    std::size_t failures = 0;
    std::string first;
    double worst_mean = 0.0;
    const std::array<SubsampleStrategy, 4> strategies = {SubsampleStrategy::time_uniform, SubsampleStrategy::random,
                                                         SubsampleStrategy::fitness_stratified,
                                                         SubsampleStrategy::mixed};
    for (int trial = 0; trial < 1000; ++trial) {
        std::size_t M = 1 + rng() % 2500;
        if (trial % 10 == 0) M = 1 + rng() % 3;
        const std::size_t d = 1 + rng() % 30;
        std::normal_distribution<double> g(0.0, std::pow(10.0, static_cast<double>(rng() % 5) - 2));
        RowMatrix X(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(d));
        for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = g(rng);
        std::vector<double> f(M);
        const int kind = static_cast<int>(rng() % 3);
        for (std::size_t i = 0; i < M; ++i) {
            const double s = X.row(static_cast<Eigen::Index>(i)).squaredNorm();
            f[i] = kind == 0 ? s : kind == 1 ? std::round(s) : 3.0;  // smooth, tied, constant
        }
        GraphConfig cfg;
        cfg.strategy = strategies[rng() % strategies.size()];
        const TrajectoryGraph gr = build_graph(X, f, d, cfg, rng);
        const auto N = static_cast<std::size_t>(gr.nodes());
        const std::size_t k_eff = std::min<std::size_t>(10, N - 1);
        bool ok = N == std::min<std::size_t>(M, 300) && N <= 300 && gr.k_eff == k_eff;
        ok = ok && gr.A.rows() == static_cast<Eigen::Index>(N) && gr.A == gr.A.transpose() &&
             (gr.A.diagonal().array() == 1.0).all() && ((gr.A.array() == 0.0) || (gr.A.array() == 1.0)).all();
        for (Eigen::Index i = 0; ok && i < gr.A.rows(); ++i) ok = gr.A.row(i).sum() >= static_cast<double>(k_eff + 1);
        for (int c : {int(kFitnessZ), int(kLocalImprovement)}) {
            const double m = std::abs(gr.H.col(c).mean());
            worst_mean = std::max(worst_mean, m);
            ok = ok && m < 1e-9;
        }
        ok = ok && gr.H.allFinite();
        if (M == 1) ok = ok && gr.H(0, kTimeNorm) == 0.0;
        if (!ok) {
            ++failures;
            if (first.empty()) first = fmt(" (first failure: M=%zu d=%zu strategy=%s)", M, d,
                                           std::string(to_string(cfg.strategy)).c_str());
        }
    }
    const double secs = seconds_since(t0);
    return {failures == 0 && secs < 60.0,
            fmt("1000 fuzzed trajectories: %zu failures%s, worst standardized mean %.2e (< 1e-9), %.2f s (< 60 s)",
                failures, first.c_str(), worst_mean, secs)};
}

// ---------------------------------------------------------------- statistics

double brute_force_exact(const std::vector<double>& d) {
    std::vector<double> absd(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) absd[i] = std::abs(d[i]);
    // independent average ranks: count smaller and equal values
    std::vector<double> ranks(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        double less = 0, equal = 0;
        for (double v : absd) {
            if (v < absd[i]) ++less;
            if (v == absd[i]) ++equal;
        }
        ranks[i] = less + (equal + 1.0) / 2.0;
    }
    double total = 0, wplus = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        total += ranks[i];
        if (d[i] > 0) wplus += ranks[i];
    }
    const double obs = std::abs(2 * wplus - total);
    std::size_t hits = 0;
    const std::size_t n = std::size_t{1} << d.size();
    for (std::size_t mask = 0; mask < n; ++mask) {
        double w = 0;
        for (std::size_t i = 0; i < d.size(); ++i)
            if (mask >> i & 1) w += ranks[i];
        if (std::abs(2 * w - total) >= obs - 1e-9) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(n);
}

Outcome statistics_oracles() {
    Rng rng(12);
    double worst = 0.0, worst_lib_exact = 0.0;
    std::size_t over = 0, cases = 0;
    std::map<std::size_t, double> worst_by_m;
    while (cases < 1000) {
        const std::size_t n = 1 + rng() % 12;
        std::normal_distribution<double> g(0.0, 1.0);
        std::uniform_real_distribution<double> shift(-2.0, 2.0);
        const double mu = shift(rng);
        const bool coarse = rng() % 3 == 0;
        std::vector<double> a(n), b(n), d;
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = g(rng);
            b[i] = a[i] - (mu + g(rng));
            if (coarse) b[i] = a[i] - std::round(2.0 * (mu + g(rng))) / 2.0;
            if (a[i] - b[i] != 0.0) d.push_back(a[i] - b[i]);
        }
        if (d.empty()) continue;
        ++cases;
        std::vector<double> absd(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) absd[i] = std::abs(d[i]);
        const auto ranks = stats::average_ranks(absd);
        std::vector<int> signs(d.size());
        double wplus = 0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            signs[i] = d[i] > 0 ? 1 : -1;
            if (d[i] > 0) wplus += ranks[i];
        }
        const double exact = brute_force_exact(d);
        const double normal = stats::wilcoxon_normal_p(ranks, wplus);
        worst_lib_exact = std::max(worst_lib_exact, std::abs(stats::wilcoxon_exact_p(ranks, signs) - exact));
        worst_lib_exact = std::max(worst_lib_exact, std::abs(stats::wilcoxon_signed_rank(a, b).p_value - exact));
        const double diff = std::abs(normal - exact);
        worst = std::max(worst, diff);
        worst_by_m[d.size()] = std::max(worst_by_m[d.size()], diff);
        if (diff > 0.03) ++over;
    }
    Eigen::MatrixXd r(3, 3);
    r << 1, 2, 3, 1, 2, 3, 1, 2, 3;
    const double chi = stats::friedman(r).statistic;
    const double tied = stats::friedman(Eigen::MatrixXd::Constant(5, 4, 2.5)).statistic;
    const auto holm = stats::holm_adjust(std::vector<double>{0.01, 0.02, 0.04});
    const bool holm_ok =
        std::abs(holm[0] - 0.03) < 1e-12 && std::abs(holm[1] - 0.04) < 1e-12 && std::abs(holm[2] - 0.04) < 1e-12;
    const bool wilcoxon_ok = worst <= 0.03;
    std::ostringstream by_m;
    for (const auto& [m, w] : worst_by_m) by_m << (m == worst_by_m.begin()->first ? "" : " ") << m << ":" << fmt("%.3f", w);
    return {wilcoxon_ok && worst_lib_exact < 1e-12 && std::abs(chi - 6.0) < 1e-12 && tied == 0.0 && holm_ok,
            fmt("Wilcoxon normal vs exact: max |dp| %.4f (<= 0.03), %zu/1000 cases over; worst by m {%s}; library exact "
                "vs enumeration %.1e; Friedman chi2=%.12g on 3x3, %.3g all-tied; Holm [%.4g, %.4g, %.4g]",
                worst, over, by_m.str().c_str(), worst_lib_exact, chi, tied, holm[0], holm[1], holm[2])};
}

// ---------------------------------------------------------------- learning

TrainConfig smoke_config(TaskPool pool, std::vector<Family> families, std::uint64_t seed) {
    TrainConfig c;
    c.episodes = 300;
    c.seed = seed;
    c.task_pool = pool;
    c.tasks.families = std::move(families);
    c.tasks.dims = {10};
    c.tasks.budget_per_dim = 1000;
    return c;
}

double mean_reward(const std::vector<EpisodeRecord>& log, std::size_t from, std::size_t to) {
    double s = 0.0;
    for (std::size_t i = from; i < to; ++i) s += log[i].reward;
    return s / static_cast<double>(to - from);
}

Outcome learning_smoke() {
    const auto t0 = Clock::now();
    const TrainConfig cfg = smoke_config(TaskPool::mixed, {Family::sphere, Family::rastrigin}, 2025);
    const TrainResult trained = train(cfg);
    const double early = mean_reward(trained.log, 0, 50);
    const double late = mean_reward(trained.log, 250, 300);

    const std::size_t instances = 20, seeds = 5;
    std::size_t wins = 0;
    Rng prog_rng(31337);
    std::uniform_int_distribution<int> tok(0, kNumOperators - 1);
    for (std::size_t i = 0; i < instances; ++i) {
        const Family fam = i % 2 ? Family::rastrigin : Family::sphere;
        const TaskSpec spec = make_task(fam, 10, derive_seed(0x401d07u, i), 10000);
        std::vector<double> policy_err, random_err;
        for (std::size_t s = 0; s < seeds; ++s) {
            const std::uint64_t seed = derive_seed(spec.seed, s);
            policy_err.push_back(run_policy(spec, trained.params, cfg.rho, GraphConfig{}, seed).final_error);
            const auto random_prog = OperatorProgram::from_tokens(
                {token_from_index(tok(prog_rng)), token_from_index(tok(prog_rng)), token_from_index(tok(prog_rng))});
            random_err.push_back(run_program(spec, random_prog, cfg.rho, GraphConfig{}, seed).final_error);
        }
        if (stats::median(policy_err) <= stats::median(random_err)) ++wins;
    }
    const double secs = seconds_since(t0);
    const bool ok = wins * 10 >= instances * 6 && late > early && secs < 1200.0;
    return {ok, fmt("greedy policy <= random 3-token programs on %zu/%zu held-out instances (>= 60%%); mean reward "
                    "episodes 1-50 %.4f, 251-300 %.4f; %.1f s (< 1200 s)",
                    wins, instances, early, late, secs)};
}

// ---------------------------------------------------------------- baseline

Outcome de_baseline_sanity() {
    const TaskSpec spec = make_task(Family::sphere, 10, 77, 10000);
    std::vector<double> ratio;
    for (std::uint64_t s = 0; s < 20; ++s) {
        Environment env = make_environment(spec);
        env.permit_overshoot(env.budget());
        const RunTrace tr = de_baseline(env, 10000, s);
        ratio.push_back(tr.final_best() / tr.best.front());
    }
    const double med = stats::median(ratio);
    return {med <= 1e-3, fmt("median final/initial best over 20 seeds %.3e (<= 1e-3)", med)};
}

// ---------------------------------------------------------------- overhead

Outcome overhead_bound() {
    const std::size_t d = 100, M = 200000;  // design phase of the d=100 evaluation budget
    const TaskSpec spec = make_task(Family::rastrigin, d, 5, M);
    Environment env = make_environment(spec);
    Rng rng(8);
    std::uniform_real_distribution<double> u(-100.0, 100.0);
    std::vector<double> x(d);
    for (std::size_t i = 0; i < M; ++i) {
        for (auto& v : x) v = u(rng);
        env.evaluate(x);
    }
    const PolicyParams params = PolicyParams::initialized(Architecture{}, 1);
    std::vector<double> times;
    std::vector<int> tokens;
    for (int rep = 0; rep < 7; ++rep) {
        const auto t0 = Clock::now();
        const TrajectoryGraph g = build_graph(env, GraphConfig{}, rng);
        const ForwardPass pass = forward(g.H, g.A, params);
        const PolicyOutput out = decode(pass, DecodeMode::greedy, rng);
        times.push_back(1000.0 * seconds_since(t0));
        tokens = out.tokens;
        if (g.nodes() != 300) return {false, "graph did not have 300 nodes"};
    }
    const double med = stats::median(times);
    const double worst = *std::max_element(times.begin(), times.end());
    return {med < 100.0, fmt("graph + GNN forward + greedy decode, N=300 from M=%zu, d=100, h=64: median %.1f ms, "
                             "max %.1f ms over 7 repetitions (< 100 ms)",
                             M, med, worst)};
}

// ---------------------------------------------------------------- aux head

Outcome aux_learnability() {
    const auto t0 = Clock::now();
    // the smoke setup with one family per landscape class
    const TrainConfig cfg = smoke_config(
        TaskPool::mixed, {Family::sphere, Family::rastrigin, Family::hybrid_blend, Family::composition_blend}, 4096);
    const TrainResult trained = train(cfg);
    Rng rng(derive_seed(0xa0c5, 1));
    std::size_t correct = 0;
    std::array<std::size_t, kNumLandscapeLabels> per_class{}, per_class_hit{};
    for (int i = 0; i < 200; ++i) {
        SampledTask task = sample_task(rng, cfg.task_pool, cfg.tasks);
        const DesignProbe probe = run_design_probe(task.env, cfg.rho, GraphConfig{}, rng);
        const Eigen::VectorXd logits = aux_forward(gnn_forward(probe.graph.H, probe.graph.A, trained.params), trained.params);
        Eigen::Index cls = 0;
        logits.maxCoeff(&cls);
        const auto label = static_cast<std::size_t>(task.spec.label);
        ++per_class[label];
        if (static_cast<std::size_t>(cls) == label) {
            ++correct;
            ++per_class_hit[label];
        }
    }
    const double acc = static_cast<double>(correct) / 200.0;
    std::ostringstream pc;
    for (int c = 0; c < kNumLandscapeLabels; ++c)
        pc << (c ? " " : "") << to_string(static_cast<LandscapeLabel>(c)) << " " << per_class_hit[static_cast<std::size_t>(c)]
           << "/" << per_class[static_cast<std::size_t>(c)];
    return {acc > 0.40, fmt("aux accuracy %.1f%% on 200 fresh design-phase graphs (> 40%%, chance 25%%) [%s]; %.1f s",
                            100.0 * acc, pc.str().c_str(), seconds_since(t0))};
}

// ---------------------------------------------------------------- ablation

Outcome ablation_pipeline() {
    const auto t0 = Clock::now();
    const fs::path dir = fs::temp_directory_path() / "opal_acceptance_ablation";
    fs::remove_all(dir);
    ExperimentConfig cfg = profile_defaults("desk");
    cfg.mode = Mode::ablate;
    cfg.seed = 11;
    cfg.train.seed = 11;
    cfg.paths.out_dir = dir;
    std::ostringstream log;
    const AblationOutcome res = cmd_ablate(cfg, log);

    std::ifstream table(res.table_path);
    std::string header, line;
    std::getline(table, header);
    std::size_t rows = 0;
    while (std::getline(table, line))
        if (!line.empty()) ++rows;
    const bool columns = header.find("avg_rank") != std::string::npos &&
                         header.find("unique_programs") != std::string::npos &&
                         header.find("non_de_frac") != std::string::npos;

    const auto manifest = nlohmann::json::parse(std::ifstream(dir / "ablation" / "noGraph" / "manifest.json"));
    const bool identity = manifest.at("adjacency_probe").at("verified_identity").get<bool>() &&
                          manifest.at("graph_mode") == "identity";
    const auto no_aux = nlohmann::json::parse(std::ifstream(dir / "ablation" / "noAux" / "manifest.json"));
    const bool aux_zero = no_aux.at("lambda_aux").get<double>() == 0.0;
    const auto full = nlohmann::json::parse(std::ifstream(dir / "ablation" / "full" / "manifest.json"));
    const bool full_knn = !full.at("adjacency_probe").at("identity").get<bool>();

    std::ostringstream summary;
    for (const auto& r : res.rows)
        summary << " " << r.variant << "(rank " << fmt("%.2f", r.avg_rank) << ", unique " << r.unique_programs
                << ", nonDE " << fmt("%.2f", r.non_de_frac) << ")";
    const double secs = seconds_since(t0);
    return {rows == 4 && columns && identity && aux_zero && full_knn,
            fmt("%zu-row table with avg_rank/unique_programs/non_de_frac columns: %s; noGraph adjacency verified "
                "identity: %s; noAux lambda_aux=0: %s;%s; %.1f s",
                rows, columns ? "yes" : "no", identity ? "yes" : "no", aux_zero ? "yes" : "no", summary.str().c_str(),
                secs)};
}

const std::vector<std::pair<std::string, std::function<Outcome()>>>& criteria() {
    static const std::vector<std::pair<std::string, std::function<Outcome()>>> list = {
        {"gradient_oracle", gradient_oracle},
        {"reward_exactness", reward_exactness},
        {"executor_budget_law", executor_budget_law},
        {"graph_invariants", graph_invariants},
        {"statistics_oracles", statistics_oracles},
        {"learning_smoke", learning_smoke},
        {"de_baseline_sanity", de_baseline_sanity},
        {"overhead_bound", overhead_bound},
        {"aux_learnability", aux_learnability},
        {"ablation_pipeline", ablation_pipeline},
    };
    return list;
}

}  // namespace

int main(int argc, char** argv) {
    const std::string only = argc > 1 ? argv[1] : "";
    bool all_pass = true, ran = false;
    for (const auto& [name, check] : criteria()) {
        if (!only.empty() && only != name) continue;
        ran = true;
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
        all_pass = all_pass && o.pass;
    }
    if (!ran) {
        std::cerr << "unknown criterion '" << only << "'\n";
        return 2;
    }
    return all_pass ? 0 : 1;
}
