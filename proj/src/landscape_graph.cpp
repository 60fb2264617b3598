#include "opal/landscape_graph.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace opal {

namespace {

std::vector<std::size_t> time_uniform(std::size_t M, std::size_t n) {
    std::vector<std::size_t> out;
    if (n >= M) {
        out.resize(M);
        std::iota(out.begin(), out.end(), std::size_t{0});
        return out;
    }
    if (n == 0) return out;
    if (n == 1) return {0};
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back((i * (M - 1) + (n - 1) / 2) / (n - 1));
    return out;
}

/// Equal draws from `strata` fitness-quantile bins of `pool`. Bins that are
/// too small give what they have; the shortfall goes round-robin to bins
/// with spare members.
std::vector<std::size_t> fitness_stratified(std::vector<std::size_t> pool, std::size_t n,
                                            std::span<const double> fitness, Rng& rng,
                                            std::size_t strata) {
    if (n >= pool.size()) {
        std::sort(pool.begin(), pool.end());
        return pool;
    }
    std::stable_sort(pool.begin(), pool.end(),
                     [&](std::size_t a, std::size_t b) { return fitness[a] < fitness[b]; });
    const std::size_t L = pool.size();
    strata = std::max<std::size_t>(1, strata);
    std::vector<std::size_t> bin_begin(strata + 1);
    for (std::size_t b = 0; b <= strata; ++b) bin_begin[b] = b * L / strata;
    std::vector<std::size_t> quota(strata), size(strata);
    std::size_t shortfall = 0;
    for (std::size_t b = 0; b < strata; ++b) {
        size[b] = bin_begin[b + 1] - bin_begin[b];
        const std::size_t want = n / strata + (b < n % strata ? 1 : 0);
        quota[b] = std::min(want, size[b]);
        shortfall += want - quota[b];
    }
    while (shortfall > 0) {
        bool moved = false;
        for (std::size_t b = 0; b < strata && shortfall > 0; ++b)
            if (quota[b] < size[b]) {
                ++quota[b];
                --shortfall;
                moved = true;
            }
        if (!moved) break;
    }
    std::vector<std::size_t> out;
    out.reserve(n);
    for (std::size_t b = 0; b < strata; ++b) {
        auto first = pool.begin() + static_cast<std::ptrdiff_t>(bin_begin[b]);
        auto last = pool.begin() + static_cast<std::ptrdiff_t>(bin_begin[b + 1]);
        std::sample(first, last, std::back_inserter(out), quota[b], rng);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

std::string_view to_string(SubsampleStrategy s) {
    switch (s) {
        case SubsampleStrategy::time_uniform: return "time_uniform";
        case SubsampleStrategy::random: return "random";
        case SubsampleStrategy::fitness_stratified: return "fitness_stratified";
        case SubsampleStrategy::mixed: return "mixed";
    }
    return "?";
}

SubsampleStrategy subsample_strategy_from_string(std::string_view name) {
    for (auto s : {SubsampleStrategy::time_uniform, SubsampleStrategy::random,
                   SubsampleStrategy::fitness_stratified, SubsampleStrategy::mixed})
        if (to_string(s) == name) return s;
    throw std::invalid_argument("unknown subsampling strategy '" + std::string(name) + "'");
}

std::string_view to_string(GraphMode m) { return m == GraphMode::knn ? "knn" : "identity"; }

GraphMode graph_mode_from_string(std::string_view name) {
    if (name == "knn") return GraphMode::knn;
    if (name == "identity") return GraphMode::identity;
    throw std::invalid_argument("unknown graph mode '" + std::string(name) + "'");
}

std::vector<std::size_t> subsample(std::size_t M, std::size_t max_nodes, SubsampleStrategy strategy,
                                   std::span<const double> fitness, Rng& rng, std::size_t strata) {
    if (M == 0) throw std::invalid_argument("subsample: empty trajectory");
    if (fitness.size() < M) throw std::invalid_argument("subsample: fitness shorter than trajectory");
    if (max_nodes == 0) throw std::invalid_argument("subsample: max_nodes must be positive");
    std::vector<std::size_t> all(M);
    std::iota(all.begin(), all.end(), std::size_t{0});
    if (M <= max_nodes) return all;

    switch (strategy) {
        case SubsampleStrategy::time_uniform: return time_uniform(M, max_nodes);
        case SubsampleStrategy::random: {
            std::vector<std::size_t> out;
            out.reserve(max_nodes);
            std::sample(all.begin(), all.end(), std::back_inserter(out), max_nodes, rng);
            return out;
        }
        case SubsampleStrategy::fitness_stratified:
            return fitness_stratified(std::move(all), max_nodes, fitness, rng, strata);
        case SubsampleStrategy::mixed: {
            // the stratified half is drawn from positions the time-uniform half
            // did not take, so the union is already duplicate-free
            std::vector<std::size_t> out = time_uniform(M, max_nodes / 2);
            std::vector<std::size_t> rest;
            rest.reserve(M - out.size());
            std::set_difference(all.begin(), all.end(), out.begin(), out.end(), std::back_inserter(rest));
            const auto strat = fitness_stratified(std::move(rest), max_nodes - out.size(), fitness, rng, strata);
            out.insert(out.end(), strat.begin(), strat.end());
            std::sort(out.begin(), out.end());
            return out;
        }
    }
    throw std::invalid_argument("subsample: unknown strategy");
}

Eigen::VectorXd standardize(const Eigen::VectorXd& v) {
    const auto n = static_cast<double>(v.size());
    if (v.size() == 0) return v;
    double mu = v.sum() / n;
    mu += (v.array() - mu).sum() / n;  // second pass removes most rounding drift
    const Eigen::ArrayXd c = v.array() - mu;
    const double sd = std::sqrt(c.square().sum() / n);
    Eigen::VectorXd out = (c / (sd + kStandardizeEps)).matrix();
    // re-center: the division can reintroduce an offset of a few ulps
    out.array() -= out.mean();
    return out;
}

Eigen::MatrixXd node_features(const RowMatrix& points, std::span<const double> fitness,
                              std::span<const std::size_t> original_indices, std::size_t M,
                              std::size_t dim) {
    const Eigen::Index N = points.rows();
    if (N == 0) throw std::invalid_argument("node_features: no nodes");
    if (fitness.size() != static_cast<std::size_t>(N) || original_indices.size() != static_cast<std::size_t>(N))
        throw std::invalid_argument("node_features: fitness/index length mismatch");
    Eigen::MatrixXd H(N, kNumNodeFeatures);
    const Eigen::Map<const Eigen::VectorXd> f(fitness.data(), N);

    H.col(kFitnessZ) = standardize(f);

    std::vector<Eigen::Index> by_fitness(static_cast<std::size_t>(N));
    std::iota(by_fitness.begin(), by_fitness.end(), Eigen::Index{0});
    std::stable_sort(by_fitness.begin(), by_fitness.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return f[a] < f[b]; });
    const double rank_den = static_cast<double>(std::max<Eigen::Index>(N - 1, 1));
    for (Eigen::Index r = 0; r < N; ++r)
        H(by_fitness[static_cast<std::size_t>(r)], kRankNorm) = static_cast<double>(r) / rank_den;

    const Eigen::Index best = by_fitness.front();
    for (Eigen::Index i = 0; i < N; ++i) H(i, kDistBest) = (points.row(i) - points.row(best)).norm();

    for (Eigen::Index i = 0; i < N; ++i)
        H(i, kTimeNorm) = M > 1 ? static_cast<double>(original_indices[static_cast<std::size_t>(i)]) /
                                      static_cast<double>(M - 1)
                                : 0.0;

    std::vector<Eigen::Index> by_time(static_cast<std::size_t>(N));
    std::iota(by_time.begin(), by_time.end(), Eigen::Index{0});
    std::stable_sort(by_time.begin(), by_time.end(), [&](Eigen::Index a, Eigen::Index b) {
        return original_indices[static_cast<std::size_t>(a)] < original_indices[static_cast<std::size_t>(b)];
    });
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(N);
    for (std::size_t r = 1; r < by_time.size(); ++r)
        delta[by_time[r]] = f[by_time[r - 1]] - f[by_time[r]];
    H.col(kLocalImprovement) = standardize(delta);

    H.col(kDimFeature).setConstant(std::log(static_cast<double>(dim) + 1.0));
    return H;
}

Eigen::MatrixXd knn_adjacency(const RowMatrix& points, std::size_t k) {
    const Eigen::Index N = points.rows();
    if (N == 0) throw std::invalid_argument("knn_adjacency: no nodes");
    const auto k_eff = static_cast<Eigen::Index>(std::min<std::size_t>(k, static_cast<std::size_t>(N - 1)));
    Eigen::MatrixXd D(N, N);
    for (Eigen::Index i = 0; i < N; ++i) {
        D(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < N; ++j) D(i, j) = D(j, i) = (points.row(i) - points.row(j)).squaredNorm();
    }
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(N, N);
    std::vector<Eigen::Index> cand;
    for (Eigen::Index i = 0; i < N && k_eff > 0; ++i) {
        cand.clear();
        for (Eigen::Index j = 0; j < N; ++j)
            if (j != i) cand.push_back(j);
        auto closer = [&](Eigen::Index a, Eigen::Index b) {
            return D(i, a) < D(i, b) || (D(i, a) == D(i, b) && a < b);
        };
        std::nth_element(cand.begin(), cand.begin() + (k_eff - 1), cand.end(), closer);
        for (Eigen::Index r = 0; r < k_eff; ++r) {
            const Eigen::Index j = cand[static_cast<std::size_t>(r)];
            A(i, j) = 1.0;
            A(j, i) = 1.0;
        }
    }
    return A;
}

namespace {

using RowGather = std::function<void(std::size_t, Eigen::Ref<Eigen::RowVectorXd>)>;

TrajectoryGraph assemble(std::size_t M, Eigen::Index cols, std::span<const double> fitness,
                         const RowGather& gather, std::size_t dim, const GraphConfig& config, Rng& rng) {
    if (M == 0) throw std::invalid_argument("build_graph: empty trajectory");
    TrajectoryGraph g;
    g.selected = subsample(M, config.max_nodes, config.strategy, fitness, rng, config.strata);
    const auto N = static_cast<Eigen::Index>(g.selected.size());
    g.points.resize(N, cols);
    std::vector<double> f(g.selected.size());
    for (Eigen::Index i = 0; i < N; ++i) {
        const std::size_t t = g.selected[static_cast<std::size_t>(i)];
        gather(t, g.points.row(i));
        f[static_cast<std::size_t>(i)] = fitness[t];
    }
    g.H = node_features(g.points, f, g.selected, M, dim);
    g.k_eff = std::min<std::size_t>(config.k, g.selected.size() - 1);
    g.A = config.mode == GraphMode::identity ? Eigen::MatrixXd::Identity(N, N)
                                             : knn_adjacency(g.points, config.k);
    return g;
}

}  // namespace

TrajectoryGraph build_graph(const RowMatrix& points, std::span<const double> fitness, std::size_t dim,
                            const GraphConfig& config, Rng& rng) {
    return assemble(
        static_cast<std::size_t>(points.rows()), points.cols(), fitness,
        [&](std::size_t t, Eigen::Ref<Eigen::RowVectorXd> row) { row = points.row(static_cast<Eigen::Index>(t)); },
        dim, config, rng);
}

RowMatrix to_unit_box(const RowMatrix& points, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
    RowMatrix out = points;
    const Eigen::RowVectorXd lo = lower.transpose();
    const Eigen::RowVectorXd inv = (upper - lower).cwiseInverse().transpose();
    for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) = (out.row(i) - lo).cwiseProduct(inv);
    return out;
}

TrajectoryGraph build_graph(const Environment& env, const GraphConfig& config, Rng& rng) {
    const Trajectory& t = env.trajectory();
    if (t.empty()) throw std::invalid_argument("build_graph: environment has no recorded trajectory");
    const Eigen::RowVectorXd lo = env.lower().transpose();
    const Eigen::RowVectorXd inv = env.range().cwiseInverse().transpose();
    return assemble(
        t.size(), static_cast<Eigen::Index>(env.dim()), t.fitness(),
        [&](std::size_t i, Eigen::Ref<Eigen::RowVectorXd> row) {
            const auto p = t.point(i);
            const Eigen::Map<const Eigen::RowVectorXd> x(p.data(), static_cast<Eigen::Index>(p.size()));
            row = (x - lo).cwiseProduct(inv);
        },
        env.dim(), config, rng);
}

}  // namespace opal
