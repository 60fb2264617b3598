#pragma once

#include "opal/environment.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace opal {

enum class SubsampleStrategy { time_uniform, random, fitness_stratified, mixed };
enum class GraphMode { knn, identity };

std::string_view to_string(SubsampleStrategy s);
SubsampleStrategy subsample_strategy_from_string(std::string_view name);
std::string_view to_string(GraphMode m);
GraphMode graph_mode_from_string(std::string_view name);

/// Column layout of the node-feature matrix.
enum FeatureColumn : int {
    kFitnessZ = 0,
    kRankNorm = 1,
    kDistBest = 2,
    kTimeNorm = 3,
    kLocalImprovement = 4,
    kDimFeature = 5,
};
inline constexpr int kNumNodeFeatures = 6;
inline constexpr double kStandardizeEps = 1e-12;

struct GraphConfig {
    std::size_t max_nodes = 300;
    std::size_t k = 10;
    SubsampleStrategy strategy = SubsampleStrategy::mixed;
    GraphMode mode = GraphMode::knn;
    std::size_t strata = 10;
};

struct TrajectoryGraph {
    Eigen::MatrixXd H;  // N x 6
    Eigen::MatrixXd A;  // N x N, entries in {0, 1}
    std::vector<std::size_t> selected;  // original trajectory positions
    RowMatrix points;                   // N x d
    std::size_t k_eff = 0;

    Eigen::Index nodes() const noexcept { return H.rows(); }
};

/// Sorted, distinct trajectory positions; min(M, max_nodes) of them.
std::vector<std::size_t> subsample(std::size_t M, std::size_t max_nodes, SubsampleStrategy strategy,
                                   std::span<const double> fitness, Rng& rng, std::size_t strata = 10);

/// (v - mean) / (std + eps) with the population standard deviation.
Eigen::VectorXd standardize(const Eigen::VectorXd& v);

/// Six landscape features per selected point. `original_indices[i]` is the
/// trajectory position of row i and `M` the full trajectory length.
Eigen::MatrixXd node_features(const RowMatrix& points, std::span<const double> fitness,
                              std::span<const std::size_t> original_indices, std::size_t M,
                              std::size_t dim);

/// Symmetric k-NN adjacency with self-loops. Each node links to its
/// min(k, N-1) nearest neighbours (ties to the lower index); the union is
/// taken by the element-wise maximum with the transpose.
Eigen::MatrixXd knn_adjacency(const RowMatrix& points, std::size_t k);

/// Subsample, featurize and connect a trajectory of M points.
TrajectoryGraph build_graph(const RowMatrix& points, std::span<const double> fitness, std::size_t dim,
                            const GraphConfig& config, Rng& rng);

/// Graph of an environment's recorded trajectory, with points mapped into
/// the unit box first so distances do not depend on the domain size.
TrajectoryGraph build_graph(const Environment& env, const GraphConfig& config, Rng& rng);

RowMatrix to_unit_box(const RowMatrix& points, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper);

}  // namespace opal
