#pragma once

#include "opal/checkpoint.hpp"
#include "opal/executor.hpp"
#include "opal/landscape_graph.hpp"
#include "opal/tasks.hpp"

#include <functional>

namespace opal {

inline constexpr double kRewardEps = 1e-12;

/// log10 improvement from the design-phase best to the final best. With a
/// known optimum value both arguments are measured from it; either way they
/// are clamped at zero before eps is added, so the log stays finite.
double reward(double f_design, double f_final, double eps = kRewardEps,
              std::optional<double> known_shift = std::nullopt);

/// Exponential smoothing with the first episode seeding the baseline.
/// `episode` is 1-based.
double update_baseline(double baseline, double reward, std::size_t episode, double alpha = 0.9);

/// Rescale `grad` in place to at most `max_norm`; returns the norm before clipping.
double clip_gradient(Eigen::VectorXd& grad, double max_norm);

/// Adaptive-moment optimizer (bias-corrected first and second moments).
class Adam {
public:
    Adam() = default;
    Adam(Eigen::Index size, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

    nlohmann::json state() const;
    void load_state(const nlohmann::json& j);
    long steps() const noexcept { return t_; }

private:
    double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    Eigen::VectorXd m_, v_;
    long t_ = 0;
};

struct TrainConfig {
    std::size_t episodes = 10000;
    double rho = 0.2;
    double beta = 0.01;
    double lambda_aux = 0.3;
    double alpha = 0.9;
    double lr = 1e-3;
    double clip_norm = 5.0;
    std::uint64_t seed = 0;
    TaskPool task_pool = TaskPool::mixed;
    GraphMode graph_mode = GraphMode::knn;
    TaskSamplingOptions tasks;
    int hidden = 64;
    std::size_t checkpoint_every = 500;

    /// Throws ConfigError naming the first invalid field.
    void validate() const;
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

struct EpisodeRecord {
    std::size_t episode = 0;
    TaskSpec task;
    double reward = 0.0;
    double advantage = 0.0;
    double baseline = 0.0;
    std::vector<int> tokens;
    double loss = 0.0;
    double grad_norm = 0.0;      // after clipping
    double raw_grad_norm = 0.0;  // before clipping
    double entropy = 0.0;
    double aux_loss = 0.0;
    int aux_prediction = -1;
    double f_design_best = 0.0;
    double f_final_best = 0.0;
    std::size_t design_evals = 0;
    std::size_t run_evals = 0;
    std::size_t total_evals = 0;
    bool flagged = false;  // non-finite loss, parameters left untouched
};

/// Header plus one CSV row per record.
std::string episode_log_header();
std::string episode_log_row(const EpisodeRecord& r);

/// Everything the policy consumes from one problem instance: design-phase
/// result and trajectory graph. Shared by training and evaluation.
struct DesignProbe {
    DesignResult design;
    TrajectoryGraph graph;
    std::size_t design_budget = 0;
    std::size_t run_budget = 0;
};

/// Split `env.budget()` into floor(rho T) design evaluations and the rest,
/// run the probe and build the graph. Stops trajectory recording afterwards.
DesignProbe run_design_probe(Environment& env, double rho, const GraphConfig& graph, Rng& rng);

/// REINFORCE meta-training loop with an exponentially smoothed baseline,
/// entropy bonus, auxiliary landscape classification and clipped Adam steps.
class Trainer {
public:
    explicit Trainer(TrainConfig config);
    /// Continue from a checkpoint written by `checkpoint()`.
    Trainer(TrainConfig config, const Checkpoint& resume);

    EpisodeRecord step();
    std::vector<EpisodeRecord> run(std::size_t episodes,
                                   const std::function<void(const EpisodeRecord&)>& on_episode = {});

    Checkpoint checkpoint() const;
    const PolicyParams& params() const noexcept { return params_; }
    const TrainConfig& config() const noexcept { return config_; }
    std::size_t episode() const noexcept { return episode_; }
    double baseline() const noexcept { return baseline_; }
    GraphConfig graph_config() const;

private:
    TrainConfig config_;
    PolicyParams params_;
    Adam adam_;
    double baseline_ = 0.0;
    std::size_t episode_ = 0;
};

struct TrainResult {
    PolicyParams params;
    std::vector<EpisodeRecord> log;
};

TrainResult train(const TrainConfig& config);

}  // namespace opal
