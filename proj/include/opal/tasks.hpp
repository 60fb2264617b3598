#pragma once

#include "opal/functions.hpp"

#include <string>
#include <vector>

namespace opal {

enum class TaskPool { mixed, restricted };

std::string_view to_string(TaskPool p);
TaskPool task_pool_from_string(std::string_view name);

inline constexpr double kDomainLower = -100.0;
inline constexpr double kDomainUpper = 100.0;

/// A fully reconstructible task: everything random about it (rotation,
/// shift, blend structure, noise stream) is a function of `seed`.
struct TaskSpec {
    Family family = Family::sphere;
    std::size_t dim = 0;
    std::uint64_t seed = 0;
    Eigen::MatrixXd rotation;  // orthogonal, dim x dim
    Eigen::VectorXd shift;     // optimum location, inside [-80, 80]^dim
    double noise_sigma = 0.0;
    LandscapeLabel label = LandscapeLabel::unimodal;
    std::size_t budget = 0;
    /// CEC-style instances carry an additive bias; it is also the known
    /// optimum value.
    bool cec_like = false;
    double bias = 0.0;
};

/// Haar-distributed orthogonal matrix from the QR factorization of a
/// Gaussian matrix (with the sign of diag(R) folded into Q).
Eigen::MatrixXd random_rotation(std::size_t dim, Rng& rng);

/// Deterministic task construction from its record fields.
TaskSpec make_task(Family family, std::size_t dim, std::uint64_t seed, std::size_t budget,
                   double noise_sigma = 0.0, bool cec_like = false);

/// The shifted/rotated objective of a task, without noise. Its minimum value
/// is `spec.bias`, attained at x = spec.shift.
Objective task_objective(const TaskSpec& spec);

/// Environment over [-100, 100]^dim with the task's noise and known shift.
Environment make_environment(const TaskSpec& spec);

/// max - min of the noise-free objective over `samples` uniform points.
double estimate_f_range(const TaskSpec& spec, std::size_t samples = 32);

struct TaskSamplingOptions {
    std::vector<std::size_t> dims = {10, 30, 50};
    /// Empty means the pool's default family set.
    std::vector<Family> families;
    std::size_t budget_per_dim = 1000;
    /// Share of mixed-pool tasks that carry observation noise.
    double noise_fraction = 0.3;
    double noise_scale = 0.01;
};

/// Families available in the restricted pool: CEC-like shifted/rotated
/// instances, one per landscape class.
const std::vector<Family>& restricted_families();

struct SampledTask {
    TaskSpec spec;
    Environment env;
};

SampledTask sample_task(Rng& rng, TaskPool pool, const TaskSamplingOptions& opts = {});

/// One-line `key=value` record sufficient to rebuild the task.
std::string to_record(const TaskSpec& spec);
TaskSpec task_from_record(const std::string& record);

}  // namespace opal
