#pragma once

#include "opal/common.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace opal {

/// Deterministic scalar objective. Implementations must be safe to call
/// concurrently (they hold no mutable state).
using Objective = std::function<double(std::span<const double>)>;

/// Value substituted for NaN/Inf objective outputs.
inline constexpr double kNonFiniteFitness = 1e100;

class BudgetExhausted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Evaluated points in call order, stored flat (row-major, `dim` per point).
class Trajectory {
public:
    explicit Trajectory(std::size_t dim = 0) : dim_(dim) {}

    void append(std::span<const double> x, double f);
    void clear();

    std::size_t size() const noexcept { return fitness_.size(); }
    bool empty() const noexcept { return fitness_.empty(); }
    std::size_t dim() const noexcept { return dim_; }
    std::span<const double> point(std::size_t i) const {
        return {points_.data() + i * dim_, dim_};
    }
    const std::vector<double>& fitness() const noexcept { return fitness_; }
    /// Copy of all points as an M x d matrix.
    RowMatrix points() const;

private:
    std::size_t dim_;
    std::vector<double> points_;
    std::vector<double> fitness_;
};

/// Box-bounded objective with function-evaluation accounting.
///
/// Every call to `evaluate` increments `evals_used` by one and, while
/// recording is enabled, appends (x, f) to the trajectory. Calls beyond the
/// budget raise `BudgetExhausted` unless an overshoot allowance was granted
/// with `permit_overshoot`; population-based callers need it because they
/// work in whole batches.
class Environment {
public:
    Environment(Objective objective, Eigen::VectorXd lower, Eigen::VectorXd upper,
                std::size_t budget, double noise_sigma = 0.0, std::uint64_t noise_seed = 0,
                std::optional<double> known_shift = std::nullopt);

    double evaluate(std::span<const double> x);
    double evaluate(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
        return evaluate(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
    }

    std::size_t dim() const noexcept { return static_cast<std::size_t>(lower_.size()); }
    const Eigen::VectorXd& lower() const noexcept { return lower_; }
    const Eigen::VectorXd& upper() const noexcept { return upper_; }
    Eigen::VectorXd range() const { return upper_ - lower_; }

    std::size_t budget() const noexcept { return budget_; }
    std::size_t evals_used() const noexcept { return evals_used_; }
    /// Evaluations still allowed, overshoot allowance included.
    std::size_t remaining() const noexcept;
    void permit_overshoot(std::size_t extra) noexcept { overshoot_ = extra; }
    std::size_t overshoot_allowance() const noexcept { return overshoot_; }

    double noise_sigma() const noexcept { return noise_sigma_; }
    const std::optional<double>& known_shift() const noexcept { return known_shift_; }
    /// Number of objective outputs that were NaN/Inf and replaced.
    std::size_t nonfinite_count() const noexcept { return nonfinite_; }

    const Trajectory& trajectory() const noexcept { return trajectory_; }
    /// Recording is on by default. Long evaluation runs switch it off after
    /// the design phase; from then on the trajectory no longer tracks every call.
    void set_recording(bool on) noexcept { recording_ = on; }
    bool recording() const noexcept { return recording_; }

    void clip(std::span<double> x) const;
    bool in_bounds(std::span<const double> x) const;

private:
    Objective objective_;
    Eigen::VectorXd lower_;
    Eigen::VectorXd upper_;
    std::size_t budget_;
    std::size_t overshoot_ = 0;
    std::size_t evals_used_ = 0;
    double noise_sigma_;
    Rng noise_rng_;
    std::optional<double> known_shift_;
    std::size_t nonfinite_ = 0;
    bool recording_ = true;
    Trajectory trajectory_;
};

}  // namespace opal
