#include "opal/environment.hpp"

#include <algorithm>
#include <cmath>

namespace opal {

void Trajectory::append(std::span<const double> x, double f) {
    points_.insert(points_.end(), x.begin(), x.end());
    fitness_.push_back(f);
}

void Trajectory::clear() {
    points_.clear();
    fitness_.clear();
}

RowMatrix Trajectory::points() const {
    RowMatrix out(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(dim_));
    std::copy(points_.begin(), points_.end(), out.data());
    return out;
}

Environment::Environment(Objective objective, Eigen::VectorXd lower, Eigen::VectorXd upper,
                         std::size_t budget, double noise_sigma, std::uint64_t noise_seed,
                         std::optional<double> known_shift)
    : objective_(std::move(objective)),
      lower_(std::move(lower)),
      upper_(std::move(upper)),
      budget_(budget),
      noise_sigma_(noise_sigma),
      noise_rng_(noise_seed),
      known_shift_(known_shift),
      trajectory_(static_cast<std::size_t>(lower_.size())) {
    if (!objective_) throw std::invalid_argument("environment: empty objective");
    if (lower_.size() == 0 || lower_.size() != upper_.size())
        throw std::invalid_argument("environment: bounds must be nonempty and of equal length");
    if ((lower_.array() >= upper_.array()).any())
        throw std::invalid_argument("environment: lower bound must be below upper bound");
    if (budget_ == 0) throw std::invalid_argument("environment: budget must be positive");
    if (!(noise_sigma_ >= 0.0)) throw std::invalid_argument("environment: negative noise");
}

std::size_t Environment::remaining() const noexcept {
    const std::size_t cap = budget_ + overshoot_;
    return evals_used_ >= cap ? 0 : cap - evals_used_;
}

double Environment::evaluate(std::span<const double> x) {
    if (x.size() != dim()) throw std::invalid_argument("environment: dimension mismatch");
    if (remaining() == 0)
        throw BudgetExhausted("environment: evaluation budget of " + std::to_string(budget_) +
                              " exhausted");
    double f = objective_(x);
    if (noise_sigma_ > 0.0) f += noise_sigma_ * std::normal_distribution<double>{}(noise_rng_);
    if (!std::isfinite(f)) {
        f = kNonFiniteFitness;
        ++nonfinite_;
    }
    ++evals_used_;
    if (recording_) trajectory_.append(x, f);
    return f;
}

void Environment::clip(std::span<double> x) const {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lower_[i], upper_[i]);
}

bool Environment::in_bounds(std::span<const double> x) const {
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] < lower_[i] || x[i] > upper_[i]) return false;
    return true;
}

}  // namespace opal
