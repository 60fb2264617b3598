#pragma once

#include <Eigen/Core>

#include <span>
#include <vector>

namespace opal::stats {

/// Ranks 1..n with ties sharing their average rank.
std::vector<double> average_ranks(std::span<const double> values);

double median(std::vector<double> values);

/// Regularized upper incomplete gamma Q(a, x), by series for x < a + 1
/// and a Lentz continued fraction otherwise.
double gamma_q(double a, double x);
double chi_square_sf(double x, double df);
double normal_sf(double z);

struct FriedmanResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::vector<double> mean_ranks;
};

/// Friedman test on an n (problems) x k (algorithms) matrix of ranks.
FriedmanResult friedman(const Eigen::MatrixXd& ranks);

struct WilcoxonResult {
    double statistic = 0.0;  // W+ : rank sum of positive (a - b) differences
    double p_value = 1.0;    // two-sided
    std::size_t nonzero = 0;
    bool exact = false;
    bool all_tied = false;
};

inline constexpr std::size_t kWilcoxonExactLimit = 12;

/// Paired signed-rank test. Zero differences are dropped; up to 12
/// remaining pairs use full enumeration of sign assignments, larger samples
/// a normal approximation with continuity and tie corrections.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

/// The two p-value routes, exposed separately for cross-checking.
double wilcoxon_exact_p(std::span<const double> ranks, std::span<const int> signs);
double wilcoxon_normal_p(std::span<const double> ranks, double w_plus);

/// Holm step-down adjustment; output in input order.
std::vector<double> holm_adjust(std::span<const double> p);

}  // namespace opal::stats
