#include "opal/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace opal::stats {

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median of an empty sample");
    const std::size_t n = values.size();
    std::sort(values.begin(), values.end());
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double gamma_q(double a, double x) {
    if (!(a > 0.0) || x < 0.0) throw std::invalid_argument("gamma_q: need a > 0 and x >= 0");
    if (x == 0.0) return 1.0;
    const double log_prefix = -x + a * std::log(x) - std::lgamma(a);
    constexpr double eps = 1e-16;
    if (x < a + 1.0) {
        double ap = a, sum = 1.0 / a, del = sum;
        for (int n = 0; n < 10000; ++n) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * eps) break;
        }
        return std::clamp(1.0 - sum * std::exp(log_prefix), 0.0, 1.0);
    }
    constexpr double tiny = std::numeric_limits<double>::min() / eps;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) break;
    }
    return std::clamp(std::exp(log_prefix) * h, 0.0, 1.0);
}

double chi_square_sf(double x, double df) {
    if (x <= 0.0) return 1.0;
    return gamma_q(0.5 * df, 0.5 * x);
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

FriedmanResult friedman(const Eigen::MatrixXd& ranks) {
    const Eigen::Index n = ranks.rows(), k = ranks.cols();
    if (n < 2 || k < 2) throw std::invalid_argument("friedman: need at least 2 problems and 2 algorithms");
    FriedmanResult r;
    const Eigen::VectorXd mean = ranks.colwise().mean().transpose();
    r.mean_ranks.assign(mean.data(), mean.data() + k);
    const double nn = static_cast<double>(n), kk = static_cast<double>(k);
    r.statistic = 12.0 * nn / (kk * (kk + 1.0)) * mean.squaredNorm() - 3.0 * nn * (kk + 1.0);
    // sums of squares can leave -1e-15 on perfectly tied input
    if (std::abs(r.statistic) < 1e-9) r.statistic = 0.0;
    r.p_value = chi_square_sf(r.statistic, kk - 1.0);
    return r;
}

double wilcoxon_exact_p(std::span<const double> ranks, std::span<const int> signs) {
    const std::size_t m = ranks.size();
    if (m == 0) return 1.0;
    if (m > 30) throw std::invalid_argument("wilcoxon_exact_p: too many pairs to enumerate");
    // average ranks are multiples of 1/2; doubling keeps all sums integral
    std::vector<long> r2(m);
    long total = 0, observed = 0;
    for (std::size_t i = 0; i < m; ++i) {
        r2[i] = std::lround(2.0 * ranks[i]);
        total += r2[i];
        if (signs[i] > 0) observed += r2[i];
    }
    // distribution of doubled W+ by subset-sum counting
    std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
    count[0] = 1.0;
    for (long r : r2)
        for (long s = total; s >= r; --s) count[static_cast<std::size_t>(s)] += count[static_cast<std::size_t>(s - r)];
    // deviation from the centre, doubled again to stay integral: |2 W - total|
    const long dev_obs = std::abs(2 * observed - total);
    double extreme = 0.0, all = 0.0;
    for (long s = 0; s <= total; ++s) {
        const double c = count[static_cast<std::size_t>(s)];
        all += c;
        if (std::abs(2 * s - total) >= dev_obs) extreme += c;
    }
    return std::min(1.0, extreme / all);
}

double wilcoxon_normal_p(std::span<const double> ranks, double w_plus) {
    const auto m = static_cast<double>(ranks.size());
    if (ranks.empty()) return 1.0;
    std::map<double, int> ties;
    for (double r : ranks) ++ties[r];
    double tie_term = 0.0;
    for (const auto& [r, t] : ties) tie_term += static_cast<double>(t) * t * t - t;
    const double mu = m * (m + 1.0) / 4.0;
    const double var = m * (m + 1.0) * (2.0 * m + 1.0) / 24.0 - tie_term / 48.0;
    if (var <= 0.0) return 1.0;
    const double dev = std::max(std::abs(w_plus - mu) - 0.5, 0.0);
    return std::min(1.0, 2.0 * normal_sf(dev / std::sqrt(var)));
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("wilcoxon: samples must be paired");
    if (a.empty()) throw std::invalid_argument("wilcoxon: no pairs");
    std::vector<double> absdiff;
    std::vector<int> signs;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (d == 0.0) continue;
        absdiff.push_back(std::abs(d));
        signs.push_back(d > 0 ? 1 : -1);
    }
    WilcoxonResult r;
    r.nonzero = absdiff.size();
    if (absdiff.empty()) {
        r.all_tied = true;
        r.p_value = 1.0;
        return r;
    }
    const std::vector<double> ranks = average_ranks(absdiff);
    for (std::size_t i = 0; i < ranks.size(); ++i)
        if (signs[i] > 0) r.statistic += ranks[i];
    r.exact = r.nonzero <= kWilcoxonExactLimit;
    r.p_value = r.exact ? wilcoxon_exact_p(ranks, signs) : wilcoxon_normal_p(ranks, r.statistic);
    return r;
}

std::vector<double> holm_adjust(std::span<const double> p) {
    const std::size_t m = p.size();
    if (m == 0) throw std::invalid_argument("holm_adjust: empty p-value list");
    for (double v : p)
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("holm_adjust: p-value outside [0, 1]");
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return p[x] < p[y]; });
    std::vector<double> adj(m);
    double running = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double v = std::min(1.0, static_cast<double>(m - i) * p[order[i]]);
        running = std::max(running, v);
        adj[order[i]] = running;
    }
    return adj;
}

}  // namespace opal::stats
