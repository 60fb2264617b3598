#include "opal/functions.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <numeric>
#include <string>

namespace opal {

namespace {

constexpr std::array<std::string_view, 7> kFamilyNames = {
    "sphere", "rastrigin", "ackley", "rosenbrock", "hybrid_blend", "composition_blend", "nn_landscape",
};
constexpr std::array<std::string_view, 4> kLabelNames = {
    "unimodal", "simple_multimodal", "hybrid", "composition",
};

using BaseFn = double (*)(std::span<const double>);

struct HybridData {
    std::vector<std::size_t> permutation;
    // group g covers permutation[begin[g], begin[g+1])
    std::vector<std::size_t> begin;
    std::vector<BaseFn> parts;
};

struct CompositionData {
    std::array<BaseFn, 3> parts{};
    std::array<double, 3> bias{};
    std::array<double, 3> scale{};
    std::vector<Eigen::VectorXd> centers;
};

struct NetworkData {
    Eigen::MatrixXd w1, w2;
    Eigen::VectorXd b1, b2, w3;
    double at_origin = 0.0;

    double raw(const Eigen::VectorXd& u) const {
        const Eigen::VectorXd h1 = (w1 * u + b1).array().tanh().matrix();
        const Eigen::VectorXd h2 = (w2 * h1 + b2).array().tanh().matrix();
        return w3.dot(h2);
    }
};

constexpr double kNetworkInputScale = 25.0;
constexpr int kNetworkWidth = 16;

}  // namespace

std::string_view to_string(Family f) { return kFamilyNames.at(static_cast<std::size_t>(f)); }
std::string_view to_string(LandscapeLabel l) { return kLabelNames.at(static_cast<std::size_t>(l)); }

Family family_from_string(std::string_view name) {
    for (std::size_t i = 0; i < kFamilyNames.size(); ++i)
        if (kFamilyNames[i] == name) return static_cast<Family>(i);
    throw std::invalid_argument("unknown function family '" + std::string(name) + "'");
}

LandscapeLabel label_from_string(std::string_view name) {
    for (std::size_t i = 0; i < kLabelNames.size(); ++i)
        if (kLabelNames[i] == name) return static_cast<LandscapeLabel>(i);
    throw std::invalid_argument("unknown landscape label '" + std::string(name) + "'");
}

LandscapeLabel label_for(Family f) {
    switch (f) {
        case Family::sphere:
        case Family::rosenbrock: return LandscapeLabel::unimodal;
        case Family::rastrigin:
        case Family::ackley:
        case Family::nn_landscape: return LandscapeLabel::simple_multimodal;
        case Family::hybrid_blend: return LandscapeLabel::hybrid;
        case Family::composition_blend: return LandscapeLabel::composition;
    }
    throw std::invalid_argument("unknown function family");
}

namespace fn {

double sphere(std::span<const double> x) {
    return std::inner_product(x.begin(), x.end(), x.begin(), 0.0);
}

double rastrigin(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v - 10.0 * std::cos(2.0 * std::numbers::pi * v) + 10.0;
    return s;
}

double ackley(std::span<const double> x) {
    if (x.empty()) return 0.0;
    const double n = static_cast<double>(x.size());
    double sq = 0.0, cs = 0.0;
    for (double v : x) {
        sq += v * v;
        cs += std::cos(2.0 * std::numbers::pi * v);
    }
    const double f = -20.0 * std::exp(-0.2 * std::sqrt(sq / n)) - std::exp(cs / n) + 20.0 +
                     std::numbers::e;
    // exp(1) - exp(1) leaves a few ulps at the optimum
    return std::max(f, 0.0);
}

double rosenbrock(std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const double a = x[i + 1] - x[i] * x[i];
        const double b = x[i] - 1.0;
        s += 100.0 * a * a + b * b;
    }
    return s;
}

}  // namespace fn

Objective make_function(Family family, std::size_t dim, std::uint64_t seed) {
    if (dim == 0) throw std::invalid_argument("make_function: dimension must be positive");
    switch (family) {
        case Family::sphere: return fn::sphere;
        case Family::rastrigin: return fn::rastrigin;
        case Family::ackley: return fn::ackley;
        case Family::rosenbrock:
            if (dim < 2) throw std::invalid_argument("make_function: rosenbrock needs dim >= 2");
            return fn::rosenbrock;
        case Family::hybrid_blend: {
            Rng rng(derive_seed(seed, 0x4859));
            auto data = std::make_shared<HybridData>();
            data->permutation.resize(dim);
            std::iota(data->permutation.begin(), data->permutation.end(), std::size_t{0});
            std::shuffle(data->permutation.begin(), data->permutation.end(), rng);
            const std::array<BaseFn, 3> parts = {fn::rastrigin, fn::sphere, fn::ackley};
            const std::array<double, 3> share = {0.3, 0.3, 0.4};
            const std::size_t groups = std::min<std::size_t>(3, dim);
            data->begin.push_back(0);
            for (std::size_t g = 0; g + 1 < groups; ++g) {
                const auto want = static_cast<std::size_t>(std::ceil(share[g] * static_cast<double>(dim)));
                const std::size_t left_for_rest = groups - g - 1;
                std::size_t end = data->begin.back() + std::max<std::size_t>(1, want);
                end = std::min(end, dim - left_for_rest);
                data->begin.push_back(end);
            }
            data->begin.push_back(dim);
            data->parts.assign(parts.begin(), parts.begin() + static_cast<std::ptrdiff_t>(groups));
            return [data](std::span<const double> x) {
                std::vector<double> buf(x.size());
                double total = 0.0;
                for (std::size_t g = 0; g < data->parts.size(); ++g) {
                    const std::size_t b = data->begin[g], e = data->begin[g + 1];
                    for (std::size_t i = b; i < e; ++i) buf[i - b] = x[data->permutation[i]];
                    total += data->parts[g](std::span<const double>(buf.data(), e - b));
                }
                return total;
            };
        }
        case Family::composition_blend: {
            Rng rng(derive_seed(seed, 0x434f));
            auto data = std::make_shared<CompositionData>();
            data->parts = {fn::rastrigin, fn::sphere, fn::ackley};
            data->bias = {0.0, 100.0, 200.0};
            data->scale = {1.0, 1.0, 1.0};
            std::uniform_real_distribution<double> u(-80.0, 80.0);
            data->centers.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim)));
            for (int c = 1; c < 3; ++c) {
                Eigen::VectorXd o(static_cast<Eigen::Index>(dim));
                for (auto& v : o) v = u(rng);
                data->centers.push_back(std::move(o));
            }
            return [data](std::span<const double> x) {
                std::vector<double> buf(x.size());
                double best = std::numeric_limits<double>::infinity();
                for (std::size_t c = 0; c < 3; ++c) {
                    for (std::size_t i = 0; i < x.size(); ++i)
                        buf[i] = x[i] - data->centers[c][static_cast<Eigen::Index>(i)];
                    best = std::min(best, data->scale[c] * data->parts[c](buf) + data->bias[c]);
                }
                return best;
            };
        }
        case Family::nn_landscape: {
            Rng rng(derive_seed(seed, 0x4e4e));
            std::normal_distribution<double> g;
            auto data = std::make_shared<NetworkData>();
            const auto d = static_cast<Eigen::Index>(dim);
            auto init = [&](Eigen::Index r, Eigen::Index c) {
                Eigen::MatrixXd m(r, c);
                const double s = 1.0 / std::sqrt(static_cast<double>(c));
                for (auto& v : m.reshaped()) v = s * g(rng);
                return m;
            };
            data->w1 = init(kNetworkWidth, d);
            data->b1 = init(kNetworkWidth, 1);
            data->w2 = init(kNetworkWidth, kNetworkWidth);
            data->b2 = init(kNetworkWidth, 1);
            data->w3 = init(kNetworkWidth, 1);
            data->at_origin = data->raw(Eigen::VectorXd::Zero(d));
            // |net(u) - net(0)| plus a weak bowl: the global minimum is 0 at
            // the origin, the valleys of the network level set are local traps.
            return [data](std::span<const double> x) {
                Eigen::VectorXd u(static_cast<Eigen::Index>(x.size()));
                for (std::size_t i = 0; i < x.size(); ++i)
                    u[static_cast<Eigen::Index>(i)] = x[i] / kNetworkInputScale;
                return 100.0 * std::abs(data->raw(u) - data->at_origin) + u.squaredNorm();
            };
        }
    }
    throw std::invalid_argument("make_function: unknown function family");
}

}  // namespace opal
