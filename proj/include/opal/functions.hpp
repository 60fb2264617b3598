#pragma once

#include "opal/environment.hpp"

#include <array>
#include <string_view>

namespace opal {

enum class Family {
    sphere,
    rastrigin,
    ackley,
    rosenbrock,
    hybrid_blend,
    composition_blend,
    nn_landscape,
};

inline constexpr std::array<Family, 7> kAllFamilies = {
    Family::sphere,       Family::rastrigin,         Family::ackley,      Family::rosenbrock,
    Family::hybrid_blend, Family::composition_blend, Family::nn_landscape,
};

/// Coarse landscape class used as the auxiliary classification target.
enum class LandscapeLabel { unimodal = 0, simple_multimodal = 1, hybrid = 2, composition = 3 };
inline constexpr int kNumLandscapeLabels = 4;

std::string_view to_string(Family f);
std::string_view to_string(LandscapeLabel l);
/// Throws std::invalid_argument for names that are not a family.
Family family_from_string(std::string_view name);
LandscapeLabel label_from_string(std::string_view name);

/// Label-by-construction table: sphere/rosenbrock are unimodal, rastrigin,
/// ackley and the network landscape simple multimodal, and the two blends
/// their own classes.
LandscapeLabel label_for(Family f);

namespace fn {
double sphere(std::span<const double> x);
double rastrigin(std::span<const double> x);
double ackley(std::span<const double> x);
/// Standard form with its optimum at (1, ..., 1).
double rosenbrock(std::span<const double> x);
}  // namespace fn

/// Base objective in the untransformed frame. Every family except rosenbrock
/// attains its minimum value 0 at the origin; rosenbrock attains 0 at the
/// all-ones vector. `seed` fixes the internal structure of the blends and
/// the network landscape and is ignored by the analytic forms.
Objective make_function(Family family, std::size_t dim, std::uint64_t seed = 0);

}  // namespace opal
