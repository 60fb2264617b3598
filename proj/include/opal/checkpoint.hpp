#pragma once

#include "opal/policy.hpp"

#include <json.hpp>

#include <filesystem>

namespace opal {

inline constexpr const char* kCheckpointFormat = "opal-policy-checkpoint";
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
    Architecture arch;
    Eigen::VectorXd params;
    std::uint64_t seed = 0;
    std::size_t episode = 0;
    /// Free-form training state (config snapshot, baseline, optimizer moments).
    nlohmann::json metadata = nlohmann::json::object();

    PolicyParams policy() const;
};

nlohmann::json to_json(const Architecture& arch);
Architecture architecture_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Checkpoint& ck);
/// Validates the format tag, version and parameter count against the
/// architecture descriptor.
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace opal
