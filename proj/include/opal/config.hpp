#pragma once

#include "opal/meta_train.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace opal {

enum class Mode { train, evaluate, compare, ablate, graph_dump, inspect_program };

std::string_view to_string(Mode m);
Mode mode_from_string(std::string_view name);

struct EvalConfig {
    std::vector<std::string> functions;  // family names; empty means all families
    std::vector<std::size_t> dims = {30, 50, 100};
    std::size_t runs = 20;
    std::size_t budget_multiplier = 10000;
    double rho = 0.2;
    std::vector<std::string> algorithms = {"opal", "de", "pso"};
    /// Worker threads for evaluation; 0 means one per core.
    std::size_t workers = 0;

    std::size_t budget(std::size_t dim) const { return budget_multiplier * dim; }
    std::vector<std::string> function_list() const;
};

struct PathsConfig {
    std::filesystem::path out_dir = "opal_out";
    std::filesystem::path checkpoint_in;
    std::filesystem::path checkpoint_out;  // default: out_dir/policy.json
    std::filesystem::path records_out;     // default: out_dir/records.csv
    std::filesystem::path report_out;      // default: out_dir/report

    std::filesystem::path checkpoint_out_or_default() const;
    std::filesystem::path records_out_or_default() const;
    std::filesystem::path report_out_or_default() const;
};

/// Everything a CLI invocation needs. Stored on disk as a sectioned
/// key=value document: top-level keys, then [train], [eval] and [paths].
struct ExperimentConfig {
    Mode mode = Mode::train;
    std::string profile = "paper";
    std::uint64_t seed = 0;
    TrainConfig train;
    EvalConfig eval;
    PathsConfig paths;

    /// Throws ConfigError naming the first invalid field.
    void validate() const;
};

/// "paper" (full-scale protocol) or "desk" (minutes on a laptop).
ExperimentConfig profile_defaults(std::string_view name);

std::string format_config(const ExperimentConfig& cfg);
/// Starts from the profile named in the text (paper if absent, or
/// `profile` when given) and applies every key in order. Unknown keys and
/// malformed values raise ConfigError.
ExperimentConfig parse_config(const std::string& text, const std::optional<std::string>& profile = std::nullopt);
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::optional<std::string>& profile = std::nullopt);
void save_config(const std::filesystem::path& path, const ExperimentConfig& cfg);

/// Set one value addressed as `key` (top level) or `section.key`.
void set_config_value(ExperimentConfig& cfg, std::string_view key, const std::string& value);

}  // namespace opal
