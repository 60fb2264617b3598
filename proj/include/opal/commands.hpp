#pragma once

#include "opal/bench.hpp"
#include "opal/config.hpp"
#include "opal/evaluate.hpp"

#include <iosfwd>

namespace opal {

/// Exit status of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitIo = 3, kExitNumerical = 4 };

/// Maps the exception currently being handled to an exit code.
int exit_code_for(std::exception_ptr error);

/// SHA-1 of "blob <size>\0<content>", the id git would give the file.
std::string git_blob_sha1(const std::filesystem::path& file);

/// Config snapshot, seeds and checkpoint hash, enough to rerun the command.
nlohmann::json make_manifest(std::string_view command, const ExperimentConfig& cfg,
                             const std::filesystem::path& checkpoint = {},
                             const nlohmann::json& extra = nlohmann::json::object());
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// Fixed instance seed for a (function, dim) cell, shared by every
/// algorithm and run so results stay paired.
std::uint64_t instance_seed(std::uint64_t seed, std::string_view function, std::size_t dim);
std::uint64_t run_seed(std::uint64_t instance, std::size_t run);
TaskSpec evaluation_task(const ExperimentConfig& cfg, std::string_view function, std::size_t dim);

/// Refuses checkpoints whose architecture this build cannot run.
void check_architecture(const Checkpoint& ck);

struct TrainOutcome {
    Checkpoint checkpoint;
    std::filesystem::path checkpoint_path;
    std::filesystem::path log_path;
    std::size_t first_episode = 0;  // first episode run by this invocation
    std::vector<EpisodeRecord> log;
};

/// Trains (or resumes from paths.checkpoint_in) up to train.episodes,
/// writing periodic checkpoints, the final checkpoint, a CSV episode log
/// and a manifest.
TrainOutcome cmd_train(const ExperimentConfig& cfg, std::ostream& out);

struct NamedPolicy {
    std::string name;
    Checkpoint checkpoint;
};

struct EvaluationOutcome {
    std::vector<RunRecord> records;
    std::vector<ProgramLog> programs;  // one entry per policy run
    std::vector<std::string> program_owner;  // policy name for each program entry
};

/// Every (function, dim, run) for each policy and each classical baseline
/// listed in eval.algorithms, fanned across a worker pool. Records come
/// back in a fixed order regardless of the number of workers.
EvaluationOutcome evaluate(const ExperimentConfig& cfg, const std::vector<NamedPolicy>& policies,
                           std::ostream& out);

/// Loads paths.checkpoint_in (when "opal" is requested), evaluates, writes
/// the records CSV, the program log and a manifest.
EvaluationOutcome cmd_evaluate(const ExperimentConfig& cfg, std::ostream& out);

/// Reads the records (and program log, if present next to them) and
/// writes the comparison report with "opal" as reference.
ComparisonReport cmd_compare(const ExperimentConfig& cfg, std::ostream& out);

struct AblationRow {
    std::string variant;
    std::string train_tasks;
    std::string graph;
    double aux = 0.0;
    double avg_rank = 0.0;
    std::size_t unique_programs = 0;
    double non_de_frac = 0.0;
    bool adjacency_identity = false;
};

struct AblationOutcome {
    std::vector<AblationRow> rows;
    ComparisonReport report;
    std::filesystem::path table_path;
};

/// Trains the full model and the noAux, restricted-pool and noGraph
/// variants, evaluates all four and tabulates them.
AblationOutcome cmd_ablate(const ExperimentConfig& cfg, std::ostream& out);

/// Design-phase graph of the first configured function and dimension:
/// H.csv, A.csv and graph.json in out_dir/graph.
TrajectoryGraph cmd_graph_dump(const ExperimentConfig& cfg, std::ostream& out);

/// Greedy program, per-phase token probabilities and the landscape
/// prediction for each configured function at the first dimension.
std::string cmd_inspect_program(const ExperimentConfig& cfg, std::ostream& out);

/// Dispatch on cfg.mode; prints errors to `err` and returns an exit code.
int run_command(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace opal
