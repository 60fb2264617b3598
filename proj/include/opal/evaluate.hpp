#pragma once

#include "opal/meta_train.hpp"

namespace opal {

/// One optimizer run on one task instance. Errors are measured from the
/// task's optimum value, so `final_error` is comparable across instances.
struct InstanceRun {
    double final_best = 0.0;
    double final_error = 0.0;
    double design_best = 0.0;
    std::size_t evals = 0;
    RunTrace trace;
    std::vector<OpToken> program;  // empty for the classical baselines
    int aux_prediction = -1;
};

/// Design probe, then `program` for the rest of the budget.
InstanceRun run_program(const TaskSpec& spec, const OperatorProgram& program, double rho,
                        const GraphConfig& graph, std::uint64_t seed);

/// Design probe, greedy decoding from the trained policy, then execution of
/// the decoded program with the remaining budget.
InstanceRun run_policy(const TaskSpec& spec, const PolicyParams& params, double rho, const GraphConfig& graph,
                       std::uint64_t seed);

/// "de" or "pso" over the full budget of `spec`.
InstanceRun run_baseline(std::string_view algorithm, const TaskSpec& spec, std::uint64_t seed);

/// Graph settings a checkpoint was trained with (read from its metadata).
GraphConfig graph_config_of(const Checkpoint& ck);

}  // namespace opal
