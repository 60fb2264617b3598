#pragma once

#include "opal/operators.hpp"

namespace opal {

/// Best-so-far fitness after every operator call (or generation), paired
/// with the cumulative evaluation count at that point.
struct RunTrace {
    std::vector<double> best;
    std::vector<std::size_t> fe;
    PopulationState final_state;

    double final_best() const { return best.back(); }
    std::size_t fe_used() const { return fe.back(); }
};

/// Two columns, `fe,best`, with a header line.
std::string trace_to_csv(const RunTrace& trace);

/// Run the program cyclically from a copy of `initial` until the calls have
/// spent at least `run_budget` evaluations. The last call may overshoot by
/// less than its own cost. Stops early if the environment runs dry.
RunTrace execute_program(Environment& env, const PopulationState& initial,
                         const OperatorProgram& program, std::size_t run_budget, std::uint64_t seed);

struct DeSettings {
    Eigen::Index population = 50;
    double F = 0.7;
    double CR = 0.9;
};

struct DesignResult {
    PopulationState state;
    double best = 0.0;
    std::size_t evals = 0;
};

/// Fixed DE/rand/1/bin probe: random population, then whole generations
/// until at least `design_budget` evaluations have been spent.
DesignResult design_phase(Environment& env, std::size_t design_budget, Rng& rng,
                          const DeSettings& de = {});

/// Classical DE/rand/1/bin over the full budget. The environment must allow
/// `budget + population - 1` evaluations.
RunTrace de_baseline(Environment& env, std::size_t budget, std::uint64_t seed,
                     const DeSettings& de = {});

struct PsoSettings {
    Eigen::Index population = 50;
    double inertia_start = 0.9;
    double inertia_end = 0.4;
    double c1 = 2.0;
    double c2 = 2.0;
    /// Velocity clamp as a fraction of each coordinate's range.
    double v_max = 0.2;
};

/// Linear inertia schedule from `inertia_start` at fe = 0 to `inertia_end` at fe = budget.
double pso_inertia(const PsoSettings& pso, std::size_t fe, std::size_t budget);

/// Global-best PSO over the full budget, one swarm step per iteration.
RunTrace pso_baseline(Environment& env, std::size_t budget, std::uint64_t seed,
                      const PsoSettings& pso = {});

}  // namespace opal
