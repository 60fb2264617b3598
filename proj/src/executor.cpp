#include "opal/executor.hpp"

#include <algorithm>
#include <sstream>

namespace opal {

std::string trace_to_csv(const RunTrace& trace) {
    std::ostringstream os;
    os.precision(17);
    os << "fe,best\n";
    for (std::size_t i = 0; i < trace.best.size(); ++i) os << trace.fe[i] << ',' << trace.best[i] << '\n';
    return os.str();
}

RunTrace execute_program(Environment& env, const PopulationState& initial,
                         const OperatorProgram& program, std::size_t run_budget, std::uint64_t seed) {
    Rng rng(seed);
    RunTrace trace;
    trace.final_state = initial;
    PopulationState& s = trace.final_state;
    s.refresh_best();
    double best = s.best_fitness();
    std::size_t used = 0;
    trace.best.push_back(best);
    trace.fe.push_back(0);
    if (program.calls.empty()) return trace;

    std::size_t i = 0;
    while (used < run_budget) {
        const OperatorCall& call = program.calls[i];
        i = (i + 1) % program.calls.size();
        const std::size_t cost = apply_operator(call, s, env, rng);
        if (cost == 0) break;  // environment exhausted
        used += cost;
        best = std::min(best, s.best_fitness());
        trace.best.push_back(best);
        trace.fe.push_back(used);
    }
    return trace;
}

DesignResult design_phase(Environment& env, std::size_t design_budget, Rng& rng, const DeSettings& de) {
    if (design_budget < static_cast<std::size_t>(de.population))
        throw std::invalid_argument("design_phase: budget " + std::to_string(design_budget) +
                                    " is smaller than the population size " +
                                    std::to_string(de.population));
    const std::size_t start = env.evals_used();
    DesignResult out;
    out.state = random_population(env, de.population, rng);
    while (env.evals_used() - start < design_budget) {
        if (de_generation(out.state, env, rng, de.F, de.CR, false) == 0) break;
    }
    out.best = out.state.best_fitness();
    out.evals = env.evals_used() - start;
    return out;
}

RunTrace de_baseline(Environment& env, std::size_t budget, std::uint64_t seed, const DeSettings& de) {
    if (budget < static_cast<std::size_t>(de.population))
        throw std::invalid_argument("de_baseline: budget smaller than the population size");
    Rng rng(seed);
    RunTrace trace;
    const std::size_t start = env.evals_used();
    trace.final_state = random_population(env, de.population, rng);
    PopulationState& s = trace.final_state;
    trace.best.push_back(s.best_fitness());
    trace.fe.push_back(env.evals_used() - start);
    while (env.evals_used() - start < budget) {
        if (de_generation(s, env, rng, de.F, de.CR, false) == 0) break;
        trace.best.push_back(std::min(trace.best.back(), s.best_fitness()));
        trace.fe.push_back(env.evals_used() - start);
    }
    return trace;
}

double pso_inertia(const PsoSettings& pso, std::size_t fe, std::size_t budget) {
    const double t = budget == 0 ? 1.0 : std::min(1.0, static_cast<double>(fe) / static_cast<double>(budget));
    return pso.inertia_start + (pso.inertia_end - pso.inertia_start) * t;
}

RunTrace pso_baseline(Environment& env, std::size_t budget, std::uint64_t seed, const PsoSettings& pso) {
    if (budget < static_cast<std::size_t>(pso.population))
        throw std::invalid_argument("pso_baseline: budget smaller than the swarm size");
    Rng rng(seed);
    RunTrace trace;
    const std::size_t start = env.evals_used();
    trace.final_state = random_population(env, pso.population, rng);
    PopulationState& s = trace.final_state;
    const Eigen::Index n = s.size(), d = s.dim();
    s.velocities = RowMatrix::Zero(n, d);
    s.pbest_X = s.X;
    s.pbest_f = s.fitness;
    RowMatrix& V = *s.velocities;
    RowMatrix& PB = *s.pbest_X;
    Eigen::VectorXd& PF = *s.pbest_f;
    const Eigen::RowVectorXd vmax = pso.v_max * env.range().transpose();
    std::uniform_real_distribution<double> u(0.0, 1.0);

    trace.best.push_back(PF.minCoeff());
    trace.fe.push_back(env.evals_used() - start);
    while (env.evals_used() - start < budget && env.remaining() > 0) {
        const double w = pso_inertia(pso, env.evals_used() - start, budget);
        Eigen::Index g = 0;
        PF.minCoeff(&g);
        const Eigen::RowVectorXd gbest = PB.row(g);
        for (Eigen::Index i = 0; i < n && env.remaining() > 0; ++i) {
            for (Eigen::Index j = 0; j < d; ++j) {
                const double x = s.X(i, j);
                double v = w * V(i, j) + pso.c1 * u(rng) * (PB(i, j) - x) + pso.c2 * u(rng) * (gbest[j] - x);
                V(i, j) = std::clamp(v, -vmax[j], vmax[j]);
                s.X(i, j) = std::clamp(x + V(i, j), env.lower()[j], env.upper()[j]);
            }
            s.fitness[i] = env.evaluate(s.X.row(i));
            if (s.fitness[i] < PF[i]) {
                PF[i] = s.fitness[i];
                PB.row(i) = s.X.row(i);
            }
        }
        s.refresh_best();
        trace.best.push_back(std::min(trace.best.back(), PF.minCoeff()));
        trace.fe.push_back(env.evals_used() - start);
    }
    return trace;
}

}  // namespace opal
