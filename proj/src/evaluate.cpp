#include "opal/evaluate.hpp"

namespace opal {

namespace {

double error_of(const TaskSpec& spec, double f) { return std::max(f - spec.bias, 0.0); }

InstanceRun finish(const TaskSpec& spec, const Environment& env, const DesignProbe& probe, RunTrace trace) {
    InstanceRun run;
    run.design_best = probe.design.best;
    run.final_best = std::min(trace.final_best(), probe.design.best);
    run.final_error = error_of(spec, run.final_best);
    run.evals = env.evals_used();
    run.trace = std::move(trace);
    // report the trace over the whole budget, design phase included
    for (auto& fe : run.trace.fe) fe += probe.design.evals;
    for (auto& b : run.trace.best) b = std::min(b, probe.design.best);
    run.trace.best.insert(run.trace.best.begin(), probe.design.best);
    run.trace.fe.insert(run.trace.fe.begin(), probe.design.evals);
    return run;
}

}  // namespace

InstanceRun run_program(const TaskSpec& spec, const OperatorProgram& program, double rho,
                        const GraphConfig& graph, std::uint64_t seed) {
    Environment env = make_environment(spec);
    Rng rng(seed);
    const DesignProbe probe = run_design_probe(env, rho, graph, rng);
    RunTrace trace = execute_program(env, probe.design.state, program, probe.run_budget, rng());
    InstanceRun run = finish(spec, env, probe, std::move(trace));
    run.program = program.tokens();
    return run;
}

InstanceRun run_policy(const TaskSpec& spec, const PolicyParams& params, double rho, const GraphConfig& graph,
                       std::uint64_t seed) {
    Environment env = make_environment(spec);
    Rng rng(seed);
    const DesignProbe probe = run_design_probe(env, rho, graph, rng);
    const ForwardPass pass = forward(probe.graph.H, probe.graph.A, params);
    const PolicyOutput out = decode(pass, DecodeMode::greedy, rng);
    RunTrace trace = execute_program(env, probe.design.state, out.program, probe.run_budget, rng());
    InstanceRun run = finish(spec, env, probe, std::move(trace));
    run.program = out.program.tokens();
    Eigen::Index cls = 0;
    pass.aux_logits.maxCoeff(&cls);
    run.aux_prediction = static_cast<int>(cls);
    return run;
}

InstanceRun run_baseline(std::string_view algorithm, const TaskSpec& spec, std::uint64_t seed) {
    Environment env = make_environment(spec);
    env.permit_overshoot(spec.budget);
    InstanceRun run;
    if (algorithm == "de")
        run.trace = de_baseline(env, spec.budget, seed);
    else if (algorithm == "pso")
        run.trace = pso_baseline(env, spec.budget, seed);
    else
        throw std::invalid_argument("unknown baseline '" + std::string(algorithm) + "'");
    run.final_best = run.trace.final_best();
    run.final_error = error_of(spec, run.final_best);
    run.design_best = run.final_best;
    run.evals = env.evals_used();
    return run;
}

GraphConfig graph_config_of(const Checkpoint& ck) {
    GraphConfig g;
    if (ck.metadata.contains("graph_mode")) g.mode = graph_mode_from_string(ck.metadata.at("graph_mode").get<std::string>());
    return g;
}

}  // namespace opal
