// Command-line front end: train, evaluate, compare, ablate, graph_dump,
// inspect_program.

#include "opal/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

struct Flags {
    std::string config_file;
    std::optional<std::string> profile;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> checkpoint;
    std::optional<std::string> checkpoint_out;
    std::optional<std::string> out_dir;
    std::optional<std::string> records;
    std::optional<std::string> report;
    std::optional<std::size_t> episodes;
    std::optional<std::size_t> workers;
    std::optional<std::size_t> runs;
    std::optional<std::string> functions;
    std::optional<std::string> dims;
    std::vector<std::string> sets;
    std::string write_config;
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("-c,--config", f.config_file, "Experiment config file (key = value sections)");
    cmd->add_option("--profile", f.profile, "Default set: paper or desk")->check(CLI::IsMember({"paper", "desk"}));
    cmd->add_option("--seed", f.seed, "Master seed");
    cmd->add_option("--out", f.out_dir, "Output directory");
    cmd->add_option("--set", f.sets, "Override any config key, e.g. --set train.lr=0.0005")->take_all();
    cmd->add_option("--write-config", f.write_config, "Save the resolved config to this file and continue");
}

opal::ExperimentConfig resolve(opal::Mode mode, const Flags& f) {
    opal::ExperimentConfig cfg = f.config_file.empty()
                                     ? opal::profile_defaults(f.profile.value_or("paper"))
                                     : opal::load_config(f.config_file, f.profile);
    cfg.mode = mode;
    auto set = [&](std::string_view key, const std::string& value) { opal::set_config_value(cfg, key, value); };
    if (f.seed) set("seed", std::to_string(*f.seed));
    if (f.out_dir) set("paths.out_dir", *f.out_dir);
    if (f.checkpoint) set("paths.checkpoint_in", *f.checkpoint);
    if (f.checkpoint_out) set("paths.checkpoint_out", *f.checkpoint_out);
    if (f.records) set("paths.records_out", *f.records);
    if (f.report) set("paths.report_out", *f.report);
    if (f.episodes) set("train.episodes", std::to_string(*f.episodes));
    if (f.workers) set("eval.workers", std::to_string(*f.workers));
    if (f.runs) set("eval.runs", std::to_string(*f.runs));
    if (f.functions) set("eval.functions", *f.functions);
    if (f.dims) set("eval.dims", *f.dims);
    for (const auto& kv : f.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw opal::ConfigError(kv, "--set expects key=value");
        set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!f.write_config.empty()) opal::save_config(f.write_config, cfg);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Per-instance optimizer synthesis: meta-train a graph policy over design-phase "
                 "trajectories and benchmark the programs it writes"};
    app.require_subcommand(1);
    Flags f;

    auto* train = app.add_subcommand("train", "Meta-train the policy (resume with --checkpoint)");
    add_common(train, f);
    train->add_option("--checkpoint", f.checkpoint, "Resume from this checkpoint");
    train->add_option("--checkpoint-out", f.checkpoint_out, "Final checkpoint path");
    train->add_option("--episodes", f.episodes, "Total episodes to reach");

    auto* evaluate = app.add_subcommand("evaluate", "Run the policy and the baselines on the benchmark grid");
    add_common(evaluate, f);
    evaluate->add_option("--checkpoint", f.checkpoint, "Trained policy (default <out>/policy.json)");
    evaluate->add_option("--records", f.records, "Records CSV to write");
    evaluate->add_option("--workers", f.workers, "Worker threads (0 = one per core)");
    evaluate->add_option("--runs", f.runs, "Seeds per (function, dim)");
    evaluate->add_option("--functions", f.functions, "Comma-separated function families");
    evaluate->add_option("--dims", f.dims, "Comma-separated dimensions");

    auto* compare = app.add_subcommand("compare", "Ranks, Friedman, Holm-adjusted Wilcoxon and W/T/L tables");
    add_common(compare, f);
    compare->add_option("--records", f.records, "Records CSV to read");
    compare->add_option("--report", f.report, "Report directory");

    auto* ablate = app.add_subcommand("ablate", "Train and compare the full, noAux, restricted and noGraph variants");
    add_common(ablate, f);
    ablate->add_option("--episodes", f.episodes, "Episodes per variant");
    ablate->add_option("--workers", f.workers, "Worker threads (0 = one per core)");
    ablate->add_option("--runs", f.runs, "Seeds per (function, dim)");
    ablate->add_option("--functions", f.functions, "Comma-separated function families");
    ablate->add_option("--dims", f.dims, "Comma-separated dimensions");

    auto* graph = app.add_subcommand("graph_dump", "Write the design-phase graph (H.csv, A.csv, graph.json)");
    add_common(graph, f);
    graph->add_option("--checkpoint", f.checkpoint, "Take the graph mode from this checkpoint");
    graph->add_option("--functions", f.functions, "Function family (first is used)");
    graph->add_option("--dims", f.dims, "Dimension (first is used)");

    auto* inspect = app.add_subcommand("inspect_program", "Show the greedy program and token probabilities");
    add_common(inspect, f);
    inspect->add_option("--checkpoint", f.checkpoint, "Trained policy (default <out>/policy.json)");
    inspect->add_option("--functions", f.functions, "Comma-separated function families");
    inspect->add_option("--dims", f.dims, "Dimension (first is used)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : opal::kExitConfig;
    }

    const std::vector<std::pair<CLI::App*, opal::Mode>> modes = {
        {train, opal::Mode::train},       {evaluate, opal::Mode::evaluate},
        {compare, opal::Mode::compare},   {ablate, opal::Mode::ablate},
        {graph, opal::Mode::graph_dump},  {inspect, opal::Mode::inspect_program},
    };
    opal::Mode mode = opal::Mode::train;
    for (const auto& [cmd, m] : modes)
        if (cmd->parsed()) mode = m;

    opal::ExperimentConfig cfg;
    try {
        cfg = resolve(mode, f);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return opal::exit_code_for(std::current_exception());
    }
    return opal::run_command(cfg, std::cout, std::cerr);
}
