#include "opal/commands.hpp"

#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

using namespace opal;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("opal_cli_" + name);
    fs::remove_all(dir);
    return dir;
}

ExperimentConfig quick(const fs::path& dir) {
    ExperimentConfig c = profile_defaults("desk");
    c.seed = 3;
    c.train.seed = 3;
    c.train.episodes = 6;
    c.train.checkpoint_every = 3;
    c.train.tasks.dims = {4};
    c.train.hidden = 16;
    c.eval.functions = {"sphere", "rastrigin"};
    c.eval.dims = {4};
    c.eval.runs = 3;
    c.eval.workers = 2;
    c.paths.out_dir = dir;
    return c;
}

}  // namespace

TEST_CASE("profiles") {
    const auto paper = profile_defaults("paper");
    CHECK(paper.train.episodes == 10000);
    CHECK(paper.eval.runs == 20);
    CHECK(paper.eval.budget(30) == 300000);
    CHECK(static_cast<std::size_t>(paper.eval.rho * paper.eval.budget(30)) == 60000);
    const auto desk = profile_defaults("desk");
    CHECK(desk.eval.dims == std::vector<std::size_t>{10});
    CHECK(desk.eval.runs == 10);
    CHECK(desk.eval.budget_multiplier == 1000);
    CHECK(desk.train.episodes == 500);
    CHECK_THROWS_AS(profile_defaults("huge"), ConfigError);
}

TEST_CASE("config text round trip") {
    ExperimentConfig c = profile_defaults("desk");
    c.mode = Mode::ablate;
    c.seed = 12345678901234ULL;
    c.train.lr = 3.3e-4;
    c.train.task_pool = TaskPool::restricted;
    c.train.tasks.families = {Family::rastrigin, Family::hybrid_blend};
    c.eval.functions = {"ackley", "nn_landscape"};
    c.eval.algorithms = {"opal", "pso"};
    c.paths.checkpoint_in = "a/b.json";
    const std::string text = format_config(c);
    const ExperimentConfig back = parse_config(text);
    CHECK(format_config(back) == text);
    CHECK(back.train.lr == c.train.lr);
    CHECK(back.seed == c.seed);
    CHECK(back.profile == "desk");
}

TEST_CASE("unknown keys and bad values are config errors with the field") {
    try {
        parse_config("[train]\nrho = 1.5\n").validate();
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "train.rho");
    }
    CHECK_THROWS_AS(parse_config("[train]\nlearning_rate = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[eval]\nruns = ten\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[eval]\nfunctions = levy\n").validate(), ConfigError);
    CHECK_THROWS_AS(parse_config("[train\n"), ConfigError);
}

TEST_CASE("later values and explicit sets override the file") {
    ExperimentConfig c = parse_config("profile = desk\n[eval]\nruns = 4\n");
    CHECK(c.eval.runs == 4);
    set_config_value(c, "eval.runs", "7");
    set_config_value(c, "seed", "9");
    CHECK(c.eval.runs == 7);
    CHECK(c.train.seed == 9);
    const ExperimentConfig p = parse_config("profile = desk\n", std::string("paper"));
    CHECK(p.profile == "paper");
    CHECK(p.eval.runs == 20);
}

TEST_CASE("git blob hash matches git") {
    const fs::path dir = scratch("hash");
    fs::create_directories(dir);
    std::ofstream(dir / "x.txt") << "hello world\n";
    CHECK(git_blob_sha1(dir / "x.txt") == "3b18e512dba79e4c8300dd08aeb37f8e728b8dad");
    std::ofstream(dir / "empty.txt").close();
    CHECK(git_blob_sha1(dir / "empty.txt") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
    CHECK_THROWS_AS(git_blob_sha1(dir / "nope"), IoError);
    fs::remove_all(dir);
}

TEST_CASE("exit codes") {
    auto code = [](auto thrower) {
        try {
            thrower();
        } catch (...) {
            return exit_code_for(std::current_exception());
        }
        return -1;
    };
    CHECK(code([] { throw ConfigError("x", "bad"); }) == kExitConfig);
    CHECK(code([] { throw IoError("disk"); }) == kExitIo);
    CHECK(code([] { throw NumericalError("nan"); }) == kExitNumerical);
    CHECK(code([] { throw std::runtime_error("other"); }) == kExitFailure);

    ExperimentConfig c = quick(scratch("exit"));
    c.mode = Mode::evaluate;
    c.paths.checkpoint_in = "/nonexistent/policy.json";
    std::ostringstream out, err;
    CHECK(run_command(c, out, err) == kExitIo);
    c.eval.rho = 1.5;
    CHECK(run_command(c, out, err) == kExitConfig);
    CHECK(err.str().find("eval.rho") != std::string::npos);
}

TEST_CASE("train, resume, evaluate, compare and dump") {
    const fs::path dir = scratch("pipeline");
    ExperimentConfig c = quick(dir);
    std::ostringstream out;

    c.train.episodes = 3;
    const TrainOutcome first = cmd_train(c, out);
    CHECK(first.first_episode == 1);
    CHECK(first.checkpoint.episode == 3);
    CHECK(fs::exists(dir / "manifest_train.json"));
    CHECK(fs::exists(dir / "episodes.csv"));

    ExperimentConfig r = c;
    r.train.episodes = 6;
    r.paths.checkpoint_in = first.checkpoint_path;
    r.paths.checkpoint_out = dir / "resumed.json";
    const TrainOutcome resumed = cmd_train(r, out);
    CHECK(resumed.first_episode == 4);
    CHECK(resumed.log.front().episode == 4);
    CHECK(resumed.checkpoint.episode == 6);
    {
        std::ifstream log(dir / "episodes.csv");
        std::string line;
        int rows = -1;
        while (std::getline(log, line)) ++rows;
        CHECK(rows == 6);
    }

    // a straight six-episode run lands on the same parameters
    ExperimentConfig s = quick(scratch("straight"));
    s.train.episodes = 6;
    CHECK(cmd_train(s, out).checkpoint.params == resumed.checkpoint.params);
    CHECK(fs::exists(s.paths.out_dir / "checkpoints" / "episode_3.json"));

    ExperimentConfig e = c;
    e.paths.checkpoint_in = dir / "resumed.json";
    const std::string before = git_blob_sha1(e.paths.checkpoint_in);
    const EvaluationOutcome ev = cmd_evaluate(e, out);
    CHECK(ev.records.size() == 2 * 1 * 3 * 3);
    CHECK(ev.programs.size() == 2 * 1 * 3);
    CHECK(git_blob_sha1(e.paths.checkpoint_in) == before);
    const auto manifest = nlohmann::json::parse(std::ifstream(dir / "manifest_evaluate.json"));
    CHECK(manifest.at("checkpoint").at("git_blob_sha1") == before);
    CHECK(manifest.at("seeds").at("instances").size() == 2);

    e.eval.workers = 1;
    const EvaluationOutcome again = cmd_evaluate(e, out);
    REQUIRE(again.records.size() == ev.records.size());
    for (std::size_t i = 0; i < ev.records.size(); ++i) {
        CHECK(again.records[i].algorithm == ev.records[i].algorithm);
        CHECK(again.records[i].final_best == ev.records[i].final_best);
    }

    const ComparisonReport rep = cmd_compare(e, out);
    CHECK(rep.reference == "opal");
    CHECK(rep.ranks.algorithms.size() == 3);
    CHECK(fs::exists(dir / "report" / "summary.txt"));

    const TrajectoryGraph g = cmd_graph_dump(e, out);
    CHECK(g.nodes() <= 300);
    const auto sidecar = nlohmann::json::parse(std::ifstream(dir / "graph" / "graph.json"));
    CHECK(sidecar.at("N") == g.nodes());
    CHECK(sidecar.at("k_eff") == g.k_eff);
    CHECK(sidecar.contains("strategy"));
    CHECK(sidecar.contains("seed"));
    CHECK(fs::exists(dir / "graph" / "A.csv"));

    const std::string text = cmd_inspect_program(e, out);
    CHECK(text.find("sphere d=4") != std::string::npos);
    fs::remove_all(dir);
    fs::remove_all(s.paths.out_dir);
}

TEST_CASE("checkpoints from a different architecture are refused") {
    Checkpoint ck;
    ck.arch.classes = 5;
    CHECK_THROWS_AS(check_architecture(ck), ConfigError);
}
