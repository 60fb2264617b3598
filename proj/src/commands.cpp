#include "opal/commands.hpp"

#include <openssl/evp.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace opal {

namespace fs = std::filesystem;

namespace {

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

void ensure_dir(const fs::path& dir) {
    if (dir.empty()) return;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
    ensure_dir(path.parent_path());
    std::ofstream os(path, mode);
    if (!os) throw IoError("cannot write " + path.string());
    return os;
}

template <class Matrix>
void write_matrix_csv(const fs::path& path, const Matrix& m) {
    auto os = open_out(path);
    os.precision(17);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << m(i, j);
        os << '\n';
    }
}

Family family_of(std::string_view function) {
    try {
        return family_from_string(function);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("eval.functions", e.what());
    }
}

Checkpoint load_policy(const fs::path& path) {
    if (path.empty()) throw ConfigError("paths.checkpoint_in", "a checkpoint is required");
    Checkpoint ck = load_checkpoint(path);
    check_architecture(ck);
    return ck;
}

// An explicit checkpoint wins; otherwise use what train would have written.
fs::path policy_path(const ExperimentConfig& cfg) {
    if (!cfg.paths.checkpoint_in.empty()) return cfg.paths.checkpoint_in;
    const fs::path trained = cfg.paths.checkpoint_out_or_default();
    return fs::exists(trained) ? trained : fs::path{};
}

struct Job {
    std::size_t algorithm;  // index into policies, then baselines
    std::string function;
    std::size_t dim;
    std::size_t run;
};

struct JobResult {
    RunRecord record;
    std::optional<ProgramLog> program;
};

/// Runs `jobs` on `workers` threads. Workers hand finished results to this
/// thread through a queue; only this thread touches `results`.
std::vector<JobResult> run_pool(const std::vector<Job>& jobs, std::size_t workers,
                                const std::function<JobResult(const Job&)>& work, std::ostream& out) {
    std::vector<JobResult> results(jobs.size());
    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::pair<std::size_t, JobResult>> done;
    std::exception_ptr failure;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};

    workers = std::max<std::size_t>(1, std::min(workers, jobs.size()));
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            while (!stop) {
                const std::size_t i = next++;
                if (i >= jobs.size()) break;
                try {
                    JobResult r = work(jobs[i]);
                    std::lock_guard lock(mu);
                    done.emplace_back(i, std::move(r));
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!failure) failure = std::current_exception();
                    stop = true;
                }
                cv.notify_one();
            }
        });

    std::size_t collected = 0;
    const std::size_t step = std::max<std::size_t>(1, jobs.size() / 10);
    {
        std::unique_lock lock(mu);
        while (collected < jobs.size() && !failure) {
            cv.wait(lock, [&] { return !done.empty() || failure; });
            while (!done.empty()) {
                auto [i, r] = std::move(done.front());
                done.pop_front();
                results[i] = std::move(r);
                if (++collected % step == 0 || collected == jobs.size())
                    out << "  evaluated " << collected << "/" << jobs.size() << " runs\n" << std::flush;
            }
        }
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return results;
}

TrainConfig train_config_for(const ExperimentConfig& cfg) {
    TrainConfig t = cfg.train;
    t.seed = cfg.seed;
    return t;
}

}  // namespace

int exit_code_for(std::exception_ptr error) {
    try {
        std::rethrow_exception(error);
    } catch (const ConfigError&) {
        return kExitConfig;
    } catch (const IoError&) {
        return kExitIo;
    } catch (const fs::filesystem_error&) {
        return kExitIo;
    } catch (const NumericalError&) {
        return kExitNumerical;
    } catch (const nlohmann::json::exception&) {
        return kExitIo;
    } catch (const std::invalid_argument&) {
        return kExitConfig;
    } catch (...) {
        return kExitFailure;
    }
}

std::string git_blob_sha1(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot read " + file.string());
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::string header = "blob " + std::to_string(content.size()) + '\0';

    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) throw IoError("cannot allocate a digest context");
    const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                    EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                    EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                    EVP_DigestFinal_ex(ctx, digest, &len) == 1;
    EVP_MD_CTX_free(ctx);
    if (!ok) throw IoError("SHA-1 digest failed for " + file.string());
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return os.str();
}

nlohmann::json make_manifest(std::string_view command, const ExperimentConfig& cfg, const fs::path& checkpoint,
                             const nlohmann::json& extra) {
    nlohmann::json m;
    m["command"] = command;
    m["created_utc"] = utc_now();
    m["profile"] = cfg.profile;
    m["config"] = format_config(cfg);
    m["seeds"] = {{"seed", cfg.seed}, {"train_seed", cfg.seed}};
    if (command == "evaluate" || command == "ablate" || command == "graph_dump" || command == "inspect_program") {
        nlohmann::json inst = nlohmann::json::array();
        for (const auto& f : cfg.eval.function_list())
            for (std::size_t d : cfg.eval.dims)
                inst.push_back({{"function", f}, {"dim", d}, {"seed", instance_seed(cfg.seed, f, d)}});
        m["seeds"]["instances"] = inst;
    }
    if (!checkpoint.empty() && fs::exists(checkpoint))
        m["checkpoint"] = {{"path", checkpoint.string()}, {"git_blob_sha1", git_blob_sha1(checkpoint)}};
    for (const auto& [k, v] : extra.items()) m[k] = v;
    return m;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    auto os = open_out(path);
    os << j.dump(2) << '\n';
    if (!os) throw IoError("write failed for " + path.string());
}

std::uint64_t instance_seed(std::uint64_t seed, std::string_view function, std::size_t dim) {
    const auto fam = static_cast<std::uint64_t>(family_of(function));
    return derive_seed(derive_seed(seed, 0x5eed0000 + fam), dim);
}

std::uint64_t run_seed(std::uint64_t instance, std::size_t run) { return derive_seed(instance, run + 1); }

TaskSpec evaluation_task(const ExperimentConfig& cfg, std::string_view function, std::size_t dim) {
    return make_task(family_of(function), dim, instance_seed(cfg.seed, function, dim), cfg.eval.budget(dim), 0.0,
                     true);
}

void check_architecture(const Checkpoint& ck) {
    Architecture expected;
    expected.hidden = ck.arch.hidden;
    if (!(ck.arch == expected))
        throw ConfigError("checkpoint", "architecture does not match this build (input " +
                                            std::to_string(ck.arch.input) + ", operators " +
                                            std::to_string(ck.arch.operators) + ", phases " +
                                            std::to_string(ck.arch.phases) + ", classes " +
                                            std::to_string(ck.arch.classes) + ")");
}

TrainOutcome cmd_train(const ExperimentConfig& cfg, std::ostream& out) {
    cfg.validate();
    const TrainConfig tc = train_config_for(cfg);
    TrainOutcome result;
    result.checkpoint_path = cfg.paths.checkpoint_out_or_default();
    result.log_path = cfg.paths.out_dir / "episodes.csv";
    ensure_dir(cfg.paths.out_dir);

    std::optional<Trainer> trainer;
    bool resumed = false;
    if (!cfg.paths.checkpoint_in.empty()) {
        const Checkpoint ck = load_policy(cfg.paths.checkpoint_in);
        trainer.emplace(tc, ck);
        resumed = true;
    } else {
        trainer.emplace(tc);
    }
    result.first_episode = trainer->episode() + 1;

    const bool append = resumed && fs::exists(result.log_path);
    auto log = open_out(result.log_path, append ? std::ios::app : std::ios::out);
    if (!append) log << episode_log_header() << '\n';

    const std::size_t total = tc.episodes;
    out << (resumed ? "resuming at episode " : "training from episode ") << result.first_episode << " to "
        << total << '\n';
    const std::size_t report_every = std::max<std::size_t>(1, total / 20);
    double window = 0.0;
    std::size_t in_window = 0;
    while (trainer->episode() < total) {
        EpisodeRecord rec = trainer->step();
        log << episode_log_row(rec) << '\n';
        window += rec.reward;
        ++in_window;
        if (rec.episode % report_every == 0 || rec.episode == total) {
            out << "  episode " << rec.episode << "  mean reward " << window / static_cast<double>(in_window)
                << "  baseline " << rec.baseline << '\n'
                << std::flush;
            window = 0.0;
            in_window = 0;
        }
        if (tc.checkpoint_every > 0 && rec.episode % tc.checkpoint_every == 0 && rec.episode != total) {
            log.flush();
            save_checkpoint(cfg.paths.out_dir / "checkpoints" /
                                ("episode_" + std::to_string(rec.episode) + ".json"),
                            trainer->checkpoint());
        }
        result.log.push_back(std::move(rec));
    }
    if (!log) throw IoError("write failed for " + result.log_path.string());
    log.close();

    result.checkpoint = trainer->checkpoint();
    save_checkpoint(result.checkpoint_path, result.checkpoint);
    write_json(cfg.paths.out_dir / "manifest_train.json",
               make_manifest("train", cfg, result.checkpoint_path,
                             {{"resumed_from", cfg.paths.checkpoint_in.string()},
                              {"first_episode", result.first_episode},
                              {"last_episode", trainer->episode()},
                              {"episode_log", result.log_path.string()}}));
    out << "checkpoint written to " << result.checkpoint_path.string() << '\n';
    return result;
}

EvaluationOutcome evaluate(const ExperimentConfig& cfg, const std::vector<NamedPolicy>& policies, std::ostream& out) {
    std::vector<std::string> baselines;
    for (const auto& a : cfg.eval.algorithms)
        if (a != "opal") baselines.push_back(a);

    std::vector<PolicyParams> params;
    std::vector<GraphConfig> graphs;
    for (const auto& p : policies) {
        check_architecture(p.checkpoint);
        params.push_back(p.checkpoint.policy());
        graphs.push_back(graph_config_of(p.checkpoint));
    }

    const auto functions = cfg.eval.function_list();
    std::vector<Job> jobs;
    const std::size_t n_alg = policies.size() + baselines.size();
    for (const auto& f : functions)
        for (std::size_t d : cfg.eval.dims)
            for (std::size_t a = 0; a < n_alg; ++a)
                for (std::size_t r = 0; r < cfg.eval.runs; ++r) jobs.push_back({a, f, d, r});

    std::vector<TaskSpec> specs;
    std::map<std::pair<std::string, std::size_t>, std::size_t> spec_index;
    for (const auto& f : functions)
        for (std::size_t d : cfg.eval.dims) {
            spec_index[{f, d}] = specs.size();
            specs.push_back(evaluation_task(cfg, f, d));
        }

    auto work = [&](const Job& job) {
        const TaskSpec& spec = specs[spec_index.at({job.function, job.dim})];
        const std::uint64_t seed = run_seed(spec.seed, job.run);
        JobResult res;
        res.record.function = job.function;
        res.record.dim = job.dim;
        res.record.seed = seed;
        if (job.algorithm < policies.size()) {
            const InstanceRun run = run_policy(spec, params[job.algorithm], cfg.eval.rho, graphs[job.algorithm], seed);
            res.record.algorithm = policies[job.algorithm].name;
            res.record.final_best = run.final_error;
            res.program = ProgramLog{std::string(to_string(spec.label)), run.program};
        } else {
            const std::string& name = baselines[job.algorithm - policies.size()];
            const InstanceRun run = run_baseline(name, spec, seed);
            res.record.algorithm = name;
            res.record.final_best = run.final_error;
        }
        return res;
    };

    std::size_t workers = cfg.eval.workers;
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    out << "evaluating " << jobs.size() << " runs on " << std::min(workers, jobs.size()) << " worker(s)\n";
    auto results = run_pool(jobs, workers, work, out);

    EvaluationOutcome outcome;
    for (auto& r : results) {
        if (r.program) {
            outcome.programs.push_back(std::move(*r.program));
            outcome.program_owner.push_back(r.record.algorithm);
        }
        outcome.records.push_back(std::move(r.record));
    }
    return outcome;
}

EvaluationOutcome cmd_evaluate(const ExperimentConfig& cfg, std::ostream& out) {
    cfg.validate();
    std::vector<NamedPolicy> policies;
    const bool wants_opal =
        std::find(cfg.eval.algorithms.begin(), cfg.eval.algorithms.end(), "opal") != cfg.eval.algorithms.end();
    const fs::path checkpoint = wants_opal ? policy_path(cfg) : fs::path{};
    if (wants_opal) policies.push_back({"opal", load_policy(checkpoint)});

    EvaluationOutcome outcome = evaluate(cfg, policies, out);
    const fs::path records = cfg.paths.records_out_or_default();
    write_records_csv(records, outcome.records);
    const fs::path programs = records.parent_path() / "programs.csv";
    if (wants_opal) write_programs_csv(programs, outcome.programs);
    write_json(cfg.paths.out_dir / "manifest_evaluate.json",
               make_manifest("evaluate", cfg, checkpoint,
                             {{"records", records.string()},
                              {"programs", wants_opal ? programs.string() : ""},
                              {"record_count", outcome.records.size()}}));
    out << outcome.records.size() << " records written to " << records.string() << '\n';
    return outcome;
}

ComparisonReport cmd_compare(const ExperimentConfig& cfg, std::ostream& out) {
    const fs::path records = cfg.paths.records_out_or_default();
    const auto recs = read_records_csv(records);
    const fs::path programs = records.parent_path() / "programs.csv";
    std::vector<ProgramLog> logs;
    if (fs::exists(programs)) logs = read_programs_csv(programs);

    std::string reference = "opal";
    bool has_ref = false;
    for (const auto& r : recs) has_ref = has_ref || r.algorithm == reference;
    if (!has_ref && !recs.empty()) reference = recs.front().algorithm;

    ComparisonReport report = compare(recs, reference, logs);
    const fs::path dir = cfg.paths.report_out_or_default();
    write_report(dir, report);
    write_json(cfg.paths.out_dir / "manifest_compare.json",
               make_manifest("compare", cfg, {}, {{"records", records.string()}, {"report", dir.string()}}));
    out << report_summary(report);
    return report;
}

AblationOutcome cmd_ablate(const ExperimentConfig& cfg, std::ostream& out) {
    cfg.validate();
    struct Variant {
        std::string name;
        TaskPool pool;
        GraphMode graph;
        double aux;
    };
    const double aux = cfg.train.lambda_aux;
    const std::vector<Variant> variants = {
        {"full", TaskPool::mixed, GraphMode::knn, aux},
        {"noAux", TaskPool::mixed, GraphMode::knn, 0.0},
        {"restricted", TaskPool::restricted, GraphMode::knn, aux},
        {"noGraph", TaskPool::mixed, GraphMode::identity, aux},
    };
    const fs::path root = cfg.paths.out_dir / "ablation";
    AblationOutcome result;
    std::vector<NamedPolicy> policies;

    for (const auto& v : variants) {
        out << "== variant " << v.name << '\n';
        ExperimentConfig vc = cfg;
        vc.mode = Mode::train;
        vc.train.task_pool = v.pool;
        vc.train.graph_mode = v.graph;
        vc.train.lambda_aux = v.aux;
        if (v.pool == TaskPool::restricted) {
            std::vector<Family> keep;
            for (Family f : vc.train.tasks.families)
                if (std::find(restricted_families().begin(), restricted_families().end(), f) !=
                    restricted_families().end())
                    keep.push_back(f);
            vc.train.tasks.families = keep;
        }
        vc.paths.out_dir = root / v.name;
        vc.paths.checkpoint_in.clear();
        vc.paths.checkpoint_out.clear();
        TrainOutcome trained = cmd_train(vc, out);

        // probe the graph this variant actually feeds the policy
        const auto fn = cfg.eval.function_list().front();
        const TaskSpec probe_spec = evaluation_task(cfg, fn, cfg.eval.dims.front());
        Environment env = make_environment(probe_spec);
        Rng rng(derive_seed(cfg.seed, 0xab1a7e));
        const DesignProbe probe = run_design_probe(env, cfg.eval.rho, graph_config_of(trained.checkpoint), rng);
        const bool identity = probe.graph.A.isIdentity(0.0);

        AblationRow row;
        row.variant = v.name;
        row.train_tasks = std::string(to_string(v.pool));
        row.graph = std::string(to_string(v.graph));
        row.aux = v.aux;
        row.adjacency_identity = identity;
        result.rows.push_back(row);

        write_json(vc.paths.out_dir / "manifest.json",
                   make_manifest("ablate", vc, trained.checkpoint_path,
                                 {{"variant", v.name},
                                  {"lambda_aux", trained.checkpoint.metadata.at("lambda_aux")},
                                  {"graph_mode", trained.checkpoint.metadata.at("graph_mode")},
                                  {"task_pool", trained.checkpoint.metadata.at("task_pool")},
                                  {"adjacency_probe",
                                   {{"function", fn},
                                    {"dim", cfg.eval.dims.front()},
                                    {"nodes", probe.graph.nodes()},
                                    {"identity", identity},
                                    {"verified_identity", v.graph == GraphMode::identity && identity}}}}));
        policies.push_back({v.name, trained.checkpoint});
    }

    ExperimentConfig ec = cfg;
    ec.eval.algorithms = {"opal"};
    out << "== evaluating variants\n";
    const EvaluationOutcome eval = evaluate(ec, policies, out);
    write_records_csv(root / "records.csv", eval.records);

    result.report = compare(eval.records, "full");
    write_report(root / "report", result.report);

    for (auto& row : result.rows) {
        const auto& algs = result.report.ranks.algorithms;
        const auto it = std::find(algs.begin(), algs.end(), row.variant);
        row.avg_rank = result.report.ranks.average_rank[static_cast<std::size_t>(it - algs.begin())];
        std::vector<ProgramLog> mine;
        for (std::size_t i = 0; i < eval.programs.size(); ++i)
            if (eval.program_owner[i] == row.variant) mine.push_back(eval.programs[i]);
        const OperatorUsage usage = operator_usage(mine);
        row.unique_programs = usage.unique_programs;
        row.non_de_frac = usage.non_de_fraction;
        write_programs_csv(root / row.variant / "programs.csv", mine);
    }

    result.table_path = root / "ablation.csv";
    auto os = open_out(result.table_path);
    os.precision(6);
    os << "variant,train_tasks,graph,aux,avg_rank,unique_programs,non_de_frac\n";
    for (const auto& r : result.rows)
        os << r.variant << ',' << r.train_tasks << ',' << r.graph << ',' << r.aux << ',' << r.avg_rank << ','
           << r.unique_programs << ',' << r.non_de_frac << '\n';
    os.close();
    write_json(cfg.paths.out_dir / "manifest_ablate.json",
               make_manifest("ablate", cfg, {}, {{"table", result.table_path.string()}}));

    out << "\nvariant      tasks       graph     aux    avg.rank  unique  non-DE\n";
    for (const auto& r : result.rows) {
        char line[160];
        std::snprintf(line, sizeof line, "%-12s %-11s %-9s %-6.2f %-9.3f %-7zu %.3f\n", r.variant.c_str(),
                      r.train_tasks.c_str(), r.graph.c_str(), r.aux, r.avg_rank, r.unique_programs, r.non_de_frac);
        out << line;
    }
    return result;
}

TrajectoryGraph cmd_graph_dump(const ExperimentConfig& cfg, std::ostream& out) {
    cfg.validate();
    const auto fn = cfg.eval.function_list().front();
    const std::size_t dim = cfg.eval.dims.front();
    const TaskSpec spec = evaluation_task(cfg, fn, dim);
    GraphConfig graph;
    graph.mode = cfg.train.graph_mode;
    if (!cfg.paths.checkpoint_in.empty()) graph = graph_config_of(load_policy(cfg.paths.checkpoint_in));

    Environment env = make_environment(spec);
    const std::uint64_t seed = run_seed(spec.seed, 0);
    Rng rng(seed);
    const DesignProbe probe = run_design_probe(env, cfg.eval.rho, graph, rng);

    const fs::path dir = cfg.paths.out_dir / "graph";
    write_matrix_csv(dir / "H.csv", probe.graph.H);
    write_matrix_csv(dir / "A.csv", probe.graph.A);
    write_json(dir / "graph.json", {{"N", probe.graph.nodes()},
                                    {"k_eff", probe.graph.k_eff},
                                    {"strategy", to_string(graph.strategy)},
                                    {"mode", to_string(graph.mode)},
                                    {"seed", seed},
                                    {"function", fn},
                                    {"dim", dim},
                                    {"trajectory_length", env.trajectory().size()},
                                    {"feature_columns", {"f_z", "rank", "d_best", "t_norm", "local_improvement", "log_dim"}}});
    write_json(cfg.paths.out_dir / "manifest_graph_dump.json",
               make_manifest("graph_dump", cfg, cfg.paths.checkpoint_in, {{"graph_dir", dir.string()}}));
    out << "graph with " << probe.graph.nodes() << " nodes (k_eff " << probe.graph.k_eff << ") written to "
        << dir.string() << '\n';
    return probe.graph;
}

std::string cmd_inspect_program(const ExperimentConfig& cfg, std::ostream& out) {
    cfg.validate();
    const fs::path checkpoint = policy_path(cfg);
    const Checkpoint ck = load_policy(checkpoint);
    const PolicyParams params = ck.policy();
    const GraphConfig graph = graph_config_of(ck);
    const std::size_t dim = cfg.eval.dims.front();
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(3);
    os << "checkpoint " << checkpoint.string() << " (episode " << ck.episode << ", graph "
       << to_string(graph.mode) << ")\n";
    for (const auto& fn : cfg.eval.function_list()) {
        const TaskSpec spec = evaluation_task(cfg, fn, dim);
        Environment env = make_environment(spec);
        Rng rng(run_seed(spec.seed, 0));
        const DesignProbe probe = run_design_probe(env, cfg.eval.rho, graph, rng);
        const ForwardPass pass = forward(probe.graph.H, probe.graph.A, params);
        const PolicyOutput po = decode(pass, DecodeMode::greedy, rng);
        Eigen::Index cls = 0;
        pass.aux_logits.maxCoeff(&cls);
        os << "\n" << fn << " d=" << dim << "  (true class " << to_string(spec.label) << ", predicted "
           << to_string(static_cast<LandscapeLabel>(cls)) << ")\n";
        os << format_program(po.program);
        os << "  " << std::left << std::setw(22) << "token";
        for (Eigen::Index p = 0; p < po.probs.cols(); ++p) os << "  phase" << p + 1;
        os << '\n';
        for (Eigen::Index o = 0; o < po.probs.rows(); ++o) {
            os << "  " << std::setw(22) << to_string(token_from_index(static_cast<int>(o)));
            for (Eigen::Index p = 0; p < po.probs.cols(); ++p) os << "  " << std::setw(6) << po.probs(o, p);
            os << '\n';
        }
        os << std::right;
    }
    write_json(cfg.paths.out_dir / "manifest_inspect_program.json",
               make_manifest("inspect_program", cfg, checkpoint));
    out << os.str();
    return os.str();
}

int run_command(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        switch (cfg.mode) {
            case Mode::train: cmd_train(cfg, out); break;
            case Mode::evaluate: cmd_evaluate(cfg, out); break;
            case Mode::compare: cmd_compare(cfg, out); break;
            case Mode::ablate: cmd_ablate(cfg, out); break;
            case Mode::graph_dump: cmd_graph_dump(cfg, out); break;
            case Mode::inspect_program: cmd_inspect_program(cfg, out); break;
        }
        return kExitOk;
    } catch (...) {
        const std::exception_ptr error = std::current_exception();
        try {
            std::rethrow_exception(error);
        } catch (const ConfigError& e) {
            err << "config error: " << e.what() << '\n';
        } catch (const std::exception& e) {
            err << "error: " << e.what() << '\n';
        } catch (...) {
            err << "error: unknown failure\n";
        }
        return exit_code_for(error);
    }
}

}  // namespace opal
