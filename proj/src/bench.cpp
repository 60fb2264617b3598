#include "opal/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace opal {

namespace {

using Grouped = std::map<CellKey, std::vector<const RunRecord*>>;

Grouped group(const std::vector<RunRecord>& records) {
    Grouped g;
    for (const auto& r : records) g[{r.algorithm, {r.function, r.dim}}].push_back(&r);
    return g;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    os.precision(12);
    return os;
}

/// Per-seed finals of one cell, sorted by seed.
std::vector<std::pair<std::uint64_t, double>> by_seed(const std::vector<const RunRecord*>& cell) {
    std::vector<std::pair<std::uint64_t, double>> v;
    for (const auto* r : cell) v.emplace_back(r->seed, r->final_best);
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace

std::map<CellKey, CellSummary> summarize(const std::vector<RunRecord>& records) {
    std::map<CellKey, CellSummary> out;
    for (const auto& [key, cell] : group(records)) {
        std::vector<double> v;
        for (const auto* r : cell) v.push_back(r->final_best);
        CellSummary s;
        s.runs = v.size();
        s.median = stats::median(v);
        double sum = 0.0;
        for (double x : v) sum += x;
        s.mean = sum / static_cast<double>(v.size());
        if (v.size() > 1) {
            double ss = 0.0;
            for (double x : v) ss += (x - s.mean) * (x - s.mean);
            s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
        }
        out[key] = s;
    }
    return out;
}

RankTable rank_table(const std::vector<RunRecord>& records) {
    const auto summary = summarize(records);
    std::set<std::string> algs;
    std::set<ProblemKey> probs;
    for (const auto& [key, s] : summary) {
        algs.insert(key.algorithm);
        probs.insert(key.problem);
    }
    RankTable t;
    t.algorithms.assign(algs.begin(), algs.end());
    t.problems.assign(probs.begin(), probs.end());
    const auto n = static_cast<Eigen::Index>(t.problems.size());
    const auto k = static_cast<Eigen::Index>(t.algorithms.size());
    t.ranks.resize(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<double> med;
        for (const auto& a : t.algorithms) {
            auto it = summary.find({a, t.problems[static_cast<std::size_t>(i)]});
            if (it == summary.end())
                throw std::invalid_argument("rank_table: " + a + " has no runs on " +
                                            t.problems[static_cast<std::size_t>(i)].function + " d=" +
                                            std::to_string(t.problems[static_cast<std::size_t>(i)].dim));
            med.push_back(it->second.median);
        }
        const auto r = stats::average_ranks(med);
        for (Eigen::Index j = 0; j < k; ++j) t.ranks(i, j) = r[static_cast<std::size_t>(j)];
    }
    const Eigen::VectorXd avg = n > 0 ? Eigen::VectorXd(t.ranks.colwise().mean().transpose())
                                      : Eigen::VectorXd::Zero(k);
    t.average_rank.assign(avg.data(), avg.data() + avg.size());
    return t;
}

std::vector<WtlCount> wtl(const std::vector<RunRecord>& records, const std::string& reference, double alpha) {
    const Grouped cells = group(records);
    std::set<std::string> opponents;
    std::set<ProblemKey> problems;
    for (const auto& [key, cell] : cells) {
        problems.insert(key.problem);
        if (key.algorithm != reference) opponents.insert(key.algorithm);
    }
    std::vector<WtlCount> out;
    for (const auto& opp : opponents) {
        WtlCount c;
        c.opponent = opp;
        for (const auto& prob : problems) {
            auto ri = cells.find({reference, prob});
            auto oi = cells.find({opp, prob});
            if (ri == cells.end() || oi == cells.end())
                throw std::invalid_argument("wtl: missing runs for " + prob.function + " d=" + std::to_string(prob.dim));
            const auto ref = by_seed(ri->second);
            const auto other = by_seed(oi->second);
            if (ref.size() != other.size())
                throw std::invalid_argument("wtl: seed misalignment on " + prob.function);
            std::vector<double> a, b;
            for (std::size_t i = 0; i < ref.size(); ++i) {
                if (ref[i].first != other[i].first)
                    throw std::invalid_argument("wtl: seed misalignment on " + prob.function);
                a.push_back(ref[i].second);
                b.push_back(other[i].second);
            }
            const auto w = stats::wilcoxon_signed_rank(a, b);
            const double ma = stats::median(a), mb = stats::median(b);
            auto& dim = c.by_dim[prob.dim];
            if (w.p_value < alpha && ma < mb) {
                ++c.win;
                ++dim[0];
            } else if (w.p_value < alpha && ma > mb) {
                ++c.loss;
                ++dim[2];
            } else {
                ++c.tie;
                ++dim[1];
            }
        }
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<PairwiseTest> pairwise_holm(const std::vector<RunRecord>& records, const std::string& reference) {
    const RankTable t = rank_table(records);
    const auto summary = summarize(records);
    std::vector<PairwiseTest> out;
    std::vector<double> ref;
    for (const auto& p : t.problems) ref.push_back(summary.at({reference, p}).median);
    for (const auto& alg : t.algorithms) {
        if (alg == reference) continue;
        std::vector<double> other;
        for (const auto& p : t.problems) other.push_back(summary.at({alg, p}).median);
        out.push_back({alg, stats::wilcoxon_signed_rank(ref, other).p_value, 1.0});
    }
    if (!out.empty()) {
        std::vector<double> raw;
        for (const auto& p : out) raw.push_back(p.p_raw);
        const auto adj = stats::holm_adjust(raw);
        for (std::size_t i = 0; i < out.size(); ++i) out[i].p_holm = adj[i];
    }
    return out;
}

OperatorUsage operator_usage(const std::vector<ProgramLog>& logs) {
    OperatorUsage u;
    std::map<std::string, std::array<double, kNumOperators>> counts;
    std::set<std::vector<OpToken>> distinct;
    std::size_t non_de = 0;
    for (const auto& log : logs) {
        auto& row = counts[log.family];
        for (OpToken t : log.tokens) {
            row[static_cast<std::size_t>(t)] += 1.0;
            ++u.total_tokens;
            if (!is_de_token(t)) ++non_de;
        }
        distinct.insert(log.tokens);
    }
    u.unique_programs = distinct.size();
    u.non_de_fraction = u.total_tokens ? static_cast<double>(non_de) / static_cast<double>(u.total_tokens) : 0.0;
    u.frequency = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(counts.size()), kNumOperators);
    Eigen::Index i = 0;
    for (const auto& [fam, row] : counts) {
        u.families.push_back(fam);
        double total = 0.0;
        for (double c : row) total += c;
        for (int j = 0; j < kNumOperators; ++j)
            u.frequency(i, j) = total > 0.0 ? row[static_cast<std::size_t>(j)] / total : 0.0;
        ++i;
    }
    return u;
}

ComparisonReport compare(const std::vector<RunRecord>& records, const std::string& reference,
                         const std::vector<ProgramLog>& programs) {
    ComparisonReport r;
    r.reference = reference;
    r.ranks = rank_table(records);
    if (std::find(r.ranks.algorithms.begin(), r.ranks.algorithms.end(), reference) == r.ranks.algorithms.end())
        throw std::invalid_argument("compare: reference algorithm '" + reference + "' has no records");
    if (r.ranks.problems.size() >= 2 && r.ranks.algorithms.size() >= 2) r.friedman = stats::friedman(r.ranks.ranks);
    r.pairwise = pairwise_holm(records, reference);
    r.wtl = wtl(records, reference);
    if (!programs.empty()) r.usage = operator_usage(programs);
    return r;
}

std::string report_summary(const ComparisonReport& r) {
    std::ostringstream os;
    os.precision(4);
    os << "problems: " << r.ranks.problems.size() << ", algorithms: " << r.ranks.algorithms.size()
       << ", reference: " << r.reference << "\n\n";
    os << "algorithm            avg.rank   holm p      W/T/L (ref vs alg)\n";
    for (std::size_t j = 0; j < r.ranks.algorithms.size(); ++j) {
        const auto& alg = r.ranks.algorithms[j];
        std::string holm = "--", record = "--";
        for (const auto& p : r.pairwise)
            if (p.opponent == alg) {
                std::ostringstream h;
                h.precision(4);
                h << p.p_holm;
                holm = h.str();
            }
        for (const auto& w : r.wtl)
            if (w.opponent == alg)
                record = std::to_string(w.win) + "/" + std::to_string(w.tie) + "/" + std::to_string(w.loss);
        char line[160];
        std::snprintf(line, sizeof line, "%-20s %-10.3f %-11s %s\n", alg.c_str(), r.ranks.average_rank[j],
                      holm.c_str(), record.c_str());
        os << line;
    }
    os << "\nFriedman chi2 = " << r.friedman.statistic << ", p = " << r.friedman.p_value << '\n';
    if (r.usage)
        os << "operator usage: " << r.usage->unique_programs << " unique programs, non-DE fraction "
           << r.usage->non_de_fraction << '\n';
    return os.str();
}

void write_report(const std::filesystem::path& dir, const ComparisonReport& r) {
    {
        auto os = open_out(dir / "ranks.csv");
        os << "function,dim";
        for (const auto& a : r.ranks.algorithms) os << ',' << a;
        os << '\n';
        for (std::size_t i = 0; i < r.ranks.problems.size(); ++i) {
            os << r.ranks.problems[i].function << ',' << r.ranks.problems[i].dim;
            for (Eigen::Index j = 0; j < r.ranks.ranks.cols(); ++j) os << ',' << r.ranks.ranks(static_cast<Eigen::Index>(i), j);
            os << '\n';
        }
        os << "average,";
        for (double v : r.ranks.average_rank) os << ',' << v;
        os << '\n';
    }
    {
        auto os = open_out(dir / "holm.csv");
        os << "opponent,p_raw,p_holm\n";
        for (const auto& p : r.pairwise) os << p.opponent << ',' << p.p_raw << ',' << p.p_holm << '\n';
    }
    {
        auto os = open_out(dir / "wtl.csv");
        os << "opponent,dim,win,tie,loss\n";
        for (const auto& w : r.wtl) {
            for (const auto& [d, c] : w.by_dim) os << w.opponent << ',' << d << ',' << c[0] << ',' << c[1] << ',' << c[2] << '\n';
            os << w.opponent << ",all," << w.win << ',' << w.tie << ',' << w.loss << '\n';
        }
    }
    if (r.usage) {
        auto os = open_out(dir / "operator_usage.csv");
        os << "family";
        for (int j = 0; j < kNumOperators; ++j) os << ',' << to_string(token_from_index(j));
        os << '\n';
        for (std::size_t i = 0; i < r.usage->families.size(); ++i) {
            os << r.usage->families[i];
            for (int j = 0; j < kNumOperators; ++j) os << ',' << r.usage->frequency(static_cast<Eigen::Index>(i), j);
            os << '\n';
        }
    }
    auto os = open_out(dir / "summary.txt");
    os << report_summary(r);
}

void write_records_csv(const std::filesystem::path& path, const std::vector<RunRecord>& records) {
    auto os = open_out(path);
    os.precision(17);
    os << "algorithm,function,dim,seed,final_best,trace\n";
    for (const auto& r : records)
        os << r.algorithm << ',' << r.function << ',' << r.dim << ',' << r.seed << ',' << r.final_best << ','
           << r.trace_path << '\n';
}

std::vector<RunRecord> read_records_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open records " + path.string());
    std::string line;
    std::getline(is, line);
    std::vector<RunRecord> out;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() < 5) throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected 5 columns");
        RunRecord r;
        r.algorithm = f[0];
        r.function = f[1];
        r.dim = std::stoull(f[2]);
        r.seed = std::stoull(f[3]);
        r.final_best = std::stod(f[4]);
        if (f.size() > 5) r.trace_path = f[5];
        out.push_back(std::move(r));
    }
    return out;
}

void write_programs_csv(const std::filesystem::path& path, const std::vector<ProgramLog>& logs) {
    auto os = open_out(path);
    os << "family,tokens\n";
    for (const auto& l : logs) {
        os << l.family << ',';
        for (std::size_t i = 0; i < l.tokens.size(); ++i) os << (i ? " " : "") << to_string(l.tokens[i]);
        os << '\n';
    }
}

std::vector<ProgramLog> read_programs_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open program log " + path.string());
    std::string line;
    std::getline(is, line);
    std::vector<ProgramLog> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = split(line, ',');
        ProgramLog l;
        l.family = f.at(0);
        std::istringstream ts(f.size() > 1 ? f[1] : "");
        std::string tok;
        while (ts >> tok) l.tokens.push_back(token_from_string(tok));
        out.push_back(std::move(l));
    }
    return out;
}

}  // namespace opal
