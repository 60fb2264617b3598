#pragma once

#include "opal/operators.hpp"
#include "opal/stats.hpp"

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace opal {

struct RunRecord {
    std::string algorithm;
    std::string function;
    std::size_t dim = 0;
    std::uint64_t seed = 0;
    double final_best = 0.0;
    std::string trace_path;
};

struct ProblemKey {
    std::string function;
    std::size_t dim = 0;
    auto operator<=>(const ProblemKey&) const = default;
};

struct CellKey {
    std::string algorithm;
    ProblemKey problem;
    auto operator<=>(const CellKey&) const = default;
};

struct CellSummary {
    double median = 0.0;
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation, 0 for a single run
    std::size_t runs = 0;
};

std::map<CellKey, CellSummary> summarize(const std::vector<RunRecord>& records);

/// Problems x algorithms ranks of the per-cell medians (ties share the
/// average rank). Every algorithm must have results on every problem.
struct RankTable {
    std::vector<ProblemKey> problems;
    std::vector<std::string> algorithms;
    Eigen::MatrixXd ranks;
    std::vector<double> average_rank;
};

RankTable rank_table(const std::vector<RunRecord>& records);

struct WtlCount {
    std::string opponent;
    int win = 0, tie = 0, loss = 0;
    std::map<std::size_t, std::array<int, 3>> by_dim;  // dim -> {W, T, L}
};

/// Per problem, a paired Wilcoxon test over seeds between `reference` and
/// each opponent: significant and better median is a win, significant and
/// worse a loss, anything else a tie. Throws if seeds do not line up.
std::vector<WtlCount> wtl(const std::vector<RunRecord>& records, const std::string& reference,
                          double alpha = 0.05);

struct PairwiseTest {
    std::string opponent;
    double p_raw = 1.0;
    double p_holm = 1.0;
};

/// Wilcoxon on per-problem medians, reference vs each opponent, Holm-adjusted
/// across opponents.
std::vector<PairwiseTest> pairwise_holm(const std::vector<RunRecord>& records, const std::string& reference);

struct ProgramLog {
    std::string family;
    std::vector<OpToken> tokens;
};

struct OperatorUsage {
    std::vector<std::string> families;
    Eigen::MatrixXd frequency;  // families x operators, rows sum to 1
    std::size_t unique_programs = 0;
    double non_de_fraction = 0.0;
    std::size_t total_tokens = 0;
};

OperatorUsage operator_usage(const std::vector<ProgramLog>& logs);

struct ComparisonReport {
    std::string reference;
    RankTable ranks;
    stats::FriedmanResult friedman;
    std::vector<PairwiseTest> pairwise;
    std::vector<WtlCount> wtl;
    std::optional<OperatorUsage> usage;
};

ComparisonReport compare(const std::vector<RunRecord>& records, const std::string& reference,
                         const std::vector<ProgramLog>& programs = {});

/// Writes ranks.csv, holm.csv, wtl.csv, operator_usage.csv (when present)
/// and summary.txt into `dir`.
void write_report(const std::filesystem::path& dir, const ComparisonReport& report);
std::string report_summary(const ComparisonReport& report);

void write_records_csv(const std::filesystem::path& path, const std::vector<RunRecord>& records);
std::vector<RunRecord> read_records_csv(const std::filesystem::path& path);

void write_programs_csv(const std::filesystem::path& path, const std::vector<ProgramLog>& logs);
std::vector<ProgramLog> read_programs_csv(const std::filesystem::path& path);

}  // namespace opal
