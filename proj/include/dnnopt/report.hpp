#pragma once

#include "dnnopt/evaluation_log.hpp"
#include "dnnopt/problem.hpp"
#include "dnnopt/sensitivity.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dnnopt {

/// Replaces `path` by writing a sibling temporary file and renaming it over the target.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

/// Doubles are printed with 17 significant digits so loaders recover them bit-exactly.
std::string format_double(double v);

struct HistoryRow {
    std::size_t eval_index = 0;
    double fom_best = 0.0;
    double objective_best = 0.0; // objective of the best-FoM design so far
    bool feasible = false;       // whether that design is feasible
};

std::vector<HistoryRow> history_rows(const RunResult& run);
std::string format_history_csv(const std::vector<HistoryRow>& rows);
std::vector<HistoryRow> parse_history_csv(const std::string& text);

/// One row per evaluation: raw design, canonical specs, FoM and error text.
std::string format_evaluations_csv(const RunResult& run, const ProblemDefinition& problem);

struct Stats {
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
};
std::optional<Stats> compute_stats(const std::vector<double>& values);

struct SeedSummary {
    std::uint64_t seed = 0;
    std::size_t evaluations = 0;
    bool feasible = false;
    std::optional<std::size_t> first_feasible;
    std::optional<double> best_objective; // lowest objective over feasible evaluations
    double best_fom = 0.0;
    double objective_weight = 1.0;
};

struct RunSummary {
    std::string algorithm;
    std::string problem;
    std::size_t budget = 0;
    std::string success_rate; // "k/N"
    std::optional<Stats> first_feasible;
    std::optional<Stats> best_objective;
    std::vector<SeedSummary> runs;
};

RunSummary summarize(const std::vector<RunResult>& runs, const std::string& problem, std::size_t budget);
nlohmann::json to_json(const RunSummary& s);
RunSummary summary_from_json(const nlohmann::json& j);

/// Mean best-so-far FoM per evaluation index, one column per algorithm. Runs that stopped
/// early hold their final value for the remaining indices.
struct CompareTable {
    std::vector<std::string> algorithms;
    std::vector<std::vector<double>> columns; // columns[a][k] for evaluation k + 1
};

std::vector<double> mean_best_fom_curve(const std::vector<RunResult>& runs, std::size_t budget);
std::string format_compare_csv(const CompareTable& table);
CompareTable parse_compare_csv(const std::string& text);

nlohmann::json to_json(const SensitivityReport& report, const ProblemDefinition& problem,
                       const Eigen::VectorXd& scores);
/// Inverse of `to_json` for the report fields (scores are not part of the report type).
SensitivityReport sensitivity_from_json(const nlohmann::json& j);

} // namespace dnnopt
