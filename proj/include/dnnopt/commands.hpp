#pragma once

#include "dnnopt/config.hpp"
#include "dnnopt/report.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dnnopt {

struct CommandOverrides {
    std::optional<std::uint64_t> seed;   // replaces the seed list
    std::optional<std::size_t> budget;
    std::optional<std::string> output_dir;
};

void apply_overrides(RunConfig& cfg, const CommandOverrides& o);

/// Exit codes shared by every command.
inline constexpr int exit_ok = 0;
inline constexpr int exit_config_error = 1;
inline constexpr int exit_run_error = 2;

/// One run per seed of `algorithm`. `objective_weights`, when non-empty, overrides w_0 per seed.
/// Seeds run concurrently when cfg.jobs > 1; results are in seed-list order.
std::vector<RunResult> execute_runs(const RunConfig& cfg, const std::string& algorithm, Termination termination,
                                    const std::vector<double>& objective_weights = {});

struct CompareOutcome {
    CompareTable table;
    std::vector<std::vector<RunResult>> runs; // per algorithm, per seed
};

/// Runs every compare algorithm on the shared seeds. When dnnopt is listed and the problem
/// leaves w_0 automatic, the other algorithms reuse dnnopt's per-seed w_0 so curves share a scale.
CompareOutcome execute_compare(const RunConfig& cfg);

struct SensitivityOutcome {
    SensitivityReport report;
    Eigen::VectorXd scores;
};

SensitivityOutcome execute_sensitivity(const RunConfig& cfg);

/// Runs on the problem restricted to `active`; frozen variables stay at `nominal`.
/// Record designs are expanded back to the full variable vector.
std::vector<RunResult> execute_pruned_runs(const RunConfig& cfg, const std::vector<int>& active,
                                           const Design& nominal);

/// CLI entry points. Diagnostics go to `err`, progress to `out`.
int cmd_run(const std::string& config_path, const CommandOverrides& o, std::ostream& out, std::ostream& err);
int cmd_sensitivity(const std::string& config_path, const CommandOverrides& o, bool run_pruned, std::ostream& out,
                    std::ostream& err);
int cmd_compare(const std::string& config_path, const CommandOverrides& o, std::ostream& out, std::ostream& err);

} // namespace dnnopt
