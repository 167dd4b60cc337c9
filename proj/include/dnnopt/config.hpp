#pragma once

#include "dnnopt/baselines.hpp"
#include "dnnopt/evaluators.hpp"
#include "dnnopt/external_process.hpp"
#include "dnnopt/optimizer.hpp"
#include "dnnopt/problem.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dnnopt {

struct SensitivitySettings {
    double rel_step = 0.05;
    double thresh = 0.01;
    std::optional<Eigen::VectorXd> nominal; // raw units; bounds midpoint when absent
    // Empty: the objective plus the constraints failing at the nominal design.
    std::vector<int> screened_specs;
    bool screen_all = false;
    bool run_pruned = false;
};

struct RunConfig {
    std::string source;
    ProblemDefinition problem;
    std::string problem_label;

    bool external = false;
    std::string builtin;
    BuiltinOptions builtin_options;
    ExternalProcessConfig external_cfg;

    std::string algorithm = "dnnopt";
    std::size_t budget = 300;
    std::vector<std::uint64_t> seeds{0};
    Termination termination = Termination::stop_on_feasible;
    std::string output_dir = "results";
    int jobs = 1;

    DnnOptConfig dnnopt;
    DEConfig de;
    SensitivitySettings sensitivity;

    std::vector<std::string> compare_algorithms{"dnnopt", "de", "random"};
    Termination compare_termination = Termination::optimize_to_budget;

    /// Throws ConfigError on cross-field violations (no seeds, budget < n_init, ...).
    void validate() const;
};

/// Parses a YAML run configuration. Errors are reported as "<origin>:<line>: <message>".
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::string& path);

/// A fresh evaluator for one run (each run owns its evaluator).
std::unique_ptr<Evaluator> make_evaluator(const RunConfig& cfg);

/// Dispatches on `algorithm` ("dnnopt", "de" or "random").
RunResult run_algorithm(const std::string& algorithm, const RunConfig& cfg, const ProblemDefinition& problem,
                        Evaluator& evaluator, const RunSettings& settings);

} // namespace dnnopt
