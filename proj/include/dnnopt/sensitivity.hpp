#pragma once

#include "dnnopt/evaluators.hpp"
#include "dnnopt/problem.hpp"

#include <Eigen/Core>

#include <span>
#include <vector>

namespace dnnopt {

struct SensitivityReport {
    Eigen::MatrixXd S;              // (m+1) x d, canonical spec per raw variable unit
    Design nominal;
    SpecVector nominal_spec;
    Eigen::VectorXd steps;          // h_j in raw units
    std::vector<bool> unknown;      // column could not be computed (evaluation failure)
    std::vector<int> screened_specs;
    double thresh = 0.0;
    std::vector<int> active_set;    // ascending variable indices
    std::size_t evaluations = 0;
};

/// Central differences around `nominal` with h_j = rel_step * (ub_j - lb_j). Near a bound the
/// stencil is truncated to the box (one-sided at the bound itself, reusing the nominal value).
SensitivityReport compute_sensitivity(Evaluator& evaluator, const ProblemDefinition& prob, const Design& nominal,
                                      double rel_step = 0.05);

/// Dimensionless score per variable: max over screened i of |S_ij| (ub_j - lb_j) / max(|f_i(nominal)|, 1).
/// Unknown columns score +inf.
Eigen::VectorXd normalized_sensitivity(const SensitivityReport& report, const ProblemDefinition& prob,
                                       std::span<const int> screened_specs);

/// Variables whose score exceeds `thresh`, ascending; the top-scoring one when none do.
std::vector<int> prune_variables(const SensitivityReport& report, const ProblemDefinition& prob,
                                 std::span<const int> screened_specs, double thresh);

/// The objective plus every constraint the nominal design violates.
std::vector<int> failing_specs(const SpecVector& nominal_spec);

} // namespace dnnopt
