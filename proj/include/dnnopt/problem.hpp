#pragma once

#include <Eigen/Core>

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dnnopt {

enum class SpecKind { objective_min, constraint_le, constraint_ge };

const char* to_string(SpecKind kind);
SpecKind spec_kind_from_string(const std::string& text);

struct SpecDefinition {
    std::string name;
    SpecKind kind = SpecKind::constraint_le;
    double bound = 0.0;
    double weight = 1.0;
};

/// A point of the search space in raw (physical) units.
struct Design {
    Eigen::VectorXd values;
};

/// Objective at index 0, constraints 1..m in canonical f_i <= 0 form.
struct SpecVector {
    Eigen::VectorXd values;

    double objective() const { return values[0]; }
    int num_constraints() const { return static_cast<int>(values.size()) - 1; }
    bool all_finite() const { return values.allFinite(); }
};

/// Constrained problem: minimize f_0(x) s.t. f_i(x) <= 0 over the box [lb, ub].
struct ProblemDefinition {
    std::vector<std::string> variable_names;
    Eigen::VectorXd lb;
    Eigen::VectorXd ub;
    // Integer variables are optimized as continuous and rounded at evaluation.
    std::vector<bool> integer;
    std::vector<SpecDefinition> specs;
    // When set, w_0 is not derived from the initial population.
    std::optional<double> objective_weight;

    int dim() const { return static_cast<int>(lb.size()); }
    int num_constraints() const { return static_cast<int>(specs.size()) - 1; }
    int num_specs() const { return static_cast<int>(specs.size()); }

    /// Throws ContractError describing the first broken invariant.
    void validate() const;
};

ProblemDefinition make_problem(Eigen::VectorXd lb, Eigen::VectorXd ub, std::vector<SpecDefinition> specs);

/// Maps a raw metric to canonical form: <= 0 iff the spec holds, scaled by |bound| (1 if bound == 0).
double canonicalize_spec(double raw_value, const SpecDefinition& def);

/// Canonicalizes a full raw metric vector. Non-finite raw entries stay NaN (failed evaluation).
SpecVector canonicalize(std::span<const double> raw, std::span<const SpecDefinition> specs);

/// Scalarization: w_0 f_0 + sum_i min(1, max(0, w_i f_i)). Lower is better.
/// Returns `failure_value` when any entry is non-finite.
double fom(const SpecVector& spec, std::span<const SpecDefinition> specs,
           double failure_value = std::numeric_limits<double>::infinity());

/// Subgradient of fom() with respect to the spec vector. Clipped terms contribute zero.
Eigen::VectorXd fom_gradient(const Eigen::VectorXd& spec, std::span<const SpecDefinition> specs);

/// FoM assigned to failed evaluations: strictly worse than any evaluated design.
double failure_fom(std::span<const SpecDefinition> specs, double worst_objective);

bool is_feasible(const SpecVector& spec);

/// 1 / (max f_0 - min f_0 + 1e-12) over the finite objectives; 1 when none are finite.
double auto_objective_weight(std::span<const double> objectives);

/// Returns a copy of `specs` with the objective weight replaced.
std::vector<SpecDefinition> with_objective_weight(std::span<const SpecDefinition> specs, double w0);

Eigen::VectorXd normalize(const Design& design, const ProblemDefinition& prob);
Design denormalize(const Eigen::Ref<const Eigen::VectorXd>& unit, const ProblemDefinition& prob);

/// Clips to the global bounds and rounds integer variables.
Design prepare_for_evaluation(const Design& design, const ProblemDefinition& prob);

} // namespace dnnopt
