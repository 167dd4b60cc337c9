#pragma once

#include "dnnopt/problem.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace dnnopt {

struct EvaluatorDescriptor {
    ProblemDefinition problem;
    bool concurrency_safe = true;
    bool deterministic = true;
};

/// Raw metrics of one evaluation (objective first, then constraints, in the units the
/// spec bounds use), or an error text when the evaluation failed.
struct RawEvaluation {
    std::vector<double> metrics;
    std::string error;

    bool ok() const { return error.empty(); }
    static RawEvaluation failure(std::string message) { return {{}, std::move(message)}; }
};

/// The black box. Implementations see designs in raw units, already clipped and rounded.
class Evaluator {
public:
    virtual ~Evaluator() = default;

    virtual const EvaluatorDescriptor& descriptor() const = 0;
    virtual RawEvaluation evaluate(const Design& design) = 0;

    /// Results are returned in input order. The default evaluates serially.
    virtual std::vector<RawEvaluation> evaluate_batch(std::span<const Design> designs);
};

/// Two-stage amplifier in closed form: minimize power subject to gain, GBW, phase margin,
/// slew rate and gm/I limits. Variables: gm1, gm2 [mS], I1, I2 [uA], Cc, CL [pF].
class ToyAmpEvaluator final : public Evaluator {
public:
    ToyAmpEvaluator();
    const EvaluatorDescriptor& descriptor() const override { return desc_; }
    RawEvaluation evaluate(const Design& design) override;

    struct Metrics {
        double power_w, gain_db, gbw_mhz, phase_margin_deg, slew_v_per_us, gm1_over_i1, gm2_over_i2;
    };
    static Metrics metrics(const Design& design);

private:
    EvaluatorDescriptor desc_;
};

/// f_0 = ||x - c||^2 subject to a_k^T x <= b_k on the box.
class ConstrainedQuadraticEvaluator final : public Evaluator {
public:
    /// Seeded instance on [0, 1]^dim whose center c is strictly feasible, so c is the optimum.
    ConstrainedQuadraticEvaluator(int dim, int num_constraints, std::uint64_t instance);
    ConstrainedQuadraticEvaluator(Eigen::VectorXd lb, Eigen::VectorXd ub, Eigen::VectorXd center,
                                  Eigen::MatrixXd normals, Eigen::VectorXd offsets);

    const EvaluatorDescriptor& descriptor() const override { return desc_; }
    RawEvaluation evaluate(const Design& design) override;

    const Eigen::VectorXd& center() const { return center_; }
    const Eigen::MatrixXd& normals() const { return normals_; } // one row per constraint
    const Eigen::VectorXd& offsets() const { return offsets_; }

private:
    void build_descriptor(Eigen::VectorXd lb, Eigen::VectorXd ub);

    EvaluatorDescriptor desc_;
    Eigen::VectorXd center_;
    Eigen::MatrixXd normals_;
    Eigen::VectorXd offsets_;
};

/// Eight variables on [0, 1]; objective sum over active j of max(0, |x_j - t_j| - 0.15)^2,
/// one constraint sum over active j of x_j <= 3. Variables 1, 4 and 6 have no influence.
class SeparableEvaluator final : public Evaluator {
public:
    SeparableEvaluator();
    const EvaluatorDescriptor& descriptor() const override { return desc_; }
    RawEvaluation evaluate(const Design& design) override;

    static const std::vector<int>& active_variables();
    static const std::vector<int>& inert_variables();

private:
    EvaluatorDescriptor desc_;
};

/// Options for `make_builtin`; fields unused by a benchmark are ignored.
struct BuiltinOptions {
    int dim = 5;
    int num_constraints = 0;
    std::uint64_t instance = 0;
};

/// "toy_amp", "constrained_quadratic", "sphere" or "separable".
std::unique_ptr<Evaluator> make_builtin(const std::string& name, const BuiltinOptions& options = {});

/// Exposes the active variables of a wrapped evaluator; the rest stay at `nominal`.
class SubspaceEvaluator final : public Evaluator {
public:
    SubspaceEvaluator(Evaluator& full, const ProblemDefinition& full_problem, std::vector<int> active,
                      Design nominal);

    const EvaluatorDescriptor& descriptor() const override { return desc_; }
    RawEvaluation evaluate(const Design& design) override;
    std::vector<RawEvaluation> evaluate_batch(std::span<const Design> designs) override;

    /// Re-attaches frozen variables to a reduced design.
    Design expand(const Design& reduced) const;
    const std::vector<int>& active() const { return active_; }

private:
    Evaluator& full_;
    EvaluatorDescriptor desc_;
    std::vector<int> active_;
    Design nominal_;
};

/// The reduced problem over `active` variables (specs unchanged).
ProblemDefinition restrict_problem(const ProblemDefinition& prob, std::span<const int> active);

} // namespace dnnopt
