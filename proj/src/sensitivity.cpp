#include "dnnopt/sensitivity.hpp"

#include "dnnopt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace dnnopt {

namespace {

std::optional<SpecVector> probe(Evaluator& evaluator, const ProblemDefinition& prob, const Design& design)
{
    const RawEvaluation raw = evaluator.evaluate(prepare_for_evaluation(design, prob));
    if (!raw.ok() || raw.metrics.size() != prob.specs.size())
        return std::nullopt;
    SpecVector spec = canonicalize(raw.metrics, prob.specs);
    if (!spec.all_finite())
        return std::nullopt;
    return spec;
}

} // namespace

SensitivityReport compute_sensitivity(Evaluator& evaluator, const ProblemDefinition& prob, const Design& nominal,
                                      double rel_step)
{
    prob.validate();
    const int d = prob.dim();
    if (nominal.values.size() != d)
        throw ContractError("nominal design dimension does not match the problem");
    if (!(rel_step > 0.0 && rel_step < 0.5))
        throw ContractError("rel_step must lie in (0, 0.5)");
    if (((nominal.values.array() < prob.lb.array()) || (nominal.values.array() > prob.ub.array())).any())
        throw ContractError("nominal design lies outside the bounds");

    SensitivityReport report;
    report.nominal = nominal;
    report.steps = rel_step * (prob.ub - prob.lb);
    report.unknown.assign(static_cast<std::size_t>(d), false);
    report.S = Eigen::MatrixXd::Zero(prob.num_specs(), d);

    const auto center = probe(evaluator, prob, nominal);
    ++report.evaluations;
    if (!center)
        throw ContractError("evaluation failed at the nominal design");
    report.nominal_spec = *center;

    // Each variable's probes are independent; evaluated one variable at a time in index order.
    for (int j = 0; j < d; ++j) {
        const double x = nominal.values[j];
        const double hi = std::min(x + report.steps[j], prob.ub[j]);
        const double lo = std::max(x - report.steps[j], prob.lb[j]);

        auto at = [&](double v) -> std::optional<SpecVector> {
            if (v == x)
                return center;
            Design moved = nominal;
            moved.values[j] = v;
            ++report.evaluations;
            return probe(evaluator, prob, moved);
        };
        const auto f_hi = at(hi);
        const auto f_lo = at(lo);
        if (!f_hi || !f_lo) {
            report.unknown[static_cast<std::size_t>(j)] = true;
            report.S.col(j).setConstant(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        report.S.col(j) = (f_hi->values - f_lo->values) / (hi - lo);
    }
    return report;
}

Eigen::VectorXd normalized_sensitivity(const SensitivityReport& report, const ProblemDefinition& prob,
                                       std::span<const int> screened_specs)
{
    if (screened_specs.empty())
        throw ContractError("at least one spec must be screened");
    const int d = prob.dim();
    if (report.S.cols() != d || report.S.rows() != prob.num_specs())
        throw ContractError("sensitivity matrix does not match the problem");
    Eigen::VectorXd score = Eigen::VectorXd::Zero(d);
    for (int j = 0; j < d; ++j) {
        if (report.unknown[static_cast<std::size_t>(j)]) {
            score[j] = std::numeric_limits<double>::infinity();
            continue;
        }
        for (int i : screened_specs) {
            if (i < 0 || i >= prob.num_specs())
                throw ContractError("screened spec index " + std::to_string(i) + " out of range");
            const double scale = std::max(std::abs(report.nominal_spec.values[i]), 1.0);
            score[j] = std::max(score[j], std::abs(report.S(i, j)) * (prob.ub[j] - prob.lb[j]) / scale);
        }
    }
    return score;
}

std::vector<int> prune_variables(const SensitivityReport& report, const ProblemDefinition& prob,
                                 std::span<const int> screened_specs, double thresh)
{
    if (!(thresh >= 0.0))
        throw ContractError("thresh must be non-negative");
    const Eigen::VectorXd score = normalized_sensitivity(report, prob, screened_specs);
    std::vector<int> active;
    for (int j = 0; j < score.size(); ++j)
        if (score[j] > thresh)
            active.push_back(j);
    if (active.empty()) {
        Eigen::Index top = 0;
        score.maxCoeff(&top);
        active.push_back(static_cast<int>(top));
    }
    return active;
}

std::vector<int> failing_specs(const SpecVector& nominal_spec)
{
    std::vector<int> out{0};
    for (int i = 1; i < nominal_spec.values.size(); ++i)
        if (!(nominal_spec.values[i] <= 0.0))
            out.push_back(i);
    return out;
}

} // namespace dnnopt
