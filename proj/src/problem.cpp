#include "dnnopt/problem.hpp"

#include "dnnopt/errors.hpp"

#include <algorithm>
#include <cmath>

namespace dnnopt {

const char* to_string(SpecKind kind)
{
    switch (kind) {
    case SpecKind::objective_min:
        return "objective-min";
    case SpecKind::constraint_le:
        return "constraint-le";
    case SpecKind::constraint_ge:
        return "constraint-ge";
    }
    return "unknown";
}

SpecKind spec_kind_from_string(const std::string& text)
{
    if (text == "objective-min")
        return SpecKind::objective_min;
    if (text == "constraint-le")
        return SpecKind::constraint_le;
    if (text == "constraint-ge")
        return SpecKind::constraint_ge;
    throw ContractError("unknown spec kind '" + text + "' (expected objective-min, constraint-le or constraint-ge)");
}

void ProblemDefinition::validate() const
{
    const auto d = lb.size();
    if (d == 0)
        throw ContractError("problem has no design variables");
    if (ub.size() != d)
        throw ContractError("lb and ub lengths differ");
    for (Eigen::Index j = 0; j < d; ++j) {
        if (!std::isfinite(lb[j]) || !std::isfinite(ub[j]) || !(lb[j] < ub[j]))
            throw ContractError("bounds of variable " + std::to_string(j) + " must satisfy lb < ub");
    }
    if (!integer.empty() && static_cast<Eigen::Index>(integer.size()) != d)
        throw ContractError("integer flag count does not match the dimension");
    if (!variable_names.empty() && static_cast<Eigen::Index>(variable_names.size()) != d)
        throw ContractError("variable name count does not match the dimension");
    if (specs.empty())
        throw ContractError("problem has no specs");
    if (specs.front().kind != SpecKind::objective_min)
        throw ContractError("spec 0 must be the objective (objective-min)");
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (i > 0 && specs[i].kind == SpecKind::objective_min)
            throw ContractError("only one objective is allowed; spec '" + specs[i].name + "' is objective-min");
        if (!(specs[i].weight > 0.0) || !std::isfinite(specs[i].weight))
            throw ContractError("weight of spec '" + specs[i].name + "' must be positive");
        if (!std::isfinite(specs[i].bound))
            throw ContractError("bound of spec '" + specs[i].name + "' must be finite");
    }
    if (objective_weight && !(*objective_weight > 0.0))
        throw ContractError("objective weight override must be positive");
}

ProblemDefinition make_problem(Eigen::VectorXd lb, Eigen::VectorXd ub, std::vector<SpecDefinition> specs)
{
    ProblemDefinition prob;
    prob.lb = std::move(lb);
    prob.ub = std::move(ub);
    prob.specs = std::move(specs);
    prob.validate();
    return prob;
}

double canonicalize_spec(double raw_value, const SpecDefinition& def)
{
    if (!std::isfinite(raw_value))
        throw CanonicalizationError("non-finite value for spec '" + def.name + "'");
    const double scale = def.bound != 0.0 ? std::abs(def.bound) : 1.0;
    switch (def.kind) {
    case SpecKind::objective_min:
        return raw_value;
    case SpecKind::constraint_le:
        return (raw_value - def.bound) / scale;
    case SpecKind::constraint_ge:
        return (def.bound - raw_value) / scale;
    }
    return raw_value;
}

SpecVector canonicalize(std::span<const double> raw, std::span<const SpecDefinition> specs)
{
    if (raw.size() != specs.size())
        throw ContractError("expected " + std::to_string(specs.size()) + " spec values, got " +
                            std::to_string(raw.size()));
    SpecVector out{Eigen::VectorXd(static_cast<Eigen::Index>(raw.size()))};
    for (std::size_t i = 0; i < raw.size(); ++i)
        out.values[static_cast<Eigen::Index>(i)] =
            std::isfinite(raw[i]) ? canonicalize_spec(raw[i], specs[i]) : std::numeric_limits<double>::quiet_NaN();
    return out;
}

double fom(const SpecVector& spec, std::span<const SpecDefinition> specs, double failure_value)
{
    if (static_cast<std::size_t>(spec.values.size()) != specs.size())
        throw ContractError("spec vector length does not match spec definitions");
    if (!spec.all_finite())
        return failure_value;
    double g = specs[0].weight * spec.values[0];
    for (std::size_t i = 1; i < specs.size(); ++i)
        g += std::min(1.0, std::max(0.0, specs[i].weight * spec.values[static_cast<Eigen::Index>(i)]));
    return g;
}

Eigen::VectorXd fom_gradient(const Eigen::VectorXd& spec, std::span<const SpecDefinition> specs)
{
    if (static_cast<std::size_t>(spec.size()) != specs.size())
        throw ContractError("spec vector length does not match spec definitions");
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(spec.size());
    grad[0] = specs[0].weight;
    for (std::size_t i = 1; i < specs.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        const double scaled = specs[i].weight * spec[k];
        if (scaled > 0.0 && scaled < 1.0)
            grad[k] = specs[i].weight;
    }
    return grad;
}

double failure_fom(std::span<const SpecDefinition> specs, double worst_objective)
{
    return specs[0].weight * worst_objective + static_cast<double>(specs.size() - 1) + 1.0;
}

bool is_feasible(const SpecVector& spec)
{
    for (Eigen::Index i = 1; i < spec.values.size(); ++i) {
        // NaN compares false, so failed constraints are infeasible.
        if (!(spec.values[i] <= 0.0))
            return false;
    }
    return true;
}

double auto_objective_weight(std::span<const double> objectives)
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : objectives) {
        if (!std::isfinite(v))
            continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(lo <= hi))
        return 1.0;
    return 1.0 / (hi - lo + 1e-12);
}

std::vector<SpecDefinition> with_objective_weight(std::span<const SpecDefinition> specs, double w0)
{
    std::vector<SpecDefinition> out(specs.begin(), specs.end());
    out.at(0).weight = w0;
    return out;
}

Eigen::VectorXd normalize(const Design& design, const ProblemDefinition& prob)
{
    if (design.values.size() != prob.lb.size())
        throw ContractError("design dimension does not match the problem");
    return ((design.values - prob.lb).array() / (prob.ub - prob.lb).array()).matrix();
}

Design denormalize(const Eigen::Ref<const Eigen::VectorXd>& unit, const ProblemDefinition& prob)
{
    if (unit.size() != prob.lb.size())
        throw ContractError("unit design dimension does not match the problem");
    return Design{(prob.lb.array() + unit.array() * (prob.ub - prob.lb).array()).matrix()};
}

Design prepare_for_evaluation(const Design& design, const ProblemDefinition& prob)
{
    Design out{design.values.cwiseMax(prob.lb).cwiseMin(prob.ub)};
    for (std::size_t j = 0; j < prob.integer.size(); ++j) {
        if (prob.integer[j]) {
            const auto k = static_cast<Eigen::Index>(j);
            out.values[k] = std::clamp(std::round(out.values[k]), std::ceil(prob.lb[k]), std::floor(prob.ub[k]));
        }
    }
    return out;
}

} // namespace dnnopt
