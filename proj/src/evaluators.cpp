#include "dnnopt/evaluators.hpp"

#include "dnnopt/errors.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace dnnopt {

std::vector<RawEvaluation> Evaluator::evaluate_batch(std::span<const Design> designs)
{
    std::vector<RawEvaluation> out;
    out.reserve(designs.size());
    for (const auto& design : designs)
        out.push_back(evaluate(design));
    return out;
}

namespace {

void check_dim(const Design& design, const EvaluatorDescriptor& desc)
{
    if (design.values.size() != desc.problem.dim())
        throw ContractError("evaluator expects " + std::to_string(desc.problem.dim()) + " variables, got " +
                            std::to_string(design.values.size()));
}

Eigen::VectorXd vec(std::initializer_list<double> values)
{
    Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index k = 0;
    for (double x : values)
        v[k++] = x;
    return v;
}

} // namespace

// ---------------------------------------------------------------------------
// toy_amp

ToyAmpEvaluator::ToyAmpEvaluator()
{
    auto& p = desc_.problem;
    p.variable_names = {"gm1_mS", "gm2_mS", "I1_uA", "I2_uA", "Cc_pF", "CL_pF"};
    p.lb = vec({0.1, 0.1, 10.0, 10.0, 0.1, 0.5});
    p.ub = vec({5.0, 5.0, 500.0, 500.0, 5.0, 10.0});
    p.specs = {
        {"power_w", SpecKind::objective_min, 0.0, 1.0},
        {"dc_gain_db", SpecKind::constraint_ge, 60.0, 1.0},
        {"gbw_mhz", SpecKind::constraint_ge, 30.0, 1.0},
        {"phase_margin_deg", SpecKind::constraint_ge, 60.0, 1.0},
        {"slew_v_per_us", SpecKind::constraint_ge, 20.0, 1.0},
        {"gm1_over_i1", SpecKind::constraint_le, 25.0, 1.0},
        {"gm2_over_i2", SpecKind::constraint_le, 25.0, 1.0},
    };
    p.validate();
}

ToyAmpEvaluator::Metrics ToyAmpEvaluator::metrics(const Design& design)
{
    constexpr double vdd = 1.8;
    constexpr double channel_lambda = 0.1;
    const auto& x = design.values;
    const double gm1 = x[0] * 1e-3;
    const double gm2 = x[1] * 1e-3;
    const double i1 = x[2] * 1e-6;
    const double i2 = x[3] * 1e-6;
    const double cc = x[4] * 1e-12;
    const double cl = x[5] * 1e-12;

    Metrics m{};
    m.power_w = vdd * (i1 + i2);
    m.gain_db = 20.0 * std::log10((gm1 / (channel_lambda * i1)) * (gm2 / (channel_lambda * i2)));
    const double gbw = gm1 / (2.0 * std::numbers::pi * cc);
    const double p2 = gm2 / (2.0 * std::numbers::pi * cl);
    m.gbw_mhz = gbw * 1e-6;
    m.phase_margin_deg = 90.0 - std::atan(gbw / p2) * 180.0 / std::numbers::pi;
    m.slew_v_per_us = i1 / cc * 1e-6;
    m.gm1_over_i1 = gm1 / i1;
    m.gm2_over_i2 = gm2 / i2;
    return m;
}

RawEvaluation ToyAmpEvaluator::evaluate(const Design& design)
{
    check_dim(design, desc_);
    const Metrics m = metrics(design);
    return {{m.power_w, m.gain_db, m.gbw_mhz, m.phase_margin_deg, m.slew_v_per_us, m.gm1_over_i1, m.gm2_over_i2},
            {}};
}

// ---------------------------------------------------------------------------
// constrained_quadratic

ConstrainedQuadraticEvaluator::ConstrainedQuadraticEvaluator(int dim, int num_constraints, std::uint64_t instance)
{
    if (dim <= 0 || num_constraints < 0)
        throw ContractError("constrained_quadratic needs dim > 0 and num_constraints >= 0");
    std::mt19937_64 rng(0x9e3779b97f4a7c15ULL ^ instance);
    std::uniform_real_distribution<double> center_dist(0.25, 0.75);
    std::uniform_real_distribution<double> margin_dist(0.05, 0.3);
    std::normal_distribution<double> normal(0.0, 1.0);

    center_.resize(dim);
    for (int j = 0; j < dim; ++j)
        center_[j] = center_dist(rng);
    normals_.resize(num_constraints, dim);
    offsets_.resize(num_constraints);
    for (int k = 0; k < num_constraints; ++k) {
        for (int j = 0; j < dim; ++j)
            normals_(k, j) = normal(rng);
        normals_.row(k).normalize();
        offsets_[k] = normals_.row(k).dot(center_) + margin_dist(rng);
    }
    build_descriptor(Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim));
}

ConstrainedQuadraticEvaluator::ConstrainedQuadraticEvaluator(Eigen::VectorXd lb, Eigen::VectorXd ub,
                                                             Eigen::VectorXd center, Eigen::MatrixXd normals,
                                                             Eigen::VectorXd offsets)
    : center_(std::move(center)), normals_(std::move(normals)), offsets_(std::move(offsets))
{
    if (center_.size() != lb.size() || (normals_.rows() > 0 && normals_.cols() != lb.size()) ||
        normals_.rows() != offsets_.size())
        throw ContractError("constrained_quadratic: inconsistent dimensions");
    build_descriptor(std::move(lb), std::move(ub));
}

void ConstrainedQuadraticEvaluator::build_descriptor(Eigen::VectorXd lb, Eigen::VectorXd ub)
{
    auto& p = desc_.problem;
    p.lb = std::move(lb);
    p.ub = std::move(ub);
    p.specs = {{"distance_sq", SpecKind::objective_min, 0.0, 1.0}};
    for (Eigen::Index k = 0; k < offsets_.size(); ++k)
        p.specs.push_back({"halfspace_" + std::to_string(k), SpecKind::constraint_le, offsets_[k], 1.0});
    p.validate();
}

RawEvaluation ConstrainedQuadraticEvaluator::evaluate(const Design& design)
{
    check_dim(design, desc_);
    RawEvaluation out;
    out.metrics.push_back((design.values - center_).squaredNorm());
    for (Eigen::Index k = 0; k < normals_.rows(); ++k)
        out.metrics.push_back(normals_.row(k).dot(design.values));
    return out;
}

// ---------------------------------------------------------------------------
// separable

namespace {
constexpr double kDeadZone = 0.15;
const std::vector<double> kSeparableTargets{0.2, 0.8, 0.25, 0.75, 0.15};
} // namespace

const std::vector<int>& SeparableEvaluator::active_variables()
{
    static const std::vector<int> active{0, 2, 3, 5, 7};
    return active;
}

const std::vector<int>& SeparableEvaluator::inert_variables()
{
    static const std::vector<int> inert{1, 4, 6};
    return inert;
}

SeparableEvaluator::SeparableEvaluator()
{
    auto& p = desc_.problem;
    p.lb = Eigen::VectorXd::Zero(8);
    p.ub = Eigen::VectorXd::Ones(8);
    for (int j = 0; j < 8; ++j)
        p.variable_names.push_back("x" + std::to_string(j));
    p.specs = {{"dead_zone_sq", SpecKind::objective_min, 0.0, 1.0}, {"active_sum", SpecKind::constraint_le, 3.0, 1.0}};
    p.validate();
}

RawEvaluation SeparableEvaluator::evaluate(const Design& design)
{
    check_dim(design, desc_);
    double objective = 0.0;
    double sum = 0.0;
    const auto& active = active_variables();
    for (std::size_t k = 0; k < active.size(); ++k) {
        const double x = design.values[active[k]];
        const double excess = std::max(0.0, std::abs(x - kSeparableTargets[k]) - kDeadZone);
        objective += excess * excess;
        sum += x;
    }
    return {{objective, sum}, {}};
}

// ---------------------------------------------------------------------------

std::unique_ptr<Evaluator> make_builtin(const std::string& name, const BuiltinOptions& options)
{
    if (name == "toy_amp")
        return std::make_unique<ToyAmpEvaluator>();
    if (name == "constrained_quadratic")
        return std::make_unique<ConstrainedQuadraticEvaluator>(options.dim, options.num_constraints, options.instance);
    if (name == "sphere") {
        const Eigen::VectorXd half = Eigen::VectorXd::Constant(options.dim, 0.5);
        return std::make_unique<ConstrainedQuadraticEvaluator>(Eigen::VectorXd::Zero(options.dim),
                                                               Eigen::VectorXd::Ones(options.dim), half,
                                                               Eigen::MatrixXd(0, options.dim), Eigen::VectorXd(0));
    }
    if (name == "separable")
        return std::make_unique<SeparableEvaluator>();
    throw ConfigError("unknown builtin evaluator '" + name +
                      "' (expected toy_amp, constrained_quadratic, sphere or separable)");
}

// ---------------------------------------------------------------------------
// subspace

ProblemDefinition restrict_problem(const ProblemDefinition& prob, std::span<const int> active)
{
    if (active.empty())
        throw ContractError("restricted problem needs at least one active variable");
    ProblemDefinition out;
    const auto n = static_cast<Eigen::Index>(active.size());
    out.lb.resize(n);
    out.ub.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const int j = active[static_cast<std::size_t>(k)];
        if (j < 0 || j >= prob.dim())
            throw ContractError("active variable index out of range");
        out.lb[k] = prob.lb[j];
        out.ub[k] = prob.ub[j];
        if (!prob.variable_names.empty())
            out.variable_names.push_back(prob.variable_names[static_cast<std::size_t>(j)]);
        if (!prob.integer.empty())
            out.integer.push_back(prob.integer[static_cast<std::size_t>(j)]);
    }
    out.specs = prob.specs;
    out.objective_weight = prob.objective_weight;
    out.validate();
    return out;
}

SubspaceEvaluator::SubspaceEvaluator(Evaluator& full, const ProblemDefinition& full_problem, std::vector<int> active,
                                     Design nominal)
    : full_(full), active_(std::move(active)), nominal_(std::move(nominal))
{
    if (nominal_.values.size() != full_problem.dim())
        throw ContractError("nominal design does not match the full problem");
    desc_.problem = restrict_problem(full_problem, active_);
    desc_.concurrency_safe = full.descriptor().concurrency_safe;
    desc_.deterministic = full.descriptor().deterministic;
}

Design SubspaceEvaluator::expand(const Design& reduced) const
{
    if (reduced.values.size() != static_cast<Eigen::Index>(active_.size()))
        throw ContractError("reduced design does not match the active set");
    Design out = nominal_;
    for (std::size_t k = 0; k < active_.size(); ++k)
        out.values[active_[k]] = reduced.values[static_cast<Eigen::Index>(k)];
    return out;
}

RawEvaluation SubspaceEvaluator::evaluate(const Design& design)
{
    return full_.evaluate(expand(design));
}

std::vector<RawEvaluation> SubspaceEvaluator::evaluate_batch(std::span<const Design> designs)
{
    std::vector<Design> expanded;
    expanded.reserve(designs.size());
    for (const auto& d : designs)
        expanded.push_back(expand(d));
    return full_.evaluate_batch(expanded);
}

} // namespace dnnopt
