#pragma once

#include "dnnopt/problem.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

namespace testing {

/// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / ("dnnopt_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline dnnopt::SpecDefinition objective(const std::string& name = "f0")
{
    return {name, dnnopt::SpecKind::objective_min, 0.0, 1.0};
}

inline dnnopt::SpecDefinition le(const std::string& name, double bound, double weight = 1.0)
{
    return {name, dnnopt::SpecKind::constraint_le, bound, weight};
}

inline dnnopt::SpecDefinition ge(const std::string& name, double bound, double weight = 1.0)
{
    return {name, dnnopt::SpecKind::constraint_ge, bound, weight};
}

inline Eigen::VectorXd vec(std::initializer_list<double> v)
{
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index k = 0;
    for (double x : v)
        out[k++] = x;
    return out;
}

inline double relative_error(double a, double b)
{
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

} // namespace testing

#include "dnnopt/evaluators.hpp"

namespace testing {

/// Forwards to another evaluator and counts the designs it is asked to evaluate.
class CountingEvaluator final : public dnnopt::Evaluator {
public:
    explicit CountingEvaluator(dnnopt::Evaluator& inner) : inner_(inner) {}
    const dnnopt::EvaluatorDescriptor& descriptor() const override { return inner_.descriptor(); }
    dnnopt::RawEvaluation evaluate(const dnnopt::Design& design) override
    {
        ++calls;
        return inner_.evaluate(design);
    }
    std::vector<dnnopt::RawEvaluation> evaluate_batch(std::span<const dnnopt::Design> designs) override
    {
        calls += designs.size();
        return inner_.evaluate_batch(designs);
    }
    std::size_t calls = 0;

private:
    dnnopt::Evaluator& inner_;
};

/// Evaluates a closure of the raw design; returns a failure when it yields an empty vector.
class FunctionEvaluator final : public dnnopt::Evaluator {
public:
    using Fn = std::function<std::vector<double>(const Eigen::VectorXd&)>;
    FunctionEvaluator(dnnopt::ProblemDefinition problem, Fn fn) : fn_(std::move(fn)) { desc_.problem = std::move(problem); }
    const dnnopt::EvaluatorDescriptor& descriptor() const override { return desc_; }
    dnnopt::RawEvaluation evaluate(const dnnopt::Design& design) override
    {
        auto v = fn_(design.values);
        if (v.empty())
            return dnnopt::RawEvaluation::failure("function declined");
        return {std::move(v), {}};
    }

private:
    dnnopt::EvaluatorDescriptor desc_;
    Fn fn_;
};

} // namespace testing
