#pragma once

#include "dnnopt/evaluation_log.hpp"
#include "dnnopt/evaluators.hpp"
#include "dnnopt/optimizer.hpp"
#include "dnnopt/problem.hpp"

namespace dnnopt {

struct DEConfig {
    std::size_t population = 30; // NP
    double weight = 0.5;         // F
    double crossover = 0.9;      // CR
};

/// DE/rand/1/bin on the unit cube with reflection at the bounds; FoM is the selection fitness.
/// The last generation is truncated so the budget is never exceeded.
RunResult differential_evolution(const ProblemDefinition& problem, Evaluator& evaluator, const DEConfig& cfg,
                                 const RunSettings& settings);

/// Uniform samples; w_0 is resolved from the first `weight_samples` evaluations.
RunResult random_search(const ProblemDefinition& problem, Evaluator& evaluator, const RunSettings& settings,
                        std::size_t weight_samples = 20);

/// Reflects into [0, 1]; values more than one box width away are clipped.
double reflect_unit(double v);

} // namespace dnnopt
