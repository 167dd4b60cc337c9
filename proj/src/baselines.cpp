#include "dnnopt/baselines.hpp"

#include "dnnopt/errors.hpp"
#include "dnnopt/sampling.hpp"

#include <algorithm>
#include <random>

namespace dnnopt {

double reflect_unit(double v)
{
    if (v < 0.0)
        v = -v;
    if (v > 1.0)
        v = 2.0 - v;
    return std::clamp(v, 0.0, 1.0);
}

namespace {

bool should_stop(const EvaluationLog& log, const RunSettings& settings)
{
    return log.remaining() == 0 || (settings.termination == Termination::stop_on_feasible && log.any_feasible());
}

} // namespace

RunResult differential_evolution(const ProblemDefinition& problem, Evaluator& evaluator, const DEConfig& cfg,
                                 const RunSettings& settings)
{
    if (cfg.population < 4)
        throw ConfigError("differential evolution needs a population of at least 4");
    // F = 0 is allowed here (trial = x_r1) even though configs require F > 0.
    if (!(cfg.weight >= 0.0 && cfg.weight <= 2.0))
        throw ConfigError("DE weight F must lie in [0, 2]");
    if (!(cfg.crossover >= 0.0 && cfg.crossover <= 1.0))
        throw ConfigError("DE crossover rate CR must lie in [0, 1]");
    if (settings.budget < cfg.population)
        throw ConfigError("budget must be at least the DE population size");

    EvaluationLog log(problem, evaluator, settings.budget, settings.sink);
    std::mt19937_64 rng(settings.seed);
    const int d = problem.dim();
    const auto np = cfg.population;

    const Eigen::MatrixXd init = uniform_samples(static_cast<int>(np), d, rng());
    std::vector<Eigen::VectorXd> pop;
    for (Eigen::Index k = 0; k < init.cols(); ++k)
        pop.emplace_back(init.col(k));
    std::vector<SpecVector> pop_specs = log.evaluate(pop);
    log.resolve_objective_weight();

    std::uniform_int_distribution<std::size_t> pick(0, np - 1);
    std::uniform_int_distribution<int> pick_dim(0, d - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    while (!should_stop(log, settings)) {
        std::vector<Eigen::VectorXd> trials;
        trials.reserve(np);
        for (std::size_t i = 0; i < np; ++i) {
            std::size_t r1, r2, r3;
            do r1 = pick(rng); while (r1 == i);
            do r2 = pick(rng); while (r2 == i || r2 == r1);
            do r3 = pick(rng); while (r3 == i || r3 == r1 || r3 == r2);
            const Eigen::VectorXd mutant = pop[r1] + cfg.weight * (pop[r2] - pop[r3]);
            const int forced = pick_dim(rng);
            Eigen::VectorXd trial = pop[i];
            for (int j = 0; j < d; ++j)
                if (j == forced || unit(rng) < cfg.crossover)
                    trial[j] = reflect_unit(mutant[j]);
            trials.push_back(std::move(trial));
        }

        // Truncate the generation to the remaining budget; cached trials are free.
        std::size_t take = 0;
        {
            std::size_t fresh = 0;
            for (; take < trials.size(); ++take) {
                bool cached_or_dup = false;
                for (std::size_t q = 0; q < take && !cached_or_dup; ++q)
                    cached_or_dup = (trials[q] - trials[take]).lpNorm<Eigen::Infinity>() < 5e-13;
                if (!cached_or_dup && ++fresh > log.remaining())
                    break;
            }
        }
        trials.resize(take);
        if (trials.empty())
            break;
        const std::size_t used_before = log.used();
        const std::vector<SpecVector> trial_specs = log.evaluate(trials);
        // Only cached trials: the population has collapsed onto evaluated points; stop rather than spin.
        const bool stagnant = log.used() == used_before;

        for (std::size_t i = 0; i < trials.size(); ++i) {
            if (log.fom(trial_specs[i]) <= log.fom(pop_specs[i])) {
                pop[i] = trials[i];
                pop_specs[i] = trial_specs[i];
            }
        }
        if (stagnant)
            break;
    }
    return log.result("de", settings.seed);
}

RunResult random_search(const ProblemDefinition& problem, Evaluator& evaluator, const RunSettings& settings,
                        std::size_t weight_samples)
{
    if (settings.budget < 1)
        throw ConfigError("random search needs a budget of at least 1");
    EvaluationLog log(problem, evaluator, settings.budget, settings.sink);
    std::mt19937_64 rng(settings.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int d = problem.dim();
    const std::size_t calibration = std::clamp<std::size_t>(weight_samples, 1, settings.budget);

    while (!should_stop(log, settings)) {
        Eigen::VectorXd x(d);
        for (int j = 0; j < d; ++j)
            x[j] = unit(rng);
        log.evaluate(x);
        if (log.used() >= calibration)
            log.resolve_objective_weight();
    }
    log.resolve_objective_weight();
    return log.result("random", settings.seed);
}

} // namespace dnnopt
