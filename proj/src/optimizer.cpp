#include "dnnopt/optimizer.hpp"

#include "dnnopt/errors.hpp"
#include "dnnopt/sampling.hpp"

#include <algorithm>
#include <numeric>

namespace dnnopt {

const char* to_string(Termination t)
{
    return t == Termination::stop_on_feasible ? "stop_on_feasible" : "optimize_to_budget";
}

Termination termination_from_string(const std::string& text)
{
    if (text == "stop_on_feasible")
        return Termination::stop_on_feasible;
    if (text == "optimize_to_budget")
        return Termination::optimize_to_budget;
    throw ConfigError("unknown termination mode '" + text + "' (expected stop_on_feasible or optimize_to_budget)");
}

std::size_t DnnOptConfig::resolved_n_init(int dim) const
{
    if (n_init > 0)
        return n_init;
    return dim > 10 ? std::max<std::size_t>(20, 2 * static_cast<std::size_t>(dim)) : 20;
}

std::size_t DnnOptConfig::resolved_n_es(int dim) const
{
    if (n_es > 0)
        return n_es;
    return std::min<std::size_t>(10, resolved_n_init(dim));
}

std::vector<std::size_t> select_elites(std::span<const double> foms, std::size_t n_es)
{
    if (n_es == 0 || n_es > foms.size())
        throw ContractError("elite count " + std::to_string(n_es) + " must be in [1, " +
                            std::to_string(foms.size()) + "]");
    std::vector<std::size_t> order(foms.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return foms[a] < foms[b]; });
    order.resize(n_es);
    return order;
}

QuerySelection select_query(const Eigen::Ref<const Eigen::MatrixXd>& elites,
                            const Eigen::Ref<const Eigen::MatrixXd>& candidates, const CriticModel& critic,
                            std::span<const SpecDefinition> specs)
{
    if (elites.cols() == 0 || elites.cols() != candidates.cols())
        throw ContractError("select_query needs equally sized, non-empty elite and candidate sets");
    const Eigen::MatrixXd predicted = predict_specs(critic, elites, candidates - elites);
    QuerySelection sel;
    sel.predicted_fom.resize(static_cast<std::size_t>(elites.cols()));
    for (Eigen::Index k = 0; k < elites.cols(); ++k) {
        const double g = fom(SpecVector{predicted.col(k)}, specs);
        sel.predicted_fom[static_cast<std::size_t>(k)] = g;
        if (g < sel.predicted_fom[sel.index])
            sel.index = static_cast<std::size_t>(k);
    }
    return sel;
}

DnnOptimizer::DnnOptimizer(ProblemDefinition problem, Evaluator& evaluator, DnnOptConfig cfg, RunSettings settings)
    : problem_(std::move(problem)), cfg_(std::move(cfg)), settings_(std::move(settings)),
      log_(problem_, evaluator, settings_.budget, settings_.sink), rng_(settings_.seed)
{
    const int d = problem_.dim();
    state_.n_init = cfg_.resolved_n_init(d);
    state_.n_es = cfg_.resolved_n_es(d);
    if (state_.n_init < 2)
        throw ConfigError("n_init must be at least 2");
    if (state_.n_es > state_.n_init)
        throw ConfigError("n_es must not exceed n_init");
    if (settings_.budget < state_.n_init)
        throw ConfigError("budget " + std::to_string(settings_.budget) + " is smaller than n_init " +
                          std::to_string(state_.n_init));
    state_.max_iterations = settings_.budget - state_.n_init;
}

void DnnOptimizer::initialize()
{
    if (initialized_)
        return;
    const Eigen::MatrixXd init =
        latin_hypercube(static_cast<int>(state_.n_init), problem_.dim(), rng_());
    std::vector<Eigen::VectorXd> units;
    for (Eigen::Index k = 0; k < init.cols(); ++k)
        units.emplace_back(init.col(k));
    log_.evaluate(units);
    log_.resolve_objective_weight();
    initialized_ = true;
    sync_state();
}

void DnnOptimizer::sync_state()
{
    const auto& records = log_.records();
    for (std::size_t k = state_.designs.size(); k < records.size(); ++k) {
        state_.designs.push_back(records[k].unit);
        state_.specs.push_back(records[k].spec);
    }
    const auto foms = log_.current_foms();
    state_.best_index = static_cast<std::size_t>(std::min_element(foms.begin(), foms.end()) - foms.begin());
}

bool DnnOptimizer::finished() const
{
    if (!initialized_)
        return false;
    if (log_.remaining() == 0 || state_.iteration >= state_.max_iterations)
        return true;
    return settings_.termination == Termination::stop_on_feasible && log_.any_feasible();
}

bool DnnOptimizer::is_duplicate(const Eigen::VectorXd& x) const
{
    return std::any_of(state_.designs.begin(), state_.designs.end(),
                       [&](const Eigen::VectorXd& y) { return (x - y).lpNorm<Eigen::Infinity>() <= 1e-9; });
}

Eigen::VectorXd DnnOptimizer::choose_query(const Eigen::MatrixXd& elites, const Eigen::MatrixXd& candidates,
                                           const CriticModel& critic, const RestrictedBounds& rb)
{
    info_.query = select_query(elites, candidates, critic, log_.specs());
    if (cfg_.debug_checks) {
        const auto& g = info_.query.predicted_fom;
        const auto scan = static_cast<std::size_t>(std::min_element(g.begin(), g.end()) - g.begin());
        if (scan != info_.query.index)
            throw std::logic_error("select_query disagrees with the linear-scan argmin");
    }
    std::vector<std::size_t> order(info_.query.predicted_fom.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return info_.query.predicted_fom[a] < info_.query.predicted_fom[b];
    });
    for (std::size_t k : order) {
        const Eigen::VectorXd x = candidates.col(static_cast<Eigen::Index>(k));
        if (!is_duplicate(x))
            return x;
    }
    info_.fallback = true;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Eigen::VectorXd x(rb.lower.size());
    for (int attempt = 0; attempt < 100; ++attempt) {
        for (Eigen::Index j = 0; j < x.size(); ++j)
            x[j] = rb.lower[j] + unit(rng_) * (rb.upper[j] - rb.lower[j]);
        if (!is_duplicate(x))
            break;
    }
    return x;
}

void DnnOptimizer::step()
{
    if (!initialized_)
        initialize();
    if (finished())
        return;
    ++state_.iteration;
    info_ = StepInfo{};

    const std::uint64_t critic_seed = rng_();
    const std::uint64_t pair_seed = rng_();
    const std::uint64_t actor_init_seed = rng_();
    const std::uint64_t actor_train_seed = rng_();
    const std::uint64_t noise_seed = rng_();

    const int d = problem_.dim();
    const auto& records = log_.records();
    std::vector<std::size_t> finite;
    for (std::size_t k = 0; k < records.size(); ++k)
        if (!records[k].failed())
            finite.push_back(k);

    const std::vector<double> foms = log_.current_foms();
    info_.elites = select_elites(foms, std::min(state_.n_es, foms.size()));
    Eigen::MatrixXd elites(d, static_cast<Eigen::Index>(info_.elites.size()));
    for (std::size_t k = 0; k < info_.elites.size(); ++k)
        elites.col(static_cast<Eigen::Index>(k)) = state_.designs[info_.elites[k]];
    const RestrictedBounds rb = restricted_bounds(elites);

    Eigen::VectorXd query;
    if (finite.size() < 2) {
        // Not enough successful evaluations to train a surrogate.
        info_.fallback = true;
        query = uniform_samples(1, d, noise_seed).col(0);
    } else {
        Eigen::MatrixXd X(d, static_cast<Eigen::Index>(finite.size()));
        Eigen::MatrixXd F(problem_.num_specs(), static_cast<Eigen::Index>(finite.size()));
        for (std::size_t k = 0; k < finite.size(); ++k) {
            X.col(static_cast<Eigen::Index>(k)) = state_.designs[finite[k]];
            F.col(static_cast<Eigen::Index>(k)) = state_.specs[finite[k]].values;
        }
        const PseudoSampleSet samples = generate_pseudo_samples(X, F, cfg_.pseudo_sample_cap, pair_seed);
        info_.pseudo_samples = samples.size();

        CriticConfig critic_cfg = cfg_.critic;
        critic_cfg.train.seed = critic_seed;
        const bool warm = cfg_.warm_start && critic_net_.num_parameters() > 0;
        CriticModel critic = train_critic(samples, critic_cfg, warm ? &critic_net_ : nullptr);
        info_.critic_initial_loss = critic.initial_loss;
        info_.critic_final_loss = critic.loss_history.empty() ? critic.initial_loss : critic.loss_history.back();

        ActorConfig actor_cfg = cfg_.actor;
        actor_cfg.train.seed = actor_train_seed;
        nn::Mlp actor = cfg_.warm_start && actor_net_.num_parameters() > 0 ? actor_net_
                                                                            : make_actor(d, actor_cfg, actor_init_seed);
        ActorTraining trained = train_actor(std::move(actor), critic, elites, rb, log_.specs(), actor_cfg);
        info_.actor_first_loss = trained.loss_history.front();
        info_.actor_final_loss = trained.loss_history.back();

        const Eigen::MatrixXd candidates = propose_candidates(trained.actor, elites, rb, actor_cfg, noise_seed);
        query = choose_query(elites, candidates, critic, rb);

        if (cfg_.warm_start) {
            critic_net_ = critic.net;
            actor_net_ = trained.actor;
        }
    }

    log_.evaluate(query.cwiseMax(0.0).cwiseMin(1.0).eval());
    sync_state();
}

RunResult DnnOptimizer::result() const
{
    return log_.result("dnnopt", settings_.seed);
}

RunResult run_dnnopt(const ProblemDefinition& problem, Evaluator& evaluator, const DnnOptConfig& cfg,
                     const RunSettings& settings)
{
    DnnOptimizer opt(problem, evaluator, cfg, settings);
    opt.initialize();
    while (!opt.finished())
        opt.step();
    return opt.result();
}

} // namespace dnnopt
