#pragma once

#include "dnnopt/actor.hpp"
#include "dnnopt/critic.hpp"
#include "dnnopt/evaluation_log.hpp"
#include "dnnopt/evaluators.hpp"
#include "dnnopt/problem.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace dnnopt {

enum class Termination { stop_on_feasible, optimize_to_budget };

const char* to_string(Termination t);
Termination termination_from_string(const std::string& text);

struct RunSettings {
    std::size_t budget = 300;
    std::uint64_t seed = 0;
    Termination termination = Termination::stop_on_feasible;
    RecordSink sink;
};

struct DnnOptConfig {
    std::size_t n_init = 0; // 0: 20, raised to 2d when d > 10
    std::size_t n_es = 0;   // 0: min(10, n_init)
    std::size_t pseudo_sample_cap = 40000;
    bool warm_start = true; // continue critic training from the previous step's network
    // Cross-check every query selection against a linear-scan argmin.
    bool debug_checks = false;
    CriticConfig critic;
    ActorConfig actor;

    std::size_t resolved_n_init(int dim) const;
    std::size_t resolved_n_es(int dim) const;
};

/// Indices of the `n_es` smallest FoMs, ties broken by lower index.
std::vector<std::size_t> select_elites(std::span<const double> foms, std::size_t n_es);

struct QuerySelection {
    std::size_t index = 0;                 // argmin of predicted FoM, lowest index on ties
    std::vector<double> predicted_fom;     // g[Q(x_es_i, x_ca_i - x_es_i)] per pair
};

/// Query selection over elite/candidate pairs (columns).
QuerySelection select_query(const Eigen::Ref<const Eigen::MatrixXd>& elites,
                            const Eigen::Ref<const Eigen::MatrixXd>& candidates, const CriticModel& critic,
                            std::span<const SpecDefinition> specs);

struct OptimizerState {
    std::vector<Eigen::VectorXd> designs; // X_tot, unit cube
    std::vector<SpecVector> specs;        // F_tot
    std::size_t iteration = 0;            // t
    std::size_t max_iterations = 0;       // t_max
    std::size_t n_init = 0;
    std::size_t n_es = 0;
    std::size_t best_index = 0;
};

/// Diagnostics from the most recent step.
struct StepInfo {
    double critic_initial_loss = 0.0;
    double critic_final_loss = 0.0;
    double actor_first_loss = 0.0;
    double actor_final_loss = 0.0;
    std::size_t pseudo_samples = 0;
    std::vector<std::size_t> elites;
    QuerySelection query;
    bool fallback = false; // query came from the duplicate-guard fallback
};

/// Sequential actor-critic optimizer: one evaluator call per step.
class DnnOptimizer {
public:
    DnnOptimizer(ProblemDefinition problem, Evaluator& evaluator, DnnOptConfig cfg, RunSettings settings);

    /// Samples and evaluates the initial population; freezes w_0.
    void initialize();
    /// One outer iteration: retrain critic and actor, pick and evaluate one query.
    void step();
    bool finished() const;

    const OptimizerState& state() const { return state_; }
    const EvaluationLog& log() const { return log_; }
    const StepInfo& last_step() const { return info_; }
    RunResult result() const;

private:
    void sync_state();
    Eigen::VectorXd choose_query(const Eigen::MatrixXd& elites, const Eigen::MatrixXd& candidates,
                                 const CriticModel& critic, const RestrictedBounds& rb);
    bool is_duplicate(const Eigen::VectorXd& x) const;

    ProblemDefinition problem_;
    DnnOptConfig cfg_;
    RunSettings settings_;
    EvaluationLog log_;
    OptimizerState state_;
    StepInfo info_;
    std::mt19937_64 rng_;
    nn::Mlp critic_net_;
    nn::Mlp actor_net_;
    bool initialized_ = false;
};

/// Initial sampling followed by steps until feasibility (stop_on_feasible) or the budget.
RunResult run_dnnopt(const ProblemDefinition& problem, Evaluator& evaluator, const DnnOptConfig& cfg,
                     const RunSettings& settings);

} // namespace dnnopt
