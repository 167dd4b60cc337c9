#pragma once

#include "dnnopt/critic.hpp"
#include "dnnopt/nn.hpp"
#include "dnnopt/problem.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace dnnopt {

/// Per-dimension box spanned by the elite population, in unit-cube coordinates.
struct RestrictedBounds {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    bool contains(const Eigen::Ref<const Eigen::VectorXd>& x, double tolerance = 0.0) const;
};

struct ActorConfig {
    double lambda = 1e4;
    double noise_sigma_frac = 0.1;
    double delta_scale = 1.0;
    // Floor on the box width used to scale actor outputs and noise, so a collapsed
    // elite dimension keeps a little room to move.
    double min_width = 1e-3;
    std::vector<int> hidden{64, 64};
    nn::Activation activation = nn::Activation::silu;
    nn::TrainConfig train{.epochs = 100, .batch_size = 64, .learning_rate = 1e-3, .seed = 0, .patience = 0,
                          .min_improvement = 0.0, .max_steps = 0};
};

/// Elites are the columns of `elites`.
RestrictedBounds restricted_bounds(const Eigen::Ref<const Eigen::MatrixXd>& elites);

/// max(0, lb - (x + dx)) + max(0, (x + dx) - ub), componentwise.
Eigen::VectorXd boundary_violation(const Eigen::Ref<const Eigen::VectorXd>& x,
                                   const Eigen::Ref<const Eigen::VectorXd>& dx, const RestrictedBounds& rb);

/// Fresh actor network [d, hidden..., d] with a tanh output.
nn::Mlp make_actor(int dim, const ActorConfig& cfg, std::uint64_t seed);

/// Per-dimension bound on |dx|: delta_scale * max(ub - lb, min_width).
Eigen::VectorXd delta_limits(const RestrictedBounds& rb, const ActorConfig& cfg);

/// Actor action dx = limits .* mu(x) for each column of `x`.
Eigen::MatrixXd actor_deltas(const nn::Mlp& actor, const Eigen::Ref<const Eigen::MatrixXd>& x,
                             const RestrictedBounds& rb, const ActorConfig& cfg);

struct ActorLoss {
    double value = 0.0;
    Eigen::VectorXd param_grad;
};

/// Mean over the batch of g[Q(x_k, mu(x_k))] + ||lambda * viol_k||_2, with the critic frozen.
ActorLoss actor_loss(const nn::Mlp& actor, const CriticModel& critic, const Eigen::Ref<const Eigen::MatrixXd>& batch,
                     const RestrictedBounds& rb, std::span<const SpecDefinition> specs, const ActorConfig& cfg);

struct ActorTraining {
    nn::Mlp actor;
    std::vector<double> loss_history;
};

/// Adam on actor_loss over mini-batches of elites. Never touches the critic parameters.
ActorTraining train_actor(nn::Mlp actor, const CriticModel& critic, const Eigen::Ref<const Eigen::MatrixXd>& elites,
                          const RestrictedBounds& rb, std::span<const SpecDefinition> specs, const ActorConfig& cfg);

/// One candidate per elite: clip(x_es + mu(x_es) + N(0, sigma^2)) to [0, 1]^d with
/// sigma_j = noise_sigma_frac * max(ub_j - lb_j, min_width).
Eigen::MatrixXd propose_candidates(const nn::Mlp& actor, const Eigen::Ref<const Eigen::MatrixXd>& elites,
                                   const RestrictedBounds& rb, const ActorConfig& cfg, std::uint64_t seed);

} // namespace dnnopt
