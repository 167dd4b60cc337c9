#include "dnnopt/actor.hpp"

#include "dnnopt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace dnnopt {

bool RestrictedBounds::contains(const Eigen::Ref<const Eigen::VectorXd>& x, double tolerance) const
{
    return ((x.array() >= lower.array() - tolerance) && (x.array() <= upper.array() + tolerance)).all();
}

RestrictedBounds restricted_bounds(const Eigen::Ref<const Eigen::MatrixXd>& elites)
{
    if (elites.cols() == 0)
        throw ContractError("restricted bounds need at least one elite design");
    return {elites.rowwise().minCoeff(), elites.rowwise().maxCoeff()};
}

Eigen::VectorXd boundary_violation(const Eigen::Ref<const Eigen::VectorXd>& x,
                                   const Eigen::Ref<const Eigen::VectorXd>& dx, const RestrictedBounds& rb)
{
    if (x.size() != dx.size() || x.size() != rb.lower.size())
        throw ContractError("boundary_violation: dimension mismatch");
    const Eigen::ArrayXd moved = (x + dx).array();
    return ((rb.lower.array() - moved).max(0.0) + (moved - rb.upper.array()).max(0.0)).matrix();
}

nn::Mlp make_actor(int dim, const ActorConfig& cfg, std::uint64_t seed)
{
    std::vector<int> sizes{dim};
    sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    sizes.push_back(dim);
    return nn::Mlp(sizes, cfg.activation, nn::Activation::tanh, seed);
}

Eigen::VectorXd delta_limits(const RestrictedBounds& rb, const ActorConfig& cfg)
{
    return cfg.delta_scale * (rb.upper - rb.lower).cwiseMax(cfg.min_width);
}

Eigen::MatrixXd actor_deltas(const nn::Mlp& actor, const Eigen::Ref<const Eigen::MatrixXd>& x,
                             const RestrictedBounds& rb, const ActorConfig& cfg)
{
    return delta_limits(rb, cfg).asDiagonal() * actor.forward_batch(x);
}

ActorLoss actor_loss(const nn::Mlp& actor, const CriticModel& critic, const Eigen::Ref<const Eigen::MatrixXd>& batch,
                     const RestrictedBounds& rb, std::span<const SpecDefinition> specs, const ActorConfig& cfg)
{
    const Eigen::Index d = batch.rows();
    const Eigen::Index n = batch.cols();
    if (n == 0)
        throw ContractError("actor loss needs a non-empty batch");
    if (critic.design_dim() != d || actor.input_size() != d || actor.output_size() != d)
        throw ContractError("actor, critic and batch dimensions disagree");
    if (static_cast<Eigen::Index>(specs.size()) != critic.spec_dim())
        throw ContractError("spec definitions do not match the critic output");

    const Eigen::VectorXd limits = delta_limits(rb, cfg);
    nn::Mlp::Tape actor_tape;
    const Eigen::MatrixXd squashed = actor.forward_batch(batch, actor_tape);
    const Eigen::MatrixXd dx = limits.asDiagonal() * squashed;

    Eigen::MatrixXd critic_in(2 * d, n);
    critic_in.topRows(d) = batch;
    critic_in.bottomRows(d) = dx;
    nn::Mlp::Tape critic_tape;
    const Eigen::MatrixXd q_std = critic.net.forward_batch(critic_in, critic_tape);
    Eigen::MatrixXd q = critic.target_scale.asDiagonal() * q_std;
    q.colwise() += critic.target_mean;

    ActorLoss out;
    Eigen::MatrixXd q_cot(q.rows(), n);
    Eigen::MatrixXd dx_cot(d, n);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::VectorXd spec = q.col(k);
        out.value += fom(SpecVector{spec}, specs);
        // dL/dq_std = dL/dq * scale
        q_cot.col(k) = inv_n * fom_gradient(spec, specs).cwiseProduct(critic.target_scale);

        const Eigen::VectorXd moved = batch.col(k) + dx.col(k);
        const Eigen::VectorXd viol = boundary_violation(batch.col(k), dx.col(k), rb);
        const double norm = cfg.lambda * viol.norm();
        out.value += norm;
        dx_cot.col(k).setZero();
        if (norm > 0.0) {
            for (Eigen::Index j = 0; j < d; ++j) {
                if (viol[j] == 0.0)
                    continue;
                const double sign = moved[j] < rb.lower[j] ? -1.0 : 1.0;
                dx_cot(j, k) = inv_n * cfg.lambda * cfg.lambda * viol[j] * sign / norm;
            }
        }
    }
    out.value *= inv_n;
    if (!std::isfinite(out.value))
        throw TrainingError("actor loss became non-finite");

    // Critic parameters stay frozen: only its input cotangent is needed.
    const Eigen::MatrixXd critic_in_cot = critic.net.backward(critic_tape, q_cot, nullptr);
    dx_cot += critic_in_cot.bottomRows(d);
    const Eigen::MatrixXd squashed_cot = limits.asDiagonal() * dx_cot;
    out.param_grad = Eigen::VectorXd::Zero(actor.num_parameters());
    actor.backward(actor_tape, squashed_cot, &out.param_grad);
    return out;
}

ActorTraining train_actor(nn::Mlp actor, const CriticModel& critic, const Eigen::Ref<const Eigen::MatrixXd>& elites,
                          const RestrictedBounds& rb, std::span<const SpecDefinition> specs, const ActorConfig& cfg)
{
    const Eigen::Index n = elites.cols();
    if (n == 0)
        throw ContractError("actor training needs a non-empty elite population");
    if (cfg.train.epochs <= 0 || cfg.train.batch_size <= 0)
        throw ContractError("actor epochs and batch size must be positive");

    const Eigen::Index batch = std::min<Eigen::Index>(cfg.train.batch_size, n);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::mt19937_64 rng(cfg.train.seed);
    nn::Adam adam(actor.num_parameters(), cfg.train.learning_rate);

    ActorTraining result{std::move(actor), {}};
    Eigen::MatrixXd xb;
    for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (Eigen::Index start = 0; start < n; start += batch) {
            const Eigen::Index count = std::min(batch, n - start);
            xb.resize(elites.rows(), count);
            for (Eigen::Index c = 0; c < count; ++c)
                xb.col(c) = elites.col(order[static_cast<std::size_t>(start + c)]);
            const ActorLoss loss = actor_loss(result.actor, critic, xb, rb, specs, cfg);
            adam.step(result.actor.parameters(), loss.param_grad);
            loss_sum += loss.value * static_cast<double>(count);
        }
        result.loss_history.push_back(loss_sum / static_cast<double>(n));
    }
    return result;
}

Eigen::MatrixXd propose_candidates(const nn::Mlp& actor, const Eigen::Ref<const Eigen::MatrixXd>& elites,
                                   const RestrictedBounds& rb, const ActorConfig& cfg, std::uint64_t seed)
{
    Eigen::MatrixXd candidates = elites + actor_deltas(actor, elites, rb, cfg);
    if (cfg.noise_sigma_frac > 0.0) {
        const Eigen::VectorXd sigma = cfg.noise_sigma_frac * (rb.upper - rb.lower).cwiseMax(cfg.min_width);
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Eigen::Index k = 0; k < candidates.cols(); ++k)
            for (Eigen::Index j = 0; j < candidates.rows(); ++j)
                candidates(j, k) += sigma[j] * normal(rng);
    }
    return candidates.cwiseMax(0.0).cwiseMin(1.0);
}

} // namespace dnnopt
