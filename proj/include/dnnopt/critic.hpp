#pragma once

#include "dnnopt/nn.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace dnnopt {

/// Pseudo-sample (i, j): input [x_i, x_j - x_i], target f(x_j).
struct PseudoPair {
    std::size_t i;
    std::size_t j;
};

/// Materialized pseudo-samples; column k of `inputs`/`targets` belongs to `pairs[k]`.
struct PseudoSampleSet {
    std::vector<PseudoPair> pairs;
    Eigen::MatrixXd inputs;  // 2d x n
    Eigen::MatrixXd targets; // (m+1) x n

    std::size_t size() const { return pairs.size(); }
};

/// Builds pseudo-samples from a population (designs as columns of `designs`, unit cube; spec
/// vectors as columns of `specs`). All N^2 ordered pairs when N^2 <= cap, otherwise the N
/// diagonal pairs plus a uniform subsample of the off-diagonal pairs, `cap` in total.
PseudoSampleSet generate_pseudo_samples(const Eigen::Ref<const Eigen::MatrixXd>& designs,
                                        const Eigen::Ref<const Eigen::MatrixXd>& specs, std::size_t cap,
                                        std::uint64_t seed);

struct CriticConfig {
    std::vector<int> hidden{64, 64};
    nn::Activation activation = nn::Activation::silu;
    nn::TrainConfig train{.epochs = 200, .batch_size = 64, .learning_rate = 1e-3, .seed = 0, .patience = 20,
                          .min_improvement = 1e-6, .max_steps = 600};
};

struct CriticModel {
    nn::Mlp net;
    Eigen::VectorXd target_mean;
    Eigen::VectorXd target_scale; // 0 for rows that were constant in training
    std::vector<double> loss_history;
    double initial_loss = 0.0; // standardized MSE of the untrained network
    std::size_t sample_count = 0;

    int design_dim() const { return net.input_size() / 2; }
    int spec_dim() const { return net.output_size(); }
};

/// Trains Q(x, dx) on standardized targets. `warm_start`, when given, replaces the fresh network.
CriticModel train_critic(const PseudoSampleSet& samples, const CriticConfig& cfg,
                         const nn::Mlp* warm_start = nullptr);

/// De-standardized prediction of f(x + dx).
Eigen::VectorXd predict_spec(const CriticModel& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                             const Eigen::Ref<const Eigen::VectorXd>& dx);

/// Batched prediction; columns of `x` and `dx` are paired.
Eigen::MatrixXd predict_specs(const CriticModel& model, const Eigen::Ref<const Eigen::MatrixXd>& x,
                              const Eigen::Ref<const Eigen::MatrixXd>& dx);

} // namespace dnnopt
