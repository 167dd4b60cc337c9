#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace dnnopt::nn {

enum class Activation { identity, tanh, softplus, silu };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& text);

struct TrainConfig {
    int epochs = 200;
    int batch_size = 64;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    // Stop when the epoch loss has not improved by `min_improvement` for this many epochs; 0 disables.
    int patience = 20;
    double min_improvement = 1e-6;
    // Hard cap on optimizer steps across all epochs; 0 means no cap.
    long max_steps = 0;
};

/// Fully connected feed-forward network. Samples are columns in all batched calls.
///
/// Parameters live in one flat vector, layer by layer, each layer stored as its
/// column-major weight matrix followed by its bias.
class Mlp {
public:
    struct Tape {
        std::vector<Eigen::MatrixXd> pre;  // pre-activations per layer
        std::vector<Eigen::MatrixXd> post; // post[0] is the input, post[l+1] the output of layer l
    };

    Mlp() = default;
    Mlp(std::vector<int> layer_sizes, Activation hidden, Activation output, std::uint64_t seed);

    int input_size() const { return sizes_.front(); }
    int output_size() const { return sizes_.back(); }
    int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
    const std::vector<int>& layer_sizes() const { return sizes_; }
    Activation hidden_activation() const { return hidden_; }
    Activation output_activation() const { return output_; }

    Eigen::VectorXd& parameters() { return params_; }
    const Eigen::VectorXd& parameters() const { return params_; }
    Eigen::Index num_parameters() const { return params_.size(); }

    Eigen::Map<Eigen::MatrixXd> weight(int layer);
    Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
    Eigen::Map<Eigen::VectorXd> bias(int layer);
    Eigen::Map<const Eigen::VectorXd> bias(int layer) const;

    Eigen::VectorXd forward(const Eigen::Ref<const Eigen::VectorXd>& input) const;
    Eigen::MatrixXd forward_batch(const Eigen::Ref<const Eigen::MatrixXd>& inputs) const;
    Eigen::MatrixXd forward_batch(const Eigen::Ref<const Eigen::MatrixXd>& inputs, Tape& tape) const;

    /// Reverse pass for the batch recorded in `tape`. Accumulates parameter gradients into
    /// `param_grad` when non-null and returns the cotangent with respect to the inputs.
    Eigen::MatrixXd backward(const Tape& tape, const Eigen::Ref<const Eigen::MatrixXd>& output_cotangent,
                             Eigen::VectorXd* param_grad) const;

    /// Vector-Jacobian product d^T (d output / d input).
    Eigen::VectorXd input_gradient(const Eigen::Ref<const Eigen::VectorXd>& input,
                                   const Eigen::Ref<const Eigen::VectorXd>& output_cotangent) const;

    void save(std::ostream& os) const;
    static Mlp load(std::istream& is);

private:
    Activation activation_of(int layer) const { return layer + 1 == num_layers() ? output_ : hidden_; }
    void check_input_rows(Eigen::Index rows) const;

    std::vector<int> sizes_;
    std::vector<Eigen::Index> offsets_;
    Activation hidden_ = Activation::silu;
    Activation output_ = Activation::identity;
    Eigen::VectorXd params_;
};

/// Adaptive moment estimation over a flat parameter vector.
class Adam {
public:
    explicit Adam(Eigen::Index size, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                  double epsilon = 1e-8);
    void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    Eigen::VectorXd m_, v_;
};

struct TrainResult {
    Mlp net;
    std::vector<double> loss_history; // mean loss per epoch
};

/// Mini-batch Adam on the mean squared error averaged over samples and outputs.
TrainResult train_regression(Mlp net, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                             const Eigen::Ref<const Eigen::MatrixXd>& targets, const TrainConfig& cfg);

/// Mean squared error of `net` over the whole dataset, averaged over outputs.
double mean_squared_error(const Mlp& net, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                          const Eigen::Ref<const Eigen::MatrixXd>& targets);

} // namespace dnnopt::nn
