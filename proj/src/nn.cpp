#include "dnnopt/nn.hpp"

#include "dnnopt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>

namespace dnnopt::nn {

namespace {

double sigmoid(double z)
{
    if (z >= 0.0)
        return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double activate(Activation a, double z)
{
    switch (a) {
    case Activation::identity:
        return z;
    case Activation::tanh:
        return std::tanh(z);
    case Activation::softplus:
        return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    case Activation::silu:
        return z * sigmoid(z);
    }
    return z;
}

double derivative(Activation a, double z)
{
    switch (a) {
    case Activation::identity:
        return 1.0;
    case Activation::tanh: {
        const double t = std::tanh(z);
        return 1.0 - t * t;
    }
    case Activation::softplus:
        return sigmoid(z);
    case Activation::silu: {
        const double s = sigmoid(z);
        return s * (1.0 + z * (1.0 - s));
    }
    }
    return 1.0;
}

Eigen::MatrixXd apply(Activation a, const Eigen::MatrixXd& z)
{
    if (a == Activation::identity)
        return z;
    return z.unaryExpr([a](double v) { return activate(a, v); });
}

} // namespace

const char* to_string(Activation a)
{
    switch (a) {
    case Activation::identity:
        return "identity";
    case Activation::tanh:
        return "tanh";
    case Activation::softplus:
        return "softplus";
    case Activation::silu:
        return "silu";
    }
    return "unknown";
}

Activation activation_from_string(const std::string& text)
{
    for (auto a : {Activation::identity, Activation::tanh, Activation::softplus, Activation::silu})
        if (text == to_string(a))
            return a;
    throw ContractError("unknown activation '" + text + "'");
}

Mlp::Mlp(std::vector<int> layer_sizes, Activation hidden, Activation output, std::uint64_t seed)
    : sizes_(std::move(layer_sizes)), hidden_(hidden), output_(output)
{
    if (sizes_.size() < 2)
        throw ContractError("an MLP needs at least an input and an output layer");
    if (std::any_of(sizes_.begin(), sizes_.end(), [](int s) { return s <= 0; }))
        throw ContractError("layer sizes must be positive");

    Eigen::Index total = 0;
    for (int l = 0; l < num_layers(); ++l) {
        offsets_.push_back(total);
        total += static_cast<Eigen::Index>(sizes_[l + 1]) * (sizes_[l] + 1);
    }
    params_ = Eigen::VectorXd::Zero(total);

    std::mt19937_64 rng(seed);
    for (int l = 0; l < num_layers(); ++l) {
        const Activation a = activation_of(l);
        const double gain = (a == Activation::silu || a == Activation::softplus) ? 2.0 : 1.0;
        std::normal_distribution<double> dist(0.0, std::sqrt(gain / sizes_[l]));
        auto w = weight(l);
        for (Eigen::Index k = 0; k < w.size(); ++k)
            w.data()[k] = dist(rng);
    }
}

Eigen::Map<Eigen::MatrixXd> Mlp::weight(int layer)
{
    return {params_.data() + offsets_[layer], sizes_[layer + 1], sizes_[layer]};
}

Eigen::Map<const Eigen::MatrixXd> Mlp::weight(int layer) const
{
    return {params_.data() + offsets_[layer], sizes_[layer + 1], sizes_[layer]};
}

Eigen::Map<Eigen::VectorXd> Mlp::bias(int layer)
{
    return {params_.data() + offsets_[layer] + static_cast<Eigen::Index>(sizes_[layer + 1]) * sizes_[layer],
            sizes_[layer + 1]};
}

Eigen::Map<const Eigen::VectorXd> Mlp::bias(int layer) const
{
    return {params_.data() + offsets_[layer] + static_cast<Eigen::Index>(sizes_[layer + 1]) * sizes_[layer],
            sizes_[layer + 1]};
}

void Mlp::check_input_rows(Eigen::Index rows) const
{
    if (sizes_.empty())
        throw ContractError("network is not initialized");
    if (rows != input_size())
        throw ContractError("network expects input of size " + std::to_string(input_size()) + ", got " +
                            std::to_string(rows));
}

Eigen::VectorXd Mlp::forward(const Eigen::Ref<const Eigen::VectorXd>& input) const
{
    return forward_batch(input);
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::Ref<const Eigen::MatrixXd>& inputs) const
{
    check_input_rows(inputs.rows());
    Eigen::MatrixXd a = inputs;
    for (int l = 0; l < num_layers(); ++l) {
        Eigen::MatrixXd z = weight(l) * a;
        z.colwise() += bias(l);
        a = apply(activation_of(l), z);
    }
    return a;
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::Ref<const Eigen::MatrixXd>& inputs, Tape& tape) const
{
    check_input_rows(inputs.rows());
    tape.pre.resize(num_layers());
    tape.post.resize(num_layers() + 1);
    tape.post[0] = inputs;
    for (int l = 0; l < num_layers(); ++l) {
        tape.pre[l].noalias() = weight(l) * tape.post[l];
        tape.pre[l].colwise() += bias(l);
        tape.post[l + 1] = apply(activation_of(l), tape.pre[l]);
    }
    return tape.post.back();
}

Eigen::MatrixXd Mlp::backward(const Tape& tape, const Eigen::Ref<const Eigen::MatrixXd>& output_cotangent,
                              Eigen::VectorXd* param_grad) const
{
    if (tape.pre.size() != static_cast<std::size_t>(num_layers()))
        throw ContractError("tape does not belong to this network");
    if (output_cotangent.rows() != output_size() || output_cotangent.cols() != tape.post.back().cols())
        throw ContractError("output cotangent shape does not match the recorded batch");
    if (param_grad && param_grad->size() != params_.size())
        throw ContractError("parameter gradient has the wrong size");

    Eigen::MatrixXd delta = output_cotangent;
    for (int l = num_layers() - 1; l >= 0; --l) {
        const Activation a = activation_of(l);
        if (a != Activation::identity)
            delta.array() *= tape.pre[l].unaryExpr([a](double z) { return derivative(a, z); }).array();
        if (param_grad) {
            Eigen::Map<Eigen::MatrixXd> gw(param_grad->data() + offsets_[l], sizes_[l + 1], sizes_[l]);
            Eigen::Map<Eigen::VectorXd> gb(param_grad->data() + offsets_[l] +
                                               static_cast<Eigen::Index>(sizes_[l + 1]) * sizes_[l],
                                           sizes_[l + 1]);
            gw.noalias() += delta * tape.post[l].transpose();
            gb += delta.rowwise().sum();
        }
        Eigen::MatrixXd upstream = weight(l).transpose() * delta;
        delta = std::move(upstream);
    }
    return delta;
}

Eigen::VectorXd Mlp::input_gradient(const Eigen::Ref<const Eigen::VectorXd>& input,
                                    const Eigen::Ref<const Eigen::VectorXd>& output_cotangent) const
{
    if (output_cotangent.size() != output_size())
        throw ContractError("cotangent length must equal the output size");
    Tape tape;
    forward_batch(input, tape);
    return backward(tape, output_cotangent, nullptr);
}

void Mlp::save(std::ostream& os) const
{
    os << "dnnopt-mlp 1\n" << sizes_.size();
    for (int s : sizes_)
        os << ' ' << s;
    os << '\n' << to_string(hidden_) << ' ' << to_string(output_) << '\n';
    const auto old_precision = os.precision(17);
    for (Eigen::Index k = 0; k < params_.size(); ++k)
        os << params_[k] << (k + 1 == params_.size() ? '\n' : ' ');
    os.precision(old_precision);
}

Mlp Mlp::load(std::istream& is)
{
    std::string magic;
    int version = 0;
    std::size_t count = 0;
    if (!(is >> magic >> version) || magic != "dnnopt-mlp" || version != 1)
        throw ContractError("not a dnnopt-mlp version 1 stream");
    if (!(is >> count) || count < 2)
        throw ContractError("corrupt layer count");
    std::vector<int> sizes(count);
    for (auto& s : sizes)
        if (!(is >> s))
            throw ContractError("corrupt layer sizes");
    std::string hidden, output;
    if (!(is >> hidden >> output))
        throw ContractError("missing activations");
    Mlp net(sizes, activation_from_string(hidden), activation_from_string(output), 0);
    for (Eigen::Index k = 0; k < net.params_.size(); ++k)
        if (!(is >> net.params_[k]))
            throw ContractError("truncated parameter list");
    return net;
}

Adam::Adam(Eigen::Index size, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon), m_(Eigen::VectorXd::Zero(size)),
      v_(Eigen::VectorXd::Zero(size))
{
}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad)
{
    ++t_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
    v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

double mean_squared_error(const Mlp& net, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                          const Eigen::Ref<const Eigen::MatrixXd>& targets)
{
    const Eigen::MatrixXd pred = net.forward_batch(inputs);
    return (pred - targets).squaredNorm() / static_cast<double>(targets.size());
}

TrainResult train_regression(Mlp net, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                             const Eigen::Ref<const Eigen::MatrixXd>& targets, const TrainConfig& cfg)
{
    const Eigen::Index n = inputs.cols();
    if (n == 0 || targets.cols() != n)
        throw ContractError("training data must be non-empty with equal input and target counts");
    if (inputs.rows() != net.input_size() || targets.rows() != net.output_size())
        throw ContractError("training data dimensions do not match the network");
    if (cfg.epochs <= 0 || cfg.batch_size <= 0 || !(cfg.learning_rate > 0.0))
        throw ContractError("epochs, batch size and learning rate must be positive");
    if (!inputs.allFinite() || !targets.allFinite())
        throw TrainingError("training data contains non-finite values");

    const Eigen::Index batch = std::min<Eigen::Index>(cfg.batch_size, n);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::mt19937_64 rng(cfg.seed);
    Adam adam(net.num_parameters(), cfg.learning_rate);
    Mlp::Tape tape;
    Eigen::VectorXd grad(net.num_parameters());
    Eigen::MatrixXd xb, yb;

    TrainResult result{std::move(net), {}};
    Mlp& model = result.net;
    double best = std::numeric_limits<double>::infinity();
    int stale = 0;
    long steps = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        Eigen::Index seen = 0;
        for (Eigen::Index start = 0; start < n; start += batch) {
            const Eigen::Index count = std::min(batch, n - start);
            xb.resize(inputs.rows(), count);
            yb.resize(targets.rows(), count);
            for (Eigen::Index c = 0; c < count; ++c) {
                const auto src = order[static_cast<std::size_t>(start + c)];
                xb.col(c) = inputs.col(src);
                yb.col(c) = targets.col(src);
            }
            const Eigen::MatrixXd residual = model.forward_batch(xb, tape) - yb;
            const double norm = static_cast<double>(residual.size());
            const double loss = residual.squaredNorm() / norm;
            if (!std::isfinite(loss))
                throw TrainingError("loss became non-finite at epoch " + std::to_string(epoch) + ", step " +
                                    std::to_string(steps));
            grad.setZero();
            model.backward(tape, (2.0 / norm) * residual, &grad);
            adam.step(model.parameters(), grad);
            loss_sum += loss * static_cast<double>(count);
            seen += count;
            if (cfg.max_steps > 0 && ++steps >= cfg.max_steps)
                break;
        }
        const double epoch_loss = loss_sum / static_cast<double>(seen);
        result.loss_history.push_back(epoch_loss);
        if (cfg.max_steps > 0 && steps >= cfg.max_steps)
            break;
        if (epoch_loss < best - cfg.min_improvement) {
            best = epoch_loss;
            stale = 0;
        } else if (cfg.patience > 0 && ++stale >= cfg.patience) {
            break;
        }
    }
    return result;
}

} // namespace dnnopt::nn
