#include "dnnopt/critic.hpp"

#include "dnnopt/errors.hpp"

#include <algorithm>
#include <random>
#include <unordered_set>

namespace dnnopt {

namespace {

std::vector<PseudoPair> choose_pairs(std::size_t n, std::size_t cap, std::uint64_t seed)
{
    std::vector<PseudoPair> pairs;
    if (n * n <= cap) {
        pairs.reserve(n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                pairs.push_back({i, j});
        return pairs;
    }
    if (cap < n)
        throw ContractError("pseudo-sample cap " + std::to_string(cap) + " cannot hold the " + std::to_string(n) +
                            " diagonal pairs");

    // Floyd's sampling of (cap - n) distinct off-diagonal codes in [0, n(n-1)).
    const std::size_t population = n * (n - 1);
    const std::size_t wanted = cap - n;
    std::mt19937_64 rng(seed);
    std::unordered_set<std::size_t> chosen;
    chosen.reserve(wanted * 2);
    std::vector<std::size_t> codes;
    codes.reserve(wanted);
    for (std::size_t k = population - wanted; k < population; ++k) {
        std::uniform_int_distribution<std::size_t> dist(0, k);
        std::size_t t = dist(rng);
        if (!chosen.insert(t).second) {
            chosen.insert(k);
            t = k;
        }
        codes.push_back(t);
    }
    std::sort(codes.begin(), codes.end());

    pairs.reserve(cap);
    for (std::size_t i = 0; i < n; ++i)
        pairs.push_back({i, i});
    for (std::size_t code : codes) {
        const std::size_t i = code / (n - 1);
        std::size_t j = code % (n - 1);
        if (j >= i)
            ++j;
        pairs.push_back({i, j});
    }
    return pairs;
}

} // namespace

PseudoSampleSet generate_pseudo_samples(const Eigen::Ref<const Eigen::MatrixXd>& designs,
                                        const Eigen::Ref<const Eigen::MatrixXd>& specs, std::size_t cap,
                                        std::uint64_t seed)
{
    const auto n = static_cast<std::size_t>(designs.cols());
    if (n == 0)
        throw ContractError("cannot build pseudo-samples from an empty population");
    if (static_cast<std::size_t>(specs.cols()) != n)
        throw ContractError("design and spec populations differ in size");

    PseudoSampleSet set;
    set.pairs = choose_pairs(n, cap, seed);
    const Eigen::Index d = designs.rows();
    const auto count = static_cast<Eigen::Index>(set.pairs.size());
    set.inputs.resize(2 * d, count);
    set.targets.resize(specs.rows(), count);
    for (Eigen::Index k = 0; k < count; ++k) {
        const auto [i, j] = set.pairs[static_cast<std::size_t>(k)];
        const auto ii = static_cast<Eigen::Index>(i);
        const auto jj = static_cast<Eigen::Index>(j);
        set.inputs.col(k).head(d) = designs.col(ii);
        set.inputs.col(k).tail(d) = designs.col(jj) - designs.col(ii);
        set.targets.col(k) = specs.col(jj);
    }
    return set;
}

CriticModel train_critic(const PseudoSampleSet& samples, const CriticConfig& cfg, const nn::Mlp* warm_start)
{
    if (samples.size() == 0)
        throw ContractError("critic training needs at least one pseudo-sample");
    const auto in = static_cast<int>(samples.inputs.rows());
    const auto out = static_cast<int>(samples.targets.rows());
    if (in % 2 != 0)
        throw ContractError("critic input width must be 2d");

    CriticModel model;
    model.sample_count = samples.size();
    model.target_mean = samples.targets.rowwise().mean();
    const Eigen::MatrixXd centered = samples.targets.colwise() - model.target_mean;
    model.target_scale =
        (centered.rowwise().squaredNorm() / static_cast<double>(samples.size())).cwiseSqrt();
    // A constant row carries no information: it is predicted as its mean exactly (scale 0),
    // while the network still sees the all-zero centered row.
    Eigen::VectorXd divisor = model.target_scale;
    for (Eigen::Index r = 0; r < model.target_scale.size(); ++r)
        if (!(model.target_scale[r] > 1e-12)) {
            model.target_scale[r] = 0.0;
            divisor[r] = 1.0;
        }
    const Eigen::MatrixXd standardized = divisor.cwiseInverse().asDiagonal() * centered;

    nn::Mlp net;
    if (warm_start && warm_start->input_size() == in && warm_start->output_size() == out) {
        net = *warm_start;
    } else {
        std::vector<int> sizes{in};
        sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
        sizes.push_back(out);
        net = nn::Mlp(sizes, cfg.activation, nn::Activation::identity, cfg.train.seed);
    }
    model.initial_loss = nn::mean_squared_error(net, samples.inputs, standardized);
    auto trained = nn::train_regression(std::move(net), samples.inputs, standardized, cfg.train);
    model.net = std::move(trained.net);
    model.loss_history = std::move(trained.loss_history);
    return model;
}

Eigen::MatrixXd predict_specs(const CriticModel& model, const Eigen::Ref<const Eigen::MatrixXd>& x,
                              const Eigen::Ref<const Eigen::MatrixXd>& dx)
{
    const int d = model.design_dim();
    if (x.rows() != d || dx.rows() != d || x.cols() != dx.cols())
        throw ContractError("critic expects paired d-dimensional x and dx");
    Eigen::MatrixXd input(2 * d, x.cols());
    input.topRows(d) = x;
    input.bottomRows(d) = dx;
    Eigen::MatrixXd out = model.target_scale.asDiagonal() * model.net.forward_batch(input);
    out.colwise() += model.target_mean;
    return out;
}

Eigen::VectorXd predict_spec(const CriticModel& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                             const Eigen::Ref<const Eigen::VectorXd>& dx)
{
    return predict_specs(model, x, dx);
}

} // namespace dnnopt
