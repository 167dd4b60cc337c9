#include "helpers.hpp"

#include "dnnopt/errors.hpp"
#include "dnnopt/nn.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace dnnopt;
using nn::Activation;
using nn::Mlp;

namespace {

const Activation kHidden[] = {Activation::tanh, Activation::softplus, Activation::silu};
const Activation kOutput[] = {Activation::identity, Activation::tanh};

double vector_relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    const double scale = std::max({a.norm(), b.norm(), 1e-12});
    return (a - b).norm() / scale;
}

} // namespace

TEST_CASE("construction is seeded and shape-correct")
{
    const Mlp a({4, 8, 3}, Activation::silu, Activation::identity, 7);
    const Mlp b({4, 8, 3}, Activation::silu, Activation::identity, 7);
    const Mlp c({4, 8, 3}, Activation::silu, Activation::identity, 8);
    CHECK(a.parameters() == b.parameters());
    CHECK(a.parameters() != c.parameters());
    CHECK(a.num_parameters() == 4 * 8 + 8 + 8 * 3 + 3);
    CHECK(a.forward(Eigen::VectorXd::Random(4)).size() == 3);
    CHECK(a.parameters().allFinite());
    CHECK_THROWS_AS(a.forward(Eigen::VectorXd::Zero(5)), ContractError);
}

TEST_CASE("degenerate networks reduce to their affine parts")
{
    Mlp net({3, 5, 2}, Activation::tanh, Activation::tanh, 1);
    net.weight(1).setZero();
    net.bias(1) = testing::vec({0.3, -0.7});
    const Eigen::VectorXd out = net.forward(Eigen::VectorXd::Random(3));
    CHECK(out[0] == doctest::Approx(std::tanh(0.3)));
    CHECK(out[1] == doctest::Approx(std::tanh(-0.7)));

    Mlp lin({3, 2}, Activation::identity, Activation::identity, 2);
    const Eigen::VectorXd x = testing::vec({0.5, -1.0, 2.0});
    const Eigen::VectorXd expect = lin.weight(0) * x + lin.bias(0);
    CHECK((lin.forward(x) - expect).norm() < 1e-14);

    const Eigen::VectorXd d = testing::vec({1.5, -0.25});
    CHECK((lin.input_gradient(x, d) - lin.weight(0).transpose() * d).norm() < 1e-14);
    CHECK(lin.input_gradient(x, Eigen::VectorXd::Zero(2)).isZero());
}

TEST_CASE("batched forward matches per-sample forward")
{
    const Mlp net({3, 6, 6, 2}, Activation::silu, Activation::identity, 4);
    const Eigen::MatrixXd X = Eigen::MatrixXd::Random(3, 9);
    const Eigen::MatrixXd Y = net.forward_batch(X);
    for (Eigen::Index k = 0; k < X.cols(); ++k)
        CHECK((Y.col(k) - net.forward(X.col(k))).norm() < 1e-13);
}

TEST_CASE("large finite inputs give finite outputs")
{
    for (auto h : kHidden) {
        const Mlp net({2, 8, 1}, h, Activation::identity, 3);
        CHECK(net.forward(testing::vec({1e6, -1e6})).allFinite());
    }
}

TEST_CASE("parameter and input gradients match central differences")
{
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> width(1, 6);
    int trials = 0;
    for (int t = 0; t < 120; ++t) {
        const Activation h = kHidden[t % 3];
        const Activation o = kOutput[(t / 3) % 2];
        const std::vector<int> sizes{width(rng), width(rng), width(rng), width(rng)};
        Mlp net(sizes, h, o, rng());
        const Eigen::Index batch = 3;
        const Eigen::MatrixXd X = Eigen::MatrixXd::Random(sizes.front(), batch);
        const Eigen::MatrixXd C = Eigen::MatrixXd::Random(sizes.back(), batch);

        Mlp::Tape tape;
        net.forward_batch(X, tape);
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.num_parameters());
        const Eigen::MatrixXd in_cot = net.backward(tape, C, &grad);

        auto loss = [&](const Mlp& m, const Eigen::MatrixXd& inputs) {
            return (m.forward_batch(inputs).array() * C.array()).sum();
        };
        const double h_step = 1e-5;
        Eigen::VectorXd fd(net.num_parameters());
        for (Eigen::Index p = 0; p < net.num_parameters(); ++p) {
            Mlp plus = net, minus = net;
            plus.parameters()[p] += h_step;
            minus.parameters()[p] -= h_step;
            fd[p] = (loss(plus, X) - loss(minus, X)) / (2 * h_step);
        }
        CHECK(vector_relative_error(grad, fd) < 1e-4);

        Eigen::MatrixXd fd_in(X.rows(), X.cols());
        for (Eigen::Index r = 0; r < X.rows(); ++r)
            for (Eigen::Index c = 0; c < X.cols(); ++c) {
                Eigen::MatrixXd a = X, b = X;
                a(r, c) += h_step;
                b(r, c) -= h_step;
                fd_in(r, c) = (loss(net, a) - loss(net, b)) / (2 * h_step);
            }
        CHECK(vector_relative_error(in_cot.reshaped(), fd_in.reshaped()) < 1e-4);

        const Eigen::VectorXd g1 = net.input_gradient(X.col(0), C.col(0));
        CHECK(vector_relative_error(g1, fd_in.col(0)) < 1e-4);
        ++trials;
    }
    CHECK(trials >= 100);
}

TEST_CASE("training memorizes, fits constants and beats a linear fit")
{
    nn::TrainConfig cfg;
    cfg.epochs = 200;
    cfg.patience = 0;
    cfg.learning_rate = 1e-2;

    SUBCASE("single pair")
    {
        Mlp net({2, 16, 1}, Activation::silu, Activation::identity, 1);
        const Eigen::MatrixXd X = testing::vec({0.3, 0.6});
        const Eigen::MatrixXd Y = testing::vec({0.8});
        auto result = nn::train_regression(net, X, Y, cfg);
        CHECK(result.loss_history.back() < 1e-6);
        CHECK(nn::mean_squared_error(result.net, X, Y) < 1e-6);
    }
    SUBCASE("constant targets")
    {
        Mlp net({2, 16, 2}, Activation::silu, Activation::identity, 2);
        const Eigen::MatrixXd X = Eigen::MatrixXd::Random(2, 30);
        Eigen::MatrixXd Y(2, 30);
        Y.row(0).setConstant(0.4);
        Y.row(1).setConstant(-1.2);
        cfg.epochs = 12000;
        cfg.learning_rate = 3e-2;
        auto result = nn::train_regression(net, X, Y, cfg);
        CHECK((result.net.forward_batch(X) - Y).cwiseAbs().maxCoeff() < 1e-3);
    }
    SUBCASE("y = 2x + 1")
    {
        Mlp net({1, 16, 1}, Activation::silu, Activation::identity, 3);
        Eigen::MatrixXd X(1, 50), Y(1, 50);
        for (int k = 0; k < 50; ++k) {
            X(0, k) = k / 49.0;
            Y(0, k) = 2.0 * X(0, k) + 1.0;
        }
        cfg.epochs = 1500;
        cfg.batch_size = 50;
        auto result = nn::train_regression(net, X, Y, cfg);
        CHECK((result.net.forward_batch(X) - Y).cwiseAbs().maxCoeff() < 0.05);
    }
}

TEST_CASE("training rejects non-finite data")
{
    Mlp net({1, 4, 1}, Activation::silu, Activation::identity, 1);
    Eigen::MatrixXd X(1, 2);
    X << 0.0, std::nan("");
    const Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(1, 2);
    CHECK_THROWS_AS(nn::train_regression(net, X, Y, {}), TrainingError);
}

TEST_CASE("Adam descends a quadratic bowl")
{
    Eigen::VectorXd p = testing::vec({3.0, -2.0});
    nn::Adam opt(2, 0.05);
    for (int k = 0; k < 2000; ++k)
        opt.step(p, 2.0 * p);
    CHECK(p.norm() < 1e-3);
}

TEST_CASE("save and load round-trip bit-exactly")
{
    const Mlp net({3, 5, 2}, Activation::softplus, Activation::tanh, 9);
    std::stringstream s;
    net.save(s);
    const Mlp back = Mlp::load(s);
    CHECK(back.layer_sizes() == net.layer_sizes());
    CHECK(back.hidden_activation() == net.hidden_activation());
    CHECK(back.output_activation() == net.output_activation());
    CHECK(back.parameters() == net.parameters());
    std::stringstream bad("not a network");
    CHECK_THROWS(Mlp::load(bad));
}

TEST_CASE("activation names round-trip")
{
    for (auto a : {Activation::identity, Activation::tanh, Activation::softplus, Activation::silu})
        CHECK(nn::activation_from_string(nn::to_string(a)) == a);
    CHECK_THROWS_AS(nn::activation_from_string("relu6"), ContractError);
}
