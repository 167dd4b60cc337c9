#include "helpers.hpp"

#include "dnnopt/actor.hpp"
#include "dnnopt/errors.hpp"

#include <doctest.h>

#include <random>

using namespace dnnopt;
using testing::vec;

namespace {

CriticModel constant_critic(int d, int specs, double value, std::uint64_t seed)
{
    CriticModel c;
    c.net = nn::Mlp({2 * d, 8, specs}, nn::Activation::silu, nn::Activation::identity, seed);
    c.net.weight(1).setZero();
    c.net.bias(1).setConstant(value);
    c.target_mean = Eigen::VectorXd::Zero(specs);
    c.target_scale = Eigen::VectorXd::Ones(specs);
    return c;
}

CriticModel random_critic(int d, int specs, std::uint64_t seed)
{
    CriticModel c;
    c.net = nn::Mlp({2 * d, 16, 16, specs}, nn::Activation::tanh, nn::Activation::identity, seed);
    c.target_mean = Eigen::VectorXd::Zero(specs);
    c.target_scale = Eigen::VectorXd::Ones(specs);
    return c;
}

Eigen::MatrixXd random_elites(int d, int n, std::mt19937_64& rng, double lo = 0.3, double hi = 0.6)
{
    std::uniform_real_distribution<double> u(lo, hi);
    Eigen::MatrixXd e(d, n);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < d; ++j)
            e(j, k) = u(rng);
    return e;
}

std::vector<SpecDefinition> objective_only()
{
    return {testing::objective()};
}

} // namespace

TEST_CASE("restricted bounds are the componentwise elite extrema")
{
    Eigen::MatrixXd one(2, 1);
    one << 0.3, 0.8;
    const auto rb1 = restricted_bounds(one);
    CHECK(rb1.lower == one.col(0));
    CHECK(rb1.upper == one.col(0));

    Eigen::MatrixXd two(2, 2);
    two << 0.2, 0.4, 0.9, 0.1;
    const auto rb = restricted_bounds(two);
    CHECK(rb.lower == vec({0.2, 0.1}));
    CHECK(rb.upper == vec({0.4, 0.9}));

    std::mt19937_64 rng(1);
    for (int t = 0; t < 50; ++t) {
        const Eigen::MatrixXd e = random_elites(4, 7, rng, 0.0, 1.0);
        const auto r = restricted_bounds(e);
        CHECK((r.lower.array() <= r.upper.array()).all());
        for (Eigen::Index k = 0; k < e.cols(); ++k)
            CHECK(r.contains(e.col(k)));
    }
    CHECK_THROWS_AS(restricted_bounds(Eigen::MatrixXd(2, 0)), ContractError);
}

TEST_CASE("boundary violation is zero exactly on the box")
{
    const RestrictedBounds rb{vec({0.2}), vec({0.4})};
    CHECK(boundary_violation(vec({0.3}), vec({0.05}), rb)[0] == 0.0);
    CHECK(boundary_violation(vec({0.3}), vec({-0.2}), rb)[0] == doctest::Approx(0.1));
    CHECK(boundary_violation(vec({0.3}), vec({0.25}), rb)[0] == doctest::Approx(0.15));
    CHECK(boundary_violation(vec({0.2}), vec({0.0}), rb)[0] == 0.0);
    CHECK(boundary_violation(vec({0.4}), vec({0.0}), rb)[0] == 0.0);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-0.5, 1.5);
    const RestrictedBounds box{vec({0.1, 0.3, 0.5}), vec({0.6, 0.3, 0.9})};
    for (int t = 0; t < 2000; ++t) {
        const Eigen::VectorXd x = vec({u(rng), u(rng), u(rng)});
        const Eigen::VectorXd v = boundary_violation(x, Eigen::VectorXd::Zero(3), box);
        CHECK((v.array() >= 0.0).all());
        CHECK((v.isZero(0.0)) == box.contains(x));
    }
}

TEST_CASE("actor outputs stay within the delta limits")
{
    ActorConfig cfg;
    const auto actor = make_actor(3, cfg, 4);
    const RestrictedBounds rb{vec({0.1, 0.5, 0.5}), vec({0.3, 0.5, 0.9})};
    const Eigen::VectorXd limits = delta_limits(rb, cfg);
    CHECK(limits.isApprox(vec({0.2, cfg.min_width, 0.4}), 1e-14));
    std::mt19937_64 rng(2);
    const Eigen::MatrixXd x = random_elites(3, 20, rng, 0.0, 1.0);
    const Eigen::MatrixXd dx = actor_deltas(actor, x, rb, cfg);
    for (Eigen::Index k = 0; k < dx.cols(); ++k)
        CHECK((dx.col(k).cwiseAbs().array() <= limits.array()).all());
}

TEST_CASE("actor loss gradient matches central differences")
{
    std::mt19937_64 rng(77);
    ActorConfig cfg;
    cfg.hidden = {6};
    cfg.lambda = 3.0;
    cfg.delta_scale = 2.0;
    for (int t = 0; t < 20; ++t) {
        const int d = 2 + t % 3;
        const auto critic = random_critic(d, 1, rng());
        const auto actor = make_actor(d, cfg, rng());
        const Eigen::MatrixXd batch = random_elites(d, 4, rng);
        const auto rb = restricted_bounds(batch);
        const auto specs = objective_only();
        const ActorLoss loss = actor_loss(actor, critic, batch, rb, specs, cfg);

        Eigen::VectorXd fd(actor.num_parameters());
        const double h = 1e-6;
        for (Eigen::Index p = 0; p < actor.num_parameters(); ++p) {
            nn::Mlp plus = actor, minus = actor;
            plus.parameters()[p] += h;
            minus.parameters()[p] -= h;
            fd[p] = (actor_loss(plus, critic, batch, rb, specs, cfg).value -
                     actor_loss(minus, critic, batch, rb, specs, cfg).value) /
                    (2 * h);
        }
        CHECK((loss.param_grad - fd).norm() / std::max(fd.norm(), 1e-12) < 1e-4);
    }
}

TEST_CASE("actor training never modifies the critic")
{
    std::mt19937_64 rng(8);
    const auto critic = random_critic(3, 2, 5);
    const Eigen::VectorXd before = critic.net.parameters();
    ActorConfig cfg;
    cfg.train.epochs = 20;
    const Eigen::MatrixXd elites = random_elites(3, 6, rng);
    const std::vector<SpecDefinition> specs{testing::objective(), testing::le("c", 0.0)};
    train_actor(make_actor(3, cfg, 1), critic, elites, restricted_bounds(elites), specs, cfg);
    CHECK(critic.net.parameters() == before);
}

TEST_CASE("with a constant critic the penalty drives proposals into the box")
{
    std::mt19937_64 rng(12);
    ActorConfig cfg;
    cfg.noise_sigma_frac = 0.0;
    cfg.delta_scale = 3.0; // initial proposals can leave the box
    const Eigen::MatrixXd elites = random_elites(4, 10, rng);
    const auto rb = restricted_bounds(elites);
    const auto critic = constant_critic(4, 1, 0.7, 3);
    const auto trained = train_actor(make_actor(4, cfg, 9), critic, elites, rb, objective_only(), cfg);
    const Eigen::MatrixXd moved = elites + actor_deltas(trained.actor, elites, rb, cfg);
    double total = 0.0;
    for (Eigen::Index k = 0; k < moved.cols(); ++k)
        total += boundary_violation(moved.col(k), Eigen::VectorXd::Zero(4), rb).sum();
    CHECK(total / static_cast<double>(moved.size()) < 1e-3);
}

TEST_CASE("a large penalty keeps trained proposals near the restricted box")
{
    ActorConfig cfg;
    cfg.lambda = 1e6;
    cfg.noise_sigma_frac = 0.0;
    std::size_t inside = 0, total = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(seed);
        const Eigen::MatrixXd elites = random_elites(5, 10, rng, 0.0, 1.0);
        const auto rb = restricted_bounds(elites);
        const auto critic = random_critic(5, 3, seed + 100);
        const std::vector<SpecDefinition> specs{testing::objective(), testing::le("a", 0.0),
                                                testing::le("b", 0.0)};
        cfg.train.seed = seed;
        const auto trained = train_actor(make_actor(5, cfg, seed), critic, elites, rb, specs, cfg);
        const Eigen::MatrixXd moved = elites + actor_deltas(trained.actor, elites, rb, cfg);
        for (Eigen::Index k = 0; k < moved.cols(); ++k, ++total)
            inside += rb.contains(moved.col(k), 1e-2);
    }
    CHECK(static_cast<double>(inside) >= 0.95 * static_cast<double>(total));
}

TEST_CASE("trained actor moves elites toward the critic's minimizer")
{
    const int d = 3;
    const Eigen::VectorXd target = vec({0.45, 0.5, 0.4});
    std::mt19937_64 rng(21);
    const Eigen::MatrixXd pop = random_elites(d, 15, rng, 0.3, 0.6);
    Eigen::MatrixXd F(1, pop.cols());
    for (Eigen::Index k = 0; k < pop.cols(); ++k)
        F(0, k) = (pop.col(k) - target).squaredNorm();
    CriticConfig ccfg;
    ccfg.train.max_steps = 0;
    ccfg.train.epochs = 400;
    const auto critic = train_critic(generate_pseudo_samples(pop, F, 1000, 0), ccfg);

    const Eigen::MatrixXd elites = pop.leftCols(10);
    const auto rb = restricted_bounds(elites);
    ActorConfig cfg;
    cfg.noise_sigma_frac = 0.0;
    cfg.train.epochs = 300;
    const auto trained = train_actor(make_actor(d, cfg, 2), critic, elites, rb, objective_only(), cfg);
    const Eigen::MatrixXd moved = elites + actor_deltas(trained.actor, elites, rb, cfg);
    double before = 0.0, after = 0.0;
    for (Eigen::Index k = 0; k < elites.cols(); ++k) {
        before += (elites.col(k) - target).norm();
        after += (moved.col(k) - target).norm();
    }
    CHECK(after < before);
    CHECK(trained.loss_history.back() < trained.loss_history.front());
}

TEST_CASE("candidate proposal")
{
    std::mt19937_64 rng(4);
    const Eigen::MatrixXd elites = random_elites(3, 6, rng, 0.0, 1.0);
    const auto rb = restricted_bounds(elites);

    ActorConfig quiet;
    quiet.noise_sigma_frac = 0.0;
    auto zero = make_actor(3, quiet, 1);
    zero.parameters().setZero();
    CHECK(propose_candidates(zero, elites, rb, quiet, 0) == elites);

    ActorConfig cfg;
    cfg.noise_sigma_frac = 5.0; // push many samples past [0, 1]
    const auto actor = make_actor(3, cfg, 2);
    const Eigen::MatrixXd c = propose_candidates(actor, elites, rb, cfg, 7);
    CHECK(c.cols() == elites.cols());
    CHECK((c.array() >= 0.0).all());
    CHECK((c.array() <= 1.0).all());
    CHECK(propose_candidates(actor, elites, rb, cfg, 7) == c);
}
