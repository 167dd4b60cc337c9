#include "helpers.hpp"

#include "dnnopt/errors.hpp"
#include "dnnopt/sensitivity.hpp"

#include <doctest.h>

#include <random>

using namespace dnnopt;
using testing::vec;

namespace {

// f(x) = A x + b with one objective and (rows - 1) le-constraints at bound 0.
testing::FunctionEvaluator affine(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& lb,
                                  const Eigen::VectorXd& ub)
{
    std::vector<SpecDefinition> specs{testing::objective()};
    for (Eigen::Index i = 1; i < A.rows(); ++i)
        specs.push_back(testing::le("c" + std::to_string(i), 0.0));
    return testing::FunctionEvaluator(make_problem(lb, ub, specs), [A, b](const Eigen::VectorXd& x) {
        const Eigen::VectorXd y = A * x + b;
        return std::vector<double>(y.data(), y.data() + y.size());
    });
}

} // namespace

TEST_CASE("affine evaluators give the exact Jacobian")
{
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        const int d = 1 + t % 6, rows = 1 + t % 4;
        Eigen::MatrixXd A(rows, d);
        Eigen::VectorXd b(rows), lb(d), ub(d), x(d);
        for (int i = 0; i < rows; ++i) {
            b[i] = u(rng);
            for (int j = 0; j < d; ++j)
                A(i, j) = 4 * u(rng);
        }
        for (int j = 0; j < d; ++j) {
            lb[j] = u(rng) - 2.0;
            ub[j] = lb[j] + 0.5 + std::abs(u(rng)) * 3.0;
            // every few trials the nominal sits on a bound, forcing a one-sided stencil
            x[j] = t % 5 == 0 ? (j % 2 ? lb[j] : ub[j]) : lb[j] + (ub[j] - lb[j]) * (0.5 + 0.4 * u(rng));
        }
        auto ev = affine(A, b, lb, ub);
        const auto r = compute_sensitivity(ev, ev.descriptor().problem, Design{x}, 0.05);
        REQUIRE(r.S.rows() == rows);
        REQUIRE(r.S.cols() == d);
        CHECK(r.evaluations == static_cast<std::size_t>(1 + 2 * d) - (t % 5 == 0 ? static_cast<std::size_t>(d) : 0));
        CHECK((r.S - A).cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, A.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("central difference of a quadratic")
{
    const auto prob = make_problem(vec({0.0}), vec({2.0}), {testing::objective()});
    testing::FunctionEvaluator ev(prob, [](const Eigen::VectorXd& x) { return std::vector<double>{x[0] * x[0]}; });
    const auto r = compute_sensitivity(ev, prob, Design{vec({1.0})}, 0.05); // h = 0.1
    CHECK(r.steps[0] == doctest::Approx(0.1));
    CHECK(r.S(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("inert variables have zero columns and are pruned")
{
    const auto prob = make_problem(vec({0.0, 0.0}), vec({1.0, 1.0}), {testing::objective()});
    testing::FunctionEvaluator ev(prob, [](const Eigen::VectorXd& x) { return std::vector<double>{3.0 * x[0]}; });
    const auto r = compute_sensitivity(ev, prob, Design{vec({0.5, 0.5})});
    CHECK(std::abs(r.S(0, 1)) < 1e-9);
    const std::vector<int> screened{0};
    CHECK(prune_variables(r, prob, screened, 0.01) == std::vector<int>{0});
    CHECK(prune_variables(r, prob, screened, 0.0) == std::vector<int>{0});
    // nothing clears a huge threshold, so the top scorer is kept
    CHECK(prune_variables(r, prob, screened, 1e9) == std::vector<int>{0});
}

TEST_CASE("thresh = 0 keeps every variable with a non-zero column")
{
    Eigen::MatrixXd A(2, 4);
    A << 1, -2, 0.5, 3, 0.1, 0, 0, 1;
    auto ev = affine(A, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(4), Eigen::VectorXd::Ones(4));
    const auto& prob = ev.descriptor().problem;
    const auto r = compute_sensitivity(ev, prob, Design{Eigen::VectorXd::Constant(4, 0.5)});
    const std::vector<int> both{0, 1};
    CHECK(prune_variables(r, prob, both, 0.0) == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("pruning is monotone in thresh")
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 40; ++t) {
        Eigen::MatrixXd A(3, 7);
        for (Eigen::Index i = 0; i < A.size(); ++i)
            A(i) = std::pow(10.0, 3 * u(rng)) * u(rng);
        auto ev = affine(A, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(7), Eigen::VectorXd::Ones(7));
        const auto& prob = ev.descriptor().problem;
        const auto r = compute_sensitivity(ev, prob, Design{Eigen::VectorXd::Constant(7, 0.5)});
        const std::vector<int> screened{0, 2};
        std::vector<int> previous = prune_variables(r, prob, screened, 0.0);
        for (double thresh : {1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0}) {
            const auto next = prune_variables(r, prob, screened, thresh);
            CHECK(!next.empty());
            CHECK(std::is_sorted(next.begin(), next.end()));
            CHECK(std::includes(previous.begin(), previous.end(), next.begin(), next.end()));
            previous = next;
        }
    }
}

TEST_CASE("separable benchmark: exactly the inert variables are pruned")
{
    SeparableEvaluator ev;
    const auto& prob = ev.descriptor().problem;
    // away from the targets so every active variable sits outside its dead zone
    const Design nominal{vec({0.9, 0.5, 0.9, 0.1, 0.5, 0.9, 0.5, 0.9})};
    const auto r = compute_sensitivity(ev, prob, nominal);
    for (int j : SeparableEvaluator::inert_variables())
        CHECK(r.S.col(j).cwiseAbs().maxCoeff() < 1e-9);
    const std::vector<int> screened{0, 1};
    CHECK(prune_variables(r, prob, screened, 0.01) == SeparableEvaluator::active_variables());
}

TEST_CASE("failed perturbations mark the column unknown and keep the variable")
{
    const auto prob = make_problem(vec({0.0, 0.0}), vec({1.0, 1.0}), {testing::objective()});
    testing::FunctionEvaluator ev(prob, [](const Eigen::VectorXd& x) -> std::vector<double> {
        if (x[1] > 0.52)
            return {};
        return {x[0]};
    });
    const auto r = compute_sensitivity(ev, prob, Design{vec({0.5, 0.5})});
    CHECK_FALSE(r.unknown[0]);
    CHECK(r.unknown[1]);
    const std::vector<int> screened{0};
    CHECK(std::isinf(normalized_sensitivity(r, prob, screened)[1]));
    CHECK(prune_variables(r, prob, screened, 0.01) == std::vector<int>{0, 1});
}

TEST_CASE("contract violations")
{
    const auto prob = make_problem(vec({0.0}), vec({1.0}), {testing::objective(), testing::le("c", 1.0)});
    testing::FunctionEvaluator ev(prob, [](const Eigen::VectorXd& x) { return std::vector<double>{x[0], x[0]}; });
    CHECK_THROWS_AS(compute_sensitivity(ev, prob, Design{vec({0.5})}, 0.5), ContractError);
    CHECK_THROWS_AS(compute_sensitivity(ev, prob, Design{vec({0.5})}, 0.0), ContractError);
    CHECK_THROWS_AS(compute_sensitivity(ev, prob, Design{vec({1.5})}), ContractError);
    const auto r = compute_sensitivity(ev, prob, Design{vec({0.5})});
    CHECK_THROWS_AS(prune_variables(r, prob, std::vector<int>{}, 0.1), ContractError);
    CHECK_THROWS_AS(prune_variables(r, prob, std::vector<int>{2}, 0.1), ContractError);
    CHECK(failing_specs(SpecVector{vec({1.0, 0.2, -0.1, 0.0, std::nan("")})}) == std::vector<int>{0, 1, 4});
}
