#include "helpers.hpp"

#include "dnnopt/errors.hpp"
#include "dnnopt/external_process.hpp"
#include "dnnopt/optimizer.hpp"

#include <doctest.h>
#include <json.hpp>

#include <chrono>
#include <random>

using namespace dnnopt;
using testing::vec;

namespace {

ProblemDefinition three_by_three()
{
    return make_problem(Eigen::VectorXd::Constant(3, -10.0), Eigen::VectorXd::Constant(3, 10.0),
                        {testing::objective(), testing::le("a", 1.0), testing::ge("b", -1.0)});
}

ExternalProcessEvaluator echo(std::vector<std::string> flags, double timeout = 10.0, int pool = 1)
{
    ExternalProcessConfig cfg;
    cfg.command = {ECHO_CHILD_PATH, "--specs", "3"};
    cfg.command.insert(cfg.command.end(), flags.begin(), flags.end());
    cfg.timeout_seconds = timeout;
    cfg.pool_size = pool;
    return ExternalProcessEvaluator(three_by_three(), cfg);
}

} // namespace

TEST_CASE("request encoding")
{
    const auto line = ExternalProcessEvaluator::encode_request(7, Design{vec({0.1, -2.0, 3e-9})});
    CHECK(line.back() == '\n');
    const auto msg = nlohmann::json::parse(line);
    CHECK(msg.at("id").get<int>() == 7);
    CHECK(msg.at("design").get<std::vector<double>>() == std::vector<double>{0.1, -2.0, 3e-9});
}

TEST_CASE("round trip reproduces the design")
{
    auto ev = echo({});
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int k = 0; k < 50; ++k) {
        const Eigen::VectorXd x = vec({u(rng), u(rng) * 1e-7, u(rng) * 1e5});
        const auto r = ev.evaluate(Design{x});
        REQUIRE(r.ok());
        for (int i = 0; i < 3; ++i)
            CHECK(std::abs(r.metrics[static_cast<std::size_t>(i)] - x[i]) <= 1e-12 * std::max(1.0, std::abs(x[i])));
    }
    CHECK(ev.round_trips() == 50);
    CHECK(ev.launches() == 1);
}

TEST_CASE("a crashed child fails that evaluation and is restarted")
{
    auto ev = echo({"--crash-on-id", "2"});
    CHECK(ev.evaluate(Design{vec({1, 2, 3})}).ok());
    const auto crashed = ev.evaluate(Design{vec({4, 5, 6})});
    CHECK_FALSE(crashed.ok());
    const auto next = ev.evaluate(Design{vec({7, 8, 9})});
    REQUIRE(next.ok());
    CHECK(next.metrics == std::vector<double>{7, 8, 9});
    CHECK(ev.launches() == 2);
    CHECK(ev.round_trips() == 3);
}

TEST_CASE("a malformed line fails only that evaluation")
{
    auto ev = echo({"--malformed-on-id", "1"});
    const auto bad = ev.evaluate(Design{vec({1, 2, 3})});
    CHECK_FALSE(bad.ok());
    CHECK(bad.error.find("malformed") != std::string::npos);
    CHECK(ev.evaluate(Design{vec({1, 2, 3})}).ok());
    CHECK(ev.launches() == 1);
}

TEST_CASE("a hung child times out and is replaced")
{
    auto ev = echo({"--hang-on-id", "1"}, 0.3);
    const auto start = std::chrono::steady_clock::now();
    const auto hung = ev.evaluate(Design{vec({1, 2, 3})});
    const double waited = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK_FALSE(hung.ok());
    CHECK(hung.error.find("timed out") != std::string::npos);
    CHECK(waited >= 0.3);
    CHECK(waited < 5.0);
    CHECK(ev.evaluate(Design{vec({1, 2, 3})}).ok());
    CHECK(ev.launches() == 2);
}

TEST_CASE("error replies and wrong spec counts are failures")
{
    auto ev = echo({"--error-on-id", "1"});
    const auto r = ev.evaluate(Design{vec({1, 2, 3})});
    CHECK_FALSE(r.ok());
    CHECK(r.error == "simulator did not converge");

    ExternalProcessConfig cfg;
    cfg.command = {ECHO_CHILD_PATH, "--specs", "2"};
    ExternalProcessEvaluator short_reply(three_by_three(), cfg);
    const auto s = short_reply.evaluate(Design{vec({1, 2, 3})});
    CHECK_FALSE(s.ok());
    CHECK(s.error.find("expected 3") != std::string::npos);
}

TEST_CASE("an id mismatch restarts the child and retries once")
{
    const auto dir = testing::scratch_dir("wrong_id");
    const auto state = (dir / "seen").string();
    auto once = echo({"--wrong-id-once-on", "2", "--state-file", state});
    CHECK(once.evaluate(Design{vec({1, 2, 3})}).ok());
    const auto retried = once.evaluate(Design{vec({4, 5, 6})});
    REQUIRE(retried.ok());
    CHECK(retried.metrics == std::vector<double>{4, 5, 6});
    CHECK(once.launches() == 2);

    auto always = echo({"--wrong-id-on", "1"});
    CHECK_THROWS_AS(always.evaluate(Design{vec({1, 2, 3})}), ProtocolError);
}

TEST_CASE("a missing executable is a protocol error")
{
    ExternalProcessConfig cfg;
    cfg.command = {"/nonexistent/simulator"};
    ExternalProcessEvaluator ev(three_by_three(), cfg);
    CHECK_THROWS_AS(ev.evaluate(Design{vec({1, 2, 3})}), ProtocolError);
}

TEST_CASE("a pool evaluates batches in order")
{
    auto ev = echo({}, 10.0, 3);
    CHECK(ev.descriptor().concurrency_safe);
    std::vector<Design> batch;
    for (int k = 0; k < 10; ++k)
        batch.push_back(Design{vec({double(k), double(-k), 0.5 * k})});
    const auto out = ev.evaluate_batch(batch);
    REQUIRE(out.size() == 10);
    for (int k = 0; k < 10; ++k) {
        REQUIRE(out[static_cast<std::size_t>(k)].ok());
        CHECK(out[static_cast<std::size_t>(k)].metrics[0] == k);
    }
    CHECK(ev.round_trips() == 10);
    CHECK(ev.launches() == 3);
}

TEST_CASE("an optimizer run over the protocol counts every round trip")
{
    auto ev = echo({"--crash-on-id", "5"});
    DnnOptConfig cfg;
    cfg.n_init = 6;
    cfg.critic.hidden = {8};
    cfg.critic.train.max_steps = 50;
    cfg.actor.hidden = {8};
    cfg.actor.train.epochs = 10;
    RunSettings settings;
    settings.budget = 10;
    settings.termination = Termination::optimize_to_budget;
    const auto r = run_dnnopt(ev.descriptor().problem, ev, cfg, settings);
    CHECK(r.evaluations == 10);
    CHECK(ev.round_trips() == 10);
    CHECK(r.records[4].failed());
}
