#include "dnnopt/external_process.hpp"

#include "dnnopt/errors.hpp"

#include <json.hpp>

#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstring>
#include <exception>
#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

namespace dnnopt {

namespace {

void ignore_sigpipe()
{
    static const bool done = [] {
        struct sigaction sa {};
        sa.sa_handler = SIG_IGN;
        sigemptyset(&sa.sa_mask);
        sigaction(SIGPIPE, &sa, nullptr);
        return true;
    }();
    (void)done;
}

void close_fd(int& fd)
{
    if (fd >= 0) {
        ::close(fd);
        fd = -1;
    }
}

} // namespace

ChildProcess::ChildProcess(std::vector<std::string> argv) : argv_(std::move(argv))
{
    if (argv_.empty())
        throw ConfigError("external evaluator command is empty");
    ignore_sigpipe();
}

ChildProcess::~ChildProcess()
{
    if (pid_ <= 0)
        return;
    // Closing stdin asks a well-behaved child to exit; give it a moment before killing.
    close_fd(to_child_);
    for (int i = 0; i < 50; ++i) {
        int status = 0;
        if (::waitpid(pid_, &status, WNOHANG) == pid_) {
            pid_ = -1;
            close_pipes();
            return;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    kill();
}

void ChildProcess::close_pipes()
{
    close_fd(to_child_);
    close_fd(from_child_);
    buffer_.clear();
}

void ChildProcess::start()
{
    if (running())
        return;
    int in_pipe[2], out_pipe[2], status_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0)
        throw ProtocolError(std::string("pipe: ") + std::strerror(errno));
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        throw ProtocolError(std::string("pipe: ") + std::strerror(errno));
    }
    if (::pipe2(status_pipe, O_CLOEXEC) != 0) {
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]})
            ::close(fd);
        throw ProtocolError(std::string("pipe: ") + std::strerror(errno));
    }

    std::vector<char*> args;
    for (auto& a : argv_)
        args.push_back(a.data());
    args.push_back(nullptr);

    const pid_t pid = ::fork();
    if (pid < 0) {
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1], status_pipe[0], status_pipe[1]})
            ::close(fd);
        throw ProtocolError(std::string("fork: ") + std::strerror(errno));
    }
    if (pid == 0) {
        ::dup2(in_pipe[0], STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::execvp(args[0], args.data());
        const int err = errno;
        [[maybe_unused]] auto n = ::write(status_pipe[1], &err, sizeof err);
        ::_exit(127);
    }

    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    ::close(status_pipe[1]);
    int err = 0;
    ssize_t got;
    do
        got = ::read(status_pipe[0], &err, sizeof err);
    while (got < 0 && errno == EINTR);
    ::close(status_pipe[0]);
    if (got == static_cast<ssize_t>(sizeof err)) {
        ::close(in_pipe[1]);
        ::close(out_pipe[0]);
        ::waitpid(pid, nullptr, 0);
        throw ProtocolError("cannot execute '" + argv_[0] + "': " + std::strerror(err));
    }
    pid_ = pid;
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    buffer_.clear();
}

void ChildProcess::kill()
{
    if (pid_ > 0) {
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, nullptr, 0);
        pid_ = -1;
    }
    close_pipes();
}

bool ChildProcess::write_line(const std::string& line)
{
    if (!running())
        return false;
    std::size_t off = 0;
    while (off < line.size()) {
        const ssize_t n = ::write(to_child_, line.data() + off, line.size() - off);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            return false;
        }
        off += static_cast<std::size_t>(n);
    }
    return true;
}

ChildProcess::ReadStatus ChildProcess::read_line(std::string& line, std::chrono::steady_clock::time_point deadline)
{
    for (;;) {
        if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
            line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            return ReadStatus::line;
        }
        if (!running())
            return ReadStatus::closed;
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0)
            return ReadStatus::timeout;
        pollfd pfd{from_child_, POLLIN, 0};
        const int ready = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count() + 1, 1 << 30)));
        if (ready < 0) {
            if (errno == EINTR)
                continue;
            return ReadStatus::closed;
        }
        if (ready == 0)
            continue;
        char chunk[4096];
        const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
        if (n < 0 && errno == EINTR)
            continue;
        if (n <= 0)
            return ReadStatus::closed;
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

ExternalProcessEvaluator::ExternalProcessEvaluator(ProblemDefinition problem, ExternalProcessConfig cfg)
    : cfg_(std::move(cfg))
{
    problem.validate();
    if (cfg_.pool_size < 1)
        throw ConfigError("pool_size must be at least 1");
    if (!(cfg_.timeout_seconds > 0.0))
        throw ConfigError("timeout must be positive");
    desc_.problem = std::move(problem);
    desc_.concurrency_safe = cfg_.pool_size > 1;
    desc_.deterministic = false;
    for (int k = 0; k < cfg_.pool_size; ++k)
        pool_.push_back(std::make_unique<ChildProcess>(cfg_.command));
}

ExternalProcessEvaluator::~ExternalProcessEvaluator() = default;

std::string ExternalProcessEvaluator::encode_request(std::uint64_t id, const Design& design)
{
    nlohmann::json req;
    req["id"] = id;
    req["design"] = std::vector<double>(design.values.data(), design.values.data() + design.values.size());
    return req.dump() + "\n";
}

RawEvaluation ExternalProcessEvaluator::exchange(ChildProcess& child, std::uint64_t id, const Design& design)
{
    const std::string request = encode_request(id, design);
    const auto timeout = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(cfg_.timeout_seconds));

    for (int attempt = 0; attempt < 2; ++attempt) {
        if (!child.running()) {
            child.start();
            std::lock_guard lock(stats_mutex_);
            ++launches_;
        }
        if (!child.write_line(request)) {
            child.kill();
            return RawEvaluation::failure("evaluator process exited before accepting the request");
        }
        std::string reply;
        switch (child.read_line(reply, std::chrono::steady_clock::now() + timeout)) {
        case ChildProcess::ReadStatus::timeout:
            child.kill();
            return RawEvaluation::failure("evaluation timed out after " + std::to_string(cfg_.timeout_seconds) + " s");
        case ChildProcess::ReadStatus::closed:
            child.kill();
            return RawEvaluation::failure("evaluator process exited before replying");
        case ChildProcess::ReadStatus::line:
            break;
        }

        nlohmann::json msg = nlohmann::json::parse(reply, nullptr, false);
        if (msg.is_discarded() || !msg.is_object())
            return RawEvaluation::failure("malformed reply: " + reply.substr(0, 200));
        const auto id_it = msg.find("id");
        if (id_it == msg.end() || !id_it->is_number_unsigned())
            return RawEvaluation::failure("reply without a valid id: " + reply.substr(0, 200));
        if (id_it->get<std::uint64_t>() != id) {
            if (attempt == 0) {
                child.kill();
                continue;
            }
            child.kill();
            throw ProtocolError("evaluator replied with id " + std::to_string(id_it->get<std::uint64_t>()) +
                                " to request " + std::to_string(id) + " after a restart");
        }
        if (const auto err = msg.find("error"); err != msg.end())
            return RawEvaluation::failure(err->is_string() ? err->get<std::string>() : err->dump());
        const auto specs = msg.find("specs");
        if (specs == msg.end() || !specs->is_array())
            return RawEvaluation::failure("reply has neither specs nor error");
        RawEvaluation out;
        for (const auto& v : *specs) {
            if (!v.is_number())
                return RawEvaluation::failure("non-numeric spec value in reply");
            out.metrics.push_back(v.get<double>());
        }
        if (out.metrics.size() != desc_.problem.specs.size())
            return RawEvaluation::failure("reply carries " + std::to_string(out.metrics.size()) + " specs, expected " +
                                          std::to_string(desc_.problem.specs.size()));
        return out;
    }
    return RawEvaluation::failure("unreachable");
}

RawEvaluation ExternalProcessEvaluator::evaluate(const Design& design)
{
    if (design.values.size() != desc_.problem.dim())
        throw ContractError("design dimension does not match the external problem");
    RawEvaluation out = exchange(*pool_.front(), next_id_++, design);
    std::lock_guard lock(stats_mutex_);
    ++round_trips_;
    return out;
}

std::vector<RawEvaluation> ExternalProcessEvaluator::evaluate_batch(std::span<const Design> designs)
{
    if (pool_.size() == 1 || designs.size() <= 1)
        return Evaluator::evaluate_batch(designs);

    const std::uint64_t base = next_id_;
    next_id_ += designs.size();
    std::vector<RawEvaluation> results(designs.size());
    std::vector<std::exception_ptr> errors(pool_.size());
    std::vector<std::thread> workers;
    // Static round-robin assignment: design k always goes to child k mod pool_size.
    for (std::size_t w = 0; w < pool_.size(); ++w) {
        workers.emplace_back([&, w] {
            try {
                for (std::size_t k = w; k < designs.size(); k += pool_.size())
                    results[k] = exchange(*pool_[w], base + k, designs[k]);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : workers)
        t.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    std::lock_guard lock(stats_mutex_);
    round_trips_ += designs.size();
    return results;
}

std::uint64_t ExternalProcessEvaluator::round_trips() const
{
    std::lock_guard lock(stats_mutex_);
    return round_trips_;
}

std::uint64_t ExternalProcessEvaluator::launches() const
{
    std::lock_guard lock(stats_mutex_);
    return launches_;
}

} // namespace dnnopt
