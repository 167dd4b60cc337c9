#pragma once

#include "dnnopt/evaluators.hpp"

#include <sys/types.h>

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace dnnopt {

/// A child process driven through line-oriented pipes on its stdin/stdout.
class ChildProcess {
public:
    enum class ReadStatus { line, timeout, closed };

    explicit ChildProcess(std::vector<std::string> argv);
    ~ChildProcess();
    ChildProcess(const ChildProcess&) = delete;
    ChildProcess& operator=(const ChildProcess&) = delete;

    /// Throws ProtocolError when the command cannot be executed.
    void start();
    /// SIGKILL and reap. No-op when not running.
    void kill();
    bool running() const { return pid_ > 0; }
    pid_t pid() const { return pid_; }

    /// False when the child no longer reads its stdin.
    bool write_line(const std::string& line);
    ReadStatus read_line(std::string& line, std::chrono::steady_clock::time_point deadline);

private:
    void close_pipes();

    std::vector<std::string> argv_;
    pid_t pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
};

struct ExternalProcessConfig {
    std::vector<std::string> command;
    double timeout_seconds = 300.0;
    int pool_size = 1;
};

/// Evaluator backed by external simulator processes. Per evaluation the harness writes
///   {"id": <int>, "design": [<d raw reals>]}
/// as one line and expects one line back:
///   {"id": <int>, "specs": [<m+1 raw reals>]}   or   {"id": <int>, "error": "<text>"}
///
/// Timeouts, child exits and malformed replies mark that evaluation failed; the child is
/// restarted for the next request when needed. A reply carrying the wrong id restarts the
/// child and retries once; a second mismatch throws ProtocolError.
class ExternalProcessEvaluator final : public Evaluator {
public:
    ExternalProcessEvaluator(ProblemDefinition problem, ExternalProcessConfig cfg);
    ~ExternalProcessEvaluator() override;

    const EvaluatorDescriptor& descriptor() const override { return desc_; }
    RawEvaluation evaluate(const Design& design) override;
    std::vector<RawEvaluation> evaluate_batch(std::span<const Design> designs) override;

    /// Completed evaluations (one request/reply exchange each, retries not counted).
    std::uint64_t round_trips() const;
    /// Child processes started so far, restarts included.
    std::uint64_t launches() const;

    static std::string encode_request(std::uint64_t id, const Design& design);

private:
    RawEvaluation exchange(ChildProcess& child, std::uint64_t id, const Design& design);

    EvaluatorDescriptor desc_;
    ExternalProcessConfig cfg_;
    std::vector<std::unique_ptr<ChildProcess>> pool_;
    std::uint64_t next_id_ = 1;
    mutable std::mutex stats_mutex_;
    std::uint64_t round_trips_ = 0;
    std::uint64_t launches_ = 0;
};

} // namespace dnnopt
