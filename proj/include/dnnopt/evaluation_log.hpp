#pragma once

#include "dnnopt/evaluators.hpp"
#include "dnnopt/problem.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dnnopt {

struct EvaluationRecord {
    std::size_t index = 0;     // 1-based, contiguous per run
    Eigen::VectorXd unit;      // unit-cube coordinates as requested
    Design design;             // raw design sent to the evaluator
    SpecVector spec;           // canonical; NaN entries when failed
    std::string error;         // non-empty when the evaluation failed
    double wall_seconds = 0.0;
    double fom = 0.0;
    double best_fom = 0.0;
    bool feasible = false;
    bool best_feasible = false;
    double best_objective = 0.0;

    bool failed() const { return !error.empty(); }
};

using RecordSink = std::function<void(const EvaluationRecord&)>;

struct RunResult {
    std::string algorithm;
    std::uint64_t seed = 0;
    Design best_design;
    SpecVector best_spec;
    double best_fom = 0.0;
    bool feasible = false;
    std::size_t evaluations = 0;
    std::optional<std::size_t> first_feasible; // 1-based evaluation index
    double objective_weight = 1.0;
    double wall_seconds = 0.0;
    std::vector<EvaluationRecord> records;

    std::vector<double> fom_history() const;
    std::vector<double> best_fom_history() const;
};

/// Owns the evaluation side of a run: budget accounting, the duplicate cache,
/// canonicalization and the FoM bookkeeping shared by every optimizer.
///
/// Records evaluated before the objective weight is resolved have their FoM filled in
/// (and are passed to the sink) once `resolve_objective_weight` is called.
class EvaluationLog {
public:
    EvaluationLog(ProblemDefinition problem, Evaluator& evaluator, std::size_t budget, RecordSink sink = {});

    const ProblemDefinition& problem() const { return problem_; }
    std::size_t budget() const { return budget_; }
    std::size_t used() const { return records_.size(); }
    std::size_t remaining() const { return budget_ - records_.size(); }
    std::size_t evaluator_calls() const { return calls_; }
    std::size_t cache_hits() const { return cache_hits_; }

    /// Evaluates unit designs in order. Cached duplicates are answered without consuming
    /// budget or producing a record. Throws ContractError when the budget would be exceeded.
    std::vector<SpecVector> evaluate(const std::vector<Eigen::VectorXd>& units);
    SpecVector evaluate(const Eigen::VectorXd& unit);

    /// Freezes w_0: the problem override if set, else the auto rule over `objectives`.
    void resolve_objective_weight(std::span<const double> objectives);
    /// Same, over every finite objective recorded so far.
    void resolve_objective_weight();
    bool weight_resolved() const { return weight_resolved_; }
    const std::vector<SpecDefinition>& specs() const { return specs_; }

    /// FoM under the current failure value (worst objective over all records).
    double fom(const SpecVector& spec) const;
    std::vector<double> current_foms() const;

    const std::vector<EvaluationRecord>& records() const { return records_; }
    bool any_feasible() const { return any_feasible_; }

    RunResult result(std::string algorithm, std::uint64_t seed) const;

private:
    void finalize_record(EvaluationRecord& rec);
    static std::vector<long long> cache_key(const Eigen::VectorXd& unit);

    ProblemDefinition problem_;
    Evaluator& evaluator_;
    std::size_t budget_;
    RecordSink sink_;
    std::vector<SpecDefinition> specs_;
    bool weight_resolved_ = false;
    std::vector<EvaluationRecord> records_;
    std::map<std::vector<long long>, SpecVector> cache_;
    std::size_t calls_ = 0;
    std::size_t cache_hits_ = 0;
    double worst_objective_ = -std::numeric_limits<double>::infinity();
    std::size_t best_ = 0;
    std::optional<std::size_t> first_feasible_;
    std::size_t finalized_ = 0;
    bool any_feasible_ = false;
};

} // namespace dnnopt
