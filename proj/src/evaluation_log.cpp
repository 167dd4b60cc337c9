#include "dnnopt/evaluation_log.hpp"

#include "dnnopt/errors.hpp"

#include <chrono>
#include <cmath>

namespace dnnopt {

std::vector<double> RunResult::fom_history() const
{
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records)
        out.push_back(r.fom);
    return out;
}

std::vector<double> RunResult::best_fom_history() const
{
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records)
        out.push_back(r.best_fom);
    return out;
}

EvaluationLog::EvaluationLog(ProblemDefinition problem, Evaluator& evaluator, std::size_t budget, RecordSink sink)
    : problem_(std::move(problem)), evaluator_(evaluator), budget_(budget), sink_(std::move(sink)),
      specs_(problem_.specs)
{
    problem_.validate();
    const auto& served = evaluator_.descriptor().problem;
    if (served.dim() != problem_.dim() || served.num_specs() != problem_.num_specs())
        throw ContractError("evaluator serves a problem of different shape (d or m) than the run");
}

std::vector<long long> EvaluationLog::cache_key(const Eigen::VectorXd& unit)
{
    std::vector<long long> key(static_cast<std::size_t>(unit.size()));
    for (Eigen::Index j = 0; j < unit.size(); ++j)
        key[static_cast<std::size_t>(j)] = std::llround(unit[j] * 1e12);
    return key;
}

std::vector<SpecVector> EvaluationLog::evaluate(const std::vector<Eigen::VectorXd>& units)
{
    std::vector<SpecVector> out(units.size());
    std::vector<std::size_t> pending;
    std::vector<Design> designs;
    std::map<std::vector<long long>, std::size_t> batch_keys;
    std::vector<std::pair<std::size_t, std::size_t>> batch_dupes;

    for (std::size_t k = 0; k < units.size(); ++k) {
        if (units[k].size() != problem_.dim())
            throw ContractError("unit design has the wrong dimension");
        auto key = cache_key(units[k]);
        if (auto it = cache_.find(key); it != cache_.end()) {
            out[k] = it->second;
            ++cache_hits_;
            continue;
        }
        if (auto it = batch_keys.find(key); it != batch_keys.end()) {
            batch_dupes.emplace_back(k, it->second);
            ++cache_hits_;
            continue;
        }
        batch_keys.emplace(std::move(key), k);
        pending.push_back(k);
        designs.push_back(prepare_for_evaluation(denormalize(units[k].cwiseMax(0.0).cwiseMin(1.0), problem_), problem_));
    }
    if (pending.size() > remaining())
        throw ContractError("evaluation budget exceeded: " + std::to_string(pending.size()) + " requested, " +
                            std::to_string(remaining()) + " remaining");
    if (pending.empty()) {
        for (auto [k, src] : batch_dupes)
            out[k] = out[src];
        return out;
    }

    const auto start = std::chrono::steady_clock::now();
    std::vector<RawEvaluation> raw;
    if (designs.size() > 1 && evaluator_.descriptor().concurrency_safe) {
        raw = evaluator_.evaluate_batch(designs);
    } else {
        for (const auto& design : designs)
            raw.push_back(evaluator_.evaluate(design));
    }
    if (raw.size() != designs.size())
        throw ContractError("evaluator returned the wrong number of results");
    calls_ += designs.size();
    const double per_eval =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / designs.size();

    const auto m1 = static_cast<Eigen::Index>(specs_.size());
    for (std::size_t p = 0; p < pending.size(); ++p) {
        const std::size_t k = pending[p];
        EvaluationRecord rec;
        rec.index = records_.size() + 1;
        rec.unit = units[k];
        rec.design = designs[p];
        rec.wall_seconds = per_eval;
        rec.error = raw[p].error;
        if (rec.error.empty() && raw[p].metrics.size() != specs_.size())
            rec.error = "expected " + std::to_string(specs_.size()) + " metrics, got " +
                        std::to_string(raw[p].metrics.size());
        if (rec.error.empty()) {
            rec.spec = canonicalize(raw[p].metrics, specs_);
            if (!rec.spec.all_finite())
                rec.error = "non-finite metric";
        }
        if (!rec.error.empty())
            rec.spec = SpecVector{Eigen::VectorXd::Constant(m1, std::numeric_limits<double>::quiet_NaN())};
        else
            worst_objective_ = std::max(worst_objective_, rec.spec.objective());
        rec.feasible = !rec.failed() && is_feasible(rec.spec);
        any_feasible_ = any_feasible_ || rec.feasible;

        cache_.emplace(cache_key(units[k]), rec.spec);
        out[k] = rec.spec;
        records_.push_back(std::move(rec));
        if (weight_resolved_)
            finalize_record(records_.back());
    }
    for (auto [k, src] : batch_dupes)
        out[k] = out[src];
    return out;
}

SpecVector EvaluationLog::evaluate(const Eigen::VectorXd& unit)
{
    return evaluate(std::vector<Eigen::VectorXd>{unit}).front();
}

void EvaluationLog::finalize_record(EvaluationRecord& rec)
{
    if (rec.failed()) {
        const double worst = std::isfinite(worst_objective_) ? worst_objective_ : 0.0;
        rec.fom = failure_fom(specs_, worst);
    } else {
        rec.fom = dnnopt::fom(rec.spec, specs_);
    }
    const bool first = finalized_ == 0;
    if (first || rec.fom < records_[best_].fom)
        best_ = rec.index - 1;
    if (rec.feasible && !first_feasible_)
        first_feasible_ = rec.index;
    const auto& best = records_[best_];
    rec.best_fom = best.index == rec.index ? rec.fom : best.fom;
    rec.best_feasible = best.feasible;
    rec.best_objective = best.spec.objective();
    ++finalized_;
    if (sink_)
        sink_(rec);
}

void EvaluationLog::resolve_objective_weight(std::span<const double> objectives)
{
    if (weight_resolved_)
        return;
    const double w0 = problem_.objective_weight ? *problem_.objective_weight : auto_objective_weight(objectives);
    specs_ = with_objective_weight(problem_.specs, w0);
    weight_resolved_ = true;
    for (auto& rec : records_)
        finalize_record(rec);
}

void EvaluationLog::resolve_objective_weight()
{
    std::vector<double> objectives;
    for (const auto& rec : records_)
        if (!rec.failed())
            objectives.push_back(rec.spec.objective());
    resolve_objective_weight(objectives);
}

double EvaluationLog::fom(const SpecVector& spec) const
{
    const double worst = std::isfinite(worst_objective_) ? worst_objective_ : 0.0;
    return dnnopt::fom(spec, specs_, failure_fom(specs_, worst));
}

std::vector<double> EvaluationLog::current_foms() const
{
    std::vector<double> out;
    out.reserve(records_.size());
    for (const auto& rec : records_)
        out.push_back(fom(rec.spec));
    return out;
}

RunResult EvaluationLog::result(std::string algorithm, std::uint64_t seed) const
{
    if (!weight_resolved_)
        throw ContractError("objective weight must be resolved before building a result");
    RunResult r;
    r.algorithm = std::move(algorithm);
    r.seed = seed;
    r.evaluations = records_.size();
    r.records = records_;
    r.objective_weight = specs_.front().weight;
    r.first_feasible = first_feasible_;
    if (!records_.empty()) {
        const auto& best = records_[best_];
        r.best_design = best.design;
        r.best_spec = best.spec;
        r.best_fom = best.fom;
        r.feasible = best.feasible;
    }
    for (const auto& rec : records_)
        r.wall_seconds += rec.wall_seconds;
    return r;
}

} // namespace dnnopt
