#include "dnnopt/commands.hpp"

#include "dnnopt/errors.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <functional>
#include <ostream>
#include <thread>

namespace dnnopt {

namespace {

struct SeedOutcome {
    std::optional<RunResult> result;
    std::vector<EvaluationRecord> partial; // records streamed before a failure
    std::exception_ptr error;
};

using RunBody = std::function<RunResult(Evaluator&, const RunSettings&, std::size_t)>;

// Runs body once per seed; never throws. Each seed owns a fresh evaluator.
std::vector<SeedOutcome> run_seeds(const RunConfig& cfg, Termination termination, const RunBody& body)
{
    std::vector<SeedOutcome> out(cfg.seeds.size());
    auto one = [&](std::size_t k) {
        auto& slot = out[k];
        try {
            auto evaluator = make_evaluator(cfg);
            RunSettings settings;
            settings.budget = cfg.budget;
            settings.seed = cfg.seeds[k];
            settings.termination = termination;
            settings.sink = [&slot](const EvaluationRecord& rec) { slot.partial.push_back(rec); };
            slot.result = body(*evaluator, settings, k);
        } catch (...) {
            slot.error = std::current_exception();
        }
    };
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(cfg.jobs, 1)), out.size());
    if (workers <= 1) {
        for (std::size_t k = 0; k < out.size(); ++k)
            one(k);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t k = next++; k < out.size(); k = next++)
                one(k);
        });
    for (auto& t : pool)
        t.join();
    return out;
}

RunBody algorithm_body(const RunConfig& cfg, const std::string& algorithm, const std::vector<double>& weights)
{
    return [&cfg, algorithm, weights](Evaluator& ev, const RunSettings& settings, std::size_t k) {
        ProblemDefinition problem = cfg.problem;
        if (!weights.empty())
            problem.objective_weight = weights.at(k);
        return run_algorithm(algorithm, cfg, problem, ev, settings);
    };
}

std::vector<RunResult> unwrap(std::vector<SeedOutcome>& outcomes)
{
    std::vector<RunResult> runs;
    for (auto& o : outcomes) {
        if (o.error)
            std::rethrow_exception(o.error);
        runs.push_back(std::move(*o.result));
    }
    return runs;
}

std::string join(const std::string& dir, const std::string& file)
{
    return (std::filesystem::path(dir) / file).string();
}

std::string run_stem(const std::string& algorithm, std::uint64_t seed)
{
    return algorithm + "_seed" + std::to_string(seed);
}

// Writes per-seed CSVs and the summary; failed seeds contribute their partial history.
// Returns true when every seed completed.
bool write_run_outputs(const RunConfig& cfg, const std::string& algorithm, const std::string& prefix,
                       const ProblemDefinition& problem, std::vector<SeedOutcome>& outcomes, std::ostream& out,
                       std::ostream& err)
{
    std::vector<RunResult> completed;
    bool ok = true;
    for (std::size_t k = 0; k < outcomes.size(); ++k) {
        auto& o = outcomes[k];
        const std::string stem = join(cfg.output_dir, prefix + run_stem(algorithm, cfg.seeds[k]));
        RunResult run;
        if (o.result) {
            run = *o.result;
        } else {
            ok = false;
            try {
                std::rethrow_exception(o.error);
            } catch (const std::exception& e) {
                err << "error: " << algorithm << " seed " << cfg.seeds[k] << ": " << e.what() << "\n";
            }
            run.algorithm = algorithm;
            run.seed = cfg.seeds[k];
            run.records = o.partial;
            run.evaluations = o.partial.size();
        }
        write_file_atomic(stem + "_history.csv", format_history_csv(history_rows(run)));
        write_file_atomic(stem + "_evaluations.csv", format_evaluations_csv(run, problem));
        if (o.result) {
            out << algorithm << " seed " << run.seed << ": " << run.evaluations << " evaluations, best FoM "
                << format_double(run.best_fom)
                << (run.first_feasible ? ", first feasible at " + std::to_string(*run.first_feasible)
                                       : std::string(", no feasible design"))
                << "\n";
            completed.push_back(std::move(run));
        }
    }
    auto summary = summarize(completed, cfg.problem_label, cfg.budget);
    summary.algorithm = algorithm;
    write_file_atomic(join(cfg.output_dir, prefix + algorithm + "_summary.json"), to_json(summary).dump(2) + "\n");
    out << algorithm << ": success rate " << summary.success_rate << "\n";
    return ok;
}

template <typename F>
int guarded(std::ostream& err, F&& body)
{
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_run_error;
    }
}

RunConfig load_with_overrides(const std::string& path, const CommandOverrides& o)
{
    RunConfig cfg = load_config(path);
    apply_overrides(cfg, o);
    return cfg;
}

Design nominal_design(const RunConfig& cfg)
{
    Design nominal;
    if (cfg.sensitivity.nominal)
        nominal.values = *cfg.sensitivity.nominal;
    else
        nominal.values = 0.5 * (cfg.problem.lb + cfg.problem.ub);
    return prepare_for_evaluation(nominal, cfg.problem);
}

} // namespace

void apply_overrides(RunConfig& cfg, const CommandOverrides& o)
{
    if (o.seed)
        cfg.seeds = {*o.seed};
    if (o.budget)
        cfg.budget = *o.budget;
    if (o.output_dir)
        cfg.output_dir = *o.output_dir;
    cfg.validate();
}

std::vector<RunResult> execute_runs(const RunConfig& cfg, const std::string& algorithm, Termination termination,
                                    const std::vector<double>& objective_weights)
{
    if (!objective_weights.empty() && objective_weights.size() != cfg.seeds.size())
        throw ContractError("one objective weight per seed is required");
    auto outcomes = run_seeds(cfg, termination, algorithm_body(cfg, algorithm, objective_weights));
    return unwrap(outcomes);
}

CompareOutcome execute_compare(const RunConfig& cfg)
{
    CompareOutcome outcome;
    std::vector<std::string> order = cfg.compare_algorithms;
    // dnnopt first so its per-seed w_0 is available to the others.
    auto it = std::find(order.begin(), order.end(), "dnnopt");
    const bool share_weight = it != order.end() && !cfg.problem.objective_weight;
    if (it != order.end())
        std::rotate(order.begin(), it, it + 1);

    std::vector<double> weights;
    std::vector<std::vector<RunResult>> by_name(order.size());
    for (std::size_t a = 0; a < order.size(); ++a) {
        by_name[a] = execute_runs(cfg, order[a], cfg.compare_termination, a == 0 ? std::vector<double>{} : weights);
        if (a == 0 && share_weight)
            for (const auto& r : by_name[0])
                weights.push_back(r.objective_weight);
    }
    for (const auto& name : cfg.compare_algorithms) {
        const auto a = static_cast<std::size_t>(std::find(order.begin(), order.end(), name) - order.begin());
        outcome.table.algorithms.push_back(name);
        outcome.table.columns.push_back(mean_best_fom_curve(by_name[a], cfg.budget));
        outcome.runs.push_back(by_name[a]);
    }
    return outcome;
}

SensitivityOutcome execute_sensitivity(const RunConfig& cfg)
{
    auto evaluator = make_evaluator(cfg);
    SensitivityOutcome out;
    out.report = compute_sensitivity(*evaluator, cfg.problem, nominal_design(cfg), cfg.sensitivity.rel_step);
    const int m = cfg.problem.num_constraints();
    std::vector<int> screened;
    if (cfg.sensitivity.screen_all) {
        for (int i = 0; i <= m; ++i)
            screened.push_back(i);
    } else if (!cfg.sensitivity.screened_specs.empty()) {
        screened = cfg.sensitivity.screened_specs;
        for (int i : screened)
            if (i < 0 || i > m)
                throw ConfigError("sensitivity.screened_specs: index " + std::to_string(i) + " out of range");
    } else {
        screened = failing_specs(out.report.nominal_spec);
    }
    out.report.screened_specs = screened;
    out.report.thresh = cfg.sensitivity.thresh;
    out.report.active_set = prune_variables(out.report, cfg.problem, screened, cfg.sensitivity.thresh);
    out.scores = normalized_sensitivity(out.report, cfg.problem, screened);
    return out;
}

namespace {

std::vector<SeedOutcome> run_pruned_seeds(const RunConfig& cfg, const std::vector<int>& active, const Design& nominal)
{
    const ProblemDefinition reduced = restrict_problem(cfg.problem, active);
    RunBody body = [&](Evaluator& full, const RunSettings& settings, std::size_t) {
        SubspaceEvaluator sub(full, cfg.problem, active, nominal);
        RunResult r = run_algorithm(cfg.algorithm, cfg, reduced, sub, settings);
        for (auto& rec : r.records)
            rec.design = sub.expand(rec.design);
        if (r.best_design.values.size() > 0)
            r.best_design = sub.expand(r.best_design);
        return r;
    };
    auto outcomes = run_seeds(cfg, cfg.termination, body);
    // Partial records reach the sink in reduced coordinates.
    for (auto& o : outcomes)
        for (auto& rec : o.partial) {
            if (rec.design.values.size() != static_cast<Eigen::Index>(active.size()))
                continue;
            Design full = nominal;
            for (std::size_t k = 0; k < active.size(); ++k)
                full.values[active[k]] = rec.design.values[static_cast<Eigen::Index>(k)];
            rec.design = full;
        }
    return outcomes;
}

} // namespace

std::vector<RunResult> execute_pruned_runs(const RunConfig& cfg, const std::vector<int>& active,
                                           const Design& nominal)
{
    auto outcomes = run_pruned_seeds(cfg, active, nominal);
    return unwrap(outcomes);
}

int cmd_run(const std::string& config_path, const CommandOverrides& o, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        const RunConfig cfg = load_with_overrides(config_path, o);
        auto outcomes = run_seeds(cfg, cfg.termination, algorithm_body(cfg, cfg.algorithm, {}));
        const bool ok = write_run_outputs(cfg, cfg.algorithm, "", cfg.problem, outcomes, out, err);
        return ok ? exit_ok : exit_run_error;
    });
}

int cmd_sensitivity(const std::string& config_path, const CommandOverrides& o, bool run_pruned, std::ostream& out,
                    std::ostream& err)
{
    return guarded(err, [&] {
        const RunConfig cfg = load_with_overrides(config_path, o);
        const auto result = execute_sensitivity(cfg);
        write_file_atomic(join(cfg.output_dir, "sensitivity.json"),
                          to_json(result.report, cfg.problem, result.scores).dump(2) + "\n");
        out << "active set:";
        for (int j : result.report.active_set)
            out << ' '
                << (cfg.problem.variable_names.empty() ? "x" + std::to_string(j)
                                                       : cfg.problem.variable_names[static_cast<std::size_t>(j)]);
        out << "\n";
        if (!(run_pruned || cfg.sensitivity.run_pruned))
            return exit_ok;
        auto outcomes = run_pruned_seeds(cfg, result.report.active_set, result.report.nominal);
        const bool ok = write_run_outputs(cfg, cfg.algorithm, "pruned_", cfg.problem, outcomes, out, err);
        return ok ? exit_ok : exit_run_error;
    });
}

int cmd_compare(const std::string& config_path, const CommandOverrides& o, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        RunConfig cfg = load_with_overrides(config_path, o);
        const auto outcome = execute_compare(cfg);
        for (std::size_t a = 0; a < outcome.runs.size(); ++a) {
            std::vector<SeedOutcome> wrapped;
            for (const auto& r : outcome.runs[a])
                wrapped.push_back({r, {}, nullptr});
            write_run_outputs(cfg, outcome.table.algorithms[a], "compare_", cfg.problem, wrapped, out, err);
        }
        write_file_atomic(join(cfg.output_dir, "compare_mean_fom.csv"), format_compare_csv(outcome.table));
        return exit_ok;
    });
}

} // namespace dnnopt
