#include "dnnopt/report.hpp"

#include "dnnopt/errors.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace dnnopt {

namespace {

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, sep))
        out.push_back(cur);
    if (!line.empty() && line.back() == sep)
        out.emplace_back();
    return out;
}

std::vector<std::string> lines_of(const std::string& text)
{
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (!line.empty())
            out.push_back(line);
    }
    return out;
}

double parse_double(const std::string& s)
{
    if (s == "nan")
        return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf")
        return std::numeric_limits<double>::infinity();
    if (s == "-inf")
        return -std::numeric_limits<double>::infinity();
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ContractError("not a number: '" + s + "'");
    }
    if (pos != s.size())
        throw ContractError("not a number: '" + s + "'");
    return v;
}

// JSON has no NaN or infinity; those round-trip through null / strings.
nlohmann::json number_json(double v)
{
    if (std::isnan(v))
        return nullptr;
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    return v;
}

double number_from_json(const nlohmann::json& j)
{
    if (j.is_null())
        return std::numeric_limits<double>::quiet_NaN();
    if (j.is_string())
        return parse_double(j.get<std::string>());
    return j.get<double>();
}

nlohmann::json stats_json(const std::optional<Stats>& s)
{
    if (!s)
        return nullptr;
    return {{"min", s->min}, {"max", s->max}, {"mean", s->mean}};
}

std::optional<Stats> stats_from_json(const nlohmann::json& j)
{
    if (j.is_null())
        return std::nullopt;
    return Stats{j.at("min").get<double>(), j.at("max").get<double>(), j.at("mean").get<double>()};
}

} // namespace

void write_file_atomic(const std::string& path, const std::string& content)
{
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path())
        fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out)
            throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<HistoryRow> history_rows(const RunResult& run)
{
    std::vector<HistoryRow> rows;
    rows.reserve(run.records.size());
    for (const auto& rec : run.records)
        rows.push_back({rec.index, rec.best_fom, rec.best_objective, rec.best_feasible});
    return rows;
}

std::string format_history_csv(const std::vector<HistoryRow>& rows)
{
    std::string out = "eval_index,fom_best,objective_best,feasible\n";
    for (const auto& r : rows) {
        out += std::to_string(r.eval_index);
        out += ',' + format_double(r.fom_best);
        out += ',' + format_double(r.objective_best);
        out += r.feasible ? ",1\n" : ",0\n";
    }
    return out;
}

std::vector<HistoryRow> parse_history_csv(const std::string& text)
{
    const auto lines = lines_of(text);
    if (lines.empty() || lines.front() != "eval_index,fom_best,objective_best,feasible")
        throw ContractError("history CSV: unexpected header");
    std::vector<HistoryRow> rows;
    for (std::size_t k = 1; k < lines.size(); ++k) {
        const auto cells = split(lines[k], ',');
        if (cells.size() != 4 || (cells[3] != "0" && cells[3] != "1"))
            throw ContractError("history CSV: malformed row " + std::to_string(k + 1));
        rows.push_back({static_cast<std::size_t>(std::stoull(cells[0])), parse_double(cells[1]),
                        parse_double(cells[2]), cells[3] == "1"});
    }
    return rows;
}

std::string format_evaluations_csv(const RunResult& run, const ProblemDefinition& problem)
{
    std::string out = "eval_index";
    for (int j = 0; j < problem.dim(); ++j)
        out += ',' + (problem.variable_names.empty() ? "x" + std::to_string(j)
                                                     : problem.variable_names[static_cast<std::size_t>(j)]);
    for (const auto& spec : problem.specs)
        out += ',' + spec.name;
    out += ",fom,feasible,error\n";
    for (const auto& rec : run.records) {
        out += std::to_string(rec.index);
        for (Eigen::Index j = 0; j < rec.design.values.size(); ++j)
            out += ',' + format_double(rec.design.values[j]);
        for (Eigen::Index i = 0; i < rec.spec.values.size(); ++i)
            out += ',' + format_double(rec.spec.values[i]);
        out += ',' + format_double(rec.fom);
        out += rec.feasible ? ",1," : ",0,";
        // Errors are free text; keep the CSV single-line and comma-free.
        for (char c : rec.error)
            out += (c == ',' || c == '\n' || c == '\r') ? ' ' : c;
        out += '\n';
    }
    return out;
}

std::optional<Stats> compute_stats(const std::vector<double>& values)
{
    if (values.empty())
        return std::nullopt;
    Stats s{values.front(), values.front(), 0.0};
    double sum = 0.0;
    for (double v : values) {
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
        sum += v;
    }
    s.mean = sum / static_cast<double>(values.size());
    return s;
}

RunSummary summarize(const std::vector<RunResult>& runs, const std::string& problem, std::size_t budget)
{
    RunSummary s;
    s.problem = problem;
    s.budget = budget;
    if (!runs.empty())
        s.algorithm = runs.front().algorithm;
    std::size_t successes = 0;
    std::vector<double> first, best;
    for (const auto& run : runs) {
        SeedSummary seed;
        seed.seed = run.seed;
        seed.evaluations = run.evaluations;
        seed.first_feasible = run.first_feasible;
        seed.feasible = run.first_feasible.has_value();
        seed.best_fom = run.best_fom;
        seed.objective_weight = run.objective_weight;
        for (const auto& rec : run.records)
            if (rec.feasible && (!seed.best_objective || rec.spec.objective() < *seed.best_objective))
                seed.best_objective = rec.spec.objective();
        if (seed.feasible) {
            ++successes;
            first.push_back(static_cast<double>(*seed.first_feasible));
            best.push_back(*seed.best_objective);
        }
        s.runs.push_back(seed);
    }
    s.success_rate = std::to_string(successes) + "/" + std::to_string(runs.size());
    s.first_feasible = compute_stats(first);
    s.best_objective = compute_stats(best);
    return s;
}

nlohmann::json to_json(const RunSummary& s)
{
    nlohmann::json per_seed = nlohmann::json::array();
    for (const auto& r : s.runs) {
        per_seed.push_back({{"seed", r.seed},
                            {"evaluations", r.evaluations},
                            {"feasible", r.feasible},
                            {"first_feasible", r.first_feasible ? nlohmann::json(*r.first_feasible) : nullptr},
                            {"best_objective", r.best_objective ? nlohmann::json(*r.best_objective) : nullptr},
                            {"best_fom", number_json(r.best_fom)},
                            {"objective_weight", number_json(r.objective_weight)}});
    }
    return {{"algorithm", s.algorithm},
            {"problem", s.problem},
            {"budget", s.budget},
            {"success_rate", s.success_rate},
            {"first_feasible", stats_json(s.first_feasible)},
            {"best_objective", stats_json(s.best_objective)},
            {"runs", per_seed}};
}

RunSummary summary_from_json(const nlohmann::json& j)
{
    RunSummary s;
    s.algorithm = j.at("algorithm").get<std::string>();
    s.problem = j.at("problem").get<std::string>();
    s.budget = j.at("budget").get<std::size_t>();
    s.success_rate = j.at("success_rate").get<std::string>();
    s.first_feasible = stats_from_json(j.at("first_feasible"));
    s.best_objective = stats_from_json(j.at("best_objective"));
    for (const auto& r : j.at("runs")) {
        SeedSummary seed;
        seed.seed = r.at("seed").get<std::uint64_t>();
        seed.evaluations = r.at("evaluations").get<std::size_t>();
        seed.feasible = r.at("feasible").get<bool>();
        if (!r.at("first_feasible").is_null())
            seed.first_feasible = r.at("first_feasible").get<std::size_t>();
        if (!r.at("best_objective").is_null())
            seed.best_objective = r.at("best_objective").get<double>();
        seed.best_fom = number_from_json(r.at("best_fom"));
        seed.objective_weight = number_from_json(r.at("objective_weight"));
        s.runs.push_back(seed);
    }
    return s;
}

std::vector<double> mean_best_fom_curve(const std::vector<RunResult>& runs, std::size_t budget)
{
    std::vector<double> mean(budget, 0.0);
    if (runs.empty())
        return mean;
    for (const auto& run : runs) {
        if (run.records.empty())
            throw ContractError("cannot average a run without evaluations");
        for (std::size_t k = 0; k < budget; ++k) {
            const auto& rec = run.records[std::min(k, run.records.size() - 1)];
            mean[k] += rec.best_fom;
        }
    }
    for (double& v : mean)
        v /= static_cast<double>(runs.size());
    return mean;
}

std::string format_compare_csv(const CompareTable& table)
{
    std::string out = "eval_index";
    for (const auto& a : table.algorithms)
        out += ',' + a;
    out += '\n';
    const std::size_t rows = table.columns.empty() ? 0 : table.columns.front().size();
    for (const auto& c : table.columns)
        if (c.size() != rows)
            throw ContractError("compare table columns differ in length");
    for (std::size_t k = 0; k < rows; ++k) {
        out += std::to_string(k + 1);
        for (const auto& c : table.columns)
            out += ',' + format_double(c[k]);
        out += '\n';
    }
    return out;
}

CompareTable parse_compare_csv(const std::string& text)
{
    const auto lines = lines_of(text);
    if (lines.empty())
        throw ContractError("compare CSV: empty");
    const auto header = split(lines.front(), ',');
    if (header.empty() || header.front() != "eval_index")
        throw ContractError("compare CSV: unexpected header");
    CompareTable t;
    t.algorithms.assign(header.begin() + 1, header.end());
    t.columns.assign(t.algorithms.size(), {});
    for (std::size_t k = 1; k < lines.size(); ++k) {
        const auto cells = split(lines[k], ',');
        if (cells.size() != header.size() || std::stoull(cells[0]) != k)
            throw ContractError("compare CSV: malformed row " + std::to_string(k + 1));
        for (std::size_t a = 0; a < t.algorithms.size(); ++a)
            t.columns[a].push_back(parse_double(cells[a + 1]));
    }
    return t;
}

nlohmann::json to_json(const SensitivityReport& report, const ProblemDefinition& problem,
                       const Eigen::VectorXd& scores)
{
    nlohmann::json S = nlohmann::json::array();
    for (Eigen::Index i = 0; i < report.S.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < report.S.cols(); ++j)
            row.push_back(number_json(report.S(i, j)));
        S.push_back(row);
    }
    auto vec = [](const Eigen::VectorXd& v) {
        nlohmann::json a = nlohmann::json::array();
        for (Eigen::Index k = 0; k < v.size(); ++k)
            a.push_back(number_json(v[k]));
        return a;
    };
    std::vector<std::string> specs;
    for (const auto& s : problem.specs)
        specs.push_back(s.name);
    std::vector<int> pruned;
    for (int j = 0; j < problem.dim(); ++j)
        if (std::find(report.active_set.begin(), report.active_set.end(), j) == report.active_set.end())
            pruned.push_back(j);
    return {{"variables", problem.variable_names},
            {"specs", specs},
            {"S", S},
            {"nominal", vec(report.nominal.values)},
            {"nominal_spec", vec(report.nominal_spec.values)},
            {"steps", vec(report.steps)},
            {"unknown", report.unknown},
            {"screened_specs", report.screened_specs},
            {"thresh", report.thresh},
            {"scores", vec(scores)},
            {"active_set", report.active_set},
            {"pruned", pruned},
            {"evaluations", report.evaluations}};
}

SensitivityReport sensitivity_from_json(const nlohmann::json& j)
{
    SensitivityReport r;
    auto vec = [](const nlohmann::json& a) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
        for (std::size_t k = 0; k < a.size(); ++k)
            v[static_cast<Eigen::Index>(k)] = number_from_json(a[k]);
        return v;
    };
    const auto& S = j.at("S");
    const auto rows = static_cast<Eigen::Index>(S.size());
    const auto cols = rows > 0 ? static_cast<Eigen::Index>(S[0].size()) : 0;
    r.S.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (static_cast<Eigen::Index>(S[i].size()) != cols)
            throw ContractError("sensitivity report: ragged S matrix");
        for (Eigen::Index c = 0; c < cols; ++c)
            r.S(i, c) = number_from_json(S[i][c]);
    }
    r.nominal.values = vec(j.at("nominal"));
    r.nominal_spec.values = vec(j.at("nominal_spec"));
    r.steps = vec(j.at("steps"));
    r.unknown = j.at("unknown").get<std::vector<bool>>();
    r.screened_specs = j.at("screened_specs").get<std::vector<int>>();
    r.thresh = j.at("thresh").get<double>();
    r.active_set = j.at("active_set").get<std::vector<int>>();
    r.evaluations = j.at("evaluations").get<std::size_t>();
    return r;
}

} // namespace dnnopt
