#include "dnnopt/config.hpp"

#include "dnnopt/errors.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace dnnopt {

namespace {

/// One YAML mapping with typed accessors; every key must be consumed or finish() fails.
class Section {
public:
    Section(YAML::Node node, std::string path, std::string origin)
        : node_(std::move(node)), path_(std::move(path)), origin_(origin)
    {
        if (!node_.IsMap())
            fail(node_, "'" + path_ + "' must be a mapping");
    }

    [[noreturn]] void fail(const YAML::Node& at, const std::string& message) const
    {
        const auto mark = at.Mark();
        const int line = mark.line >= 0 ? mark.line + 1 : 0;
        throw ConfigError(origin_ + ":" + std::to_string(line) + ": " + message);
    }

    bool has(const std::string& key) const { return static_cast<bool>(node_[key]); }

    YAML::Node raw(const std::string& key)
    {
        used_.insert(key);
        return node_[key];
    }

    std::string name(const std::string& key) const
    {
        if (key.empty())
            return path_;
        return path_.empty() ? key : path_ + "." + key;
    }

    template <typename T>
    std::optional<T> get(const std::string& key, const char* type_name)
    {
        const YAML::Node v = raw(key);
        if (!v)
            return std::nullopt;
        try {
            if (!v.IsScalar())
                throw YAML::Exception(v.Mark(), "not a scalar");
            return v.as<T>();
        } catch (const YAML::Exception&) {
            fail(v, "key '" + name(key) + "': expected " + type_name);
        }
    }

    std::optional<double> number(const std::string& key) { return get<double>(key, "a number"); }
    std::optional<bool> boolean(const std::string& key) { return get<bool>(key, "true or false"); }
    std::optional<std::string> text(const std::string& key) { return get<std::string>(key, "a string"); }

    std::optional<long long> integer(const std::string& key, long long min_value)
    {
        auto v = get<long long>(key, "an integer");
        if (v && *v < min_value)
            fail(node_[key], "key '" + name(key) + "': must be at least " + std::to_string(min_value));
        return v;
    }

    std::optional<double> positive(const std::string& key)
    {
        auto v = number(key);
        if (v && !(*v > 0.0))
            fail(node_[key], "key '" + name(key) + "': must be positive");
        return v;
    }

    template <typename T>
    std::optional<std::vector<T>> list(const std::string& key, const char* type_name)
    {
        const YAML::Node v = raw(key);
        if (!v)
            return std::nullopt;
        if (!v.IsSequence())
            fail(v, "key '" + name(key) + "': expected a list of " + type_name);
        std::vector<T> out;
        for (const auto& item : v) {
            try {
                if (!item.IsScalar())
                    throw YAML::Exception(item.Mark(), "not a scalar");
                out.push_back(item.as<T>());
            } catch (const YAML::Exception&) {
                fail(item, "key '" + name(key) + "': expected a list of " + type_name);
            }
        }
        return out;
    }

    std::optional<Section> section(const std::string& key)
    {
        const YAML::Node v = raw(key);
        if (!v)
            return std::nullopt;
        return Section(v, name(key), origin_);
    }

    const YAML::Node& node() const { return node_; }
    const std::string& origin() const { return origin_; }

    void finish() const
    {
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!used_.contains(key))
                fail(kv.first, "unknown key '" + name(key) + "'");
        }
    }

private:
    YAML::Node node_;
    std::string path_;
    std::string origin_;
    std::set<std::string> used_;
};

void read_train(Section& s, nn::TrainConfig& t)
{
    if (auto v = s.integer("epochs", 1))
        t.epochs = static_cast<int>(*v);
    if (auto v = s.integer("batch_size", 1))
        t.batch_size = static_cast<int>(*v);
    if (auto v = s.positive("learning_rate"))
        t.learning_rate = *v;
    if (auto v = s.integer("patience", 0))
        t.patience = static_cast<int>(*v);
    if (auto v = s.integer("max_steps", 0))
        t.max_steps = static_cast<long>(*v);
}

std::vector<int> read_hidden(Section& s)
{
    std::vector<int> out;
    if (auto v = s.list<int>("hidden", "positive integers")) {
        for (int h : *v)
            if (h <= 0)
                s.fail(s.node()["hidden"], "key '" + s.name("hidden") + "': layer widths must be positive");
        out = *v;
    }
    return out;
}

nn::Activation read_activation(Section& s, nn::Activation fallback)
{
    if (auto v = s.text("activation")) {
        try {
            return nn::activation_from_string(*v);
        } catch (const ContractError& e) {
            s.fail(s.node()["activation"], "key '" + s.name("activation") + "': " + e.what());
        }
    }
    return fallback;
}

Termination read_termination(Section& s, const std::string& key, Termination fallback)
{
    if (auto v = s.text(key)) {
        try {
            return termination_from_string(*v);
        } catch (const ConfigError& e) {
            s.fail(s.node()[key], "key '" + s.name(key) + "': " + e.what());
        }
    }
    return fallback;
}

void read_custom_problem(Section& p, ProblemDefinition& prob)
{
    const YAML::Node vars = p.raw("variables");
    if (!vars.IsSequence() || vars.size() == 0)
        p.fail(vars, "key '" + p.name("variables") + "': expected a non-empty list");
    const auto d = static_cast<Eigen::Index>(vars.size());
    prob.lb.resize(d);
    prob.ub.resize(d);
    Eigen::Index k = 0;
    for (const auto& item : vars) {
        Section v(item, p.name("variables") + "[" + std::to_string(k) + "]", p.origin());
        prob.variable_names.push_back(v.text("name").value_or("x" + std::to_string(k)));
        const auto lb = v.number("lb");
        const auto ub = v.number("ub");
        if (!lb || !ub)
            v.fail(item, "variable " + std::to_string(k) + " needs both lb and ub");
        if (!(*lb < *ub))
            v.fail(item, "variable '" + prob.variable_names.back() + "': lb must be below ub");
        prob.lb[k] = *lb;
        prob.ub[k] = *ub;
        prob.integer.push_back(v.boolean("integer").value_or(false));
        v.finish();
        ++k;
    }

    const YAML::Node specs = p.raw("specs");
    if (!specs || !specs.IsSequence() || specs.size() == 0)
        p.fail(specs ? specs : p.node(), "key '" + p.name("specs") + "': expected a non-empty list");
    std::size_t i = 0;
    for (const auto& item : specs) {
        Section s(item, p.name("specs") + "[" + std::to_string(i) + "]", p.origin());
        SpecDefinition def;
        def.name = s.text("name").value_or("spec" + std::to_string(i));
        const auto kind = s.text("kind");
        if (!kind)
            s.fail(item, "spec '" + def.name + "' needs a kind");
        try {
            def.kind = spec_kind_from_string(*kind);
        } catch (const ContractError& e) {
            s.fail(item["kind"], e.what());
        }
        if (i == 0 && def.kind != SpecKind::objective_min)
            s.fail(item, "the first spec must be the objective (kind objective-min)");
        if (i > 0 && def.kind == SpecKind::objective_min)
            s.fail(item, "only the first spec may be the objective");
        if (auto b = s.number("bound"))
            def.bound = *b;
        else if (def.kind != SpecKind::objective_min)
            s.fail(item, "constraint '" + def.name + "' needs a bound");
        if (i > 0) {
            if (auto w = s.positive("weight"))
                def.weight = *w;
        }
        s.finish();
        prob.specs.push_back(def);
        ++i;
    }
}

void read_problem(Section& p, RunConfig& cfg)
{
    const auto builtin = p.text("builtin");
    if (auto v = p.integer("dim", 1))
        cfg.builtin_options.dim = static_cast<int>(*v);
    if (auto v = p.integer("constraints", 0))
        cfg.builtin_options.num_constraints = static_cast<int>(*v);
    if (auto v = p.integer("instance", 0))
        cfg.builtin_options.instance = static_cast<std::uint64_t>(*v);

    if (builtin) {
        if (p.has("variables") || p.has("specs"))
            p.fail(p.node(), "'" + p.name("builtin") + "' cannot be combined with variables/specs");
        cfg.builtin = *builtin;
        try {
            cfg.problem = make_builtin(cfg.builtin, cfg.builtin_options)->descriptor().problem;
        } catch (const ConfigError& e) {
            p.fail(p.node()["builtin"], "key '" + p.name("builtin") + "': " + e.what());
        }
        cfg.problem_label = cfg.builtin;
    } else if (p.has("variables")) {
        read_custom_problem(p, cfg.problem);
        cfg.problem_label = p.text("label").value_or("custom");
    } else {
        p.fail(p.node(), "'" + p.name("") + "' needs either builtin or variables/specs");
    }
    p.raw("label");

    if (auto w = p.raw("objective_weight")) {
        if (w.IsScalar() && w.as<std::string>() == "auto") {
            cfg.problem.objective_weight.reset();
        } else {
            const auto v = p.positive("objective_weight");
            cfg.problem.objective_weight = *v;
        }
    }
    if (auto weights = p.section("spec_weights")) {
        for (const auto& kv : weights->node()) {
            const auto key = kv.first.as<std::string>();
            auto it = std::find_if(cfg.problem.specs.begin() + 1, cfg.problem.specs.end(),
                                   [&](const SpecDefinition& d) { return d.name == key; });
            if (it == cfg.problem.specs.end())
                weights->fail(kv.first, "key '" + weights->name(key) + "': no constraint with that name");
            it->weight = *weights->positive(key);
        }
        weights->finish();
    }
    p.finish();
}

void read_evaluator(Section& e, RunConfig& cfg)
{
    const std::string type = e.text("type").value_or(cfg.builtin.empty() ? "external" : "builtin");
    if (type == "external") {
        cfg.external = true;
        if (auto cmd = e.list<std::string>("command", "strings"))
            cfg.external_cfg.command = *cmd;
        if (cfg.external_cfg.command.empty())
            e.fail(e.node(), "key '" + e.name("command") + "': external evaluator needs a non-empty command");
        if (auto v = e.positive("timeout"))
            cfg.external_cfg.timeout_seconds = *v;
        if (auto v = e.integer("pool_size", 1))
            cfg.external_cfg.pool_size = static_cast<int>(*v);
    } else if (type == "builtin") {
        if (cfg.builtin.empty())
            e.fail(e.node(), "key '" + e.name("type") + "': builtin evaluator requires problem.builtin");
    } else {
        e.fail(e.node()["type"], "key '" + e.name("type") + "': expected builtin or external");
    }
    e.finish();
}

void read_dnnopt(Section& s, DnnOptConfig& d)
{
    if (auto v = s.integer("n_init", 2))
        d.n_init = static_cast<std::size_t>(*v);
    if (auto v = s.integer("n_es", 1))
        d.n_es = static_cast<std::size_t>(*v);
    if (auto v = s.integer("pseudo_sample_cap", 2))
        d.pseudo_sample_cap = static_cast<std::size_t>(*v);
    if (auto v = s.boolean("warm_start"))
        d.warm_start = *v;
    if (auto v = s.boolean("debug_checks"))
        d.debug_checks = *v;
    if (auto c = s.section("critic")) {
        if (auto h = read_hidden(*c); !h.empty())
            d.critic.hidden = h;
        d.critic.activation = read_activation(*c, d.critic.activation);
        read_train(*c, d.critic.train);
        c->finish();
    }
    if (auto a = s.section("actor")) {
        if (auto h = read_hidden(*a); !h.empty())
            d.actor.hidden = h;
        d.actor.activation = read_activation(*a, d.actor.activation);
        read_train(*a, d.actor.train);
        if (auto v = a->positive("lambda"))
            d.actor.lambda = *v;
        if (auto v = a->number("noise_sigma_frac")) {
            if (*v < 0.0)
                a->fail(a->node()["noise_sigma_frac"], "key '" + a->name("noise_sigma_frac") + "': must be >= 0");
            d.actor.noise_sigma_frac = *v;
        }
        if (auto v = a->positive("delta_scale"))
            d.actor.delta_scale = *v;
        if (auto v = a->positive("min_width"))
            d.actor.min_width = *v;
        a->finish();
    }
    s.finish();
}

void read_sensitivity(Section& s, SensitivitySettings& out)
{
    if (auto v = s.positive("rel_step")) {
        if (*v >= 0.5)
            s.fail(s.node()["rel_step"], "key '" + s.name("rel_step") + "': must be below 0.5");
        out.rel_step = *v;
    }
    if (auto v = s.number("thresh")) {
        if (*v < 0.0)
            s.fail(s.node()["thresh"], "key '" + s.name("thresh") + "': must be non-negative");
        out.thresh = *v;
    }
    if (auto v = s.list<double>("nominal", "numbers"))
        out.nominal = Eigen::Map<const Eigen::VectorXd>(v->data(), static_cast<Eigen::Index>(v->size()));
    if (auto screened = s.raw("screened_specs")) {
        if (screened.IsScalar()) {
            const auto mode = screened.as<std::string>();
            if (mode == "all")
                out.screen_all = true;
            else if (mode != "failing")
                s.fail(screened, "key '" + s.name("screened_specs") + "': expected failing, all or a list of indices");
        } else {
            out.screened_specs = *s.list<int>("screened_specs", "spec indices");
        }
    }
    if (auto v = s.boolean("run_pruned"))
        out.run_pruned = *v;
    s.finish();
}

} // namespace

void RunConfig::validate() const
{
    problem.validate();
    if (seeds.empty())
        throw ConfigError("at least one seed is required");
    if (budget == 0)
        throw ConfigError("budget must be positive");
    for (const auto& a : compare_algorithms)
        if (a != "dnnopt" && a != "de" && a != "random")
            throw ConfigError("unknown algorithm '" + a + "' in compare.algorithms");
    if (algorithm != "dnnopt" && algorithm != "de" && algorithm != "random")
        throw ConfigError("unknown algorithm '" + algorithm + "'");
    if (algorithm == "dnnopt" && budget < dnnopt.resolved_n_init(problem.dim()))
        throw ConfigError("budget must be at least n_init for dnnopt");
    if (algorithm == "de" && budget < de.population)
        throw ConfigError("budget must be at least the DE population");
    if (external && external_cfg.command.empty())
        throw ConfigError("external evaluator needs a command");
}

} // namespace dnnopt

namespace dnnopt {

RunConfig parse_config(const std::string& text, const std::string& origin)
{
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(origin + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    if (!root || root.IsNull())
        throw ConfigError(origin + ":1: empty configuration");

    RunConfig cfg;
    cfg.source = origin;
    Section top(root, "", origin);

    auto problem = top.section("problem");
    if (!problem)
        top.fail(root, "missing required key 'problem'");
    read_problem(*problem, cfg);

    if (auto ev = top.section("evaluator")) {
        read_evaluator(*ev, cfg);
    } else if (cfg.builtin.empty()) {
        top.fail(root, "a custom problem needs an 'evaluator' section with an external command");
    }

    if (auto v = top.text("algorithm")) {
        if (*v != "dnnopt" && *v != "de" && *v != "random")
            top.fail(root["algorithm"], "key 'algorithm': expected dnnopt, de or random");
        cfg.algorithm = *v;
    }
    if (auto v = top.integer("budget", 1))
        cfg.budget = static_cast<std::size_t>(*v);
    if (auto v = top.list<long long>("seeds", "integers")) {
        if (v->empty())
            top.fail(root["seeds"], "key 'seeds': at least one seed is required");
        cfg.seeds.clear();
        for (long long s : *v) {
            if (s < 0)
                top.fail(root["seeds"], "key 'seeds': seeds must be non-negative");
            cfg.seeds.push_back(static_cast<std::uint64_t>(s));
        }
    }
    cfg.termination = read_termination(top, "termination", cfg.termination);
    if (auto v = top.text("output_dir"))
        cfg.output_dir = *v;
    if (auto v = top.integer("jobs", 1))
        cfg.jobs = static_cast<int>(*v);

    if (auto s = top.section("dnnopt"))
        read_dnnopt(*s, cfg.dnnopt);
    if (auto s = top.section("de")) {
        if (auto v = s->integer("population", 4))
            cfg.de.population = static_cast<std::size_t>(*v);
        if (auto v = s->positive("F")) {
            if (*v > 2.0)
                s->fail(s->node()["F"], "key 'de.F': must lie in (0, 2]");
            cfg.de.weight = *v;
        }
        if (auto v = s->number("CR")) {
            if (*v < 0.0 || *v > 1.0)
                s->fail(s->node()["CR"], "key 'de.CR': must lie in [0, 1]");
            cfg.de.crossover = *v;
        }
        s->finish();
    }
    if (auto s = top.section("sensitivity"))
        read_sensitivity(*s, cfg.sensitivity);
    if (auto s = top.section("compare")) {
        if (auto v = s->list<std::string>("algorithms", "algorithm names")) {
            for (const auto& a : *v)
                if (a != "dnnopt" && a != "de" && a != "random")
                    s->fail(s->node()["algorithms"], "key 'compare.algorithms': unknown algorithm '" + a + "'");
            if (v->empty())
                s->fail(s->node()["algorithms"], "key 'compare.algorithms': list is empty");
            cfg.compare_algorithms = *v;
        }
        cfg.compare_termination = read_termination(*s, "termination", cfg.compare_termination);
        s->finish();
    }
    top.finish();

    if (cfg.sensitivity.nominal && cfg.sensitivity.nominal->size() != cfg.problem.dim())
        throw ConfigError(origin + ": key 'sensitivity.nominal': expected " + std::to_string(cfg.problem.dim()) +
                          " values");
    try {
        cfg.validate();
    } catch (const std::exception& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    return cfg;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError(path + ": cannot open configuration file");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), path);
}

std::unique_ptr<Evaluator> make_evaluator(const RunConfig& cfg)
{
    if (cfg.external)
        return std::make_unique<ExternalProcessEvaluator>(cfg.problem, cfg.external_cfg);
    return make_builtin(cfg.builtin, cfg.builtin_options);
}

RunResult run_algorithm(const std::string& algorithm, const RunConfig& cfg, const ProblemDefinition& problem,
                        Evaluator& evaluator, const RunSettings& settings)
{
    if (algorithm == "dnnopt")
        return run_dnnopt(problem, evaluator, cfg.dnnopt, settings);
    if (algorithm == "de")
        return differential_evolution(problem, evaluator, cfg.de, settings);
    if (algorithm == "random")
        return random_search(problem, evaluator, settings, cfg.dnnopt.resolved_n_init(problem.dim()));
    throw ConfigError("unknown algorithm '" + algorithm + "'");
}

} // namespace dnnopt
