#include "dnnopt/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"Actor-critic surrogate optimizer for constrained black-box problems"};
    app.require_subcommand(1);

    dnnopt::CommandOverrides overrides;
    std::uint64_t seed = 0;
    std::size_t budget = 0;
    std::string output_dir;
    auto add_overrides = [&](CLI::App* sub) {
        sub->add_option("--seed-override", seed, "Run a single seed instead of the configured list");
        sub->add_option("--budget-override", budget, "Replace the configured evaluation budget")
            ->check(CLI::PositiveNumber);
        sub->add_option("--output-dir", output_dir, "Directory for CSV and JSON outputs");
    };

    std::string config;
    bool run_pruned = false;

    auto* run = app.add_subcommand("run", "Optimize once per configured seed");
    run->add_option("config", config, "YAML run configuration")->required()->check(CLI::ExistingFile);
    add_overrides(run);

    auto* sens = app.add_subcommand("sensitivity", "Finite-difference screening and variable pruning");
    sens->add_option("config", config, "YAML run configuration")->required()->check(CLI::ExistingFile);
    sens->add_flag("--run-pruned", run_pruned, "Optimize the pruned problem afterwards");
    add_overrides(sens);

    auto* cmp = app.add_subcommand("compare", "Run every listed algorithm and average the FoM curves");
    cmp->add_option("config", config, "YAML run configuration")->required()->check(CLI::ExistingFile);
    add_overrides(cmp);

    CLI11_PARSE(app, argc, argv);

    for (auto* sub : {run, sens, cmp}) {
        if (sub->count("--seed-override"))
            overrides.seed = seed;
        if (sub->count("--budget-override"))
            overrides.budget = budget;
        if (sub->count("--output-dir"))
            overrides.output_dir = output_dir;
    }

    if (*run)
        return dnnopt::cmd_run(config, overrides, std::cout, std::cerr);
    if (*sens)
        return dnnopt::cmd_sensitivity(config, overrides, run_pruned, std::cout, std::cerr);
    return dnnopt::cmd_compare(config, overrides, std::cout, std::cerr);
}
