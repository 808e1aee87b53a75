#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "qdetect/cli/commands.hpp"

int main(int argc, char** argv)
{
    using namespace qdetect::cli;

    CLI::App app{"Random projective-measurement detection: Monte Carlo and closed forms"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    app.add_option("--config", config_path, "flat key = value configuration file")->check(CLI::ExistingFile);

    // flag name -> configuration key; flags override the configuration file
    const std::vector<std::pair<std::string, std::string>> flags = {
        {"-N,--sites", "N"},
        {"-m,--cut", "m"},
        {"-J,--coupling", "J"},
        {"--seed", "seed"},
        {"--out", "out"},
        {"--trajectories", "trajectories"},
        {"--max-measurements", "max_measurements"},
        {"--r", "r"},
        {"--r-grid", "r_grid"},
        {"--r-list", "r_list"},
        {"--t-grid", "t_grid"},
        {"--state", "state"},
        {"--protocol", "protocol"},
        {"--period", "period"},
        {"--hamiltonian", "hamiltonian"},
        {"--bins", "bins"},
        {"--t-max", "t_max"},
        {"--tolerance-scale", "tolerance_scale"},
    };
    std::map<std::string, std::string> given;
    std::vector<std::pair<CLI::Option*, std::string>> bound;
    for (const auto& [name, key] : flags) {
        bound.emplace_back(app.add_option(name, given[key], "overrides config key '" + key + "'"), key);
    }
    bool monte_carlo = false;
    bool inject_flip = false;
    auto* mc_flag = app.add_flag("--mc", monte_carlo, "add Monte Carlo columns (mfdt-sweep, fdp)");
    app.add_flag("--inject-a3-sign-flip", inject_flip)->group("");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo ensemble: trajectories, survival and density CSVs");
    auto* sweep = app.add_subcommand("mfdt-sweep", "mean first detection time over an r grid");
    auto* fdp = app.add_subcommand("fdp", "first detection density F(t) for a list of rates");
    auto* dark = app.add_subcommand("darkstates", "dark/bright split of a Hamiltonian");
    auto* roots = app.add_subcommand("roots", "cubic roots over an r grid");
    auto* validate = app.add_subcommand("validate", "cross-module consistency chain");

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg;
        if (!config_path.empty()) apply_settings(cfg, read_key_values(config_path));
        std::map<std::string, std::string> overrides;
        for (const auto& [opt, key] : bound) {
            if (opt->count() > 0) overrides[key] = given[key];
        }
        apply_settings(cfg, overrides);
        if (mc_flag->count() > 0) cfg.monte_carlo = monte_carlo;
        cfg.inject_a3_sign_flip = inject_flip;

        if (simulate->parsed()) return cmd_simulate(cfg, std::cout, std::cerr);
        if (sweep->parsed()) return cmd_mfdt_sweep(cfg, std::cout, std::cerr);
        if (fdp->parsed()) return cmd_fdp(cfg, std::cout, std::cerr);
        if (dark->parsed()) return cmd_darkstates(cfg, std::cout, std::cerr);
        if (roots->parsed()) return cmd_roots(cfg, std::cout, std::cerr);
        if (validate->parsed()) return cmd_validate(cfg, std::cout, std::cerr);
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
