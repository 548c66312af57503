// Scenario runner: reproducible experiments over the library modules,
// emitting CSV data plus a machine-readable pass/fail summary.

#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pim/scenario.hpp"

int main(int argc, char** argv) {
    CLI::App app{"path-integral measure toolkit"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run a named scenario");
    std::string scenario;
    std::string config_path;
    std::string out_dir = "./out";
    unsigned long long seed = 12345;
    double tol_scale = 1.0;

    std::string scenario_help = "one of:";
    for (const auto& name : pim::cli::ScenarioConfig::scenario_names())
        scenario_help += " " + name;

    run->add_option("--scenario", scenario, scenario_help)->required();
    run->add_option("--config", config_path, "key = value parameter file");
    run->add_option("--out", out_dir, "output directory for CSV and summary files");
    run->add_option("--seed", seed, "random seed for the randomized scenarios");
    run->add_option("--tol-scale", tol_scale, "global tolerance multiplier");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        auto config = config_path.empty()
                          ? pim::cli::ScenarioConfig(scenario)
                          : pim::cli::ScenarioConfig::from_file(scenario, config_path);
        auto report = pim::cli::run_scenario(config, out_dir, seed, tol_scale);
        for (const auto& c : report.checks)
            std::printf("%-48s measured=%-14.6g tol=%-12.6g %s\n", c.name.c_str(), c.measured,
                        c.tolerance, c.pass ? "PASS" : "FAIL");
        std::printf("# %s finished in %.2fs, %s\n", report.scenario.c_str(),
                    report.elapsed_seconds, report.all_pass() ? "all checks passed" : "FAILURES");
        return report.all_pass() ? 0 : 1;
    } catch (const pim::cli::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
