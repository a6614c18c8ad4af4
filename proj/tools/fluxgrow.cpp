#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fluxgrow/scenario.hpp"

namespace
{
    int report_error(const std::string& kind, const std::vector<std::string>& messages, int status)
    {
        fluxgrow::Json err = {{"status", "error"}, {"kind", kind}, {"messages", messages}};
        std::cerr << err.dump(2) << std::endl;
        return status;
    }
} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Flux insertion and Laughlin-state growing for cavity Rydberg polaritons"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    unsigned jobs = 1;
    auto* run = app.add_subcommand("run", "Run the scenario described by a JSON config");
    run->add_option("config", config_path, "Scenario config file")->required();
    run->add_option("--out", out_dir, "Output directory (overrides \"output\" in the config)");
    run->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

    auto* list = app.add_subcommand("list", "List scenarios and their keys");

    CLI11_PARSE(app, argc, argv);

    if (list->parsed())
    {
        std::cout << fluxgrow::list_scenarios();
        return 0;
    }

    try
    {
        const auto cfg = fluxgrow::load_config(config_path);
        const std::string dir = out_dir.empty() ? cfg.output : out_dir;
        const auto outcome = fluxgrow::run_scenario(cfg, dir, jobs);
        fluxgrow::Json ok = {{"status", "ok"}, {"scenario", cfg.scenario}, {"output", dir}, {"files", outcome.files}};
        std::cout << ok.dump(2) << std::endl;
        return 0;
    }
    catch (const fluxgrow::ConfigError& e)
    {
        return report_error("config", e.problems(), 2);
    }
    catch (const std::exception& e)
    {
        return report_error("numerical", {e.what()}, 3);
    }
}
