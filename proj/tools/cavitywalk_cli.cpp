// Command-line driver for the cavitywalk simulator and analysis pipeline.

#include "cavitywalk/commands.hpp"
#include "cavitywalk/errors.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <optional>
#include <string>

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> trials;
    std::optional<int> steps;
    std::string out;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
    auto* config = cmd->add_option("--config", args.config_path, "run configuration file");
    if (config_required) config->required();
    cmd->add_option("--seed", args.seed, "override the config seed");
    cmd->add_option("--trials", args.trials, "override the config trial count");
    cmd->add_option("--steps", args.steps, "override the config step count");
    cmd->add_option("--out", args.out, "output path");
}

cavitywalk::RunConfig load_config(const CommonArgs& args) {
    cavitywalk::RunConfig cfg;
    if (!args.config_path.empty()) {
        cfg = cavitywalk::parse_run_config_file(args.config_path);
    }
    if (args.seed) cfg.seed = *args.seed;
    if (args.trials) cfg.trials = *args.trials;
    if (args.steps) cfg.steps = *args.steps;
    if (!args.out.empty()) cfg.out = args.out;
    return cfg;
}

std::string out_or(const cavitywalk::RunConfig& cfg, const char* fallback) {
    return cfg.out.empty() ? fallback : cfg.out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"time-bin coined walk simulator for coupled fiber ring cavities"};
    app.require_subcommand(1);

    CommonArgs ideal_args, physical_args, analyze_args;
    std::string events_path, report_a, report_b, compare_out;

    auto* ideal = app.add_subcommand("simulate-ideal",
                                     "write the ideal per-step walk distributions");
    add_common(ideal, ideal_args, false);

    auto* physical = app.add_subcommand("simulate-physical",
                                        "simulate detector trials and write an event file");
    add_common(physical, physical_args, false);

    auto* analyze = app.add_subcommand("analyze", "turn an event file into a report");
    analyze->add_option("events", events_path, "event file from simulate-physical")->required();
    add_common(analyze, analyze_args, false);

    auto* compare = app.add_subcommand("compare", "per-step fidelity between two reports");
    compare->add_option("report_a", report_a)->required();
    compare->add_option("report_b", report_b)->required();
    compare->add_option("--out", compare_out, "output path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (ideal->parsed()) {
            const auto cfg = load_config(ideal_args);
            cavitywalk::cmd_simulate_ideal(cfg, out_or(cfg, "ideal.report"), std::cout);
        } else if (physical->parsed()) {
            const auto cfg = load_config(physical_args);
            cavitywalk::cmd_simulate_physical(cfg, out_or(cfg, "events.txt"), std::cout);
        } else if (analyze->parsed()) {
            const auto cfg = load_config(analyze_args);
            cavitywalk::cmd_analyze(events_path, cfg, out_or(cfg, "analysis.report"), std::cout);
        } else if (compare->parsed()) {
            cavitywalk::cmd_compare(report_a, report_b, compare_out, std::cout);
        }
    } catch (const cavitywalk::validation_error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    }
    return 0;
}
