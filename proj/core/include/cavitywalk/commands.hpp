#pragma once

#include "cavitywalk/report.hpp"
#include "cavitywalk/run_config.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>

namespace cavitywalk {

// The CLI entry points, usable as library calls. Each validates its inputs,
// writes its output file, and prints a short summary to `log`. Errors are
// thrown: validation_error for bad inputs, estimation_error for runtime
// failures.

// Ideal per-step walk distributions for the configured coin (steps 0..steps).
void cmd_simulate_ideal(const RunConfig& cfg, const std::string& out_path, std::ostream& log);

struct SimulatePhysicalSummary {
    std::uint64_t total_events = 0;
    std::uint64_t final_step_events = 0;  // events landing in the last step's windows
};

// Full physical chain: pulse table -> detector trials -> event file.
SimulatePhysicalSummary cmd_simulate_physical(const RunConfig& cfg, const std::string& out_path,
                                              std::ostream& log);

// Event file -> analysis report (peaks, losses, fidelity vs the ideal walk).
void cmd_analyze(const std::string& events_path, const RunConfig& cfg,
                 const std::string& out_path, std::ostream& log);

// Per-step Bhattacharyya fidelity between the distributions of two reports.
FidelitySeries cmd_compare(const std::string& report_a, const std::string& report_b,
                           const std::string& out_path, std::ostream& log);

}  // namespace cavitywalk
