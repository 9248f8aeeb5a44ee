#include "cavitywalk/commands.hpp"

#include "cavitywalk/errors.hpp"

#include <algorithm>
#include <ostream>
#include <set>
#include <sstream>

namespace cavitywalk {

void cmd_simulate_ideal(const RunConfig& cfg, const std::string& out_path, std::ostream& log) {
    cfg.validate();
    const auto distributions = ideal_distributions(coin_from_bias(cfg.eta_c), cfg.steps);
    write_report_file(report_from_distributions(distributions), out_path);
    log << "wrote ideal distributions for steps 0.." << cfg.steps << " (eta_c=" << cfg.eta_c
        << ") to " << out_path << "\n";
}

SimulatePhysicalSummary cmd_simulate_physical(const RunConfig& cfg, const std::string& out_path,
                                              std::ostream& log) {
    cfg.validate();
    const NetworkConfig net = cfg.network();
    const DetectorSpec det = cfg.detector();
    const PulseTable table = tapped_pulse_table(net, cfg.steps, cfg.input_energy_photons);

    // Time spans of the final step's integration windows, in TDC units.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> final_windows;
    for (int k = 0; k <= cfg.steps; ++k) {
        const double center_ns = bin_time(net, cfg.steps, k);
        const double lo = std::max(0.0, center_ns - cfg.window_halfwidth_ns) * 1e3 / det.tdc_bin_ps;
        const double hi = (center_ns + cfg.window_halfwidth_ns) * 1e3 / det.tdc_bin_ps;
        final_windows.emplace_back(static_cast<std::uint32_t>(lo),
                                   static_cast<std::uint32_t>(hi) + 1);
    }

    SimulatePhysicalSummary summary;
    EventFileWriter writer(out_path, det.tdc_bin_ps, net.trial_period_ns);
    simulate_trials_chunked(table, det, cfg.trials, cfg.seed, cfg.threads,
                            [&](const std::vector<EventRecord>& part) {
                                writer.append(part);
                                for (const auto& rec : part) {
                                    for (const auto& [lo, hi] : final_windows) {
                                        if (rec.tdc_index >= lo && rec.tdc_index < hi) {
                                            ++summary.final_step_events;
                                            break;
                                        }
                                    }
                                }
                            });
    summary.total_events = writer.records_written();
    writer.close();

    log << "simulated " << cfg.trials << " trials (seed " << cfg.seed << "): "
        << summary.total_events << " events, " << summary.final_step_events << " in step "
        << cfg.steps << "'s windows; wrote " << out_path << "\n";
    return summary;
}

void cmd_analyze(const std::string& events_path, const RunConfig& cfg,
                 const std::string& out_path, std::ostream& log) {
    cfg.validate();
    const EventStream events = read_events_file(events_path);
    AnalysisOptions options;
    options.window_halfwidth_ns = cfg.window_halfwidth_ns;
    const AnalysisResult analysis =
        analyze_events(events, cfg.network(), cfg.detector(), cfg.trials, options);
    const Report report = report_from_analysis(analysis);
    write_report_file(report, out_path);

    log << "analyzed " << events.records.size() << " events from " << events_path << "\n";
    if (analysis.loss_input_cavity) {
        log << "  cavity 0 excess loss: " << analysis.loss_input_cavity->excess_db << " +- "
            << analysis.loss_input_cavity->sigma_db << " dB/round trip ("
            << analysis.loss_input_cavity->points_used << " points)\n";
    }
    if (analysis.loss_output_cavity) {
        log << "  cavity 1 excess loss: " << analysis.loss_output_cavity->excess_db << " +- "
            << analysis.loss_output_cavity->sigma_db << " dB/round trip ("
            << analysis.loss_output_cavity->points_used << " points)\n";
    }
    if (!analysis.fidelity.values.empty()) {
        log << "  fidelity vs ideal walk: min " << analysis.fidelity.min_value() << " over "
            << analysis.fidelity.values.size() << " steps\n";
    }
    for (const auto& note : report.notes) log << "  warning: " << note << "\n";
    log << "wrote " << out_path << "\n";
}

FidelitySeries cmd_compare(const std::string& report_a, const std::string& report_b,
                           const std::string& out_path, std::ostream& log) {
    const auto dists_a = report_distributions(read_report_file(report_a));
    const auto dists_b = report_distributions(read_report_file(report_b));

    std::set<int> steps_a, steps_b;
    for (const auto& d : dists_a) steps_a.insert(d.step);
    for (const auto& d : dists_b) steps_b.insert(d.step);
    if (steps_a != steps_b) {
        throw validation_error("reports cover different step ranges (" + report_a + ": " +
                               std::to_string(steps_a.size()) + " steps, " + report_b + ": " +
                               std::to_string(steps_b.size()) + " steps)");
    }

    const FidelitySeries series = fidelity_series(dists_a, dists_b);
    std::ostringstream table;
    for (std::size_t i = 0; i < series.steps.size(); ++i) {
        table << series.steps[i] << ' ' << series.values[i] << "\n";
    }
    log << table.str();
    if (!out_path.empty()) {
        Report out_report;
        out_report.fidelity = series;
        write_report_file(out_report, out_path);
        log << "wrote " << out_path << "\n";
    }
    return series;
}

}  // namespace cavitywalk
