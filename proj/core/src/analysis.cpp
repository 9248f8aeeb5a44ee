#include "cavitywalk/analysis.hpp"

#include "cavitywalk/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace cavitywalk {

Histogram build_histogram(const EventStream& events, int bin_width_ps) {
    if (bin_width_ps <= 0 || bin_width_ps % events.tdc_bin_ps != 0) {
        throw validation_error("histogram bin width must be a positive multiple of the TDC bin (" +
                               std::to_string(events.tdc_bin_ps) + " ps)");
    }
    const std::int64_t ratio = bin_width_ps / events.tdc_bin_ps;
    const auto n_bins = static_cast<std::int64_t>(
        std::ceil(events.trial_period_ns * 1e3 / bin_width_ps));

    Histogram hist;
    hist.bin_width_ps = bin_width_ps;
    hist.counts.assign(static_cast<std::size_t>(n_bins), 0);
    for (const auto& rec : events.records) {
        const std::int64_t bin = rec.tdc_index / ratio;
        if (bin >= n_bins) {
            ++hist.overflow;
        } else {
            ++hist.counts[static_cast<std::size_t>(bin)];
        }
    }
    return hist;
}

PeakWindows identify_peaks(const Histogram& hist, const NetworkConfig& cfg,
                           double window_halfwidth_ns) {
    cfg.validate();
    if (cfg.dims != 1) {
        throw validation_error("peak identification is defined for the one-dimensional network");
    }
    if (!(window_halfwidth_ns > 0.0)) throw validation_error("window halfwidth must be > 0");

    const int step_limit = max_observable_steps(cfg).limit();
    const auto n_bins = static_cast<std::int64_t>(hist.counts.size());
    const double width_ps = hist.bin_width_ps;

    PeakWindows out;
    out.bin_width_ps = hist.bin_width_ps;
    out.windows.reserve(static_cast<std::size_t>(step_limit + 1) * (step_limit + 2) / 2);
    for (int n = 0; n <= step_limit; ++n) {
        for (int k = 0; k <= n; ++k) {
            const double center_ns = bin_time(cfg, n, k);
            const double lo_ps = std::max(0.0, (center_ns - window_halfwidth_ns) * 1e3);
            const double hi_ps = (center_ns + window_halfwidth_ns) * 1e3;
            PeakWindow w;
            w.step = n;
            w.k = k;
            w.center_ns = center_ns;
            w.lo_bin = static_cast<std::int64_t>(std::floor(lo_ps / width_ps));
            w.hi_bin = std::min(n_bins, static_cast<std::int64_t>(std::floor(hi_ps / width_ps)) + 1);
            if (w.lo_bin >= w.hi_bin) {
                throw validation_error("integration window for step " + std::to_string(n) +
                                       " position " + std::to_string(k) +
                                       " falls outside the trial window");
            }
            out.windows.push_back(w);
        }
    }

    std::sort(out.windows.begin(), out.windows.end(),
              [](const PeakWindow& a, const PeakWindow& b) { return a.lo_bin < b.lo_bin; });
    for (std::size_t i = 1; i < out.windows.size(); ++i) {
        if (out.windows[i - 1].hi_bin > out.windows[i].lo_bin) {
            std::ostringstream msg;
            msg << "integration windows overlap between (step " << out.windows[i - 1].step
                << ", k " << out.windows[i - 1].k << ") and (step " << out.windows[i].step
                << ", k " << out.windows[i].k << "); halfwidth " << window_halfwidth_ns
                << " ns is too large for the bin spacing";
            throw validation_error(msg.str());
        }
    }
    return out;
}

DeadTimeCorrection compensate_dead_time(const std::vector<std::int64_t>& counts,
                                        std::uint64_t trials, double efficiency) {
    if (!(efficiency > 0.0) || efficiency > 1.0) {
        throw validation_error("efficiency must lie in (0,1]");
    }
    DeadTimeCorrection out;
    out.p.reserve(counts.size());
    out.mu.reserve(counts.size());
    out.sigma.reserve(counts.size());

    double surviving = static_cast<double>(trials);
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const auto c = static_cast<double>(counts[i]);
        if (c < 0.0) throw validation_error("negative count in slot " + std::to_string(i));
        if (c > 0.0 && surviving <= 0.0) {
            throw estimation_error("trial count exhausted before slot " + std::to_string(i) +
                                   "; cannot invert the dead-time policy");
        }
        const double p = surviving > 0.0 ? c / surviving : 0.0;
        if (p >= 1.0) {
            throw estimation_error("slot " + std::to_string(i) +
                                   " absorbed every surviving trial; dead-time inversion is "
                                   "singular");
        }
        const double mu = -std::log1p(-p) / efficiency;
        const double var_p = surviving > 0.0 ? p * (1.0 - p) / surviving : 0.0;
        const double sigma = std::sqrt(var_p) / ((1.0 - p) * efficiency);
        out.p.push_back(p);
        out.mu.push_back(mu);
        out.sigma.push_back(sigma);
        surviving -= c;
    }
    return out;
}

LossEstimate estimate_round_trip_loss(const PeakTable& peaks, int cavity,
                                      const NetworkConfig& cfg) {
    if (cavity != 0 && cavity != cfg.output_cavity) {
        throw validation_error("loss estimation targets cavity 0 or the output cavity");
    }

    // Per-step stay probability of the locus cavity; the extremal locus
    // decays by stay * round-trip transmission each step.
    const double stay = std::norm(cfg.coin.matrix(cavity, cavity));
    if (stay <= 0.0) {
        throw estimation_error("coin never keeps the walker in cavity " + std::to_string(cavity) +
                               "; its extremal locus is empty");
    }

    std::vector<double> xs, ys, ws;
    for (const auto& row : peaks.rows) {
        const bool on_locus = cavity == 0 ? row.k == 0 : (row.k == row.step && row.step >= 1);
        if (!on_locus) continue;
        if (!(row.mu > 0.0) || !(row.sigma > 0.0)) continue;
        if (row.mu < 5.0 * row.sigma) continue;  // below the noise floor
        xs.push_back(static_cast<double>(row.step));
        ys.push_back(std::log(row.mu));
        const double rel = row.sigma / row.mu;
        ws.push_back(1.0 / (rel * rel));
    }
    if (xs.size() < 5) {
        throw estimation_error("only " + std::to_string(xs.size()) +
                               " usable extremal points for cavity " + std::to_string(cavity) +
                               "; need at least 5 above the noise floor");
    }

    double s = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        s += ws[i];
        sx += ws[i] * xs[i];
        sy += ws[i] * ys[i];
        sxx += ws[i] * xs[i] * xs[i];
        sxy += ws[i] * xs[i] * ys[i];
    }
    const double delta = s * sxx - sx * sx;
    if (!(delta > 0.0)) throw estimation_error("degenerate extremal locus fit");
    const double slope = (s * sxy - sx * sy) / delta;
    const double slope_sigma = std::sqrt(s / delta);

    if (slope >= 0.0) {
        std::ostringstream msg;
        msg << "extremal locus of cavity " << cavity << " does not decay (slope " << slope
            << " per step); loss estimation is meaningless";
        throw estimation_error(msg.str());
    }

    // slope = ln(stay * g); remove the coin factor, then the deliberate taps.
    const double g_energy = std::exp(slope) / stay;
    double tap_db = 0.0;
    if (cavity == 0) tap_db += -10.0 * std::log10(cfg.input_coupler_reflectivity);
    if (cavity == cfg.output_cavity) {
        tap_db += -10.0 * std::log10(cfg.output_coupler_reflectivity);
    }

    LossEstimate est;
    est.excess_db = -10.0 * std::log10(g_energy) - tap_db;
    est.sigma_db = 10.0 / std::log(10.0) * slope_sigma;
    est.points_used = static_cast<int>(xs.size());
    return est;
}

NormalizedSteps normalize_steps(const PeakTable& peaks) {
    std::map<int, std::vector<const PeakRow*>> by_step;
    for (const auto& row : peaks.rows) by_step[row.step].push_back(&row);

    NormalizedSteps out;
    for (auto& [step, rows] : by_step) {
        std::sort(rows.begin(), rows.end(),
                  [](const PeakRow* a, const PeakRow* b) { return a->k < b->k; });
        double total = 0.0;
        std::vector<double> energy(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            double e = rows[i]->mu;
            if (e < 0.0) {
                e = 0.0;
                ++out.clamped_values;
            }
            energy[i] = e;
            total += e;
        }
        if (!(total > 0.0)) {
            out.dropped_steps.push_back(step);
            continue;
        }
        WalkDistribution dist;
        dist.step = step;
        dist.positions.reserve(rows.size());
        dist.probs.reserve(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            dist.positions.push_back(PositionKey{rows[i]->k});
            dist.probs.push_back(energy[i] / total);
        }
        out.distributions.push_back(std::move(dist));
    }
    return out;
}

double FidelitySeries::min_value() const {
    double m = 1.0;
    for (double v : values) m = std::min(m, v);
    return m;
}

FidelitySeries fidelity_series(const std::vector<WalkDistribution>& measured,
                               const std::vector<WalkDistribution>& theory) {
    std::map<int, const WalkDistribution*> theory_by_step;
    for (const auto& dist : theory) theory_by_step[dist.step] = &dist;

    FidelitySeries series;
    for (const auto& dist : measured) {
        auto it = theory_by_step.find(dist.step);
        if (it == theory_by_step.end()) {
            throw validation_error("no theory distribution for step " + std::to_string(dist.step));
        }
        series.steps.push_back(dist.step);
        series.values.push_back(fidelity(dist, *it->second));
    }
    return series;
}

std::vector<WalkDistribution> ideal_distributions(const CoinSpec& coin, int n_steps) {
    std::vector<WalkDistribution> out;
    out.reserve(static_cast<std::size_t>(n_steps) + 1);
    WalkDistribution origin;
    origin.step = 0;
    origin.positions.push_back(PositionKey(2 * coin.dims - 1, 0));
    origin.probs.push_back(1.0);
    out.push_back(std::move(origin));
    if (n_steps >= 1) {
        auto rest = evolve(WalkState::localized(coin.dims, 0), coin, n_steps);
        out.insert(out.end(), std::make_move_iterator(rest.begin()),
                   std::make_move_iterator(rest.end()));
    }
    return out;
}

AnalysisResult analyze_events(const EventStream& events, const NetworkConfig& cfg,
                              const DetectorSpec& det, std::uint64_t trials,
                              const AnalysisOptions& options) {
    det.validate();
    if (events.tdc_bin_ps != det.tdc_bin_ps) {
        throw validation_error("event stream TDC bin (" + std::to_string(events.tdc_bin_ps) +
                               " ps) does not match the configured detector (" +
                               std::to_string(det.tdc_bin_ps) + " ps)");
    }
    if (std::abs(events.trial_period_ns - cfg.trial_period_ns) >
        1e-6 * std::max(1.0, cfg.trial_period_ns)) {
        throw validation_error("event stream trial period does not match the configuration");
    }
    if (!events.records.empty() && events.records.back().trial_id >= trials) {
        throw validation_error("event stream contains trial ids beyond the configured trial count");
    }
    return analyze_histogram(build_histogram(events, det.tdc_bin_ps), cfg, det, trials, options);
}

AnalysisResult analyze_histogram(Histogram histogram, const NetworkConfig& cfg,
                                 const DetectorSpec& det, std::uint64_t trials,
                                 const AnalysisOptions& options) {
    det.validate();
    cfg.validate();
    if (histogram.bin_width_ps != det.tdc_bin_ps) {
        throw validation_error("analysis runs at TDC resolution; histogram bin width must equal "
                               "the detector TDC bin");
    }
    if (trials == 0) {
        throw validation_error("analysis needs the trial count that produced the stream");
    }

    AnalysisResult result;
    result.histogram = std::move(histogram);
    const PeakWindows windows = identify_peaks(result.histogram, cfg, options.window_halfwidth_ns);
    const DeadTimeCorrection comp =
        compensate_dead_time(result.histogram.counts, trials, det.efficiency);

    // Background: mean compensated level over every bin outside the windows.
    std::vector<bool> in_window(result.histogram.counts.size(), false);
    for (const auto& w : windows.windows) {
        for (std::int64_t b = w.lo_bin; b < w.hi_bin; ++b) {
            in_window[static_cast<std::size_t>(b)] = true;
        }
    }
    double gap_mu = 0.0, gap_var = 0.0;
    std::int64_t n_gap = 0;
    std::int64_t gap_counts = 0;
    for (std::size_t b = 0; b < in_window.size(); ++b) {
        if (in_window[b]) continue;
        ++n_gap;
        gap_mu += comp.mu[b];
        gap_var += comp.sigma[b] * comp.sigma[b];
        gap_counts += result.histogram.counts[b];
    }
    result.peaks.n_gap_bins = n_gap;
    result.peaks.gap_counts = gap_counts;
    if (n_gap > 0) {
        result.peaks.background_mu_per_bin = gap_mu / static_cast<double>(n_gap);
        result.peaks.background_sigma_per_bin =
            std::sqrt(gap_var) / static_cast<double>(n_gap);
    }

    for (const auto& w : windows.windows) {
        PeakRow row;
        row.step = w.step;
        row.k = w.k;
        double mu = 0.0, var = 0.0;
        for (std::int64_t b = w.lo_bin; b < w.hi_bin; ++b) {
            const auto i = static_cast<std::size_t>(b);
            row.raw_counts += result.histogram.counts[i];
            mu += comp.mu[i];
            var += comp.sigma[i] * comp.sigma[i];
        }
        const auto n_bins = static_cast<double>(w.hi_bin - w.lo_bin);
        row.background = n_bins * result.peaks.background_mu_per_bin;
        const double bg_sigma = n_bins * result.peaks.background_sigma_per_bin;
        row.mu = mu - row.background;
        row.sigma = std::sqrt(var + bg_sigma * bg_sigma);
        result.peaks.rows.push_back(row);
    }
    std::sort(result.peaks.rows.begin(), result.peaks.rows.end(),
              [](const PeakRow& a, const PeakRow& b) {
                  return a.step != b.step ? a.step < b.step : a.k < b.k;
              });

    result.measured = normalize_steps(result.peaks);
    const int step_limit = max_observable_steps(cfg).limit();
    result.theory = ideal_distributions(cfg.coin, step_limit);
    result.fidelity = fidelity_series(result.measured.distributions, result.theory);

    for (int cavity : {0, cfg.output_cavity}) {
        try {
            LossEstimate est = estimate_round_trip_loss(result.peaks, cavity, cfg);
            if (cavity == 0) {
                result.loss_input_cavity = est;
            } else {
                result.loss_output_cavity = est;
            }
        } catch (const estimation_error& err) {
            if (!result.loss_note.empty()) result.loss_note += "; ";
            result.loss_note += err.what();
        }
    }
    return result;
}

}  // namespace cavitywalk
