#pragma once

#include "cavitywalk/detector.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cavitywalk {

struct Histogram {
    int bin_width_ps = 162;
    double origin_ps = 0.0;
    std::vector<std::int64_t> counts;
    std::int64_t overflow = 0;  // events past the trial window
};

// Counts events over one trial window; bin_width_ps must be a multiple of
// the stream's TDC bin.
Histogram build_histogram(const EventStream& events, int bin_width_ps);

// Integration window for one (step, position) peak, in histogram bins.
struct PeakWindow {
    int step = 0;
    int k = 0;
    std::int64_t lo_bin = 0;  // inclusive
    std::int64_t hi_bin = 0;  // exclusive
    double center_ns = 0.0;
};

struct PeakWindows {
    int bin_width_ps = 162;
    std::vector<PeakWindow> windows;  // ordered by lo_bin, pairwise disjoint
};

// Template-driven assignment: every (N,k) with N up to the config's step
// limit gets a window centered on its nominal bin time. Windows that would
// overlap (halfwidth too large for the bin spacing) are a configuration
// error. Bins outside every window are the background regions.
PeakWindows identify_peaks(const Histogram& hist, const NetworkConfig& cfg,
                           double window_halfwidth_ns);

struct DeadTimeCorrection {
    std::vector<double> p;      // per-slot detection probability among surviving trials
    std::vector<double> mu;     // per-slot mean photons, efficiency-corrected
    std::vector<double> sigma;  // binomial error propagated onto mu
};

// Inverts the one-detection-per-trial policy: slot t's probability is
// c_t / (trials - sum of earlier counts), and the mean photon number is the
// Poisson inversion -ln(1-p)/efficiency. Slots must be in time order.
DeadTimeCorrection compensate_dead_time(const std::vector<std::int64_t>& counts,
                                        std::uint64_t trials, double efficiency = 1.0);

struct PeakRow {
    int step = 0;
    int k = 0;
    std::int64_t raw_counts = 0;
    double background = 0.0;  // mean photons subtracted from this window
    double mu = 0.0;          // compensated, background-subtracted mean photons
    double sigma = 0.0;
};

struct PeakTable {
    std::vector<PeakRow> rows;  // ordered by (step, k)
    double background_mu_per_bin = 0.0;
    double background_sigma_per_bin = 0.0;
    std::int64_t gap_counts = 0;
    std::int64_t n_gap_bins = 0;
};

struct LossEstimate {
    double excess_db = 0.0;  // per round trip, coupler reflectivities removed
    double sigma_db = 0.0;
    int points_used = 0;
};

// Fits the exponential decay of the extremal locus that stays in `cavity`
// every step (k=0 for cavity 0, k=N for the output cavity), corrects the
// per-step slope for the coin's stay probability |U_cc|^2 and for the
// deliberate tap reflectivities, and reports the residual excess loss in dB
// per round trip.
LossEstimate estimate_round_trip_loss(const PeakTable& peaks, int cavity,
                                      const NetworkConfig& cfg);

struct NormalizedSteps {
    std::vector<WalkDistribution> distributions;
    int clamped_values = 0;          // negative energies clamped to zero
    std::vector<int> dropped_steps;  // steps with no positive energy
};

// Per-step normalization of the compensated peak energies.
NormalizedSteps normalize_steps(const PeakTable& peaks);

struct FidelitySeries {
    std::vector<int> steps;
    std::vector<double> values;

    double min_value() const;
};

// Bhattacharyya fidelity per step; every measured step must exist in the
// theory set.
FidelitySeries fidelity_series(const std::vector<WalkDistribution>& measured,
                               const std::vector<WalkDistribution>& theory);

// Lossless walk distributions for steps 0..n (step 0 is the launch bin).
std::vector<WalkDistribution> ideal_distributions(const CoinSpec& coin, int n_steps);

struct AnalysisOptions {
    double window_halfwidth_ns = 2.0;
};

struct AnalysisResult {
    Histogram histogram;
    PeakTable peaks;
    NormalizedSteps measured;
    std::vector<WalkDistribution> theory;
    FidelitySeries fidelity;
    std::optional<LossEstimate> loss_input_cavity;   // k=0 locus
    std::optional<LossEstimate> loss_output_cavity;  // k=N locus
    std::string loss_note;  // why a loss estimate is missing, when it is
};

// The full chain: histogram, peak windows, dead-time compensation,
// background subtraction, per-step normalization, loss fits, and fidelity
// against the ideal walk for the configured coin.
AnalysisResult analyze_events(const EventStream& events, const NetworkConfig& cfg,
                              const DetectorSpec& det, std::uint64_t trials,
                              const AnalysisOptions& options = {});

// Same chain starting from a pre-built histogram at TDC resolution, for
// callers that accumulate counts on the fly instead of keeping every record.
AnalysisResult analyze_histogram(Histogram histogram, const NetworkConfig& cfg,
                                 const DetectorSpec& det, std::uint64_t trials,
                                 const AnalysisOptions& options = {});

}  // namespace cavitywalk
