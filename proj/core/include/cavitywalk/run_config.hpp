#pragma once

#include "cavitywalk/analysis.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>

namespace cavitywalk {

// One reproducible run: the apparatus constants plus trial/seed/output
// settings, mirroring the flat "key = value" config file one to one.
// Defaults describe the reference two-cavity network.
struct RunConfig {
    double t1_ns = 503.0;
    double t2_ns = 511.0;
    double eta_c = 0.5;
    double r_s1 = 0.99;
    double r_s2 = 0.99;
    double loss_c1_db = 0.50;
    double loss_c2_db = 0.47;
    double coupler_loss_s1_db = 0.0;
    double coupler_loss_s2_db = 0.0;
    double coupler_loss_sc_db = 0.0;
    double pulse_ns = 2.5;
    double trial_period_us = 33.0;
    double detection_path_offset_ns = 1000.0;

    double jitter_fwhm_ps = 300.0;
    int tdc_bin_ps = 162;
    double efficiency = 0.9;
    double background_per_ns = 1e-8;  // counts per ns per trial

    int steps = 62;
    std::uint64_t trials = 5'000'000;
    std::uint64_t seed = 1;
    double input_energy_photons = 10.0;
    double window_halfwidth_ns = 2.0;
    int threads = 0;  // 0 = hardware concurrency
    std::string out;  // default output path; empty = per-command default

    NetworkConfig network() const;
    DetectorSpec detector() const;

    // Component validation plus the cross-cutting rule that `steps` must not
    // exceed what the timing allows.
    void validate() const;

    bool operator==(const RunConfig&) const = default;
};

RunConfig parse_run_config(std::istream& in);
RunConfig parse_run_config_file(const std::string& path);
std::string serialize_run_config(const RunConfig& cfg);

}  // namespace cavitywalk
