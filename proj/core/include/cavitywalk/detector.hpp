#pragma once

#include "cavitywalk/cavity.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace cavitywalk {

// Single-photon detector + time-to-digital converter. The reset time is as
// long as the useful trial window, so at most one detection is recorded per
// trial: the earliest candidate wins.
struct DetectorSpec {
    double jitter_fwhm_ps = 300.0;        // Gaussian FWHM of the detection time
    int tdc_bin_ps = 162;                 // TDC quantization step
    double background_rate_per_ns = 0.0;  // uniform background, counts per ns per trial
    double efficiency = 1.0;

    void validate() const;
};

struct EventRecord {
    std::uint64_t trial_id = 0;
    std::uint32_t tdc_index = 0;  // detection time in TDC bins from trial start
};

struct EventStream {
    int tdc_bin_ps = 162;
    double trial_period_ns = 0.0;
    std::vector<EventRecord> records;  // trial_id strictly increasing
};

// Draws per-trial detections from the pulse table: per-bin photon candidates
// are Poisson with mean mu * efficiency, background candidates are Poisson
// over the trial window, every candidate time gets Gaussian jitter and TDC
// quantization, and only the earliest candidate of each trial is kept.
// Reproducible: each trial's randomness is a pure function of (seed,
// trial_id), so the stream is byte-identical for any thread count.
EventStream simulate_trials(const PulseTable& table, const DetectorSpec& det,
                            std::uint64_t trials, std::uint64_t seed, int threads = 0);

// Streaming variant: delivers records in ascending trial order through sink,
// keeping memory flat for large trial counts.
void simulate_trials_chunked(const PulseTable& table, const DetectorSpec& det,
                             std::uint64_t trials, std::uint64_t seed, int threads,
                             const std::function<void(const std::vector<EventRecord>&)>& sink);

// Event file: "#cavitywalk-events v1 tdc_bin_ps=<int> trial_period_ns=<real>"
// then one "<trial_id> <tdc_bin_index>" line per record.
void write_events(const EventStream& stream, std::ostream& out);
void write_events_file(const EventStream& stream, const std::string& path);
EventStream read_events(std::istream& in);
EventStream read_events_file(const std::string& path);

// Incremental writer used when events are generated in chunks.
class EventFileWriter {
public:
    EventFileWriter(const std::string& path, int tdc_bin_ps, double trial_period_ns);
    ~EventFileWriter();
    EventFileWriter(const EventFileWriter&) = delete;
    EventFileWriter& operator=(const EventFileWriter&) = delete;

    void append(const std::vector<EventRecord>& records);
    std::uint64_t records_written() const { return written_; }
    void close();

private:
    struct Impl;
    Impl* impl_;
    std::uint64_t written_ = 0;
};

}  // namespace cavitywalk
