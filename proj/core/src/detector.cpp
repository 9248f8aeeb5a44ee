#include "cavitywalk/detector.hpp"

#include "cavitywalk/errors.hpp"
#include "cavitywalk/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

namespace cavitywalk {

namespace {

constexpr double kFwhmToSigma = 2.3548200450309493;  // 2*sqrt(2*ln 2)

struct TrialModel {
    std::vector<double> cum_mu;    // cumulative per-bin means (pre-efficiency)
    std::vector<double> times_ns;  // nominal bin times, ascending
    double lambda_photon = 0.0;    // total photon candidate mean, post-efficiency
    double lambda_bg = 0.0;
    double sigma_jitter_ns = 0.0;
    double tdc_ns = 0.0;
    double period_ns = 0.0;
};

TrialModel build_model(const PulseTable& table, const DetectorSpec& det) {
    TrialModel m;
    m.tdc_ns = det.tdc_bin_ps * 1e-3;
    m.period_ns = table.trial_period_ns;
    m.sigma_jitter_ns = det.jitter_fwhm_ps * 1e-3 / kFwhmToSigma;
    m.lambda_bg = det.background_rate_per_ns * table.trial_period_ns;

    double cum = 0.0;
    for (const auto& e : table.entries) {
        if (e.mu <= 0.0) continue;
        cum += e.mu;
        m.cum_mu.push_back(cum);
        m.times_ns.push_back(e.time_ns);
    }
    m.lambda_photon = cum * det.efficiency;
    return m;
}

inline std::uint32_t quantize(double t_ns, double tdc_ns) {
    if (t_ns <= 0.0) return 0;
    const double idx = std::floor(t_ns / tdc_ns);
    if (idx >= static_cast<double>(std::numeric_limits<std::uint32_t>::max())) {
        return std::numeric_limits<std::uint32_t>::max();
    }
    return static_cast<std::uint32_t>(idx);
}

// Runs trials [first, last) and appends the detections.
void run_range(const TrialModel& m, std::uint64_t seed, std::uint64_t first, std::uint64_t last,
               std::vector<EventRecord>& out) {
    const double total_mu = m.cum_mu.empty() ? 0.0 : m.cum_mu.back();
    for (std::uint64_t trial = first; trial < last; ++trial) {
        Xoshiro256ss rng(seed, trial);
        bool hit = false;
        std::uint32_t best = std::numeric_limits<std::uint32_t>::max();

        const int n_photons = rng.poisson(m.lambda_photon);
        for (int i = 0; i < n_photons; ++i) {
            const double u = rng.uniform() * total_mu;
            const std::size_t idx =
                std::upper_bound(m.cum_mu.begin(), m.cum_mu.end(), u) - m.cum_mu.begin();
            const double t = m.times_ns[std::min(idx, m.times_ns.size() - 1)] +
                             m.sigma_jitter_ns * rng.gaussian();
            best = std::min(best, quantize(t, m.tdc_ns));
            hit = true;
        }
        const int n_bg = rng.poisson(m.lambda_bg);
        for (int i = 0; i < n_bg; ++i) {
            const double t = rng.uniform() * m.period_ns;
            best = std::min(best, quantize(t, m.tdc_ns));
            hit = true;
        }
        if (hit) out.push_back(EventRecord{trial, best});
    }
}

}  // namespace

void DetectorSpec::validate() const {
    if (jitter_fwhm_ps < 0.0) throw validation_error("detector jitter must be >= 0");
    if (tdc_bin_ps <= 0) throw validation_error("TDC bin width must be > 0");
    if (background_rate_per_ns < 0.0) throw validation_error("background rate must be >= 0");
    if (!(efficiency > 0.0) || efficiency > 1.0) {
        throw validation_error("detector efficiency must lie in (0,1]");
    }
}

void simulate_trials_chunked(const PulseTable& table, const DetectorSpec& det,
                             std::uint64_t trials, std::uint64_t seed, int threads,
                             const std::function<void(const std::vector<EventRecord>&)>& sink) {
    det.validate();
    if (table.total_mu >= 1.0) {
        throw validation_error("pulse table totals >= 1 mean photon per trial");
    }
    const double period_bins = table.trial_period_ns * 1e3 / det.tdc_bin_ps;
    if (period_bins >= static_cast<double>(std::numeric_limits<std::uint32_t>::max())) {
        throw validation_error("trial period does not fit the TDC index range");
    }

    const TrialModel model = build_model(table, det);
    unsigned n_threads = threads > 0 ? static_cast<unsigned>(threads)
                                     : std::max(1u, std::thread::hardware_concurrency());

    const std::uint64_t chunk_size = 4'000'000;
    const double p_detect = 1.0 - std::exp(-(model.lambda_photon + model.lambda_bg));

    std::uint64_t done = 0;
    while (done < trials) {
        const std::uint64_t chunk = std::min(chunk_size, trials - done);
        const std::uint64_t per_thread = (chunk + n_threads - 1) / n_threads;

        std::vector<std::vector<EventRecord>> parts;
        std::vector<std::thread> pool;
        std::uint64_t start = done;
        while (start < done + chunk) {
            const std::uint64_t stop = std::min(start + per_thread, done + chunk);
            parts.emplace_back();
            parts.back().reserve(static_cast<std::size_t>((stop - start) * p_detect * 1.1) + 64);
            start = stop;
        }
        start = done;
        for (std::size_t i = 0; i < parts.size(); ++i) {
            const std::uint64_t stop = std::min(start + per_thread, done + chunk);
            pool.emplace_back(run_range, std::cref(model), seed, start, stop,
                              std::ref(parts[i]));
            start = stop;
        }
        for (auto& t : pool) t.join();
        for (const auto& part : parts) {
            if (!part.empty()) sink(part);
        }
        done += chunk;
    }
}

EventStream simulate_trials(const PulseTable& table, const DetectorSpec& det,
                            std::uint64_t trials, std::uint64_t seed, int threads) {
    EventStream stream;
    stream.tdc_bin_ps = det.tdc_bin_ps;
    stream.trial_period_ns = table.trial_period_ns;
    simulate_trials_chunked(table, det, trials, seed, threads,
                            [&stream](const std::vector<EventRecord>& part) {
                                stream.records.insert(stream.records.end(), part.begin(),
                                                      part.end());
                            });
    return stream;
}

namespace {

std::string format_header(int tdc_bin_ps, double trial_period_ns) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "#cavitywalk-events v1 tdc_bin_ps=%d trial_period_ns=%.17g",
                  tdc_bin_ps, trial_period_ns);
    return buf;
}

void append_records(std::ostream& out, const std::vector<EventRecord>& records) {
    char line[48];
    std::string buffer;
    buffer.reserve(records.size() * 16);
    for (const auto& r : records) {
        const int n = std::snprintf(line, sizeof(line), "%llu %u\n",
                                    static_cast<unsigned long long>(r.trial_id), r.tdc_index);
        buffer.append(line, n);
    }
    out << buffer;
}

}  // namespace

void write_events(const EventStream& stream, std::ostream& out) {
    out << format_header(stream.tdc_bin_ps, stream.trial_period_ns) << '\n';
    append_records(out, stream.records);
    if (!out) throw estimation_error("failure while writing event stream");
}

void write_events_file(const EventStream& stream, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw validation_error("cannot open event file for writing: " + path);
    write_events(stream, out);
}

EventStream read_events(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw validation_error("event stream is empty (missing header)");

    EventStream stream;
    {
        int tdc = 0;
        double period = 0.0;
        if (std::sscanf(line.c_str(), "#cavitywalk-events v1 tdc_bin_ps=%d trial_period_ns=%lf",
                        &tdc, &period) != 2) {
            throw validation_error("bad event file header: " + line);
        }
        if (tdc <= 0 || !(period > 0.0)) {
            throw validation_error("event file header has non-positive timing fields");
        }
        stream.tdc_bin_ps = tdc;
        stream.trial_period_ns = period;
    }

    std::uint64_t line_no = 1;
    bool have_prev = false;
    std::uint64_t prev_trial = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const char* begin = line.data();
        const char* end = begin + line.size();
        EventRecord rec;
        auto r1 = std::from_chars(begin, end, rec.trial_id);
        if (r1.ec != std::errc() || r1.ptr == end || *r1.ptr != ' ') {
            throw validation_error("bad event record at line " + std::to_string(line_no));
        }
        auto r2 = std::from_chars(r1.ptr + 1, end, rec.tdc_index);
        if (r2.ec != std::errc() || r2.ptr != end) {
            throw validation_error("bad event record at line " + std::to_string(line_no));
        }
        if (have_prev && rec.trial_id <= prev_trial) {
            throw validation_error("trial ids must be strictly increasing (line " +
                                   std::to_string(line_no) + ")");
        }
        prev_trial = rec.trial_id;
        have_prev = true;
        stream.records.push_back(rec);
    }
    return stream;
}

EventStream read_events_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("cannot open event file: " + path);
    return read_events(in);
}

struct EventFileWriter::Impl {
    std::ofstream out;
};

EventFileWriter::EventFileWriter(const std::string& path, int tdc_bin_ps, double trial_period_ns)
    : impl_(new Impl) {
    impl_->out.open(path, std::ios::binary);
    if (!impl_->out) {
        delete impl_;
        throw validation_error("cannot open event file for writing: " + path);
    }
    impl_->out << format_header(tdc_bin_ps, trial_period_ns) << '\n';
}

EventFileWriter::~EventFileWriter() { delete impl_; }

void EventFileWriter::append(const std::vector<EventRecord>& records) {
    append_records(impl_->out, records);
    if (!impl_->out) throw estimation_error("failure while writing event stream");
    written_ += records.size();
}

void EventFileWriter::close() {
    impl_->out.close();
    if (impl_->out.fail()) throw estimation_error("failure while closing event stream");
}

}  // namespace cavitywalk
