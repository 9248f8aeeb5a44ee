#include "cavitywalk/detector.hpp"

#include "cavitywalk/errors.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace cavitywalk;

namespace {

PulseTable toy_table(std::vector<std::pair<double, double>> time_mu, double period_ns = 10000.0) {
    PulseTable table;
    table.trial_period_ns = period_ns;
    int step = 0;
    for (const auto& [t, mu] : time_mu) {
        table.entries.push_back(PulseEntry{step++, PositionKey{0}, mu, t});
        table.total_mu += mu;
    }
    return table;
}

DetectorSpec clean_detector() {
    DetectorSpec det;
    det.jitter_fwhm_ps = 0.0;
    det.tdc_bin_ps = 162;
    det.background_rate_per_ns = 0.0;
    det.efficiency = 1.0;
    return det;
}

}  // namespace

TEST_CASE("detector validation") {
    DetectorSpec det;
    CHECK_NOTHROW(det.validate());
    det.efficiency = 0.0;
    CHECK_THROWS_AS(det.validate(), validation_error);
    det = DetectorSpec{};
    det.tdc_bin_ps = 0;
    CHECK_THROWS_AS(det.validate(), validation_error);
}

TEST_CASE("no light and no background yields no events") {
    const auto stream =
        simulate_trials(toy_table({{100.0, 0.0}, {200.0, 0.0}}), clean_detector(), 20000, 42);
    CHECK(stream.records.empty());
}

TEST_CASE("Poisson survival statistics of a single bin") {
    const std::uint64_t trials = 1'000'000;
    const auto stream = simulate_trials(toy_table({{500.0, 0.1}}), clean_detector(), trials, 7);
    const double expected = trials * (1.0 - std::exp(-0.1));  // 95162.6
    const double sigma = std::sqrt(expected * (1.0 - 0.1));
    CHECK(std::abs(static_cast<double>(stream.records.size()) - expected) <= 4.0 * sigma);
}

TEST_CASE("zero jitter lands every event on a nominal bin") {
    const auto det = clean_detector();
    const auto stream = simulate_trials(toy_table({{500.0, 0.05}, {1000.0, 0.05}}), det, 50000, 3);
    const std::uint32_t bin_a = static_cast<std::uint32_t>(500.0 * 1e3 / det.tdc_bin_ps);
    const std::uint32_t bin_b = static_cast<std::uint32_t>(1000.0 * 1e3 / det.tdc_bin_ps);
    REQUIRE(!stream.records.empty());
    for (const auto& rec : stream.records) {
        CHECK((rec.tdc_index == bin_a || rec.tdc_index == bin_b));
    }
}

TEST_CASE("jitter spread matches the configured FWHM") {
    auto det = clean_detector();
    det.jitter_fwhm_ps = 300.0;
    det.tdc_bin_ps = 2;  // fine quantization so the TDC does not widen the peak
    const auto stream = simulate_trials(toy_table({{500.0, 0.05}}), det, 2'000'000, 12345);
    REQUIRE(stream.records.size() > 50000);
    double sum = 0.0, sum2 = 0.0;
    for (const auto& rec : stream.records) {
        const double t_ps = static_cast<double>(rec.tdc_index) * det.tdc_bin_ps;
        sum += t_ps;
        sum2 += t_ps * t_ps;
    }
    const double n = static_cast<double>(stream.records.size());
    const double var = sum2 / n - (sum / n) * (sum / n);
    const double fwhm = std::sqrt(var) * 2.3548200450309493;
    CHECK(fwhm == doctest::Approx(300.0).epsilon(0.05));
}

TEST_CASE("dead time: only the earliest candidate per trial is kept") {
    // A bright early bin shadows a later one.
    const auto det = clean_detector();
    const std::uint64_t trials = 200'000;
    const auto shadowed = simulate_trials(toy_table({{100.0, 0.5}, {900.0, 0.1}}), det, trials, 9);
    const auto open = simulate_trials(toy_table({{100.0, 0.0}, {900.0, 0.1}}), det, trials, 9);

    auto count_bin = [&](const EventStream& s, double t_ns) {
        const std::uint32_t bin = static_cast<std::uint32_t>(t_ns * 1e3 / det.tdc_bin_ps);
        std::size_t c = 0;
        for (const auto& rec : s.records) c += rec.tdc_index == bin;
        return c;
    };
    const auto late_shadowed = count_bin(shadowed, 900.0);
    const auto late_open = count_bin(open, 900.0);
    CHECK(late_shadowed < late_open);
    // Shadowing factor should be near exp(-0.5) = 0.607.
    CHECK(static_cast<double>(late_shadowed) / static_cast<double>(late_open) ==
          doctest::Approx(std::exp(-0.5)).epsilon(0.05));
    // At most one record per trial, strictly increasing ids.
    for (std::size_t i = 1; i < shadowed.records.size(); ++i) {
        CHECK(shadowed.records[i].trial_id > shadowed.records[i - 1].trial_id);
    }
}

TEST_CASE("background events fill the trial window") {
    auto det = clean_detector();
    det.background_rate_per_ns = 1e-5;
    const double period = 10000.0;
    const std::uint64_t trials = 500'000;
    const auto stream = simulate_trials(toy_table({{500.0, 0.0}}, period), det, trials, 21);
    const double lambda = det.background_rate_per_ns * period;
    const double expected = trials * (1.0 - std::exp(-lambda));
    CHECK(std::abs(static_cast<double>(stream.records.size()) - expected) <=
          4.0 * std::sqrt(expected));
    // Roughly half the events in each half of the window.
    std::size_t first_half = 0;
    const std::uint32_t mid = static_cast<std::uint32_t>(period / 2 * 1e3 / det.tdc_bin_ps);
    for (const auto& rec : stream.records) first_half += rec.tdc_index < mid;
    // The one-per-trial rule biases detections early; at lambda = 0.1 the
    // skew is ~2.5%.
    const double frac = static_cast<double>(first_half) / stream.records.size();
    CHECK(frac > 0.48);
    CHECK(frac < 0.56);
}

TEST_CASE("streams are deterministic in the seed and thread count") {
    DetectorSpec det;
    det.background_rate_per_ns = 1e-6;
    const auto table = toy_table({{100.0, 0.02}, {600.0, 0.05}, {4000.0, 0.01}});

    const auto a = simulate_trials(table, det, 300'000, 99, 1);
    const auto b = simulate_trials(table, det, 300'000, 99, 1);
    const auto c = simulate_trials(table, det, 300'000, 99, 4);
    REQUIRE(a.records.size() == b.records.size());
    REQUIRE(a.records.size() == c.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].trial_id == b.records[i].trial_id);
        CHECK(a.records[i].tdc_index == b.records[i].tdc_index);
        CHECK(a.records[i].trial_id == c.records[i].trial_id);
        CHECK(a.records[i].tdc_index == c.records[i].tdc_index);
    }

    const auto other_seed = simulate_trials(table, det, 300'000, 100, 1);
    CHECK(a.records.size() != other_seed.records.size());
}

TEST_CASE("event file round trip") {
    SUBCASE("empty stream writes only the header") {
        EventStream empty;
        empty.tdc_bin_ps = 162;
        empty.trial_period_ns = 33000.0;
        std::ostringstream out;
        write_events(empty, out);
        CHECK(out.str() == "#cavitywalk-events v1 tdc_bin_ps=162 trial_period_ns=33000\n");
    }
    SUBCASE("records survive a round trip") {
        EventStream stream;
        stream.tdc_bin_ps = 162;
        stream.trial_period_ns = 33000.0;
        stream.records = {{0, 12}, {5, 99999}, {1000000, 1}};
        std::ostringstream out;
        write_events(stream, out);
        std::istringstream in(out.str());
        const auto back = read_events(in);
        CHECK(back.tdc_bin_ps == stream.tdc_bin_ps);
        CHECK(back.trial_period_ns == stream.trial_period_ns);
        REQUIRE(back.records.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(back.records[i].trial_id == stream.records[i].trial_id);
            CHECK(back.records[i].tdc_index == stream.records[i].tdc_index);
        }
    }
    SUBCASE("line count equals record count plus the header") {
        DetectorSpec det;
        const auto table = toy_table({{100.0, 0.5}});
        const auto stream = simulate_trials(table, det, 1'000'000, 4);
        std::ostringstream out;
        write_events(stream, out);
        const std::string text = out.str();
        const auto lines = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
        CHECK(lines == stream.records.size() + 1);
    }
    SUBCASE("violations are rejected") {
        std::istringstream bad_header("#wrong v1\n1 2\n");
        CHECK_THROWS_AS(read_events(bad_header), validation_error);
        std::istringstream decreasing(
            "#cavitywalk-events v1 tdc_bin_ps=162 trial_period_ns=33000\n5 1\n5 2\n");
        CHECK_THROWS_AS(read_events(decreasing), validation_error);
        std::istringstream garbled(
            "#cavitywalk-events v1 tdc_bin_ps=162 trial_period_ns=33000\n5 x\n");
        CHECK_THROWS_AS(read_events(garbled), validation_error);
    }
}

TEST_CASE("photon budget precondition") {
    DetectorSpec det;
    auto table = toy_table({{100.0, 1.2}});
    CHECK_THROWS_AS(simulate_trials(table, det, 10, 1), validation_error);
}

TEST_CASE("incremental writer matches the one-shot writer byte for byte") {
    DetectorSpec det;
    det.background_rate_per_ns = 5e-7;
    const auto table = toy_table({{100.0, 0.05}, {2000.0, 0.1}});
    const std::uint64_t trials = 120'000;

    const auto stream = simulate_trials(table, det, trials, 5);
    std::ostringstream one_shot;
    write_events(stream, one_shot);

    const std::string path =
        (std::filesystem::temp_directory_path() / "cavitywalk_writer_parity.txt").string();
    {
        EventFileWriter writer(path, det.tdc_bin_ps, table.trial_period_ns);
        simulate_trials_chunked(table, det, trials, 5, 2,
                                [&](const std::vector<EventRecord>& part) {
                                    writer.append(part);
                                });
        CHECK(writer.records_written() == stream.records.size());
        writer.close();
    }
    std::ifstream in(path, std::ios::binary);
    std::ostringstream from_file;
    from_file << in.rdbuf();
    std::filesystem::remove(path);
    CHECK(from_file.str() == one_shot.str());
}
