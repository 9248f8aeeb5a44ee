#include "cavitywalk/analysis.hpp"

#include "cavitywalk/errors.hpp"
#include "cavitywalk/run_config.hpp"

#include "doctest.h"

#include <cmath>

using namespace cavitywalk;

namespace {

EventStream stream_with(std::vector<EventRecord> records, int tdc_bin_ps = 162,
                        double period_ns = 33000.0) {
    EventStream s;
    s.tdc_bin_ps = tdc_bin_ps;
    s.trial_period_ns = period_ns;
    s.records = std::move(records);
    return s;
}

PeakTable table_from(std::vector<PeakRow> rows) {
    PeakTable t;
    t.rows = std::move(rows);
    return t;
}

}  // namespace

TEST_CASE("histogram construction") {
    SUBCASE("empty stream gives all-zero counts") {
        const auto hist = build_histogram(stream_with({}), 162);
        CHECK(hist.counts.size() == static_cast<std::size_t>(std::ceil(33000e3 / 162.0)));
        for (auto c : hist.counts) CHECK(c == 0);
        CHECK(hist.overflow == 0);
    }
    SUBCASE("integer division maps TDC indexes to coarser bins") {
        const auto hist = build_histogram(stream_with({{0, 10}}), 324);
        CHECK(hist.counts[5] == 1);
    }
    SUBCASE("width must be a positive multiple of the TDC bin") {
        CHECK_THROWS_AS(build_histogram(stream_with({}), 163), validation_error);
        CHECK_THROWS_AS(build_histogram(stream_with({}), 0), validation_error);
    }
    SUBCASE("events past the trial window land in the overflow bucket") {
        const auto hist = build_histogram(stream_with({{0, 4'000'000}}), 162);
        CHECK(hist.overflow == 1);
    }
}

TEST_CASE("peak window identification") {
    RunConfig cfg;
    const auto net = cfg.network();
    const auto hist = build_histogram(stream_with({}), 162);

    SUBCASE("the reference config yields one window per (step, position)") {
        const auto windows = identify_peaks(hist, net, 2.0);
        CHECK(windows.windows.size() == 2016);  // sum over N<=62 of (N+1)
        for (std::size_t i = 1; i < windows.windows.size(); ++i) {
            CHECK(windows.windows[i - 1].hi_bin <= windows.windows[i].lo_bin);
        }
    }
    SUBCASE("halfwidths beyond half the bin spacing collide") {
        CHECK_THROWS_AS(identify_peaks(hist, net, 5.0), validation_error);
    }
}

TEST_CASE("dead-time compensation") {
    SUBCASE("shadowed second bin is fully recovered") {
        const std::uint64_t m = 1'000'000;
        const auto out = compensate_dead_time({static_cast<std::int64_t>(m / 2),
                                               static_cast<std::int64_t>(m / 4)},
                                              m);
        CHECK(out.p[0] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(out.p[1] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(out.mu[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
        CHECK(out.mu[1] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    }
    SUBCASE("Poisson inversion of a single bin") {
        const std::uint64_t m = 1'000'000;
        const auto counts = static_cast<std::int64_t>(std::llround(m * (1.0 - std::exp(-0.1))));
        const auto out = compensate_dead_time({counts}, m);
        CHECK(out.mu[0] == doctest::Approx(0.1).epsilon(1e-5));
    }
    SUBCASE("all-zero counts stay zero") {
        const auto out = compensate_dead_time({0, 0, 0}, 1000);
        for (double mu : out.mu) CHECK(mu == 0.0);
        for (double s : out.sigma) CHECK(s == 0.0);
    }
    SUBCASE("efficiency scales the inversion") {
        const std::uint64_t m = 1'000'000;
        const auto counts = static_cast<std::int64_t>(std::llround(m * (1.0 - std::exp(-0.05))));
        const auto out = compensate_dead_time({counts}, m, 0.5);
        CHECK(out.mu[0] == doctest::Approx(0.1).epsilon(1e-4));
    }
    SUBCASE("exhausting the trial budget is a saturation error") {
        CHECK_THROWS_AS(compensate_dead_time({600, 600}, 1000), estimation_error);
        CHECK_THROWS_AS(compensate_dead_time({1000, 5}, 1000), estimation_error);
    }
    SUBCASE("the sequential correction inverts the policy exactly") {
        // Forward model with exact expectations, then invert.
        const std::vector<double> mu_true{0.18, 0.02, 0.12, 0.2, 0.001, 0.07};
        const double m = 1e9;  // large enough that rounding is negligible
        std::vector<std::int64_t> counts;
        double surviving = m;
        for (double mu : mu_true) {
            const double p = 1.0 - std::exp(-mu);
            counts.push_back(static_cast<std::int64_t>(std::llround(surviving * p)));
            surviving -= surviving * p;
        }
        const auto out = compensate_dead_time(counts, static_cast<std::uint64_t>(m));
        for (std::size_t i = 0; i < mu_true.size(); ++i) {
            CHECK(out.mu[i] == doctest::Approx(mu_true[i]).epsilon(1e-6));
        }
    }
}

TEST_CASE("round-trip loss estimation") {
    RunConfig run;
    const auto net = run.network();
    const double g1 = 0.99 * std::pow(10.0, -0.050);
    const double g2 = 0.99 * std::pow(10.0, -0.047);

    auto locus_rows = [](int cavity, double eta, double g, int n_max) {
        std::vector<PeakRow> rows;
        const double stay = eta;
        for (int n = cavity == 0 ? 0 : 1; n <= n_max; ++n) {
            PeakRow row;
            row.step = n;
            row.k = cavity == 0 ? 0 : n;
            row.mu = 0.01 * std::pow(stay * g, n);
            row.sigma = 0.01 * row.mu;
            rows.push_back(row);
        }
        return rows;
    };

    SUBCASE("recovers the configured excess losses from noise-free loci") {
        const auto est1 = estimate_round_trip_loss(table_from(locus_rows(0, 0.5, g1, 12)), 0, net);
        CHECK(est1.excess_db == doctest::Approx(0.50).epsilon(1e-9));
        const auto est2 = estimate_round_trip_loss(table_from(locus_rows(1, 0.5, g2, 12)), 1, net);
        CHECK(est2.excess_db == doctest::Approx(0.47).epsilon(1e-9));
    }

    SUBCASE("the coin stay factor is removed regardless of the bias") {
        RunConfig biased_run;
        biased_run.eta_c = 0.8;
        const auto biased_net = biased_run.network();
        // k=N locus decays by stay * g per step with stay = |U11|^2 = 0.8.
        const auto est =
            estimate_round_trip_loss(table_from(locus_rows(1, 0.8, g2, 12)), 1, biased_net);
        CHECK(est.excess_db == doctest::Approx(0.47).epsilon(1e-9));
    }

    SUBCASE("lossless taps leave only the coin factor") {
        auto open = net;
        open.input_coupler_reflectivity = 1.0;
        open.output_coupler_reflectivity = 1.0;
        const auto est =
            estimate_round_trip_loss(table_from(locus_rows(0, 0.5, 1.0, 10)), 0, open);
        CHECK(est.excess_db == doctest::Approx(0.0).epsilon(1e-9));
    }

    SUBCASE("too few usable points") {
        CHECK_THROWS_AS(estimate_round_trip_loss(table_from(locus_rows(0, 0.5, g1, 3)), 0, net),
                        estimation_error);
    }

    SUBCASE("invariant to overall input-energy scaling") {
        auto rows = locus_rows(0, 0.5, g1, 12);
        const auto base = estimate_round_trip_loss(table_from(rows), 0, net);
        for (auto& row : rows) {
            row.mu *= 7.3;
            row.sigma *= 7.3;
        }
        const auto scaled = estimate_round_trip_loss(table_from(rows), 0, net);
        CHECK(scaled.excess_db == doctest::Approx(base.excess_db).epsilon(1e-12));
    }

    SUBCASE("growth instead of decay is rejected") {
        auto rows = locus_rows(0, 0.5, g1, 10);
        for (auto& row : rows) row.mu = 0.01 * std::pow(1.2, row.step);
        for (auto& row : rows) row.sigma = 0.01 * row.mu;
        CHECK_THROWS_AS(estimate_round_trip_loss(table_from(rows), 0, net), estimation_error);
    }
}

TEST_CASE("per-step normalization") {
    SUBCASE("plain division") {
        auto out = normalize_steps(table_from({{1, 0, 0, 0.0, 2.0, 0.1},
                                               {1, 1, 0, 0.0, 2.0, 0.1}}));
        REQUIRE(out.distributions.size() == 1);
        CHECK(out.distributions[0].probs[0] == doctest::Approx(0.5));
        CHECK(out.distributions[0].probs[1] == doctest::Approx(0.5));
    }
    SUBCASE("three-way split with a zero") {
        auto out = normalize_steps(table_from({{2, 0, 0, 0.0, 3.0, 0.1},
                                               {2, 1, 0, 0.0, 1.0, 0.1},
                                               {2, 2, 0, 0.0, 0.0, 0.1}}));
        REQUIRE(out.distributions.size() == 1);
        CHECK(out.distributions[0].probs[0] == doctest::Approx(0.75));
        CHECK(out.distributions[0].probs[1] == doctest::Approx(0.25));
        CHECK(out.distributions[0].probs[2] == 0.0);
    }
    SUBCASE("negative energies clamp to zero with a diagnostic") {
        auto out = normalize_steps(table_from({{1, 0, 0, 0.0, -0.001, 0.1},
                                               {1, 1, 0, 0.0, 1.0, 0.1}}));
        CHECK(out.clamped_values == 1);
        CHECK(out.distributions[0].probs[0] == 0.0);
        CHECK(out.distributions[0].probs[1] == doctest::Approx(1.0));
    }
    SUBCASE("steps without positive energy are dropped") {
        auto out = normalize_steps(table_from({{3, 0, 0, 0.0, -0.5, 0.1},
                                               {3, 1, 0, 0.0, 0.0, 0.1},
                                               {4, 0, 0, 0.0, 1.0, 0.1}}));
        REQUIRE(out.dropped_steps.size() == 1);
        CHECK(out.dropped_steps[0] == 3);
        REQUIRE(out.distributions.size() == 1);
        CHECK(out.distributions[0].step == 4);
    }
}

TEST_CASE("fidelity series") {
    const auto theory = ideal_distributions(coin_from_bias(0.5), 10);
    SUBCASE("theory against itself is identically one") {
        const auto series = fidelity_series(theory, theory);
        for (double f : series.values) CHECK(f == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(series.min_value() == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("bias mismatch is visible at later steps") {
        const auto other = ideal_distributions(coin_from_bias(0.8), 10);
        const auto series = fidelity_series(theory, other);
        CHECK(series.values.back() < 0.99);
    }
    SUBCASE("missing steps are an alignment error") {
        auto truncated = theory;
        truncated.pop_back();
        CHECK_THROWS_AS(fidelity_series(theory, truncated), validation_error);
        CHECK_NOTHROW(fidelity_series(truncated, theory));
    }
}

TEST_CASE("ideal distributions include the launch bin") {
    const auto dists = ideal_distributions(coin_from_bias(0.5), 2);
    REQUIRE(dists.size() == 3);
    CHECK(dists[0].step == 0);
    CHECK(dists[0].probs[0] == 1.0);
    CHECK(dists[2].probs[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(dists[2].probs[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(dists[2].probs[2] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("pipeline round trip at reduced scale") {
    RunConfig run;
    run.steps = 20;
    run.trials = 400'000;
    run.trial_period_us = 12.0;  // shorter window, same physics for 20 steps
    const auto net = run.network();
    const auto det = run.detector();

    const auto table = tapped_pulse_table(net, run.steps, run.input_energy_photons);
    const auto stream = simulate_trials(table, det, run.trials, 2024);
    const auto result = analyze_events(stream, net, det, run.trials);

    // Early steps carry plenty of statistics at this scale.
    for (std::size_t i = 0; i < result.fidelity.steps.size(); ++i) {
        if (result.fidelity.steps[i] <= 12) CHECK(result.fidelity.values[i] > 0.99);
    }
    REQUIRE(result.loss_input_cavity.has_value());
    REQUIRE(result.loss_output_cavity.has_value());
    CHECK(std::abs(result.loss_input_cavity->excess_db - 0.50) < 0.1);
    CHECK(std::abs(result.loss_output_cavity->excess_db - 0.47) < 0.1);

    SUBCASE("reported distributions sum to one") {
        for (const auto& dist : result.measured.distributions) {
            double sum = 0.0;
            for (double p : dist.probs) sum += p;
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        }
    }

    SUBCASE("a uniform background shifts no peak beyond its error bar") {
        auto noisy_det = det;
        noisy_det.background_rate_per_ns = 2e-7;
        const auto noisy_stream = simulate_trials(table, noisy_det, run.trials, 2024);
        const auto noisy = analyze_events(noisy_stream, net, noisy_det, run.trials);
        REQUIRE(noisy.peaks.rows.size() == result.peaks.rows.size());
        for (std::size_t i = 0; i < result.peaks.rows.size(); ++i) {
            const auto& clean_row = result.peaks.rows[i];
            const auto& noisy_row = noisy.peaks.rows[i];
            if (clean_row.mu < 1e-5) continue;  // below the floor either way
            const double err =
                3.0 * std::sqrt(clean_row.sigma * clean_row.sigma +
                                noisy_row.sigma * noisy_row.sigma);
            CHECK(std::abs(noisy_row.mu - clean_row.mu) <= err);
        }
    }
}

TEST_CASE("analysis input validation") {
    RunConfig run;
    const auto net = run.network();
    const auto det = run.detector();

    SUBCASE("TDC mismatch is refused") {
        auto stream = stream_with({}, 100, net.trial_period_ns);
        CHECK_THROWS_AS(analyze_events(stream, net, det, 1000), validation_error);
    }
    SUBCASE("trial-period mismatch is refused") {
        auto stream = stream_with({}, det.tdc_bin_ps, 999.0);
        CHECK_THROWS_AS(analyze_events(stream, net, det, 1000), validation_error);
    }
    SUBCASE("trial ids beyond the trial count are refused") {
        auto stream = stream_with({{5000, 100}}, det.tdc_bin_ps, net.trial_period_ns);
        CHECK_THROWS_AS(analyze_events(stream, net, det, 1000), validation_error);
    }
    SUBCASE("an empty stream drops every step") {
        auto stream = stream_with({}, det.tdc_bin_ps, net.trial_period_ns);
        const auto result = analyze_events(stream, net, det, 1000);
        CHECK(result.measured.distributions.empty());
        CHECK(result.measured.dropped_steps.size() == 63);
        CHECK(!result.loss_input_cavity.has_value());
        CHECK(!result.loss_note.empty());
    }
}
