#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "../support/paths.hpp"
#include "qdemux/analytics/estimators.hpp"
#include "qdemux/analytics/histogram.hpp"
#include "qdemux/analytics/rate_model.hpp"
#include "qdemux/cli/commands.hpp"
#include "qdemux/core/tag_io.hpp"
#include "qdemux/sim/simulation.hpp"

using namespace qdemux;

namespace {

// Peaks of `area` counts every `period` ps, residue r of a 4-cycle scaled by
// weight[r]; bin width 100 ps, origin 0.
CorrelationHistogram comb(TimePs period, int n_periods, const std::vector<std::uint64_t>& weight)
{
    CorrelationHistogram h;
    h.bin_width_ps = 100;
    h.counts.assign(static_cast<std::size_t>(period * n_periods / 100), 0);
    for (int k = 0; k < n_periods; ++k)
        h.counts[static_cast<std::size_t>(k * period / 100)] = weight[static_cast<std::size_t>(k % 4)];
    return h;
}

}  // namespace

TEST_SUITE("analytics")
{
    TEST_CASE("histogram basics")
    {
        const TagStream starts = {1000, 50'000, 90'000};
        const auto h = build_histogram(starts, starts, {0, 1000, 100});
        REQUIRE(h.counts.size() == 10);
        CHECK(h.counts[0] == 3);
        CHECK(h.total() == 3);
        CHECK(h.n_starts == 3);
        CHECK(h.bin_center(0) == doctest::Approx(50.0));
        CHECK(h.integrate(0, 100) == 3);
        CHECK(h.integrate(100, 1000) == 0);
        const auto every_other = build_histogram(starts, starts, {0, 1000, 100}, 2);
        CHECK(every_other.n_starts == 2);
        CHECK(HistogramRange{-50, 1001, 100}.bin_count() == 11);
    }

    TEST_CASE("divided sync starts put main peaks one cycle apart")
    {
        const PulseClock clock(76.2e6, 4000);
        TagStream stops;
        for (std::uint64_t p = 0; p < clock.n_pulses(); p += 4)
            stops.push_back(pulse_time(p, clock) + 500);
        const auto h = build_sync_histogram(clock, stops, {0, 3 * 4 * clock.pulse_period_ps(), 100}, 4);
        std::vector<double> peaks;
        for (std::size_t i = 0; i < h.counts.size(); ++i)
            if (h.counts[i] > 0)
                peaks.push_back(h.bin_center(i));
        REQUIRE(peaks.size() == 3);
        CHECK(peaks[1] - peaks[0] == doctest::Approx(52'492).epsilon(0.002));
        CHECK(peaks[2] - peaks[1] == doctest::Approx(52'492).epsilon(0.002));
    }

    TEST_CASE("sync histogram equals the explicit start stream")
    {
        const PulseClock clock(76.2e6, 20'000);
        RngStream rng(1, stream_id(StreamKind::test, 40));
        TagStream stops;
        for (TimePs t = 0; t < clock.duration_ps(); t += 1 + static_cast<TimePs>(rng.uniform() * 20'000))
            stops.push_back(t);
        for (const int d : {1, 4}) {
            for (const TimePs offset : {TimePs{0}, TimePs{3'000}}) {
                TagStream starts;
                for (std::uint64_t j = 0; j * static_cast<std::uint64_t>(d) < clock.n_pulses(); ++j)
                    starts.push_back(pulse_time(j * static_cast<std::uint64_t>(d), clock) + offset);
                const HistogramRange range{-20'000, 160'000, 100};
                const auto a = build_histogram(starts, stops, range);
                const auto b = build_sync_histogram(clock, stops, range, d, offset);
                CHECK(a.counts == b.counts);
                CHECK(a.n_starts == b.n_starts);
            }
        }
    }

    TEST_CASE("histogram csv")
    {
        CorrelationHistogram h;
        h.bin_width_ps = 100;
        h.origin_ps = -200;
        h.counts = {1, 0, 7};
        std::ostringstream os;
        write_histogram_csv(os, h);
        CHECK(os.str() == "bin_start_ps,count\n-200,1\n-100,0\n0,7\n");
    }

    TEST_CASE("four-tag csv fixture")
    {
        std::ifstream in(testing::source_dir() / "tests" / "golden" / "four_tags.csv");
        REQUIRE(in);
        const auto streams = split_by_channel(read_tags(in, TagFormat::csv), 2);
        const auto h = build_histogram(streams[0], streams[1], {-1000, 2000, 500});
        std::ostringstream os;
        write_histogram_csv(os, h);
        std::ifstream expected(testing::source_dir() / "tests" / "golden" / "four_tags_histogram.csv");
        REQUIRE(expected);
        std::stringstream want;
        want << expected.rdbuf();
        CHECK(os.str() == want.str());
    }

    TEST_CASE("g2 limits")
    {
        const PulseClock clock(76.2e6, 2'000'000);
        const TimePs period = clock.pulse_period_ps();
        const HistogramRange range{-(4 * period + period / 2), 9 * period, 100};
        RngStream rng(2, stream_id(StreamKind::test, 41));

        SUBCASE("single photons never coincide")
        {
            TagStream a, b;
            for (std::uint64_t p = 0; p < clock.n_pulses(); ++p) {
                if (rng.bernoulli(0.3))
                    (rng.bernoulli(0.5) ? a : b).push_back(pulse_time(p, clock));
            }
            const auto g2 = hbt_g2(build_histogram(a, b, range), period, period);
            CHECK(g2.value == 0.0);
        }
        SUBCASE("independent clicks give 1")
        {
            TagStream a, b;
            for (std::uint64_t p = 0; p < clock.n_pulses(); ++p) {
                if (rng.bernoulli(0.1))
                    a.push_back(pulse_time(p, clock));
                if (rng.bernoulli(0.1))
                    b.push_back(pulse_time(p, clock) + 300);
            }
            const auto g2 = hbt_g2(build_histogram(a, b, range), period, period);
            CHECK(std::abs(g2.value - 1.0) <= 3 * g2.uncertainty);
        }
    }

    TEST_CASE("g2 rejects short histograms")
    {
        CorrelationHistogram h;
        h.origin_ps = -1500;
        h.counts.assign(30, 1);
        CHECK_THROWS_AS(hbt_g2(h, 1000, 1000), InvalidArgument);
        CHECK_THROWS_AS(periodic_peak_areas(h, 1000, 2000), InvalidArgument);
    }

    TEST_CASE("switching efficiency examples")
    {
        const auto clean = channel_switching(comb(1000, 12, {100, 0, 0, 0}), 1000, 4);
        CHECK(clean.eta_sw == 1.0);
        CHECK(std::isinf(clean.extinction_ratio));
        const auto even = channel_switching(comb(1000, 12, {30, 10, 10, 10}), 1000, 4);
        CHECK(even.eta_sw == doctest::Approx(0.5));
        CHECK(even.extinction_ratio == doctest::Approx(1.0));
        CHECK(even.eta_sw_uncertainty > 0.0);
        const auto m = switching_metrics(std::vector{comb(1000, 12, {100, 0, 0, 0}),
                                                     comb(1000, 12, {30, 10, 10, 10})},
                                         1000, 4);
        CHECK(m.mean_eta_sw == doctest::Approx(0.75));
        CHECK(m.std_eta_sw == doctest::Approx(std::sqrt(0.125)));
    }

    TEST_CASE("simulated sync histograms show three misrouting peaks")
    {
        ScenarioConfig cfg = testing::load_scenario("paper_fig3.cfg");
        cfg.clock = cfg.clock.with_pulses(20'000'000);
        std::vector<cli::NamedHistogram> hists;
        cli::analyze_tags(cfg, run_simulation(cfg).tags, &hists);
        REQUIRE(hists.size() == 4);
        const double period = static_cast<double>(cfg.clock.pulse_period_ps());
        for (const auto& [name, h] : hists) {
            const auto s = channel_switching(h, period, 4);
            const double main = s.peak_offset_ps + (s.main_residue + 4) * period;
            const double main_area = static_cast<double>(h.integrate(main - period / 2, main + period / 2));
            for (int r = 1; r <= 3; ++r) {
                const double c = main + r * period;
                const auto area = static_cast<double>(h.integrate(c - period / 2, c + period / 2));
                CHECK(area > 0.0);
                CHECK(area < 0.2 * main_area);
            }
        }
    }

    TEST_CASE("fiber-coupled source efficiency")
    {
        CHECK(source_efficiency(425e3, 76.2e6, 0.91, 0.68) == doctest::Approx(0.0090).epsilon(0.005));
        CHECK(source_efficiency(76.2e6, 76.2e6, 1.0, 1.0) == 1.0);
        CHECK(source_efficiency(0.0, 76.2e6, 0.91, 0.68) == 0.0);
        CHECK_THROWS_AS(source_efficiency(1.0, 0.0, 1.0, 1.0), InvalidArgument);
    }

    TEST_CASE("rate model")
    {
        const RateModel bench{76.2e6, 4, 0.36, 0.0090, 0.84, 0.68, 0.946};
        const auto table = analytic_rate_table(bench);
        REQUIRE(table.size() == 4);
        CHECK(table[0] == doctest::Approx(9.8e4).epsilon(0.02));
        CHECK(table[2] == doctest::Approx(17).epsilon(0.02));
        CHECK(table[3] == doctest::Approx(0.23).epsilon(0.02));
        for (int n = 1; n <= 4; ++n)
            CHECK(coincidence_bracket(n, 4, 0.25) == doctest::Approx(std::pow(4.0, 1 - n)));
        CHECK(coincidence_bracket(1, 1, 0.3) == 1.0);
        const RateModel ideal{76.2e6, 4, 1.0, 1.0, 1.0, 1.0, 1.0};
        CHECK(analytic_coincidence_rate(1, ideal) == doctest::Approx(76.2e6 / 4));
        // Fast blinking pays eta_b once per photon.
        CHECK(analytic_coincidence_rate(4, bench, BlinkingMode::fast) ==
              doctest::Approx(analytic_coincidence_rate(4, bench) * std::pow(0.36, 3)));
        CHECK_THROWS_AS(analytic_coincidence_rate(5, bench), InvalidArgument);
        RateModel bad = bench;
        bad.eta_det = 1.3;
        CHECK_FALSE(rate_model_violations(bad).empty());
        CHECK_THROWS_AS(analytic_coincidence_rate(1, bad), InvalidArgument);
    }

    TEST_CASE("visibility estimators")
    {
        CHECK(hom_visibility_raw(0.0, 0.4) == 1.0);
        CHECK(hom_visibility_raw(0.4, 0.4) == 0.0);
        CHECK_THROWS_AS(hom_visibility_raw(0.1, 0.0), InvalidArgument);
        CHECK(hom_visibility_alternative(0.0, 100.0) == 1.0);
        CHECK(hom_visibility_alternative(50.0, 100.0) == 0.0);
        CHECK(hom_visibility_alternative(10.25, 100.0) == doctest::Approx(0.795));
        CHECK(hom_visibility_corrected(0.7, 0.0, 0.5) == doctest::Approx(0.7));
        CHECK(hom_visibility_corrected(0.7730, 0.016, 0.514) == doctest::Approx(0.803).epsilon(0.001));
        for (const double r : {0.3, 0.5, 0.514})
            CHECK(hom_visibility_corrected(-0.016, 0.016, r) == doctest::Approx(0.0));
        CHECK_THROWS_AS(hom_visibility_corrected(0.5, 1.0, 0.5), InvalidArgument);
        CHECK_THROWS_AS(hom_visibility_corrected(0.5, 0.0, 1.0), InvalidArgument);
    }

    TEST_CASE("inverting the correction at 0.803")
    {
        // V_raw = V (1 - g2) 2RT / (R^2 + T^2) - g2
        const double r = 0.514, t = 1 - r, g2 = 0.016;
        const double v_raw = 0.803 * (1 - g2) * 2 * r * t / (r * r + t * t) - g2;
        CHECK(v_raw == doctest::Approx(0.7730).epsilon(5e-4));
        CHECK(hom_visibility_corrected(v_raw, g2, r) == doctest::Approx(0.803).epsilon(1e-12));
    }

    TEST_CASE("correction monotonicity")
    {
        double prev = -1.0;
        for (double v = -0.5; v <= 1.0; v += 0.01) {
            const double c = hom_visibility_corrected(v, 0.016, 0.514);
            CHECK(c > prev);
            prev = c;
        }
        prev = -1.0;
        for (double g = 0.0; g < 0.5; g += 0.01) {
            const double c = hom_visibility_corrected(0.7, g, 0.514);
            CHECK(c > prev);
            prev = c;
        }
        const double at_half = hom_visibility_corrected(0.7, 0.016, 0.5);
        for (double r = 0.05; r < 0.96; r += 0.01)
            CHECK(hom_visibility_corrected(0.7, 0.016, r) >= at_half - 1e-15);
    }
}
