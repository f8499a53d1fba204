#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qdemux/source/source.hpp"

using namespace qdemux;

namespace {

// Batch-means standard error of the mean of a correlated 0/1 sequence.
struct BatchMean {
    double mean = 0.0;
    double sigma = 0.0;
};

template <class F>
BatchMean batch_mean(std::uint64_t n, int batches, F&& value_of)
{
    const std::uint64_t per = n / static_cast<std::uint64_t>(batches);
    double s = 0.0, s2 = 0.0;
    for (int b = 0; b < batches; ++b) {
        double acc = 0.0;
        for (std::uint64_t i = 0; i < per; ++i)
            acc += value_of(static_cast<std::uint64_t>(b) * per + i);
        const double m = acc / static_cast<double>(per);
        s += m;
        s2 += m * m;
    }
    const double mean = s / batches;
    const double var = (s2 / batches - mean * mean) * batches / (batches - 1.0);
    return {mean, std::sqrt(var / batches)};
}

}  // namespace

TEST_SUITE("source_sim")
{
    TEST_CASE("rabi population")
    {
        CHECK(excitation_probability(0.0, 0.03) == 0.0);
        CHECK(excitation_probability(std::numbers::pi, 0.03036) == doctest::Approx(0.909).epsilon(1e-4));
        CHECK(excitation_probability(2 * std::numbers::pi, 0.5) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK_THROWS_AS(excitation_probability(-1.0, 0.0), InvalidArgument);
    }

    TEST_CASE("degenerate telegraph is always on")
    {
        SourceParams p;
        p.blink_on_dwell_ps = 1e18;
        p.blink_off_dwell_ps = 1e9;
        RngStream rng(3, stream_id(StreamKind::test, 10));
        const auto t = sample_blinking_trace(PulseClock(76.2e6, 100000), p, rng);
        CHECK(t.on_pulses() == 100000);
        p.blink_off_dwell_ps = 0.0;
        CHECK(sample_blinking_trace(PulseClock(76.2e6, 1000), p, rng).on_fraction() == 1.0);
    }

    TEST_CASE("symmetric telegraph on-fraction")
    {
        SourceParams p;
        p.blink_on_dwell_ps = 1e9;
        p.blink_off_dwell_ps = 1e9;
        const PulseClock clock(76.2e6, 10'000'000);
        RngStream rng(5, stream_id(StreamKind::test, 11));
        const auto t = sample_blinking_trace(clock, p, rng);
        // Telegraph variance of a time average: 2 p (1 - p) tau / T, tau the
        // correlation time 1 / (1/on + 1/off).
        const double tau = 1.0 / (1.0 / p.blink_on_dwell_ps + 1.0 / p.blink_off_dwell_ps);
        const double sigma = std::sqrt(2 * 0.25 * tau / static_cast<double>(clock.duration_ps()));
        CHECK(std::abs(t.on_fraction() - 0.5) <= 3 * sigma);
    }

    TEST_CASE("bench dwell split gives 0.36 on-fraction")
    {
        SourceParams p;  // 0.5625 ms on, 1 ms off
        CHECK(p.blink_on_dwell_ps / (p.blink_on_dwell_ps + p.blink_off_dwell_ps) == doctest::Approx(0.36));
        const PulseClock clock(76.2e6, 400'000'000);
        RngStream rng(6, stream_id(StreamKind::test, 12));
        const auto t = sample_blinking_trace(clock, p, rng);
        const double tau = 1.0 / (1.0 / p.blink_on_dwell_ps + 1.0 / p.blink_off_dwell_ps);
        const double sigma = std::sqrt(2 * 0.36 * 0.64 * tau / static_cast<double>(clock.duration_ps()));
        CHECK(std::abs(t.on_fraction() - 0.36) <= 3 * sigma);
    }

    TEST_CASE("fast blinking draws every pulse")
    {
        SourceParams p;
        p.blinking_mode = BlinkingMode::fast;
        RngStream rng(8, stream_id(StreamKind::test, 13));
        const auto t = sample_blinking_trace(PulseClock(76.2e6, 1'000'000), p, rng);
        const double sigma = std::sqrt(0.36 * 0.64 / 1e6);
        CHECK(std::abs(t.on_fraction() - 0.36) <= 4 * sigma);
    }

    TEST_CASE("emission examples")
    {
        RngStream rng(9, stream_id(StreamKind::test, 14));
        SourceParams p;
        CHECK(sample_emission(0, false, p, rng).n_photons == 0);
        p.eta_pop = 1.0;
        p.multiphoton_prob = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const auto e = sample_emission(static_cast<std::uint64_t>(i), true, p, rng);
            REQUIRE(e.n_photons == 1);
            CHECK(e.delays_ps[0] >= 0.0);
        }
    }

    TEST_CASE("second photon follows the first")
    {
        RngStream rng(10, stream_id(StreamKind::test, 15));
        SourceParams p;
        p.eta_pop = 1.0;
        p.multiphoton_prob = 1.0;
        for (int i = 0; i < 1000; ++i) {
            const auto e = sample_emission(0, true, p, rng);
            REQUIRE(e.n_photons == 2);
            CHECK(e.delays_ps[1] >= e.delays_ps[0]);
        }
    }

    TEST_CASE("calibrated multiphoton probability gives g2 of 0.016")
    {
        // Independent first and re-excitation photons: <n(n-1)> = 2 eta_pop p2,
        // <n> = eta_pop + p2. Collection loss cancels in the ratio.
        const SourceParams p;
        const double g2 = 2 * p.eta_pop * p.multiphoton_prob / std::pow(p.eta_pop + p.multiphoton_prob, 2);
        CHECK(g2 == doctest::Approx(0.016).epsilon(0.01));
    }

    TEST_CASE("occupied-pulse fraction")
    {
        SourceParams p;
        p.multiphoton_prob = 0.0;
        const PulseClock clock(76.2e6, 10'000'000);
        RngStream brng(11, stream_id(StreamKind::blinking));
        const auto trace = sample_blinking_trace(clock, p, brng);
        RngStream rng(11, stream_id(StreamKind::test, 16));
        const auto occ = batch_mean(clock.n_pulses(), 50, [&](std::uint64_t i) {
            return sample_emission(i, trace.is_on(i), p, rng).n_photons > 0 ? 1.0 : 0.0;
        });
        CHECK(std::abs(occ.mean - p.eta_blinking * p.eta_pop) <= 3 * occ.sigma);
    }

    TEST_CASE("collected sampler delivers eta_qd photons per pulse")
    {
        SourceParams p;
        p.eta_qd = 0.2;
        p.eta_blinking = 0.5;
        const CollectedEmissionSampler s(p);
        RngStream rng(12, stream_id(StreamKind::test, 17));
        std::vector<SourcePhoton> out;
        const std::uint64_t n = 2'000'000;
        s.sample_on_range(0, n, rng, out);
        // On pulses only: eta_qd / eta_blinking per pulse.
        const double mean = static_cast<double>(out.size()) / static_cast<double>(n);
        CHECK(mean == doctest::Approx(0.4).epsilon(0.005));
        for (std::size_t i = 1; i < out.size(); ++i)
            REQUIRE(out[i].pulse >= out[i - 1].pulse);
        out.clear();
        s.sample_fast_blinking_range(0, n, rng, out);
        CHECK(static_cast<double>(out.size()) / static_cast<double>(n) == doctest::Approx(0.2).epsilon(0.01));
    }
}
