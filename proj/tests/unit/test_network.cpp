#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "qdemux/network/demux.hpp"
#include "qdemux/sim/config.hpp"

using namespace qdemux;

namespace {

const PulseClock kClock(76.2e6, 1000);
constexpr double kInf = std::numeric_limits<double>::infinity();

StageDefaults lossless(std::size_t m)
{
    StageDefaults d;
    d.extinction_ratio_switch = kInf;
    d.extinction_ratio_pass = kInf;
    d.channel_transmissions.assign(m, 1.0 / static_cast<double>(m));
    return d;
}

}  // namespace

TEST_SUITE("demux_network")
{
    TEST_CASE("tree construction")
    {
        const auto k0 = build_demux_tree(0, kClock);
        CHECK(k0.channel_count() == 1);
        CHECK(k0.stages.empty());

        const auto k2 = build_demux_tree(2, kClock);
        REQUIRE(k2.stages.size() == 3);
        CHECK(k2.channel_count() == 4);
        CHECK(k2.stages[0].drive.frequency_hz == doctest::Approx(38.1e6).epsilon(1e-4));
        CHECK(k2.stages[1].drive.frequency_hz == doctest::Approx(19.05e6).epsilon(1e-4));
        CHECK(k2.stages[2].drive.frequency_hz == doctest::Approx(19.05e6).epsilon(1e-4));

        const auto k3 = build_demux_tree(3, kClock);
        REQUIRE(k3.stages.size() == 7);
        CHECK(k3.channel_count() == 8);
        for (std::size_t s = 3; s < 7; ++s)
            CHECK(k3.stages[s].drive.frequency_hz == doctest::Approx(9.525e6).epsilon(1e-4));
        CHECK(stage_layer(0) == 1);
        CHECK(stage_layer(2) == 2);
        CHECK(stage_layer(6) == 3);
    }

    TEST_CASE("switch probability examples")
    {
        const double pi = std::numbers::pi;
        CHECK(eom_switch_probability(0.0, {1e6, pi / 2, 1.0, true}) == doctest::Approx(1.0));
        CHECK(eom_switch_probability(0.0, {1e6, -pi / 2, 1.0, true}) == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(eom_switch_probability(0.0, {1e6, pi / 2 + 0.1, 1.0, true}) ==
              doctest::Approx(0.9999846).epsilon(1e-7));
        // No bias: zero drive leaves the polarization untouched.
        CHECK(eom_switch_probability(0.0, {1e6, 0.0, 1.0, false}) == doctest::Approx(0.0));
    }

    TEST_CASE("every pulse sits on a drive extremum")
    {
        for (int k = 1; k <= 3; ++k) {
            const auto spec = build_demux_tree(k, kClock);
            const DemuxNetwork net(spec, kClock.pulse_period_ps());
            for (std::uint64_t p = 0; p < 16; ++p) {
                const double t = static_cast<double>(pulse_time(p, kClock));
                // The layer-1 stage sees every pulse.
                const double ps = eom_switch_probability(t, spec.stages[0].drive);
                CHECK(std::min(ps, 1.0 - ps) < 1e-9);
            }
        }
    }

    TEST_CASE("ideal channel map")
    {
        CHECK(ideal_channel_for_pulse(5, 1) == 0);
        std::set<int> seen;
        for (std::uint64_t p = 0; p < 4; ++p)
            seen.insert(ideal_channel_for_pulse(p, 4));
        CHECK(seen == std::set<int>{0, 1, 2, 3});
        CHECK(ideal_channel_for_pulse(4, 4) == ideal_channel_for_pulse(0, 4));
        CHECK(ideal_channel_for_pulse(7, 4) == ideal_channel_for_pulse(3, 4));
        // Traced map of the phase-locked tree: pulse 0 passes every stage.
        const DemuxNetwork net(build_demux_tree(2, kClock), kClock.pulse_period_ps());
        CHECK(net.ideal_map() == std::vector<int>{3, 2, 1, 0});
        const DemuxNetwork net8(build_demux_tree(3, kClock), kClock.pulse_period_ps());
        std::set<int> seen8(net8.ideal_map().begin(), net8.ideal_map().end());
        CHECK(seen8.size() == 8);
    }

    TEST_CASE("error-free routing")
    {
        const DemuxNetwork net(build_demux_tree(2, kClock, lossless(4)), kClock.pulse_period_ps());
        RngStream rng(1, stream_id(StreamKind::test, 20));
        std::vector<TimePs> exits;
        for (std::uint64_t p = 0; p < 4; ++p) {
            const auto r = net.route({p, 0.0, 0}, rng);
            CHECK(r.exit_channel == net.ideal_channel(p));
            CHECK(r.correctly_routed);
            exits.push_back(r.exit_time_ps);
        }
        // Delay compensation: one cycle leaves together.
        const auto [lo, hi] = std::minmax_element(exits.begin(), exits.end());
        CHECK(*hi - *lo <= 1);
        CHECK(net.mean_switching_efficiency() == doctest::Approx(1.0));
    }

    TEST_CASE("zero transmission loses every photon")
    {
        StageDefaults d = lossless(4);
        d.channel_transmissions.assign(4, 0.0);
        d.eta_routing = 0.0;
        const DemuxNetwork net(build_demux_tree(2, kClock, d), kClock.pulse_period_ps());
        RngStream rng(1, stream_id(StreamKind::test, 21));
        for (std::uint64_t p = 0; p < 100; ++p)
            CHECK(net.route({p, 0.0, 0}, rng).exit_channel == kLostChannel);
    }

    TEST_CASE("bench extinctions give 0.946 switching efficiency")
    {
        const ScenarioConfig cfg = default_scenario_config();
        const DemuxNetwork net(cfg.network, cfg.clock.pulse_period_ps());
        CHECK(std::abs(net.mean_switching_efficiency() - 0.946) <= 0.008);
        RngStream rng(2, stream_id(StreamKind::test, 22));
        std::uint64_t arrived = 0, correct = 0, lost = 0;
        const std::uint64_t n = 1'000'000;
        for (std::uint64_t p = 0; p < n; ++p) {
            const auto r = net.route({p, 0.0, 0}, rng);
            if (r.exit_channel == kLostChannel) {
                ++lost;
                continue;
            }
            ++arrived;
            correct += r.correctly_routed ? 1 : 0;
            CHECK(r.correctly_routed == (r.exit_channel == net.ideal_channel(p)));
        }
        CHECK(arrived + lost == n);
        const double frac = static_cast<double>(correct) / static_cast<double>(arrived);
        CHECK(std::abs(frac - 0.946) <= 0.008);
        // Loss matches the summed channel transmissions.
        CHECK(static_cast<double>(arrived) / n == doctest::Approx(cfg.network.eta_routing()).epsilon(0.005));
    }

    TEST_CASE("routing matrix rows are distributions")
    {
        const ScenarioConfig cfg = default_scenario_config();
        const DemuxNetwork net(cfg.network, cfg.clock.pulse_period_ps());
        for (const auto& row : net.routing_matrix()) {
            double s = 0.0;
            for (const double v : row)
                s += v;
            CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
        }
    }

    TEST_CASE("drive curve dump")
    {
        const DemuxNetwork net(build_demux_tree(1, kClock), kClock.pulse_period_ps());
        std::ostringstream os;
        write_drive_csv(os, net, 0, 0, 1000, 100);
        const std::string text = os.str();
        CHECK(text.rfind("t_ps,switch_probability\n", 0) == 0);
        CHECK(std::count(text.begin(), text.end(), '\n') == 11);
        CHECK_THROWS_AS(write_drive_csv(os, net, 5, 0, 10, 1), InvalidArgument);
    }
}
