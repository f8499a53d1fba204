#include "qdemux/network/demux.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>

namespace qdemux {

namespace {

constexpr double kPi = std::numbers::pi;

double error_probability(double extinction_ratio)
{
    if (std::isinf(extinction_ratio))
        return 0.0;
    return 1.0 / (1.0 + extinction_ratio);
}

}  // namespace

double DemuxNetworkSpec::eta_routing() const
{
    return std::accumulate(channel_transmissions.begin(), channel_transmissions.end(), 0.0);
}

int stage_layer(std::size_t stage_index)
{
    return std::bit_width(stage_index + 1);
}

DemuxNetworkSpec build_demux_tree(int depth_k, const PulseClock& clock,
                                  const StageDefaults& defaults)
{
    if (depth_k < 0 || depth_k > 16)
        throw InvalidArgument("tree depth must be in [0, 16]");
    if (!clock.valid())
        throw InvalidArgument("pulse clock has no valid period");

    DemuxNetworkSpec spec;
    spec.depth_k = depth_k;
    const std::size_t m = spec.channel_count();
    const double period = static_cast<double>(clock.pulse_period_ps());

    // Pass-bit path of each stage, to derive which pulse residue it serves.
    std::vector<std::uint64_t> pass_bits(m - 1, 0);
    spec.stages.resize(m - 1);
    for (std::size_t i = 0; i < m - 1; ++i) {
        const int layer = stage_layer(i);
        const std::uint64_t divider = std::uint64_t{1} << layer;
        // Pulses p = residue + 2^(layer-1) q reach this stage ideally; a
        // pulse passes at layer j when bit j-1 of p is clear.
        const std::uint64_t mask = (std::uint64_t{1} << (layer - 1)) - 1;
        const std::uint64_t residue = ~pass_bits[i] & mask;

        SwitchStage& stage = spec.stages[i];
        stage.drive.frequency_hz = 1e12 / (static_cast<double>(divider) * period);
        // sin(2 pi p / 2^j + phase) = -1 for even q (pass), +1 for odd q.
        stage.drive.phase_rad =
            -0.5 * kPi - 2.0 * kPi * static_cast<double>(residue) / static_cast<double>(divider);
        stage.drive.amplitude_rel = defaults.amplitude_rel;
        stage.drive.bias_quarter_wave = defaults.bias_quarter_wave;
        stage.extinction_ratio_switch = defaults.extinction_ratio_switch;
        stage.extinction_ratio_pass = defaults.extinction_ratio_pass;

        const std::size_t pass_child = 2 * i + 1;
        const std::size_t switch_child = 2 * i + 2;
        if (pass_child < m - 1) {
            pass_bits[pass_child] = pass_bits[i] | (std::uint64_t{1} << (layer - 1));
            pass_bits[switch_child] = pass_bits[i];
        }
    }

    if (!defaults.channel_transmissions.empty()) {
        if (defaults.channel_transmissions.size() != m)
            throw InvalidArgument("default transmissions do not match channel count");
        spec.channel_transmissions = defaults.channel_transmissions;
    } else {
        spec.channel_transmissions.assign(m, defaults.eta_routing / static_cast<double>(m));
    }

    // Photon of slot s leaves at channel ideal(s); give that channel the
    // delay (m - 1 - s) periods so the whole cycle exits at once.
    DemuxNetworkSpec traced = spec;
    traced.channel_delays_ps.assign(m, 0);
    const DemuxNetwork network(traced, clock.pulse_period_ps());
    spec.channel_delays_ps.assign(m, 0);
    for (std::size_t s = 0; s < m; ++s) {
        const int c = network.ideal_map()[s];
        spec.channel_delays_ps[static_cast<std::size_t>(c)] =
            defaults.common_delay_ps +
            static_cast<TimePs>(m - 1 - s) * clock.pulse_period_ps();
    }
    return spec;
}

double eom_switch_probability(double t_ps, const EomDrive& drive)
{
    const double cycles = std::fmod(drive.frequency_hz * t_ps * 1e-12, 1.0);
    const double modulation = drive.amplitude_rel * std::sin(2.0 * kPi * cycles + drive.phase_rad);
    const double arg = drive.bias_quarter_wave ? 0.25 * kPi * (1.0 + modulation)
                                               : 0.25 * kPi * modulation;
    const double s = std::sin(arg);
    return s * s;
}

// ---------------------------------------------------------------------------

DemuxNetwork::DemuxNetwork(DemuxNetworkSpec spec, TimePs pulse_period_ps)
    : spec_(std::move(spec)), period_ps_(pulse_period_ps)
{
    const std::size_t m = spec_.channel_count();
    if (spec_.stages.size() != m - 1)
        throw InvalidArgument("stage count must be 2^k - 1");
    if (spec_.channel_transmissions.size() != m || spec_.channel_delays_ps.size() != m)
        throw InvalidArgument("per-channel lists must have 2^k entries");
    if (period_ps_ <= 0)
        throw InvalidArgument("pulse period must be positive");

    err_switch_.reserve(m - 1);
    err_pass_.reserve(m - 1);
    for (const auto& st : spec_.stages) {
        err_switch_.push_back(error_probability(st.extinction_ratio_switch));
        err_pass_.push_back(error_probability(st.extinction_ratio_pass));
    }

    for (const double t : spec_.channel_transmissions)
        survival_.push_back(static_cast<double>(m) * t);

    ideal_map_.resize(m);
    for (std::size_t s = 0; s < m; ++s) {
        const double t = static_cast<double>(s) * static_cast<double>(period_ps_);
        std::size_t node = 0;
        int channel = 0;
        for (int layer = 1; layer <= spec_.depth_k; ++layer) {
            const bool sw = eom_switch_probability(t, spec_.stages[node].drive) > 0.5;
            if (!sw)
                channel |= 1 << (layer - 1);
            node = sw ? 2 * node + 2 : 2 * node + 1;
        }
        ideal_map_[s] = channel;
    }
}

double DemuxNetwork::stage_switch_probability(std::size_t stage, double t_ps) const
{
    const double p = eom_switch_probability(t_ps, spec_.stages[stage].drive);
    return p * (1.0 - err_switch_[stage]) + (1.0 - p) * err_pass_[stage];
}

RoutedPhoton DemuxNetwork::route(const SourcePhoton& photon, RngStream& rng) const
{
    RoutedPhoton out;
    out.origin_pulse_index = photon.pulse;
    const TimePs emitted =
        static_cast<TimePs>(photon.pulse) * period_ps_ + std::llround(photon.delay_ps);
    const double t = static_cast<double>(static_cast<TimePs>(photon.pulse) * period_ps_) +
                     photon.delay_ps;

    std::size_t node = 0;
    int channel = 0;
    for (int layer = 1; layer <= spec_.depth_k; ++layer) {
        const bool sw = rng.uniform() < stage_switch_probability(node, t);
        if (!sw)
            channel |= 1 << (layer - 1);
        node = sw ? 2 * node + 2 : 2 * node + 1;
    }
    out.path_channel = channel;
    out.correctly_routed = channel == ideal_channel(photon.pulse);

    const auto c = static_cast<std::size_t>(channel);
    if (rng.uniform() < survival_[c]) {
        out.exit_channel = channel;
        out.exit_time_ps = emitted + spec_.channel_delays_ps[c];
    } else {
        out.exit_channel = kLostChannel;
        out.exit_time_ps = emitted;
        out.correctly_routed = false;
    }
    return out;
}

std::vector<std::vector<double>> DemuxNetwork::routing_matrix() const
{
    const std::size_t m = channel_count();
    std::vector<std::vector<double>> matrix(m, std::vector<double>(m, 0.0));
    for (std::size_t s = 0; s < m; ++s) {
        const double t = static_cast<double>(s) * static_cast<double>(period_ps_);
        // Depth-first over all 2^k paths.
        struct Frame {
            std::size_t node;
            int layer;
            int channel;
            double prob;
        };
        std::vector<Frame> stack{{0, 1, 0, 1.0}};
        while (!stack.empty()) {
            const Frame f = stack.back();
            stack.pop_back();
            if (f.layer > spec_.depth_k) {
                matrix[s][static_cast<std::size_t>(f.channel)] += f.prob;
                continue;
            }
            const double p_sw = stage_switch_probability(f.node, t);
            stack.push_back({2 * f.node + 2, f.layer + 1, f.channel, f.prob * p_sw});
            stack.push_back(
                {2 * f.node + 1, f.layer + 1, f.channel | (1 << (f.layer - 1)), f.prob * (1 - p_sw)});
        }
    }
    return matrix;
}

double DemuxNetwork::mean_switching_efficiency() const
{
    const auto matrix = routing_matrix();
    double sum = 0.0;
    for (std::size_t s = 0; s < matrix.size(); ++s)
        sum += matrix[s][static_cast<std::size_t>(ideal_map_[s])];
    return sum / static_cast<double>(matrix.size());
}

std::vector<double> DemuxNetwork::channel_switching_efficiencies() const
{
    const auto matrix = routing_matrix();
    const std::size_t m = matrix.size();
    std::vector<double> eff(m, 0.0);
    for (std::size_t s = 0; s < m; ++s) {
        const auto c = static_cast<std::size_t>(ideal_map_[s]);
        double inflow = 0.0;
        for (std::size_t p = 0; p < m; ++p)
            inflow += matrix[p][c];
        eff[c] = inflow > 0.0 ? matrix[s][c] / inflow : 0.0;
    }
    return eff;
}

int ideal_channel_for_pulse(std::uint64_t pulse_index, std::size_t m)
{
    if (m == 0 || !std::has_single_bit(m))
        throw InvalidArgument("channel count must be 2^k");
    const PulseClock clock(76.2e6, m);
    const int depth = std::countr_zero(m);
    const DemuxNetwork network(build_demux_tree(depth, clock), clock.pulse_period_ps());
    return network.ideal_channel(pulse_index);
}

RoutedPhoton route_photon(const SourcePhoton& photon, const DemuxNetwork& network, RngStream& rng)
{
    return network.route(photon, rng);
}

void write_drive_csv(std::ostream& os, const DemuxNetwork& network, std::size_t stage, TimePs t0,
                     TimePs t1, TimePs step_ps)
{
    if (stage >= network.spec().stages.size())
        throw InvalidArgument("stage index out of range");
    if (step_ps <= 0)
        throw InvalidArgument("step must be positive");
    os << "t_ps,switch_probability\n";
    for (TimePs t = t0; t < t1; t += step_ps)
        os << t << ',' << eom_switch_probability(static_cast<double>(t), network.spec().stages[stage].drive)
           << '\n';
}

}  // namespace qdemux
