// Binary EOM/PBS routing tree.
//
// Layer j (1-based) of a depth-k tree holds 2^(j-1) electro-optic modulators
// driven at RR / 2^j. Each EOM, followed by a polarizing beamsplitter, either
// passes a photon (transmission port) or switches it (reflection port). With
// quarter-wave biasing and a drive amplitude of V_pi/2 the switch probability
// follows Malus' law, sin^2((pi/4)(1 + sin(phase))).
//
// Stages are stored in heap order: stage i has its pass child at 2i+1 and its
// switch child at 2i+2. Leaf channel indices are built LSB-first from the
// path, with bit j-1 set when the photon passed at layer j.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "qdemux/core/rng.hpp"
#include "qdemux/core/types.hpp"
#include "qdemux/source/source.hpp"

namespace qdemux {

struct EomDrive {
    double frequency_hz = 38.1e6;
    double phase_rad = 0.0;
    /// Drive amplitude as a fraction of V_pi / 2.
    double amplitude_rel = 1.0;
    bool bias_quarter_wave = true;
};

struct SwitchStage {
    EomDrive drive;
    /// Routing error probability is 1 / (1 + ER) in the respective state.
    double extinction_ratio_switch = 36.0;
    double extinction_ratio_pass = 36.0;
};

struct DemuxNetworkSpec {
    int depth_k = 0;
    std::vector<SwitchStage> stages;
    /// Fraction of the network input that reaches channel c under ideal
    /// routing; they sum to eta_routing. A photon routed to channel c
    /// survives with probability m * transmission[c].
    std::vector<double> channel_transmissions;
    std::vector<TimePs> channel_delays_ps;

    std::size_t channel_count() const { return std::size_t{1} << depth_k; }
    std::size_t stage_count() const { return channel_count() - 1; }
    double eta_routing() const;
};

/// Settings applied to every stage and channel by build_demux_tree.
struct StageDefaults {
    double amplitude_rel = 1.0;
    bool bias_quarter_wave = true;
    double extinction_ratio_switch = 36.0;
    double extinction_ratio_pass = 36.0;
    /// Per-channel transmission; empty means eta_routing / m for every channel.
    std::vector<double> channel_transmissions;
    double eta_routing = 0.84;
    /// Delay shared by all channels (shortest fiber).
    TimePs common_delay_ps = 10'000;
};

/// Layer (1-based) of heap-ordered stage `stage_index`.
int stage_layer(std::size_t stage_index);

/// Builds a depth-k tree phase-locked to `clock`. Drive phases put every
/// photon at an extremum of its stage's drive, and channel delays make the m
/// photons of one switching cycle leave the network together.
DemuxNetworkSpec build_demux_tree(int depth_k, const PulseClock& clock,
                                  const StageDefaults& defaults = {});

/// Probability that the EOM-PBS stage switches a photon arriving at t_ps.
double eom_switch_probability(double t_ps, const EomDrive& drive);

struct RoutedPhoton {
    std::uint64_t origin_pulse_index = 0;
    /// Channel reached by the tree, before channel transmission loss.
    int path_channel = 0;
    /// kLostChannel if the channel transmission dropped the photon.
    int exit_channel = kLostChannel;
    TimePs exit_time_ps = 0;
    bool correctly_routed = false;
};

/// A network spec bound to a pulse period, ready for routing.
class DemuxNetwork {
public:
    DemuxNetwork(DemuxNetworkSpec spec, TimePs pulse_period_ps);

    const DemuxNetworkSpec& spec() const { return spec_; }
    std::size_t channel_count() const { return spec_.channel_count(); }
    TimePs pulse_period_ps() const { return period_ps_; }

    /// Channel an error-free, loss-free network assigns to `pulse`.
    int ideal_channel(std::uint64_t pulse) const { return ideal_map_[pulse % ideal_map_.size()]; }
    /// ideal_channel for pulses 0..m-1.
    const std::vector<int>& ideal_map() const { return ideal_map_; }

    RoutedPhoton route(const SourcePhoton& photon, RngStream& rng) const;

    /// Exact probability that a photon of pulse slot s (at its nominal time)
    /// reaches channel c, ignoring channel transmission. Indexed [s][c].
    std::vector<std::vector<double>> routing_matrix() const;

    /// Mean over pulse slots of the probability of reaching the ideal channel.
    double mean_switching_efficiency() const;

    /// Per channel: correct arrivals / all arrivals, from routing_matrix.
    std::vector<double> channel_switching_efficiencies() const;

    /// Switch probability of a stage for a photon at t_ps, with extinction.
    double stage_switch_probability(std::size_t stage, double t_ps) const;

private:
    DemuxNetworkSpec spec_;
    TimePs period_ps_;
    std::vector<int> ideal_map_;
    std::vector<double> survival_;
    std::vector<double> err_switch_;
    std::vector<double> err_pass_;
};

/// Error-free trace of the tree for `pulse` with the default phase-locked
/// configuration of an m-channel network (m = 2^k).
int ideal_channel_for_pulse(std::uint64_t pulse_index, std::size_t m);

/// Forwards to DemuxNetwork::route.
RoutedPhoton route_photon(const SourcePhoton& photon, const DemuxNetwork& network, RngStream& rng);

/// Writes "t_ps,switch_probability" rows for one stage over [t0, t1).
void write_drive_csv(std::ostream& os, const DemuxNetwork& network, std::size_t stage, TimePs t0,
                     TimePs t1, TimePs step_ps);

}  // namespace qdemux
