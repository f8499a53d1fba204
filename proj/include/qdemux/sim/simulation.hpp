// Source -> demultiplexer -> (optional beamsplitter) -> detectors.
//
// Pulses are processed in fixed blocks; each block draws from its own random
// streams, so results depend on the seed only, not on the thread count.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "qdemux/sim/config.hpp"

namespace qdemux {

struct SimulationOptions {
    unsigned threads = 1;
    /// Keep every RoutedPhoton (memory heavy; for tests).
    bool record_routing = false;
    std::uint64_t block_pulses = std::uint64_t{1} << 16;
};

struct SimulationCounters {
    std::uint64_t photons_in = 0;  ///< photons entering the network
    std::uint64_t photons_lost = 0;
    std::uint64_t photons_correct = 0;
    std::uint64_t photons_misrouted = 0;  ///< reached a channel, but the wrong one
    /// Per network channel, photons leaving the network.
    std::vector<std::uint64_t> channel_exits;
    /// Per output, arrivals at the detector and detections before dead time.
    std::vector<std::uint64_t> detector_arrivals;
    std::vector<std::uint64_t> detector_candidates;
};

struct SimulationResult {
    PulseClock clock;
    /// Detector tags, one sorted stream per output. With a beamsplitter
    /// bench there are two outputs (reflected, transmitted port); there,
    /// re-excitation photons are distinguishable and split independently.
    std::vector<TagStream> tags;
    std::uint64_t on_pulses = 0;
    /// Realized on-fraction (slow blinking) or the configured one (fast).
    double on_fraction = 0.0;
    SimulationCounters counters;
    std::vector<RoutedPhoton> routed;
};

SimulationResult run_simulation(const ScenarioConfig& config, const SimulationOptions& options = {});

/// Per-pulse emission dump, "pulse_index,on,n_photons,delay_ps" (one row per
/// photon, or one row with empty delay when nothing is emitted), for the
/// first `n_pulses` pulses. Uses the per-pulse sampler, not the fast path.
void write_emission_debug_csv(std::ostream& os, const ScenarioConfig& config,
                              std::uint64_t n_pulses);

}  // namespace qdemux
