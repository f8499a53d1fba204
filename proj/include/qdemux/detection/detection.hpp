// Detectors, coincidence counting and the two-photon interference bench.
#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "qdemux/core/rng.hpp"
#include "qdemux/core/types.hpp"

namespace qdemux {

struct DetectorParams {
    double efficiency = 0.68;
    TimePs dead_time_ps = 22'000;
    double jitter_sigma_ps = 350.0;
};

/// Fiber beamsplitter used for Hong-Ou-Mandel measurements between two
/// demultiplexer outputs.
struct HomBenchSpec {
    int input_a = 0;
    int input_b = 1;
    double reflectivity = 0.514;
    /// Wavepacket overlap of paired photons; 0 for cross-polarized inputs.
    double mutual_indistinguishability = 0.0;
    TimePs relative_delay_ps = 0;
    /// Maximum |t_a - t_b - relative_delay| for two photons to interfere.
    /// Zero selects half a pulse period.
    TimePs pairing_window_ps = 0;
};

/// Thins, jitters and dead-time filters one detector's photon arrivals.
/// Arrivals must be sorted; the result is strictly increasing.
TagStream detect(std::span<const TimePs> arrivals, const DetectorParams& params, RngStream& rng);

/// The stochastic half of detect(): efficiency and jitter, appended to
/// `out` in input order (not necessarily sorted after jitter).
void apply_efficiency_and_jitter(std::span<const TimePs> arrivals, const DetectorParams& params,
                                 RngStream& rng, TagStream& out);

/// Non-paralyzable dead time over sorted candidate tags: a tag is dropped
/// when it falls within dead_time_ps of the last kept tag.
TagStream apply_dead_time(std::span<const TimePs> sorted_candidates, TimePs dead_time_ps);

struct CoincidenceResult {
    std::uint64_t count = 0;
    double rate_hz = 0.0;
    double rate_uncertainty_hz = 0.0;
};

/// Counts events in which every stream has a tag inside one window anchored
/// at the earliest participating tag. Tags used in a coincidence are
/// consumed. Rates are count / duration with Poisson uncertainty.
CoincidenceResult coincidence_count(std::span<const std::span<const TimePs>> streams,
                                    TimePs window_ps, TimePs duration_ps);

/// Beamsplitter outputs (out1 = reflected port) for two sorted arrival
/// streams. Paired photons leave in different ports with probability
/// R^2 + T^2 - 2 R T V and otherwise bunch into one port.
std::pair<TagStream, TagStream> hom_merge(std::span<const TimePs> tags_a,
                                          std::span<const TimePs> tags_b,
                                          const HomBenchSpec& spec, TimePs pulse_period_ps,
                                          RngStream& rng);

/// Probability that a paired photon pair exits in different ports.
double hom_coincidence_probability(double reflectivity, double indistinguishability);

}  // namespace qdemux
