// Exact enumeration of one switching cycle: every combination of emission,
// routing, channel loss and detection for the m pulses of a cycle.
//
// Pulse slots are labelled by their ideal channel, so slot s is ideally
// routed to channel s. After delay compensation the photon of slot s in
// channel c leaves in output time bin (s - c) mod m, so an n-fold
// coincidence of channel set C in bin b needs, for every c in C, a detected
// photon from slot (c + b) mod m in channel c.
#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "qdemux/analytics/rate_model.hpp"

namespace qdemux::oracle {

inline constexpr int kMaxChannels = 4;

struct PulseOutcome {
    bool emitted = false;
    int exit_channel = kLostChannel;  ///< kLostChannel when not emitted or lost
    bool detected = false;
};

struct CycleOutcome {
    std::vector<PulseOutcome> per_pulse;
    double probability = 0.0;
    /// Emitter state shared by the cycle (slow blinking); always true in
    /// fast mode, where the per-pulse on/off draw is folded into emission.
    bool emitter_on = true;
};

/// Full outcome table of a cycle. Probabilities sum to 1.
std::vector<CycleOutcome> enumerate_outcomes(int m, const RateModel& model, BlinkingMode mode);

/// Number of output time bins in which every channel of `channels` holds a
/// detected photon.
int coincidence_bins(const CycleOutcome& outcome, std::span<const int> channels);

struct CycleEnumeration {
    /// Expected number of n-fold coincidences of the given channels per cycle.
    double expected_per_cycle = 0.0;
    /// RR / m * expected_per_cycle.
    double rate_hz = 0.0;
    double total_probability = 0.0;
    std::size_t outcome_count = 0;
};

CycleEnumeration enumerate_cycle(int m, const RateModel& model, BlinkingMode mode,
                                 std::span<const int> channels);

/// enumerate_cycle over channels {0, ..., n-1}.
CycleEnumeration enumerate_cycle(int m, const RateModel& model, BlinkingMode mode, int n);

/// JSON dump of the outcome table.
void write_outcome_table_json(std::ostream& os, int m, const RateModel& model, BlinkingMode mode);

}  // namespace qdemux::oracle
