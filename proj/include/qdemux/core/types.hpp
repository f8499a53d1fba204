// Shared time and tag types for the demultiplexed-source simulator.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdemux {

/// Integer picoseconds since the start of a run.
using TimePs = std::int64_t;

/// Exit channel value used for photons that never reach a detector.
inline constexpr int kLostChannel = -1;

/// A single detector click.
struct TimeTag {
    std::uint8_t channel = 0;
    TimePs time_ps = 0;

    friend bool operator==(const TimeTag&, const TimeTag&) = default;
};

/// Time-ordered tags of one detector.
using TagStream = std::vector<TimePs>;

class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Pump-laser pulse train. Pulse times are always index * period, never
/// accumulated, so long runs carry no rounding drift.
class PulseClock {
public:
    PulseClock() = default;
    PulseClock(double repetition_rate_hz, std::uint64_t n_pulses);

    double repetition_rate_hz() const { return rate_hz_; }
    TimePs pulse_period_ps() const { return period_ps_; }
    std::uint64_t n_pulses() const { return n_pulses_; }

    /// Total run duration, n_pulses * period.
    TimePs duration_ps() const { return static_cast<TimePs>(n_pulses_) * period_ps_; }
    double duration_s() const { return static_cast<double>(duration_ps()) * 1e-12; }

    bool valid() const { return period_ps_ > 0; }

    PulseClock with_pulses(std::uint64_t n) const { return PulseClock(rate_hz_, n); }

private:
    double rate_hz_ = 76.2e6;
    TimePs period_ps_ = 13123;
    std::uint64_t n_pulses_ = 0;
};

/// Emission time of pulse `pulse_index`. Throws if the index is past the
/// end of the pulse train.
TimePs pulse_time(std::uint64_t pulse_index, const PulseClock& clock);

}  // namespace qdemux
