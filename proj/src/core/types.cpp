#include "qdemux/core/types.hpp"

#include <cmath>

namespace qdemux {

PulseClock::PulseClock(double repetition_rate_hz, std::uint64_t n_pulses)
    : rate_hz_(repetition_rate_hz), n_pulses_(n_pulses)
{
    // An invalid rate leaves period 0; validate_config reports it.
    if (repetition_rate_hz > 0.0 && std::isfinite(repetition_rate_hz))
        period_ps_ = static_cast<TimePs>(std::llround(1e12 / repetition_rate_hz));
    else
        period_ps_ = 0;
}

TimePs pulse_time(std::uint64_t pulse_index, const PulseClock& clock)
{
    if (pulse_index >= clock.n_pulses())
        throw InvalidArgument("pulse index " + std::to_string(pulse_index) +
                              " out of range (n_pulses = " +
                              std::to_string(clock.n_pulses()) + ")");
    return static_cast<TimePs>(pulse_index) * clock.pulse_period_ps();
}

}  // namespace qdemux
