// Pulsed quantum-dot emitter: Rabi-driven excitation, telegraph blinking,
// residual two-photon events and exponential emission delays.
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qdemux/core/rng.hpp"
#include "qdemux/core/types.hpp"

namespace qdemux {

enum class BlinkingMode {
    slow,  ///< telegraph process, correlated over many switching cycles
    fast,  ///< independent on/off draw for every pulse
};

std::string_view to_string(BlinkingMode mode);
BlinkingMode blinking_mode_from_string(std::string_view text);

struct SourceParams {
    double eta_pop = 0.909;
    double pulse_area_rad = 3.141592653589793;
    double rabi_damping = 0.03037;
    double eta_blinking = 0.36;
    double blink_on_dwell_ps = 0.5625e9;
    double blink_off_dwell_ps = 1.0e9;
    BlinkingMode blinking_mode = BlinkingMode::slow;
    double multiphoton_prob = 0.00739;
    double lifetime_ps = 167.0;
    // Loss breakdown of eta_qd. Carried as metadata only.
    double eta_extr = 0.12;
    double eta_optics = 0.0;
    double eta_fibercoup = 0.60;
    /// Fiber-coupled source efficiency: mean photons per pump pulse
    /// delivered to the demultiplexer input, blinking included.
    double eta_qd = 0.0090;

    /// Probability that an emitted photon reaches the network input, chosen
    /// so that the mean photon number per pulse equals eta_qd.
    double collection_efficiency() const;
};

struct EmissionOutcome {
    int n_photons = 0;
    std::vector<double> delays_ps;
    bool qd_was_on = false;
};

/// Damped Rabi population sin^2(theta/2) * exp(-theta * damping).
double excitation_probability(double pulse_area_rad, double rabi_damping);

/// On/off state of the emitter, stored as half-open pulse-index intervals
/// [begin, end) during which the emitter is on.
class BlinkingTrace {
public:
    struct Interval {
        std::uint64_t begin = 0;
        std::uint64_t end = 0;
    };

    BlinkingTrace() = default;
    BlinkingTrace(std::uint64_t n_pulses, std::vector<Interval> on_intervals);

    static BlinkingTrace always_on(std::uint64_t n_pulses);

    std::uint64_t n_pulses() const { return n_pulses_; }
    const std::vector<Interval>& on_intervals() const { return on_; }

    bool is_on(std::uint64_t pulse) const;
    std::uint64_t on_pulses() const;
    double on_fraction() const;

    /// Per-pulse boolean expansion. Only sensible for short traces.
    std::vector<bool> expand() const;

private:
    std::uint64_t n_pulses_ = 0;
    std::vector<Interval> on_;
};

/// Two-state telegraph process with exponential dwell times sampled at the
/// pulse times of `clock`. The initial state is drawn from the stationary
/// distribution. A zero off-dwell yields an always-on trace.
BlinkingTrace sample_blinking_trace(const PulseClock& clock, const SourceParams& params,
                                    RngStream& rng);

/// Per-pulse emission. The second (re-excitation) photon, if any, is emitted
/// after the first: its delay is the first delay plus a fresh exponential.
EmissionOutcome sample_emission(std::uint64_t pulse_index, bool on, const SourceParams& params,
                                RngStream& rng);

/// Photon leaving the source and entering the demultiplexer.
struct SourcePhoton {
    std::uint64_t pulse = 0;
    double delay_ps = 0.0;
    std::uint8_t index_in_pulse = 0;
};

/// Fast sampler for photons that survive collection. Skips geometrically
/// over pulses that deliver nothing, which is most of them. Equivalent in
/// distribution to sample_emission followed by an independent collection
/// loss per photon.
class CollectedEmissionSampler {
public:
    explicit CollectedEmissionSampler(const SourceParams& params);

    /// Appends photons from pulses [begin, end), all of which are on.
    void sample_on_range(std::uint64_t begin, std::uint64_t end, RngStream& rng,
                         std::vector<SourcePhoton>& out) const;

    /// Appends photons from pulses [begin, end) with an independent on/off
    /// draw per pulse (fast blinking).
    void sample_fast_blinking_range(std::uint64_t begin, std::uint64_t end, RngStream& rng,
                                    std::vector<SourcePhoton>& out) const;

    /// Probability that an on-pulse delivers at least one photon.
    double hit_probability() const { return hit_prob_; }

private:
    void sample_range(std::uint64_t begin, std::uint64_t end, double hit_prob, RngStream& rng,
                      std::vector<SourcePhoton>& out) const;
    void emit_hit(std::uint64_t pulse, RngStream& rng, std::vector<SourcePhoton>& out) const;

    double first_ = 0.0;   // P(first photon emitted and collected)
    double second_ = 0.0;  // P(second photon emitted and collected)
    double hit_prob_ = 0.0;
    double lifetime_ps_ = 0.0;
    double eta_blinking_ = 0.0;
};

}  // namespace qdemux
