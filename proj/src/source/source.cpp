#include "qdemux/source/source.hpp"

#include <algorithm>
#include <cmath>

namespace qdemux {

std::string_view to_string(BlinkingMode mode)
{
    return mode == BlinkingMode::slow ? "slow" : "fast";
}

BlinkingMode blinking_mode_from_string(std::string_view text)
{
    if (text == "slow")
        return BlinkingMode::slow;
    if (text == "fast")
        return BlinkingMode::fast;
    throw InvalidArgument("unknown blinking mode '" + std::string(text) + "'");
}

double SourceParams::collection_efficiency() const
{
    const double per_on_pulse = eta_pop + multiphoton_prob;
    if (eta_blinking <= 0.0 || per_on_pulse <= 0.0)
        return 0.0;
    return eta_qd / (eta_blinking * per_on_pulse);
}

double excitation_probability(double pulse_area_rad, double rabi_damping)
{
    if (pulse_area_rad < 0.0 || rabi_damping < 0.0 || !std::isfinite(pulse_area_rad) ||
        !std::isfinite(rabi_damping))
        throw InvalidArgument("pulse area and damping must be finite and non-negative");
    const double s = std::sin(0.5 * pulse_area_rad);
    return s * s * std::exp(-pulse_area_rad * rabi_damping);
}

// ---------------------------------------------------------------------------

BlinkingTrace::BlinkingTrace(std::uint64_t n_pulses, std::vector<Interval> on_intervals)
    : n_pulses_(n_pulses), on_(std::move(on_intervals))
{
    std::uint64_t last_end = 0;
    for (const auto& iv : on_) {
        if (iv.begin >= iv.end || iv.begin < last_end || iv.end > n_pulses_)
            throw InvalidArgument("blinking intervals must be sorted, disjoint and in range");
        last_end = iv.end;
    }
}

BlinkingTrace BlinkingTrace::always_on(std::uint64_t n_pulses)
{
    if (n_pulses == 0)
        return BlinkingTrace(0, {});
    return BlinkingTrace(n_pulses, {{0, n_pulses}});
}

bool BlinkingTrace::is_on(std::uint64_t pulse) const
{
    auto it = std::upper_bound(on_.begin(), on_.end(), pulse,
                               [](std::uint64_t p, const Interval& iv) { return p < iv.begin; });
    if (it == on_.begin())
        return false;
    --it;
    return pulse < it->end;
}

std::uint64_t BlinkingTrace::on_pulses() const
{
    std::uint64_t total = 0;
    for (const auto& iv : on_)
        total += iv.end - iv.begin;
    return total;
}

double BlinkingTrace::on_fraction() const
{
    return n_pulses_ == 0 ? 0.0 : static_cast<double>(on_pulses()) / static_cast<double>(n_pulses_);
}

std::vector<bool> BlinkingTrace::expand() const
{
    std::vector<bool> bits(n_pulses_, false);
    for (const auto& iv : on_)
        std::fill(bits.begin() + static_cast<std::ptrdiff_t>(iv.begin),
                  bits.begin() + static_cast<std::ptrdiff_t>(iv.end), true);
    return bits;
}

namespace {

BlinkingTrace sample_telegraph(const PulseClock& clock, const SourceParams& params, RngStream& rng)
{
    const std::uint64_t n = clock.n_pulses();
    const double period = static_cast<double>(clock.pulse_period_ps());
    const double t_end = static_cast<double>(n) * period;

    std::vector<BlinkingTrace::Interval> on;
    bool state_on = rng.uniform() < params.eta_blinking;
    double t = 0.0;
    while (t < t_end) {
        const double mean = state_on ? params.blink_on_dwell_ps : params.blink_off_dwell_ps;
        const double t_next = t + rng.exponential(mean);
        if (state_on) {
            // Pulse p is on when its emission time p * period lies in [t, t_next).
            const auto begin = static_cast<std::uint64_t>(std::ceil(t / period));
            const auto end = std::min<std::uint64_t>(
                n, static_cast<std::uint64_t>(std::min(std::ceil(t_next / period), 1.8e19)));
            if (begin < end) {
                if (!on.empty() && on.back().end == begin)
                    on.back().end = end;
                else
                    on.push_back({begin, end});
            }
        }
        t = t_next;
        state_on = !state_on;
    }
    return BlinkingTrace(n, std::move(on));
}

BlinkingTrace sample_per_pulse(const PulseClock& clock, const SourceParams& params, RngStream& rng)
{
    const std::uint64_t n = clock.n_pulses();
    std::vector<BlinkingTrace::Interval> on;
    for (std::uint64_t p = 0; p < n; ++p) {
        if (!rng.bernoulli(params.eta_blinking))
            continue;
        if (!on.empty() && on.back().end == p)
            ++on.back().end;
        else
            on.push_back({p, p + 1});
    }
    return BlinkingTrace(n, std::move(on));
}

}  // namespace

BlinkingTrace sample_blinking_trace(const PulseClock& clock, const SourceParams& params,
                                    RngStream& rng)
{
    if (params.blinking_mode == BlinkingMode::fast)
        return sample_per_pulse(clock, params, rng);
    if (params.blink_off_dwell_ps == 0.0)
        return BlinkingTrace::always_on(clock.n_pulses());
    if (!(params.blink_on_dwell_ps > 0.0) || !(params.blink_off_dwell_ps > 0.0))
        throw InvalidArgument("blinking dwell times must be positive");
    return sample_telegraph(clock, params, rng);
}

EmissionOutcome sample_emission(std::uint64_t /*pulse_index*/, bool on, const SourceParams& params,
                                RngStream& rng)
{
    EmissionOutcome out;
    out.qd_was_on = on;
    if (!on)
        return out;
    const bool first = rng.bernoulli(params.eta_pop);
    const bool second = rng.bernoulli(params.multiphoton_prob);
    if (!first && !second)
        return out;
    const double d1 = rng.exponential(params.lifetime_ps);
    if (first)
        out.delays_ps.push_back(d1);
    if (second)
        out.delays_ps.push_back(d1 + rng.exponential(params.lifetime_ps));
    out.n_photons = static_cast<int>(out.delays_ps.size());
    return out;
}

// ---------------------------------------------------------------------------

CollectedEmissionSampler::CollectedEmissionSampler(const SourceParams& params)
{
    const double c = params.collection_efficiency();
    first_ = params.eta_pop * c;
    second_ = params.multiphoton_prob * c;
    hit_prob_ = 1.0 - (1.0 - first_) * (1.0 - second_);
    lifetime_ps_ = params.lifetime_ps;
    eta_blinking_ = params.eta_blinking;
}

void CollectedEmissionSampler::emit_hit(std::uint64_t pulse, RngStream& rng,
                                        std::vector<SourcePhoton>& out) const
{
    // Conditional on at least one collected photon.
    const double only_first = first_ * (1.0 - second_);
    const double only_second = (1.0 - first_) * second_;
    const double u = rng.uniform() * hit_prob_;
    const bool has_first = u < only_first || u >= only_first + only_second;
    const bool has_second = u >= only_first;
    const double d1 = rng.exponential(lifetime_ps_);
    if (has_first)
        out.push_back({pulse, d1, 0});
    if (has_second)
        out.push_back({pulse, d1 + rng.exponential(lifetime_ps_), 1});
}

void CollectedEmissionSampler::sample_range(std::uint64_t begin, std::uint64_t end,
                                            double hit_prob, RngStream& rng,
                                            std::vector<SourcePhoton>& out) const
{
    if (hit_prob <= 0.0)
        return;
    std::uint64_t p = begin;
    while (p < end) {
        const std::uint64_t skip = rng.geometric(hit_prob);
        if (skip >= end - p)
            break;
        p += skip;
        emit_hit(p, rng, out);
        ++p;
    }
}

void CollectedEmissionSampler::sample_on_range(std::uint64_t begin, std::uint64_t end,
                                               RngStream& rng,
                                               std::vector<SourcePhoton>& out) const
{
    sample_range(begin, end, hit_prob_, rng, out);
}

void CollectedEmissionSampler::sample_fast_blinking_range(std::uint64_t begin, std::uint64_t end,
                                                          RngStream& rng,
                                                          std::vector<SourcePhoton>& out) const
{
    sample_range(begin, end, eta_blinking_ * hit_prob_, rng, out);
}

}  // namespace qdemux
