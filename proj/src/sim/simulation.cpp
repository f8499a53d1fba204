#include "qdemux/sim/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <thread>

namespace qdemux {

namespace {

struct BlockOutput {
    std::vector<TagStream> candidates;
    SimulationCounters counters;
    std::vector<RoutedPhoton> routed;
};

class Pipeline {
public:
    Pipeline(const ScenarioConfig& cfg, const SimulationOptions& opt)
        : cfg_(cfg),
          opt_(opt),
          network_(cfg.network, cfg.clock.pulse_period_ps()),
          sampler_(cfg.source),
          m_(network_.channel_count()),
          outputs_(cfg.hom ? 2 : m_)
    {
        const std::uint64_t mu = m_;
        block_ = std::max<std::uint64_t>(opt.block_pulses, 1);
        block_ = (block_ + mu - 1) / mu * mu;
        if (cfg.hom) {
            out_detectors_ = {cfg.detectors[static_cast<std::size_t>(cfg.hom->input_a)],
                              cfg.detectors[static_cast<std::size_t>(cfg.hom->input_b)]};
        } else {
            out_detectors_ = cfg.detectors;
        }
    }

    SimulationResult run()
    {
        const PulseClock& clock = cfg_.clock;
        SimulationResult result;
        result.clock = clock;

        if (cfg_.source.blinking_mode == BlinkingMode::slow) {
            RngStream rng(cfg_.rng_seed, stream_id(StreamKind::blinking));
            trace_ = sample_blinking_trace(clock, cfg_.source, rng);
            result.on_pulses = trace_.on_pulses();
            result.on_fraction = trace_.on_fraction();
        } else {
            result.on_fraction = cfg_.source.eta_blinking;
            result.on_pulses = static_cast<std::uint64_t>(
                std::llround(cfg_.source.eta_blinking * static_cast<double>(clock.n_pulses())));
        }

        const std::uint64_t n_blocks = (clock.n_pulses() + block_ - 1) / block_;
        std::vector<BlockOutput> blocks(n_blocks);
        std::atomic<std::uint64_t> next{0};
        auto worker = [&] {
            for (std::uint64_t b = next++; b < n_blocks; b = next++)
                blocks[b] = process_block(b);
        };
        const unsigned n_threads =
            std::max(1u, std::min<unsigned>(opt_.threads, static_cast<unsigned>(std::max<std::uint64_t>(n_blocks, 1))));
        if (n_threads == 1) {
            worker();
        } else {
            std::vector<std::jthread> pool;
            for (unsigned i = 0; i < n_threads; ++i)
                pool.emplace_back(worker);
        }

        SimulationCounters& total = result.counters;
        total.channel_exits.assign(m_, 0);
        total.detector_arrivals.assign(outputs_, 0);
        total.detector_candidates.assign(outputs_, 0);
        for (const auto& blk : blocks) {
            const auto& c = blk.counters;
            total.photons_in += c.photons_in;
            total.photons_lost += c.photons_lost;
            total.photons_correct += c.photons_correct;
            total.photons_misrouted += c.photons_misrouted;
            for (std::size_t i = 0; i < m_; ++i)
                total.channel_exits[i] += c.channel_exits[i];
            for (std::size_t o = 0; o < outputs_; ++o) {
                total.detector_arrivals[o] += c.detector_arrivals[o];
                total.detector_candidates[o] += c.detector_candidates[o];
            }
        }
        if (opt_.record_routing)
            for (auto& blk : blocks)
                result.routed.insert(result.routed.end(), blk.routed.begin(), blk.routed.end());

        result.tags.resize(outputs_);
        for (std::size_t o = 0; o < outputs_; ++o) {
            TagStream all;
            all.reserve(total.detector_candidates[o]);
            for (auto& blk : blocks) {
                all.insert(all.end(), blk.candidates[o].begin(), blk.candidates[o].end());
                TagStream().swap(blk.candidates[o]);
            }
            std::sort(all.begin(), all.end());
            result.tags[o] = apply_dead_time(all, out_detectors_[o].dead_time_ps);
        }
        return result;
    }

private:
    BlockOutput process_block(std::uint64_t b) const
    {
        const std::uint64_t begin = b * block_;
        const std::uint64_t end = std::min(begin + block_, cfg_.clock.n_pulses());
        RngStream rng(cfg_.rng_seed, stream_id(StreamKind::block, b));

        std::vector<SourcePhoton> photons;
        if (cfg_.source.blinking_mode == BlinkingMode::fast) {
            sampler_.sample_fast_blinking_range(begin, end, rng, photons);
        } else {
            const auto& on = trace_.on_intervals();
            auto it = std::upper_bound(on.begin(), on.end(), begin,
                                       [](std::uint64_t p, const BlinkingTrace::Interval& iv) {
                                           return p < iv.end;
                                       });
            for (; it != on.end() && it->begin < end; ++it)
                sampler_.sample_on_range(std::max(it->begin, begin), std::min(it->end, end), rng,
                                         photons);
        }

        BlockOutput out;
        SimulationCounters& c = out.counters;
        c.channel_exits.assign(m_, 0);
        c.detector_arrivals.assign(outputs_, 0);
        c.detector_candidates.assign(outputs_, 0);
        std::vector<TagStream> arrivals(m_);
        // Re-excitation photons at the beamsplitter inputs, kept apart so they
        // never pair with a photon of the other input.
        std::vector<TagStream> extras(cfg_.hom ? m_ : 0);
        for (const auto& ph : photons) {
            const RoutedPhoton r = network_.route(ph, rng);
            ++c.photons_in;
            if (r.exit_channel == kLostChannel) {
                ++c.photons_lost;
            } else {
                ++c.channel_exits[static_cast<std::size_t>(r.exit_channel)];
                ++(r.correctly_routed ? c.photons_correct : c.photons_misrouted);
                const auto ch = static_cast<std::size_t>(r.exit_channel);
                (cfg_.hom && ph.index_in_pulse > 0 ? extras[ch] : arrivals[ch]).push_back(r.exit_time_ps);
            }
            if (opt_.record_routing)
                out.routed.push_back(r);
        }

        std::vector<TagStream> at_detectors;
        if (cfg_.hom) {
            auto& a = arrivals[static_cast<std::size_t>(cfg_.hom->input_a)];
            auto& bb = arrivals[static_cast<std::size_t>(cfg_.hom->input_b)];
            std::sort(a.begin(), a.end());
            std::sort(bb.begin(), bb.end());
            RngStream hrng(cfg_.rng_seed, stream_id(StreamKind::hom, b));
            auto [o1, o2] = hom_merge(a, bb, *cfg_.hom, cfg_.clock.pulse_period_ps(), hrng);
            TagStream none;
            for (const int in : {cfg_.hom->input_a, cfg_.hom->input_b}) {
                auto& e = extras[static_cast<std::size_t>(in)];
                std::sort(e.begin(), e.end());
                auto [x1, x2] = hom_merge(e, none, *cfg_.hom, cfg_.clock.pulse_period_ps(), hrng);
                o1.insert(o1.end(), x1.begin(), x1.end());
                o2.insert(o2.end(), x2.begin(), x2.end());
            }
            at_detectors.push_back(std::move(o1));
            at_detectors.push_back(std::move(o2));
        } else {
            at_detectors = std::move(arrivals);
        }

        RngStream drng(cfg_.rng_seed, stream_id(StreamKind::detection, b));
        out.candidates.resize(outputs_);
        for (std::size_t o = 0; o < outputs_; ++o) {
            c.detector_arrivals[o] = at_detectors[o].size();
            apply_efficiency_and_jitter(at_detectors[o], out_detectors_[o], drng, out.candidates[o]);
            c.detector_candidates[o] = out.candidates[o].size();
        }
        return out;
    }

    const ScenarioConfig& cfg_;
    const SimulationOptions& opt_;
    DemuxNetwork network_;
    CollectedEmissionSampler sampler_;
    std::size_t m_;
    std::size_t outputs_;
    std::uint64_t block_ = 1;
    std::vector<DetectorParams> out_detectors_;
    BlinkingTrace trace_;
};

}  // namespace

SimulationResult run_simulation(const ScenarioConfig& config, const SimulationOptions& options)
{
    validate_config(config);
    Pipeline pipeline(config, options);
    return pipeline.run();
}

void write_emission_debug_csv(std::ostream& os, const ScenarioConfig& config, std::uint64_t n_pulses)
{
    const PulseClock clock = config.clock.with_pulses(n_pulses);
    RngStream trng(config.rng_seed, stream_id(StreamKind::blinking));
    const BlinkingTrace trace = sample_blinking_trace(clock, config.source, trng);
    RngStream rng(config.rng_seed, stream_id(StreamKind::debug));
    os << "pulse_index,on,n_photons,delay_ps\n";
    for (std::uint64_t p = 0; p < n_pulses; ++p) {
        const bool on = trace.is_on(p);
        const EmissionOutcome e = sample_emission(p, on, config.source, rng);
        if (e.delays_ps.empty()) {
            os << p << ',' << int{on} << ",0,\n";
            continue;
        }
        for (const double d : e.delays_ps)
            os << p << ',' << int{on} << ',' << e.n_photons << ',' << d << '\n';
    }
}

}  // namespace qdemux
