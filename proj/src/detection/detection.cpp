#include "qdemux/detection/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qdemux {

namespace {

void require_sorted(std::span<const TimePs> tags, const char* what)
{
    if (!std::is_sorted(tags.begin(), tags.end()))
        throw InvalidArgument(std::string(what) + " must be sorted by time");
}

}  // namespace

void apply_efficiency_and_jitter(std::span<const TimePs> arrivals, const DetectorParams& params,
                                 RngStream& rng, TagStream& out)
{
    const bool jitter = params.jitter_sigma_ps > 0.0;
    for (const TimePs t : arrivals) {
        if (!(rng.uniform() < params.efficiency))
            continue;
        TimePs tag = t;
        if (jitter)
            tag += std::llround(params.jitter_sigma_ps * rng.normal());
        out.push_back(std::max<TimePs>(tag, 0));
    }
}

TagStream apply_dead_time(std::span<const TimePs> sorted_candidates, TimePs dead_time_ps)
{
    TagStream kept;
    kept.reserve(sorted_candidates.size());
    for (const TimePs t : sorted_candidates) {
        if (kept.empty() || t - kept.back() > dead_time_ps)
            kept.push_back(t);
    }
    return kept;
}

TagStream detect(std::span<const TimePs> arrivals, const DetectorParams& params, RngStream& rng)
{
    require_sorted(arrivals, "arrivals");
    TagStream candidates;
    candidates.reserve(arrivals.size());
    apply_efficiency_and_jitter(arrivals, params, rng, candidates);
    std::sort(candidates.begin(), candidates.end());
    return apply_dead_time(candidates, params.dead_time_ps);
}

CoincidenceResult coincidence_count(std::span<const std::span<const TimePs>> streams,
                                    TimePs window_ps, TimePs duration_ps)
{
    if (window_ps <= 0)
        throw InvalidArgument("coincidence window must be positive");
    CoincidenceResult result;
    if (streams.empty())
        return result;
    for (const auto& s : streams)
        require_sorted(s, "tag streams");

    std::vector<std::size_t> head(streams.size(), 0);
    auto exhausted = [&] {
        for (std::size_t i = 0; i < streams.size(); ++i)
            if (head[i] >= streams[i].size())
                return true;
        return false;
    };
    while (!exhausted()) {
        std::size_t anchor_stream = 0;
        TimePs anchor = std::numeric_limits<TimePs>::max();
        for (std::size_t i = 0; i < streams.size(); ++i) {
            if (streams[i][head[i]] < anchor) {
                anchor = streams[i][head[i]];
                anchor_stream = i;
            }
        }
        bool all_inside = true;
        for (std::size_t i = 0; i < streams.size(); ++i) {
            if (streams[i][head[i]] - anchor > window_ps) {
                all_inside = false;
                break;
            }
        }
        if (all_inside) {
            ++result.count;
            for (auto& h : head)
                ++h;
        } else {
            ++head[anchor_stream];
        }
    }
    if (duration_ps > 0) {
        const double seconds = static_cast<double>(duration_ps) * 1e-12;
        result.rate_hz = static_cast<double>(result.count) / seconds;
        result.rate_uncertainty_hz = std::sqrt(static_cast<double>(result.count)) / seconds;
    }
    return result;
}

double hom_coincidence_probability(double reflectivity, double indistinguishability)
{
    const double r = reflectivity;
    const double t = 1.0 - r;
    return r * r + t * t - 2.0 * r * t * indistinguishability;
}

std::pair<TagStream, TagStream> hom_merge(std::span<const TimePs> tags_a,
                                          std::span<const TimePs> tags_b,
                                          const HomBenchSpec& spec, TimePs pulse_period_ps,
                                          RngStream& rng)
{
    require_sorted(tags_a, "input a");
    require_sorted(tags_b, "input b");
    if (!(spec.reflectivity > 0.0 && spec.reflectivity < 1.0))
        throw InvalidArgument("reflectivity must lie in (0, 1)");
    const TimePs window = spec.pairing_window_ps > 0 ? spec.pairing_window_ps : pulse_period_ps / 2;
    const double r = spec.reflectivity;
    const double p_coinc = hom_coincidence_probability(r, spec.mutual_indistinguishability);
    const double p_a_to_1 = r * r / (r * r + (1.0 - r) * (1.0 - r));

    TagStream out1;
    TagStream out2;
    out1.reserve(tags_a.size() + tags_b.size());
    out2.reserve(tags_a.size() + tags_b.size());

    auto single = [&](TimePs t) { (rng.uniform() < r ? out1 : out2).push_back(t); };

    std::size_t i = 0;
    std::size_t j = 0;
    while (i < tags_a.size() && j < tags_b.size()) {
        const TimePs d = tags_a[i] - tags_b[j] - spec.relative_delay_ps;
        if (d <= -window) {
            single(tags_a[i++]);
        } else if (d >= window) {
            single(tags_b[j++]);
        } else {
            const TimePs ta = tags_a[i++];
            const TimePs tb = tags_b[j++];
            if (rng.uniform() < p_coinc) {
                if (rng.uniform() < p_a_to_1) {
                    out1.push_back(ta);
                    out2.push_back(tb);
                } else {
                    out2.push_back(ta);
                    out1.push_back(tb);
                }
            } else {
                // Bunched pairs leave either port with equal probability,
                // R T (1 + V) each, whatever the splitting ratio.
                auto& port = rng.uniform() < 0.5 ? out1 : out2;
                port.push_back(ta);
                port.push_back(tb);
            }
        }
    }
    for (; i < tags_a.size(); ++i)
        single(tags_a[i]);
    for (; j < tags_b.size(); ++j)
        single(tags_b[j]);

    std::sort(out1.begin(), out1.end());
    std::sort(out2.begin(), out2.end());
    return {std::move(out1), std::move(out2)};
}

}  // namespace qdemux
