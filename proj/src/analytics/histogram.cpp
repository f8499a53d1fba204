#include "qdemux/analytics/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace qdemux {

namespace {

CorrelationHistogram empty_histogram(const HistogramRange& range)
{
    if (range.bin_width_ps <= 0 || range.span_ps <= 0)
        throw InvalidArgument("histogram bin width and span must be positive");
    CorrelationHistogram hist;
    hist.bin_width_ps = range.bin_width_ps;
    hist.origin_ps = range.origin_ps;
    hist.counts.assign(range.bin_count(), 0);
    return hist;
}

// Floor division for possibly negative numerators.
TimePs floor_div(TimePs a, TimePs b)
{
    TimePs q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0)))
        --q;
    return q;
}

}  // namespace

std::size_t HistogramRange::bin_count() const
{
    return static_cast<std::size_t>((span_ps + bin_width_ps - 1) / bin_width_ps);
}

double CorrelationHistogram::bin_center(std::size_t i) const
{
    return static_cast<double>(origin_ps) +
           (static_cast<double>(i) + 0.5) * static_cast<double>(bin_width_ps);
}

std::uint64_t CorrelationHistogram::total() const
{
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

std::uint64_t CorrelationHistogram::integrate(double lo_ps, double hi_ps) const
{
    // Bin i is included when origin + (i + 0.5) w lies in [lo, hi).
    const auto w = static_cast<double>(bin_width_ps);
    const auto o = static_cast<double>(origin_ps);
    const double n = static_cast<double>(counts.size());
    const double first = std::clamp(std::ceil((lo_ps - o) / w - 0.5), 0.0, n);
    const double last = std::clamp(std::ceil((hi_ps - o) / w - 0.5), 0.0, n);
    std::uint64_t sum = 0;
    for (auto i = static_cast<std::size_t>(first); i < static_cast<std::size_t>(last); ++i)
        sum += counts[i];
    return sum;
}

CorrelationHistogram build_histogram(std::span<const TimePs> start_tags,
                                     std::span<const TimePs> stop_tags, const HistogramRange& range,
                                     int sync_divider)
{
    if (sync_divider < 1)
        throw InvalidArgument("sync divider must be >= 1");
    CorrelationHistogram hist = empty_histogram(range);
    hist.meta.sync_divider = sync_divider;
    const TimePs hi = range.origin_ps + static_cast<TimePs>(hist.counts.size()) * range.bin_width_ps;

    std::size_t first = 0;
    for (std::size_t k = 0; k < start_tags.size(); k += static_cast<std::size_t>(sync_divider)) {
        const TimePs s = start_tags[k];
        ++hist.n_starts;
        while (first < stop_tags.size() && stop_tags[first] - s < range.origin_ps)
            ++first;
        for (std::size_t j = first; j < stop_tags.size(); ++j) {
            const TimePs d = stop_tags[j] - s;
            if (d >= hi)
                break;
            ++hist.counts[static_cast<std::size_t>((d - range.origin_ps) / range.bin_width_ps)];
        }
    }
    return hist;
}

CorrelationHistogram build_sync_histogram(const PulseClock& clock,
                                          std::span<const TimePs> stop_tags,
                                          const HistogramRange& range, int sync_divider,
                                          TimePs sync_offset_ps)
{
    if (sync_divider < 1)
        throw InvalidArgument("sync divider must be >= 1");
    CorrelationHistogram hist = empty_histogram(range);
    hist.meta.sync_divider = sync_divider;
    const auto divider = static_cast<std::uint64_t>(sync_divider);
    const std::uint64_t n_starts = (clock.n_pulses() + divider - 1) / divider;
    hist.n_starts = n_starts;
    if (n_starts == 0)
        return hist;

    const TimePs step = clock.pulse_period_ps() * static_cast<TimePs>(divider);
    const TimePs hi = range.origin_ps + static_cast<TimePs>(hist.counts.size()) * range.bin_width_ps;
    const auto last = static_cast<TimePs>(n_starts - 1);
    for (const TimePs t : stop_tags) {
        // Starts s_j with origin <= t - s_j < hi.
        const TimePs rel = t - sync_offset_ps;
        TimePs j_lo = floor_div(rel - hi, step) + 1;
        TimePs j_hi = floor_div(rel - range.origin_ps, step);
        j_lo = std::max<TimePs>(j_lo, 0);
        j_hi = std::min<TimePs>(j_hi, last);
        for (TimePs j = j_lo; j <= j_hi; ++j) {
            const TimePs d = rel - j * step;
            ++hist.counts[static_cast<std::size_t>((d - range.origin_ps) / range.bin_width_ps)];
        }
    }
    return hist;
}

void write_histogram_csv(std::ostream& os, const CorrelationHistogram& hist)
{
    os << "bin_start_ps,count\n";
    for (std::size_t i = 0; i < hist.counts.size(); ++i)
        os << hist.origin_ps + static_cast<TimePs>(i) * hist.bin_width_ps << ',' << hist.counts[i]
           << '\n';
}

}  // namespace qdemux
