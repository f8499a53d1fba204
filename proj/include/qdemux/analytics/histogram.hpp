// Start-stop correlation histograms.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "qdemux/core/types.hpp"

namespace qdemux {

/// Histogram axis: bins of bin_width_ps covering [origin_ps, origin_ps + span_ps).
struct HistogramRange {
    TimePs origin_ps = 0;
    TimePs span_ps = 0;
    TimePs bin_width_ps = 100;

    std::size_t bin_count() const;
};

struct HistogramMeta {
    /// Start channel, or -1 when starts come from the pump clock.
    int start_channel = -1;
    int stop_channel = 0;
    int sync_divider = 1;
};

struct CorrelationHistogram {
    TimePs bin_width_ps = 100;
    TimePs origin_ps = 0;
    std::vector<std::uint64_t> counts;
    HistogramMeta meta;
    /// Retained start events.
    std::uint64_t n_starts = 0;

    TimePs span_ps() const { return bin_width_ps * static_cast<TimePs>(counts.size()); }
    double bin_center(std::size_t i) const;
    std::uint64_t total() const;
    /// Sum of bins whose centers lie in [lo, hi).
    std::uint64_t integrate(double lo_ps, double hi_ps) const;
};

/// For every sync_divider-th start, accumulates stop - start for all stops
/// inside the range.
CorrelationHistogram build_histogram(std::span<const TimePs> start_tags,
                                     std::span<const TimePs> stop_tags, const HistogramRange& range,
                                     int sync_divider = 1);

/// Same as build_histogram with the start stream taken from the pump clock,
/// pulse_time(j * sync_divider) + sync_offset_ps, without materializing it.
CorrelationHistogram build_sync_histogram(const PulseClock& clock,
                                          std::span<const TimePs> stop_tags,
                                          const HistogramRange& range, int sync_divider,
                                          TimePs sync_offset_ps = 0);

/// "bin_start_ps,count" rows.
void write_histogram_csv(std::ostream& os, const CorrelationHistogram& hist);

}  // namespace qdemux
