#include "qdemux/analytics/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace qdemux {

namespace {

struct PeakWindowRange {
    long long first = 0;
    long long last = -1;
};

// Peaks k with [offset + kP - w/2, offset + kP + w/2) inside the histogram.
PeakWindowRange complete_peaks(const CorrelationHistogram& hist, double offset, double period,
                               double window)
{
    const double lo = static_cast<double>(hist.origin_ps);
    const double hi = lo + static_cast<double>(hist.span_ps());
    PeakWindowRange r;
    r.first = static_cast<long long>(std::ceil((lo + 0.5 * window - offset) / period));
    r.last = static_cast<long long>(std::floor((hi - 0.5 * window - offset) / period));
    return r;
}

}  // namespace

double PeakAreas::side_total() const
{
    return std::accumulate(side.begin(), side.end(), 0.0);
}

double PeakAreas::side_mean() const
{
    return side.empty() ? 0.0 : side_total() / static_cast<double>(side.size());
}

PeakAreas periodic_peak_areas(const CorrelationHistogram& hist, double period_ps,
                              double integration_window_ps)
{
    if (!(period_ps > 0.0) || !(integration_window_ps > 0.0))
        throw InvalidArgument("period and integration window must be positive");
    if (integration_window_ps > period_ps)
        throw InvalidArgument("integration window exceeds the peak spacing");
    const PeakWindowRange r = complete_peaks(hist, 0.0, period_ps, integration_window_ps);
    if (r.first > 0 || r.last < 0)
        throw InvalidArgument("histogram does not contain the center peak");

    PeakAreas areas;
    const double half = 0.5 * integration_window_ps;
    for (long long k = r.first; k <= r.last; ++k) {
        const double c = static_cast<double>(k) * period_ps;
        const auto area = static_cast<double>(hist.integrate(c - half, c + half));
        if (k == 0) {
            areas.center = area;
        } else {
            areas.side.push_back(area);
            (k < 0 ? areas.n_left : areas.n_right) += 1;
        }
    }
    return areas;
}

Estimate hbt_g2(const CorrelationHistogram& hist, double period_ps, double integration_window_ps)
{
    const PeakAreas areas = periodic_peak_areas(hist, period_ps, integration_window_ps);
    if (areas.n_left < 3 || areas.n_right < 3)
        throw InvalidArgument("g2 needs at least three side peaks on each side");
    const double total = areas.side_total();
    if (total <= 0.0)
        throw InvalidArgument("side peaks are empty");
    const double mean = areas.side_mean();
    Estimate g2;
    g2.value = areas.center / mean;
    g2.uncertainty = areas.center > 0.0
                         ? g2.value * std::sqrt(1.0 / areas.center + 1.0 / total)
                         : 1.0 / mean;
    return g2;
}

ChannelSwitching channel_switching(const CorrelationHistogram& hist, double period_ps,
                                   int cycle_length)
{
    if (cycle_length < 1)
        throw InvalidArgument("cycle length must be >= 1");
    if (!(period_ps > 0.0))
        throw InvalidArgument("period must be positive");
    const auto bw = static_cast<double>(hist.bin_width_ps);
    if (2.0 * bw > period_ps)
        throw InvalidArgument("bin width too coarse to separate adjacent peaks");

    // Fold modulo the period to locate the peak position within a period.
    const auto n_fold = static_cast<std::size_t>(std::ceil(period_ps / bw));
    std::vector<std::uint64_t> folded(n_fold, 0);
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        if (hist.counts[i] == 0)
            continue;
        double phase = std::fmod(hist.bin_center(i), period_ps);
        if (phase < 0.0)
            phase += period_ps;
        folded[static_cast<std::size_t>(phase / bw) % n_fold] += hist.counts[i];
    }
    const auto peak_bin = static_cast<std::size_t>(
        std::max_element(folded.begin(), folded.end()) - folded.begin());
    if (folded[peak_bin] == 0)
        throw InvalidArgument("histogram is empty");
    double offset = (static_cast<double>(peak_bin) + 0.5) * bw;
    if (offset > 0.5 * period_ps)
        offset -= period_ps;

    const auto L = static_cast<std::size_t>(cycle_length);
    std::vector<double> sum(L, 0.0);
    std::vector<double> n(L, 0.0);
    const PeakWindowRange r = complete_peaks(hist, offset, period_ps, period_ps);
    for (long long k = r.first; k <= r.last; ++k) {
        const double c = offset + static_cast<double>(k) * period_ps;
        const auto res = static_cast<std::size_t>(((k % cycle_length) + cycle_length) % cycle_length);
        sum[res] += static_cast<double>(hist.integrate(c - 0.5 * period_ps, c + 0.5 * period_ps));
        n[res] += 1.0;
    }
    for (std::size_t i = 0; i < L; ++i)
        if (n[i] == 0.0)
            throw InvalidArgument("histogram shorter than one switching cycle");

    std::vector<double> mean(L);
    for (std::size_t i = 0; i < L; ++i)
        mean[i] = sum[i] / n[i];
    const auto main = static_cast<std::size_t>(std::max_element(mean.begin(), mean.end()) - mean.begin());

    ChannelSwitching out;
    out.main_residue = static_cast<int>(main);
    out.peak_offset_ps = offset;
    out.sigma_main = mean[main];
    double var_side = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
        if (i == main)
            continue;
        out.sigma_side += mean[i];
        var_side += sum[i] / (n[i] * n[i]);
    }
    const double var_main = sum[main] / (n[main] * n[main]);
    out.extinction_ratio = out.sigma_side > 0.0 ? out.sigma_main / out.sigma_side
                                                : std::numeric_limits<double>::infinity();
    const double tot = out.sigma_main + out.sigma_side;
    out.eta_sw = out.sigma_main / tot;
    const double d_main = out.sigma_side / (tot * tot);
    const double d_side = out.sigma_main / (tot * tot);
    out.eta_sw_uncertainty = std::sqrt(d_main * d_main * var_main + d_side * d_side * var_side);
    return out;
}

SwitchingMetrics switching_metrics(std::span<const CorrelationHistogram> histograms,
                                   double period_ps, int cycle_length)
{
    if (histograms.empty())
        throw InvalidArgument("no histograms");
    SwitchingMetrics m;
    double var = 0.0;
    for (const auto& h : histograms) {
        const ChannelSwitching c = channel_switching(h, period_ps, cycle_length);
        m.per_channel_er.push_back(c.extinction_ratio);
        m.per_channel_eta_sw.push_back(c.eta_sw);
        m.per_channel_eta_sw_uncertainty.push_back(c.eta_sw_uncertainty);
        var += c.eta_sw_uncertainty * c.eta_sw_uncertainty;
    }
    const auto n = static_cast<double>(histograms.size());
    m.mean_eta_sw =
        std::accumulate(m.per_channel_eta_sw.begin(), m.per_channel_eta_sw.end(), 0.0) / n;
    m.mean_eta_sw_uncertainty = std::sqrt(var) / n;
    if (histograms.size() > 1) {
        double ss = 0.0;
        for (const double e : m.per_channel_eta_sw)
            ss += (e - m.mean_eta_sw) * (e - m.mean_eta_sw);
        m.std_eta_sw = std::sqrt(ss / (n - 1.0));
    }
    return m;
}

double source_efficiency(double r_det_hz, double rr_hz, double eta_ch1, double eta_det)
{
    if (!(rr_hz > 0.0) || !(eta_ch1 > 0.0) || !(eta_det > 0.0))
        throw InvalidArgument("repetition rate and efficiencies must be positive");
    if (eta_ch1 > 1.0 || eta_det > 1.0)
        throw InvalidArgument("efficiencies must not exceed 1");
    if (r_det_hz < 0.0)
        throw InvalidArgument("detected rate must be non-negative");
    return (r_det_hz / rr_hz) / (eta_ch1 * eta_det);
}

double hom_visibility_raw(double c_parallel, double c_perpendicular)
{
    if (!(c_perpendicular > 0.0))
        throw InvalidArgument("cross-polarized coincidences must be positive");
    return 1.0 - c_parallel / c_perpendicular;
}

double hom_visibility_alternative(double center_area, double mean_uncorrelated_area)
{
    if (!(mean_uncorrelated_area > 0.0))
        throw InvalidArgument("uncorrelated peak area must be positive");
    return 1.0 - 2.0 * center_area / mean_uncorrelated_area;
}

double hom_visibility_corrected(double v_raw, double g2_zero, double reflectivity)
{
    if (!(reflectivity > 0.0 && reflectivity < 1.0))
        throw InvalidArgument("reflectivity must lie in (0, 1)");
    if (!(g2_zero < 1.0))
        throw InvalidArgument("g2(0) must be below 1");
    const double r = reflectivity;
    const double t = 1.0 - r;
    return (v_raw + g2_zero) / (1.0 - g2_zero) * (r * r + t * t) / (2.0 * r * t);
}

}  // namespace qdemux
