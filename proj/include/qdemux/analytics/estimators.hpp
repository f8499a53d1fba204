// Estimators over correlation histograms: g2(0), switching efficiency and
// two-photon interference visibility.
#pragma once

#include <span>
#include <vector>

#include "qdemux/analytics/histogram.hpp"

namespace qdemux {

struct Estimate {
    double value = 0.0;
    double uncertainty = 0.0;
};

/// Peaks located at k * period_ps, each integrated over a window of
/// integration_window_ps centered on it. A peak counts only if its whole
/// window lies inside the histogram.
struct PeakAreas {
    double center = 0.0;
    std::vector<double> side;  ///< complete side peaks, any order
    int n_left = 0;
    int n_right = 0;
    double side_mean() const;
    double side_total() const;
};

PeakAreas periodic_peak_areas(const CorrelationHistogram& hist, double period_ps,
                              double integration_window_ps);

/// Center-peak area over mean side-peak area, Poisson errors. Needs at least
/// three complete side peaks on each side.
Estimate hbt_g2(const CorrelationHistogram& hist, double period_ps, double integration_window_ps);

struct ChannelSwitching {
    double sigma_main = 0.0;  ///< mean area of the main (correctly routed) peaks
    double sigma_side = 0.0;  ///< sum of mean areas of the cycle_length - 1 side peaks
    double extinction_ratio = 0.0;
    double eta_sw = 0.0;
    double eta_sw_uncertainty = 0.0;
    int main_residue = 0;
    /// Offset of the main peak from the nearest multiple of the period.
    double peak_offset_ps = 0.0;
};

struct SwitchingMetrics {
    std::vector<double> per_channel_er;
    std::vector<double> per_channel_eta_sw;
    std::vector<double> per_channel_eta_sw_uncertainty;
    double mean_eta_sw = 0.0;
    double mean_eta_sw_uncertainty = 0.0;
    double std_eta_sw = 0.0;
};

/// Main/side peak analysis of one channel's sync histogram, whose peaks repeat
/// every period_ps with a pattern of length cycle_length (the sync divider).
ChannelSwitching channel_switching(const CorrelationHistogram& hist, double period_ps,
                                   int cycle_length);

SwitchingMetrics switching_metrics(std::span<const CorrelationHistogram> histograms,
                                   double period_ps, int cycle_length);

/// (R_det / RR) / (eta_ch1 * eta_det).
double source_efficiency(double r_det_hz, double rr_hz, double eta_ch1, double eta_det);

/// 1 - C_par / C_perp.
double hom_visibility_raw(double c_parallel, double c_perpendicular);

/// 1 - 2 * center / mean_uncorrelated.
double hom_visibility_alternative(double center_area, double mean_uncorrelated_area);

/// (V_raw + g2) / (1 - g2) * (R^2 + T^2) / (2 R T).
double hom_visibility_corrected(double v_raw, double g2_zero, double reflectivity);

}  // namespace qdemux
