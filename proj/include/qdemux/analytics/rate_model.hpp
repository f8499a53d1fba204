// Closed-form n-fold coincidence rates of an m-channel demultiplexed source.
#pragma once

#include <string>
#include <vector>

#include "qdemux/source/source.hpp"

namespace qdemux {

struct RateModel {
    double rr_hz = 76.2e6;
    int m = 4;
    double eta_blinking = 0.36;
    double eta_qd = 0.0090;
    double eta_routing = 0.84;
    double eta_det = 0.68;
    double eta_sw = 0.946;
};

/// Problems with the model, empty when valid.
std::vector<std::string> rate_model_violations(const RateModel& model);

/// eta_sw^n + (m-1) ((1 - eta_sw)/(m-1))^n, or 1 for m = 1.
double coincidence_bracket(int n, int m, double eta_sw);

/// Detected rate of n distinct channels clicking in the same switching cycle.
///
/// Slow blinking (emitter state constant over a cycle):
///   (RR/m) eta_b (eta_qd/eta_b * eta_routing * eta_det)^n * bracket
/// Fast blinking (independent per pulse):
///   (RR/m) (eta_qd * eta_routing * eta_det)^n * bracket
double analytic_coincidence_rate(int n, const RateModel& model,
                                 BlinkingMode mode = BlinkingMode::slow);

/// analytic_coincidence_rate for n = 1..m.
std::vector<double> analytic_rate_table(const RateModel& model,
                                        BlinkingMode mode = BlinkingMode::slow);

}  // namespace qdemux
