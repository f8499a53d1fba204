#include "qdemux/analytics/rate_model.hpp"

#include <cmath>

namespace qdemux {

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

std::vector<std::string> rate_model_violations(const RateModel& model)
{
    std::vector<std::string> errs;
    if (!(model.rr_hz > 0.0) || !std::isfinite(model.rr_hz))
        errs.emplace_back("rr_hz must be positive");
    if (model.m < 1)
        errs.emplace_back("m must be >= 1");
    const struct {
        const char* name;
        double value;
    } probs[] = {{"eta_blinking", model.eta_blinking}, {"eta_qd", model.eta_qd},
                 {"eta_routing", model.eta_routing},   {"eta_det", model.eta_det},
                 {"eta_sw", model.eta_sw}};
    for (const auto& p : probs)
        if (!is_probability(p.value))
            errs.push_back(std::string(p.name) + " must lie in [0, 1]");
    if (!(model.eta_blinking > 0.0))
        errs.emplace_back("eta_blinking must be positive");
    if (model.eta_qd > model.eta_blinking)
        errs.emplace_back("eta_qd must not exceed eta_blinking");
    return errs;
}

double coincidence_bracket(int n, int m, double eta_sw)
{
    if (m < 2)
        return 1.0;
    const double wrong = (1.0 - eta_sw) / static_cast<double>(m - 1);
    return std::pow(eta_sw, n) + static_cast<double>(m - 1) * std::pow(wrong, n);
}

double analytic_coincidence_rate(int n, const RateModel& model, BlinkingMode mode)
{
    if (n < 1 || n > model.m)
        throw InvalidArgument("coincidence order must satisfy 1 <= n <= m");
    if (const auto errs = rate_model_violations(model); !errs.empty())
        throw InvalidArgument("invalid rate model: " + errs.front());
    const double per_cycle = model.rr_hz / static_cast<double>(model.m);
    const double bracket = coincidence_bracket(n, model.m, model.eta_sw);
    if (mode == BlinkingMode::fast)
        return per_cycle * std::pow(model.eta_qd * model.eta_routing * model.eta_det, n) * bracket;
    const double on_efficiency = model.eta_qd / model.eta_blinking;
    return per_cycle * model.eta_blinking *
           std::pow(on_efficiency * model.eta_routing * model.eta_det, n) * bracket;
}

std::vector<double> analytic_rate_table(const RateModel& model, BlinkingMode mode)
{
    std::vector<double> out;
    for (int n = 1; n <= model.m; ++n)
        out.push_back(analytic_coincidence_rate(n, model, mode));
    return out;
}

}  // namespace qdemux
