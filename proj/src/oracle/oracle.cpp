#include "qdemux/oracle/oracle.hpp"

#include <json.hpp>
#include <ostream>

namespace qdemux::oracle {

namespace {

struct Branch {
    PulseOutcome outcome;
    double probability = 0.0;
};

// The 2m + 2 outcomes of one pulse: no photon, photon lost, or photon in
// channel c then detected or missed.
std::vector<Branch> pulse_branches(int slot, int m, double p_emit, const RateModel& model)
{
    std::vector<Branch> out;
    out.push_back({{false, kLostChannel, false}, 1.0 - p_emit});
    out.push_back({{true, kLostChannel, false}, p_emit * (1.0 - model.eta_routing)});
    for (int c = 0; c < m; ++c) {
        double route = 1.0;
        if (m > 1)
            route = c == slot ? model.eta_sw : (1.0 - model.eta_sw) / static_cast<double>(m - 1);
        const double arrive = p_emit * model.eta_routing * route;
        out.push_back({{true, c, true}, arrive * model.eta_det});
        out.push_back({{true, c, false}, arrive * (1.0 - model.eta_det)});
    }
    return out;
}

void check_inputs(int m)
{
    if (m < 1 || m > kMaxChannels)
        throw InvalidArgument("enumeration supports 1 <= m <= 4");
}

// Visits every cycle outcome with its probability, without materializing
// the table.
template <class Visit>
void for_each_outcome(int m, const RateModel& model, BlinkingMode mode, Visit&& visit)
{
    check_inputs(m);
    const bool slow = mode == BlinkingMode::slow;
    const double p_emit = slow ? model.eta_qd / model.eta_blinking : model.eta_qd;
    const double p_on = slow ? model.eta_blinking : 1.0;

    std::vector<std::vector<Branch>> branches;
    for (int s = 0; s < m; ++s)
        branches.push_back(pulse_branches(s, m, p_emit, model));

    CycleOutcome cur;
    cur.per_pulse.resize(static_cast<std::size_t>(m));
    std::vector<std::size_t> idx(static_cast<std::size_t>(m), 0);
    const std::size_t per_pulse = branches[0].size();
    for (;;) {
        double p = p_on;
        for (std::size_t s = 0; s < idx.size(); ++s) {
            cur.per_pulse[s] = branches[s][idx[s]].outcome;
            p *= branches[s][idx[s]].probability;
        }
        cur.probability = p;
        cur.emitter_on = true;
        visit(static_cast<const CycleOutcome&>(cur));

        std::size_t k = 0;
        while (k < idx.size() && ++idx[k] == per_pulse)
            idx[k++] = 0;
        if (k == idx.size())
            break;
    }
    if (slow) {
        cur.emitter_on = false;
        for (auto& po : cur.per_pulse)
            po = PulseOutcome{};
        cur.probability = 1.0 - p_on;
        visit(static_cast<const CycleOutcome&>(cur));
    }
}

}  // namespace

int coincidence_bins(const CycleOutcome& outcome, std::span<const int> channels)
{
    const int m = static_cast<int>(outcome.per_pulse.size());
    int bins = 0;
    for (int b = 0; b < m; ++b) {
        bool all = true;
        for (const int c : channels) {
            const auto& po = outcome.per_pulse[static_cast<std::size_t>((c + b) % m)];
            if (!(po.detected && po.exit_channel == c)) {
                all = false;
                break;
            }
        }
        bins += all ? 1 : 0;
    }
    return bins;
}

std::vector<CycleOutcome> enumerate_outcomes(int m, const RateModel& model, BlinkingMode mode)
{
    std::vector<CycleOutcome> table;
    for_each_outcome(m, model, mode, [&](const CycleOutcome& o) { table.push_back(o); });
    return table;
}

CycleEnumeration enumerate_cycle(int m, const RateModel& model, BlinkingMode mode,
                                 std::span<const int> channels)
{
    check_inputs(m);
    if (channels.empty() || static_cast<int>(channels.size()) > m)
        throw InvalidArgument("channel set must hold 1..m channels");
    for (std::size_t i = 0; i < channels.size(); ++i) {
        if (channels[i] < 0 || channels[i] >= m)
            throw InvalidArgument("channel index out of range");
        for (std::size_t j = 0; j < i; ++j)
            if (channels[i] == channels[j])
                throw InvalidArgument("channels must be distinct");
    }
    CycleEnumeration e;
    for_each_outcome(m, model, mode, [&](const CycleOutcome& o) {
        e.total_probability += o.probability;
        ++e.outcome_count;
        const int bins = coincidence_bins(o, channels);
        if (bins > 0)
            e.expected_per_cycle += o.probability * bins;
    });
    e.rate_hz = model.rr_hz / static_cast<double>(m) * e.expected_per_cycle;
    return e;
}

CycleEnumeration enumerate_cycle(int m, const RateModel& model, BlinkingMode mode, int n)
{
    std::vector<int> channels;
    for (int c = 0; c < n; ++c)
        channels.push_back(c);
    return enumerate_cycle(m, model, mode, channels);
}

void write_outcome_table_json(std::ostream& os, int m, const RateModel& model, BlinkingMode mode)
{
    nlohmann::json rows = nlohmann::json::array();
    for_each_outcome(m, model, mode, [&](const CycleOutcome& o) {
        nlohmann::json pulses = nlohmann::json::array();
        for (const auto& po : o.per_pulse)
            pulses.push_back({{"emitted", po.emitted},
                              {"exit_channel", po.exit_channel == kLostChannel
                                                   ? nlohmann::json("LOST")
                                                   : nlohmann::json(po.exit_channel)},
                              {"detected", po.detected}});
        rows.push_back({{"emitter_on", o.emitter_on}, {"per_pulse", pulses},
                        {"probability", o.probability}});
    });
    nlohmann::json doc = {{"m", m}, {"blinking_mode", std::string(to_string(mode))},
                          {"outcomes", rows}};
    os << doc.dump(1) << '\n';
}

}  // namespace qdemux::oracle
