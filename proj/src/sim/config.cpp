#include "qdemux/sim/config.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace qdemux {

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::string format_double(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string format_bool(bool b) { return b ? "true" : "false"; }

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

// Reads typed values out of a ConfigMap, remembering which keys were used
// and collecting every problem instead of stopping at the first.
class Reader {
public:
    explicit Reader(const ConfigMap& map) : map_(map) {}

    bool has(const std::string& key) const { return map_.find(key) != map_.end(); }

    double get_double(const std::string& key, double fallback)
    {
        const auto* text = take(key);
        if (!text)
            return fallback;
        double v = 0.0;
        const auto [p, ec] = std::from_chars(text->data(), text->data() + text->size(), v);
        if (ec != std::errc{} || p != text->data() + text->size()) {
            problems_.push_back(key + ": expected a number, got '" + *text + "'");
            return fallback;
        }
        return v;
    }

    std::int64_t get_int(const std::string& key, std::int64_t fallback)
    {
        const auto* text = take(key);
        if (!text)
            return fallback;
        std::int64_t v = 0;
        const auto [p, ec] = std::from_chars(text->data(), text->data() + text->size(), v);
        if (ec == std::errc{} && p == text->data() + text->size())
            return v;
        // Allow integral values written in exponent form, e.g. 1e8.
        double d = 0.0;
        const auto [pd, ecd] = std::from_chars(text->data(), text->data() + text->size(), d);
        if (ecd == std::errc{} && pd == text->data() + text->size() && std::isfinite(d) &&
            d == std::floor(d) && std::abs(d) < 9.0e18)
            return static_cast<std::int64_t>(d);
        problems_.push_back(key + ": expected an integer, got '" + *text + "'");
        return fallback;
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback)
    {
        const auto* text = take(key);
        if (!text)
            return fallback;
        std::uint64_t v = 0;
        const auto [p, ec] = std::from_chars(text->data(), text->data() + text->size(), v);
        if (ec == std::errc{} && p == text->data() + text->size())
            return v;
        double d = 0.0;
        const auto [pd, ecd] = std::from_chars(text->data(), text->data() + text->size(), d);
        if (ecd == std::errc{} && pd == text->data() + text->size() && d >= 0.0 &&
            d == std::floor(d) && d < 1.8e19)
            return static_cast<std::uint64_t>(d);
        problems_.push_back(key + ": expected a non-negative integer, got '" + *text + "'");
        return fallback;
    }

    bool get_bool(const std::string& key, bool fallback)
    {
        const auto* text = take(key);
        if (!text)
            return fallback;
        if (*text == "true" || *text == "1")
            return true;
        if (*text == "false" || *text == "0")
            return false;
        problems_.push_back(key + ": expected true or false, got '" + *text + "'");
        return fallback;
    }

    std::string get_string(const std::string& key, const std::string& fallback)
    {
        const auto* text = take(key);
        return text ? *text : fallback;
    }

    void add_problem(std::string p) { problems_.push_back(std::move(p)); }

    std::vector<std::string> finish()
    {
        for (const auto& [key, value] : map_)
            if (!used_.contains(key))
                problems_.push_back(key + ": unknown key");
        return std::move(problems_);
    }

private:
    const std::string* take(const std::string& key)
    {
        const auto it = map_.find(key);
        if (it == map_.end())
            return nullptr;
        used_.insert(key);
        return &it->second;
    }

    const ConfigMap& map_;
    std::set<std::string, std::less<>> used_;
    std::vector<std::string> problems_;
};

std::string stage_key(std::size_t i, const char* field)
{
    return "network.stage." + std::to_string(i) + "." + field;
}

std::string channel_key(std::size_t c, const char* field)
{
    return "network.channel." + std::to_string(c) + "." + field;
}

std::string detector_key(std::size_t c, const char* field)
{
    return "detector." + std::to_string(c) + "." + field;
}

// Keys only meaningful on input; folded into per-stage/per-detector values.
const std::vector<std::string>& default_layer_keys()
{
    static const std::vector<std::string> keys = {
        "network.default.amplitude_rel", "network.default.bias_quarter_wave",
        "network.default.er_switch",     "network.default.er_pass",
        "network.default.common_delay_ps", "network.default.eta_routing",
        "detector.default.efficiency",   "detector.default.dead_time_ps",
        "detector.default.jitter_sigma_ps"};
    return keys;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error([&] {
          std::string msg = "invalid configuration:";
          for (const auto& p : problems)
              msg += "\n  " + p;
          return msg;
      }()),
      problems_(std::move(problems))
{
}

int ScenarioConfig::effective_sync_divider() const
{
    return analysis.sync_divider > 0 ? analysis.sync_divider : static_cast<int>(channel_count());
}

int ScenarioConfig::effective_max_order() const
{
    const int m = static_cast<int>(hom ? 2 : channel_count());
    return analysis.max_order > 0 ? std::min(analysis.max_order, m) : m;
}

std::vector<double> bench_channel_transmissions() { return {0.225, 0.199, 0.214, 0.199}; }

std::vector<std::pair<double, double>> bench_stage_extinctions()
{
    return {{42.0, 30.0}, {38.0, 41.0}, {34.0, 33.0}};
}

ScenarioConfig default_scenario_config()
{
    return config_from_map(ConfigMap{{"schema_version", "1"}});
}

// ---------------------------------------------------------------------------

ConfigMap parse_config_text(std::string_view text)
{
    ConfigMap map;
    std::vector<std::string> problems;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        const std::string where = "line " + std::to_string(line_no);
        if (eq == std::string_view::npos) {
            problems.push_back(where + ": expected 'key = value'");
            continue;
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty() || value.empty()) {
            problems.push_back(where + ": empty key or value");
            continue;
        }
        if (!map.emplace(key, value).second)
            problems.push_back(where + ": duplicate key '" + key + "'");
    }
    if (!problems.empty())
        throw ConfigError(std::move(problems));
    return map;
}

ScenarioConfig config_from_map(const ConfigMap& map)
{
    Reader rd(map);
    ScenarioConfig cfg;

    if (!rd.has("schema_version"))
        rd.add_problem("schema_version: missing");
    cfg.schema_version = static_cast<int>(rd.get_int("schema_version", kSchemaVersion));
    cfg.rng_seed = rd.get_u64("rng_seed", 1);

    const double rate = rd.get_double("clock.repetition_rate_hz", 76.2e6);
    const std::uint64_t n_pulses = rd.get_u64("clock.n_pulses", 1'000'000);
    cfg.clock = PulseClock(rate, n_pulses);

    SourceParams& s = cfg.source;
    s.eta_pop = rd.get_double("source.eta_pop", s.eta_pop);
    s.pulse_area_rad = rd.get_double("source.pulse_area_rad", s.pulse_area_rad);
    s.rabi_damping = rd.get_double("source.rabi_damping", s.rabi_damping);
    s.eta_blinking = rd.get_double("source.eta_blinking", s.eta_blinking);
    s.blink_on_dwell_ps = rd.get_double("source.blink_on_dwell_ps", s.blink_on_dwell_ps);
    s.blink_off_dwell_ps = rd.get_double("source.blink_off_dwell_ps", s.blink_off_dwell_ps);
    try {
        s.blinking_mode = blinking_mode_from_string(
            rd.get_string("source.blinking_mode", std::string(to_string(s.blinking_mode))));
    } catch (const InvalidArgument& e) {
        rd.add_problem(std::string("source.blinking_mode: ") + e.what());
    }
    s.multiphoton_prob = rd.get_double("source.multiphoton_prob", s.multiphoton_prob);
    s.lifetime_ps = rd.get_double("source.lifetime_ps", s.lifetime_ps);
    s.eta_extr = rd.get_double("source.eta_extr", s.eta_extr);
    s.eta_optics = rd.get_double("source.eta_optics", s.eta_optics);
    s.eta_fibercoup = rd.get_double("source.eta_fibercoup", s.eta_fibercoup);
    s.eta_qd = rd.get_double("source.eta_qd", s.eta_qd);

    // Network: defaults layer, tree construction, then per-item overrides.
    std::int64_t m = rd.get_int("network.channels", 4);
    if (m < 1 || m > (1 << 16)) {
        rd.add_problem("network.channels: must lie in [1, 65536]");
        m = 1;
    }
    const auto mu = static_cast<std::size_t>(m);
    const int depth = std::bit_width(mu) - 1;
    const std::size_t tree_m = std::size_t{1} << depth;

    StageDefaults defaults;
    defaults.amplitude_rel = rd.get_double("network.default.amplitude_rel", defaults.amplitude_rel);
    defaults.bias_quarter_wave =
        rd.get_bool("network.default.bias_quarter_wave", defaults.bias_quarter_wave);
    const bool er_s_given = rd.has("network.default.er_switch");
    const bool er_p_given = rd.has("network.default.er_pass");
    defaults.extinction_ratio_switch =
        rd.get_double("network.default.er_switch", defaults.extinction_ratio_switch);
    defaults.extinction_ratio_pass =
        rd.get_double("network.default.er_pass", defaults.extinction_ratio_pass);
    defaults.common_delay_ps = rd.get_int("network.default.common_delay_ps", defaults.common_delay_ps);
    const bool eta_r_given = rd.has("network.default.eta_routing");
    defaults.eta_routing = rd.get_double("network.default.eta_routing", defaults.eta_routing);
    if (tree_m == 4 && !eta_r_given)
        defaults.channel_transmissions = bench_channel_transmissions();

    const PulseClock tree_clock = cfg.clock.valid() ? cfg.clock : PulseClock(76.2e6, 0);
    cfg.network = build_demux_tree(depth, tree_clock, defaults);
    if (tree_m == 4) {
        const auto er = bench_stage_extinctions();
        for (std::size_t i = 0; i < 3; ++i) {
            if (!er_s_given)
                cfg.network.stages[i].extinction_ratio_switch = er[i].first;
            if (!er_p_given)
                cfg.network.stages[i].extinction_ratio_pass = er[i].second;
        }
    }
    for (std::size_t i = 0; i < cfg.network.stages.size(); ++i) {
        SwitchStage& st = cfg.network.stages[i];
        st.drive.frequency_hz = rd.get_double(stage_key(i, "frequency_hz"), st.drive.frequency_hz);
        st.drive.phase_rad = rd.get_double(stage_key(i, "phase_rad"), st.drive.phase_rad);
        st.drive.amplitude_rel = rd.get_double(stage_key(i, "amplitude_rel"), st.drive.amplitude_rel);
        st.drive.bias_quarter_wave =
            rd.get_bool(stage_key(i, "bias_quarter_wave"), st.drive.bias_quarter_wave);
        st.extinction_ratio_switch =
            rd.get_double(stage_key(i, "er_switch"), st.extinction_ratio_switch);
        st.extinction_ratio_pass = rd.get_double(stage_key(i, "er_pass"), st.extinction_ratio_pass);
    }
    // A non-power-of-two count keeps its per-channel lists so validation can
    // report it.
    cfg.network.channel_transmissions.resize(mu, cfg.network.channel_transmissions.back());
    cfg.network.channel_delays_ps.resize(mu, cfg.network.channel_delays_ps.back());
    for (std::size_t c = 0; c < mu; ++c) {
        cfg.network.channel_transmissions[c] =
            rd.get_double(channel_key(c, "transmission"), cfg.network.channel_transmissions[c]);
        cfg.network.channel_delays_ps[c] =
            rd.get_int(channel_key(c, "delay_ps"), cfg.network.channel_delays_ps[c]);
    }

    DetectorParams det;
    det.efficiency = rd.get_double("detector.default.efficiency", det.efficiency);
    det.dead_time_ps = rd.get_int("detector.default.dead_time_ps", det.dead_time_ps);
    det.jitter_sigma_ps = rd.get_double("detector.default.jitter_sigma_ps", det.jitter_sigma_ps);
    std::int64_t n_det = rd.get_int("detector.count", m);
    if (n_det < 0 || n_det > 256) {
        rd.add_problem("detector.count: must lie in [0, 256]");
        n_det = m;
    }
    cfg.detectors.assign(static_cast<std::size_t>(n_det), det);
    for (std::size_t c = 0; c < cfg.detectors.size(); ++c) {
        DetectorParams& d = cfg.detectors[c];
        d.efficiency = rd.get_double(detector_key(c, "efficiency"), d.efficiency);
        d.dead_time_ps = rd.get_int(detector_key(c, "dead_time_ps"), d.dead_time_ps);
        d.jitter_sigma_ps = rd.get_double(detector_key(c, "jitter_sigma_ps"), d.jitter_sigma_ps);
    }

    AnalysisSpec& a = cfg.analysis;
    a.coincidence_window_ps = rd.get_int("analysis.coincidence_window_ps", a.coincidence_window_ps);
    a.bin_width_ps = rd.get_int("analysis.bin_width_ps", a.bin_width_ps);
    a.sync_divider = static_cast<int>(rd.get_int("analysis.sync_divider", a.sync_divider));
    a.max_order = static_cast<int>(rd.get_int("analysis.max_order", a.max_order));
    a.switching = rd.get_bool("analysis.switching", a.switching);
    a.hbt = rd.get_bool("analysis.hbt", a.hbt);
    a.hbt_start_channel = static_cast<int>(rd.get_int("analysis.hbt_start_channel", a.hbt_start_channel));
    a.hbt_stop_channel = static_cast<int>(rd.get_int("analysis.hbt_stop_channel", a.hbt_stop_channel));
    a.hbt_side_peaks = static_cast<int>(rd.get_int("analysis.hbt_side_peaks", a.hbt_side_peaks));

    if (rd.get_bool("hom.enabled", false)) {
        HomBenchSpec h;
        h.input_a = static_cast<int>(rd.get_int("hom.input_a", h.input_a));
        h.input_b = static_cast<int>(rd.get_int("hom.input_b", h.input_b));
        h.reflectivity = rd.get_double("hom.reflectivity", h.reflectivity);
        h.mutual_indistinguishability =
            rd.get_double("hom.indistinguishability", h.mutual_indistinguishability);
        h.relative_delay_ps = rd.get_int("hom.relative_delay_ps", h.relative_delay_ps);
        h.pairing_window_ps = rd.get_int("hom.pairing_window_ps", h.pairing_window_ps);
        cfg.hom = h;
    } else {
        // Accept (and ignore) bench settings of a disabled bench.
        for (const char* k : {"hom.input_a", "hom.input_b", "hom.reflectivity",
                              "hom.indistinguishability", "hom.relative_delay_ps",
                              "hom.pairing_window_ps"})
            rd.get_string(k, "");
    }

    auto problems = rd.finish();
    if (!problems.empty()) {
        // Report value problems of the keys that did parse as well.
        for (auto& v : config_violations(cfg))
            problems.push_back(std::move(v));
        throw ConfigError(std::move(problems));
    }
    return cfg;
}

ScenarioConfig parse_config(std::string_view text) { return config_from_map(parse_config_text(text)); }

std::string serialize_config(const ScenarioConfig& c)
{
    std::ostringstream os;
    auto kv = [&](const std::string& k, const std::string& v) { os << k << " = " << v << '\n'; };
    auto kd = [&](const std::string& k, double v) { kv(k, format_double(v)); };
    auto ki = [&](const std::string& k, auto v) { kv(k, std::to_string(v)); };

    ki("schema_version", c.schema_version);
    ki("rng_seed", c.rng_seed);
    kd("clock.repetition_rate_hz", c.clock.repetition_rate_hz());
    ki("clock.n_pulses", c.clock.n_pulses());

    const SourceParams& s = c.source;
    kd("source.eta_pop", s.eta_pop);
    kd("source.pulse_area_rad", s.pulse_area_rad);
    kd("source.rabi_damping", s.rabi_damping);
    kd("source.eta_blinking", s.eta_blinking);
    kd("source.blink_on_dwell_ps", s.blink_on_dwell_ps);
    kd("source.blink_off_dwell_ps", s.blink_off_dwell_ps);
    kv("source.blinking_mode", std::string(to_string(s.blinking_mode)));
    kd("source.multiphoton_prob", s.multiphoton_prob);
    kd("source.lifetime_ps", s.lifetime_ps);
    kd("source.eta_extr", s.eta_extr);
    kd("source.eta_optics", s.eta_optics);
    kd("source.eta_fibercoup", s.eta_fibercoup);
    kd("source.eta_qd", s.eta_qd);

    ki("network.channels", c.network.channel_transmissions.size());
    for (std::size_t i = 0; i < c.network.stages.size(); ++i) {
        const SwitchStage& st = c.network.stages[i];
        kd(stage_key(i, "frequency_hz"), st.drive.frequency_hz);
        kd(stage_key(i, "phase_rad"), st.drive.phase_rad);
        kd(stage_key(i, "amplitude_rel"), st.drive.amplitude_rel);
        kv(stage_key(i, "bias_quarter_wave"), format_bool(st.drive.bias_quarter_wave));
        kd(stage_key(i, "er_switch"), st.extinction_ratio_switch);
        kd(stage_key(i, "er_pass"), st.extinction_ratio_pass);
    }
    for (std::size_t ch = 0; ch < c.network.channel_transmissions.size(); ++ch) {
        kd(channel_key(ch, "transmission"), c.network.channel_transmissions[ch]);
        ki(channel_key(ch, "delay_ps"), c.network.channel_delays_ps[ch]);
    }

    ki("detector.count", c.detectors.size());
    for (std::size_t d = 0; d < c.detectors.size(); ++d) {
        kd(detector_key(d, "efficiency"), c.detectors[d].efficiency);
        ki(detector_key(d, "dead_time_ps"), c.detectors[d].dead_time_ps);
        kd(detector_key(d, "jitter_sigma_ps"), c.detectors[d].jitter_sigma_ps);
    }

    const AnalysisSpec& a = c.analysis;
    ki("analysis.coincidence_window_ps", a.coincidence_window_ps);
    ki("analysis.bin_width_ps", a.bin_width_ps);
    ki("analysis.sync_divider", a.sync_divider);
    ki("analysis.max_order", a.max_order);
    kv("analysis.switching", format_bool(a.switching));
    kv("analysis.hbt", format_bool(a.hbt));
    ki("analysis.hbt_start_channel", a.hbt_start_channel);
    ki("analysis.hbt_stop_channel", a.hbt_stop_channel);
    ki("analysis.hbt_side_peaks", a.hbt_side_peaks);

    kv("hom.enabled", format_bool(c.hom.has_value()));
    if (c.hom) {
        ki("hom.input_a", c.hom->input_a);
        ki("hom.input_b", c.hom->input_b);
        kd("hom.reflectivity", c.hom->reflectivity);
        kd("hom.indistinguishability", c.hom->mutual_indistinguishability);
        ki("hom.relative_delay_ps", c.hom->relative_delay_ps);
        ki("hom.pairing_window_ps", c.hom->pairing_window_ps);
    }
    return os.str();
}

// ---------------------------------------------------------------------------

std::vector<std::string> config_violations(const ScenarioConfig& c)
{
    std::vector<std::string> out;
    auto prob = [&](const std::string& key, double v) {
        if (!is_probability(v))
            out.push_back(key + ": probability out of range [0, 1] (" + format_double(v) + ")");
    };

    if (c.schema_version != kSchemaVersion)
        out.push_back("schema_version: unsupported version " + std::to_string(c.schema_version));

    const double rr = c.clock.repetition_rate_hz();
    if (rr == 0.0)
        out.emplace_back("clock.repetition_rate_hz: zero repetition rate");
    else if (!(rr > 0.0) || !std::isfinite(rr) || !c.clock.valid())
        out.push_back("clock.repetition_rate_hz: must be positive and finite (" + format_double(rr) + ")");

    const SourceParams& s = c.source;
    prob("source.eta_pop", s.eta_pop);
    prob("source.eta_blinking", s.eta_blinking);
    prob("source.multiphoton_prob", s.multiphoton_prob);
    prob("source.eta_extr", s.eta_extr);
    prob("source.eta_optics", s.eta_optics);
    prob("source.eta_fibercoup", s.eta_fibercoup);
    prob("source.eta_qd", s.eta_qd);
    if (!(s.pulse_area_rad >= 0.0) || !std::isfinite(s.pulse_area_rad))
        out.emplace_back("source.pulse_area_rad: must be finite and non-negative");
    if (!(s.rabi_damping >= 0.0) || !std::isfinite(s.rabi_damping))
        out.emplace_back("source.rabi_damping: must be finite and non-negative");
    if (!(s.lifetime_ps > 0.0) || !std::isfinite(s.lifetime_ps))
        out.emplace_back("source.lifetime_ps: must be positive");
    if (!(s.eta_blinking > 0.0))
        out.emplace_back("source.eta_blinking: must be positive");
    if (s.multiphoton_prob > s.eta_pop)
        out.emplace_back("source.multiphoton_prob: must not exceed source.eta_pop");
    if (s.eta_qd > s.eta_blinking)
        out.emplace_back("source.eta_qd: must not exceed source.eta_blinking");
    if (s.collection_efficiency() > 1.0)
        out.push_back("source.eta_qd: implies a collection efficiency above 1 (" +
                      format_double(s.collection_efficiency()) + ")");
    if (s.blinking_mode == BlinkingMode::slow) {
        if (!(s.blink_on_dwell_ps > 0.0))
            out.emplace_back("source.blink_on_dwell_ps: must be positive");
        if (!(s.blink_off_dwell_ps >= 0.0))
            out.emplace_back("source.blink_off_dwell_ps: must be non-negative");
        if (s.blink_on_dwell_ps > 0.0 && s.blink_off_dwell_ps >= 0.0) {
            const double frac = s.blink_on_dwell_ps / (s.blink_on_dwell_ps + s.blink_off_dwell_ps);
            if (std::abs(frac - s.eta_blinking) > 1e-9)
                out.push_back("source.eta_blinking: inconsistent with dwell times, on/(on+off) = " +
                              format_double(frac));
        }
    }

    const std::size_t m = c.network.channel_transmissions.size();
    const bool pow2 = m > 0 && std::has_single_bit(m);
    if (!pow2)
        out.push_back("network.channels: channel count must be 2^k (got " + std::to_string(m) + ")");
    if (m != c.network.channel_delays_ps.size())
        out.emplace_back("network.channel: transmission and delay lists differ in length");
    if (pow2 && c.network.stages.size() != m - 1)
        out.emplace_back("network.stage: stage count must be channels - 1");
    for (std::size_t i = 0; i < c.network.stages.size(); ++i) {
        const SwitchStage& st = c.network.stages[i];
        if (!(st.extinction_ratio_switch > 0.0))
            out.push_back(stage_key(i, "er_switch") + ": extinction ratio must be positive");
        if (!(st.extinction_ratio_pass > 0.0))
            out.push_back(stage_key(i, "er_pass") + ": extinction ratio must be positive");
        if (!(st.drive.frequency_hz >= 0.0) || !std::isfinite(st.drive.frequency_hz))
            out.push_back(stage_key(i, "frequency_hz") + ": must be finite and non-negative");
        if (!(st.drive.amplitude_rel >= 0.0) || !std::isfinite(st.drive.amplitude_rel))
            out.push_back(stage_key(i, "amplitude_rel") + ": must be finite and non-negative");
        if (!std::isfinite(st.drive.phase_rad))
            out.push_back(stage_key(i, "phase_rad") + ": must be finite");
    }
    double sum_t = 0.0;
    for (std::size_t ch = 0; ch < m; ++ch) {
        const double t = c.network.channel_transmissions[ch];
        prob(channel_key(ch, "transmission"), t);
        if (t * static_cast<double>(m) > 1.0 + 1e-12)
            out.push_back(channel_key(ch, "transmission") + ": exceeds 1/channels (" +
                          format_double(t) + ")");
        sum_t += t;
    }
    if (sum_t > 1.0 + 1e-12)
        out.push_back("network.channel: transmissions sum to " + format_double(sum_t) + " > 1");
    for (std::size_t ch = 0; ch < c.network.channel_delays_ps.size(); ++ch)
        if (c.network.channel_delays_ps[ch] < 0)
            out.push_back(channel_key(ch, "delay_ps") + ": must be non-negative");

    if (c.detectors.size() != m)
        out.push_back("detector.count: channel-count mismatch (" + std::to_string(c.detectors.size()) +
                      " detectors for " + std::to_string(m) + " channels)");
    for (std::size_t d = 0; d < c.detectors.size(); ++d) {
        prob(detector_key(d, "efficiency"), c.detectors[d].efficiency);
        if (c.detectors[d].dead_time_ps < 0)
            out.push_back(detector_key(d, "dead_time_ps") + ": must be non-negative");
        if (!(c.detectors[d].jitter_sigma_ps >= 0.0))
            out.push_back(detector_key(d, "jitter_sigma_ps") + ": must be non-negative");
    }

    const AnalysisSpec& a = c.analysis;
    if (a.coincidence_window_ps <= 0)
        out.emplace_back("analysis.coincidence_window_ps: must be positive");
    if (a.bin_width_ps <= 0)
        out.emplace_back("analysis.bin_width_ps: must be positive");
    if (a.sync_divider < 0)
        out.emplace_back("analysis.sync_divider: must be non-negative");
    if (a.max_order < 0)
        out.emplace_back("analysis.max_order: must be non-negative");
    if (a.hbt_side_peaks < 3)
        out.emplace_back("analysis.hbt_side_peaks: at least 3 side peaks are needed");
    const int outputs = static_cast<int>(c.hom ? 2 : m);
    if (a.hbt && (a.hbt_start_channel < 0 || a.hbt_start_channel >= outputs ||
                  a.hbt_stop_channel < 0 || a.hbt_stop_channel >= outputs ||
                  a.hbt_start_channel == a.hbt_stop_channel))
        out.emplace_back("analysis.hbt_*_channel: must be two distinct output channels");

    if (c.hom) {
        const auto& h = *c.hom;
        const auto mi = static_cast<int>(m);
        if (h.input_a < 0 || h.input_a >= mi || h.input_b < 0 || h.input_b >= mi ||
            h.input_a == h.input_b)
            out.emplace_back("hom.input_a/b: must be two distinct network channels");
        if (!(h.reflectivity > 0.0 && h.reflectivity < 1.0))
            out.emplace_back("hom.reflectivity: must lie in (0, 1)");
        prob("hom.indistinguishability", h.mutual_indistinguishability);
        if (h.pairing_window_ps < 0)
            out.emplace_back("hom.pairing_window_ps: must be non-negative");
    }
    return out;
}

void validate_config(const ScenarioConfig& config)
{
    auto problems = config_violations(config);
    if (!problems.empty())
        throw ConfigError(std::move(problems));
}

// ---------------------------------------------------------------------------

std::string env_var_name(std::string_view key)
{
    std::string name = "QDEMUX_";
    for (const char ch : key)
        name += ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return name;
}

namespace {

using GetEnv = const char* (*)(const char*);

const char* system_getenv(const char* name) { return std::getenv(name); }

// Overrides every key in `keys` that has an environment variable.
bool override_keys(ConfigMap& map, const std::vector<std::string>& keys, GetEnv getenv_fn)
{
    bool changed = false;
    for (const auto& key : keys) {
        if (const char* v = getenv_fn(env_var_name(key).c_str())) {
            map[key] = std::string(trim(v));
            changed = true;
        }
    }
    return changed;
}

std::vector<std::string> keys_of(const ConfigMap& map)
{
    std::vector<std::string> keys;
    for (const auto& [k, v] : map)
        keys.push_back(k);
    return keys;
}

}  // namespace

ScenarioConfig apply_env_overrides(const ScenarioConfig& config, GetEnv getenv_fn)
{
    if (!getenv_fn)
        getenv_fn = system_getenv;
    ConfigMap map = parse_config_text(serialize_config(config));
    if (!override_keys(map, keys_of(map), getenv_fn))
        return config;
    return config_from_map(map);
}

ScenarioConfig load_config_file(const std::filesystem::path& path, bool use_env)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError({path.string() + ": cannot open"});
    std::ostringstream buf;
    buf << in.rdbuf();
    ConfigMap map = parse_config_text(buf.str());
    if (use_env) {
        // Keys present in the file and the defaults layer first, so that
        // overriding e.g. network.channels reshapes the tree before the
        // per-stage keys are considered.
        std::vector<std::string> keys = keys_of(map);
        keys.insert(keys.end(), default_layer_keys().begin(), default_layer_keys().end());
        for (const char* k : {"network.channels", "detector.count", "hom.enabled"})
            keys.emplace_back(k);
        override_keys(map, keys, system_getenv);
        ScenarioConfig cfg = apply_env_overrides(config_from_map(map), system_getenv);
        validate_config(cfg);
        return cfg;
    }
    ScenarioConfig cfg = config_from_map(map);
    validate_config(cfg);
    return cfg;
}

RateModel rate_model_from_config(const ScenarioConfig& c)
{
    RateModel model;
    model.rr_hz = c.clock.repetition_rate_hz();
    model.m = static_cast<int>(c.channel_count());
    model.eta_blinking = c.source.eta_blinking;
    model.eta_qd = c.source.eta_qd;
    model.eta_routing = c.network.eta_routing();
    double det = 0.0;
    for (const auto& d : c.detectors)
        det += d.efficiency;
    model.eta_det = c.detectors.empty() ? 0.0 : det / static_cast<double>(c.detectors.size());
    const DemuxNetwork network(c.network, c.clock.pulse_period_ps());
    model.eta_sw = network.mean_switching_efficiency();
    return model;
}

}  // namespace qdemux
