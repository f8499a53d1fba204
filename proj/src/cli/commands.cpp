#include "qdemux/cli/commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "qdemux/analytics/estimators.hpp"
#include "qdemux/detection/detection.hpp"
#include "qdemux/sim/simulation.hpp"

namespace qdemux::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json estimate_json(double value, double uncertainty)
{
    return {{"value", value}, {"uncertainty", uncertainty}};
}

json rate_json(std::uint64_t count, double duration_s)
{
    const double rate = duration_s > 0.0 ? static_cast<double>(count) / duration_s : 0.0;
    const double err =
        duration_s > 0.0 ? std::sqrt(static_cast<double>(count)) / duration_s : 0.0;
    return {{"count", count}, {"rate_hz", rate}, {"rate_uncertainty_hz", err}};
}

// All k-subsets of {0..n-1} in lexicographic order.
std::vector<std::vector<int>> combinations(int n, int k)
{
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    auto rec = [&](auto&& self, int start) -> void {
        if (static_cast<int>(cur.size()) == k) {
            out.push_back(cur);
            return;
        }
        for (int i = start; i < n; ++i) {
            cur.push_back(i);
            self(self, i + 1);
            cur.pop_back();
        }
    };
    rec(rec, 0);
    return out;
}

json model_json(const RateModel& m)
{
    return {{"rr_hz", m.rr_hz},           {"m", m.m},
            {"eta_blinking", m.eta_blinking}, {"eta_qd", m.eta_qd},
            {"eta_routing", m.eta_routing},   {"eta_det", m.eta_det},
            {"eta_sw", m.eta_sw}};
}

json config_echo(const ScenarioConfig& cfg)
{
    json echo = json::object();
    for (const auto& [k, v] : parse_config_text(serialize_config(cfg)))
        echo[k] = v;
    return echo;
}

json analytic_section(const ScenarioConfig& cfg, double realized_on_fraction, bool have_run)
{
    json out;
    const RateModel model = rate_model_from_config(cfg);
    const BlinkingMode mode = cfg.source.blinking_mode;
    PredictOptions p;
    p.model = model;
    p.mode = mode;
    out["nominal"] = predict_rates(p);
    if (have_run && mode == BlinkingMode::slow && realized_on_fraction > 0.0) {
        // Same emitter brightness while on, weighted by the on-fraction that
        // this run's telegraph trace actually realized.
        p.model.eta_qd = model.eta_qd / model.eta_blinking * realized_on_fraction;
        p.model.eta_blinking = realized_on_fraction;
        out["realized_on_fraction"] = predict_rates(p);
    }
    return out;
}

bool write_text_file(const fs::path& path, const std::string& text, std::ostream& log)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        log << "error: cannot write " << path.string() << '\n';
        return false;
    }
    f << text;
    f.close();
    if (!f) {
        log << "error: failed writing " << path.string() << '\n';
        return false;
    }
    return true;
}

bool write_histograms(const fs::path& dir, const std::vector<NamedHistogram>& hists,
                      std::ostream& log)
{
    if (hists.empty())
        return true;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        log << "error: cannot create " << dir.string() << ": " << ec.message() << '\n';
        return false;
    }
    for (const auto& h : hists) {
        std::ostringstream os;
        write_histogram_csv(os, h.histogram);
        if (!write_text_file(dir / (h.name + ".csv"), os.str(), log))
            return false;
    }
    return true;
}

bool prepare_out_dir(const fs::path& dir, std::ostream& log)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        log << "error: cannot create output directory " << dir.string()
            << (ec ? ": " + ec.message() : std::string()) << '\n';
        return false;
    }
    return true;
}

}  // namespace

RateModel reference_rate_model()
{
    return RateModel{76.2e6, 4, 0.36, 0.0090, 0.84, 0.68, 0.946};
}

json analyze_tags(const ScenarioConfig& cfg, const std::vector<TagStream>& tags,
                  std::vector<NamedHistogram>* histograms)
{
    json out;
    const double duration = cfg.clock.duration_s();
    const auto outputs = static_cast<int>(tags.size());
    const double period = static_cast<double>(cfg.clock.pulse_period_ps());
    const AnalysisSpec& a = cfg.analysis;

    json singles = json::array();
    for (int c = 0; c < outputs; ++c) {
        json s = rate_json(tags[static_cast<std::size_t>(c)].size(), duration);
        s["channel"] = c;
        singles.push_back(s);
    }
    out["singles"] = singles;

    json coinc = json::array();
    json by_order = json::array();
    {
        std::uint64_t total = 0;
        for (const auto& t : tags)
            total += t.size();
        json o = rate_json(total, duration);
        const double k = std::max(outputs, 1);
        o["order"] = 1;
        o["combinations"] = outputs;
        o["mean_rate_hz"] = o["rate_hz"].get<double>() / k;
        o["mean_rate_uncertainty_hz"] = o["rate_uncertainty_hz"].get<double>() / k;
        by_order.push_back(o);
    }
    const int max_order = std::min(cfg.effective_max_order(), outputs);
    for (int n = 2; n <= max_order; ++n) {
        std::uint64_t total = 0;
        const auto combos = combinations(outputs, n);
        for (const auto& combo : combos) {
            std::vector<std::span<const TimePs>> streams;
            for (const int c : combo)
                streams.emplace_back(tags[static_cast<std::size_t>(c)]);
            const CoincidenceResult r =
                coincidence_count(streams, a.coincidence_window_ps, cfg.clock.duration_ps());
            json e = rate_json(r.count, duration);
            e["channels"] = combo;
            e["window_ps"] = a.coincidence_window_ps;
            coinc.push_back(e);
            total += r.count;
        }
        // Mean over channel combinations, Poisson error of the pooled count.
        const auto k = static_cast<double>(combos.size());
        json o = rate_json(total, duration);
        o["order"] = n;
        o["combinations"] = combos.size();
        o["mean_rate_hz"] = o["rate_hz"].get<double>() / k;
        o["mean_rate_uncertainty_hz"] = o["rate_uncertainty_hz"].get<double>() / k;
        by_order.push_back(o);
    }
    out["coincidences"] = coinc;
    out["coincidences_by_order"] = by_order;

    const bool hom = cfg.hom.has_value();
    if (a.switching && !hom && outputs >= 2 && cfg.clock.n_pulses() > 0) {
        const int d = cfg.effective_sync_divider();
        const HistogramRange range{0, 3 * d * cfg.clock.pulse_period_ps(), a.bin_width_ps};
        std::vector<CorrelationHistogram> hs;
        for (int c = 0; c < outputs; ++c) {
            hs.push_back(build_sync_histogram(cfg.clock, tags[static_cast<std::size_t>(c)], range, d));
            hs.back().meta.stop_channel = c;
            if (histograms)
                histograms->push_back({"sync_ch" + std::to_string(c), hs.back()});
        }
        try {
            json per = json::array();
            for (int c = 0; c < outputs; ++c) {
                const ChannelSwitching s = channel_switching(hs[static_cast<std::size_t>(c)], period, d);
                per.push_back({{"channel", c},
                               {"sigma_main", s.sigma_main},
                               {"sigma_side", s.sigma_side},
                               {"extinction_ratio", s.extinction_ratio},
                               {"eta_sw", estimate_json(s.eta_sw, s.eta_sw_uncertainty)},
                               {"main_residue", s.main_residue},
                               {"peak_offset_ps", s.peak_offset_ps}});
            }
            const SwitchingMetrics m = switching_metrics(hs, period, d);
            out["switching"] = {{"per_channel", per},
                                {"mean_eta_sw", estimate_json(m.mean_eta_sw, m.mean_eta_sw_uncertainty)},
                                {"std_eta_sw", m.std_eta_sw},
                                {"sync_divider", d}};
        } catch (const InvalidArgument& e) {
            out["switching"] = {{"error", e.what()}};
        }
    }

    if (a.hbt && a.hbt_start_channel < outputs && a.hbt_stop_channel < outputs) {
        const auto half = static_cast<TimePs>((a.hbt_side_peaks + 0.5) * period);
        const HistogramRange range{-half, 2 * half, a.bin_width_ps};
        CorrelationHistogram h = build_histogram(tags[static_cast<std::size_t>(a.hbt_start_channel)],
                                                 tags[static_cast<std::size_t>(a.hbt_stop_channel)],
                                                 range, 1);
        h.meta.start_channel = a.hbt_start_channel;
        h.meta.stop_channel = a.hbt_stop_channel;
        if (histograms)
            histograms->push_back({"hbt", h});
        try {
            const PeakAreas p = periodic_peak_areas(h, period, period);
            const Estimate g2 = hbt_g2(h, period, period);
            out["hbt"] = {{"g2_zero", estimate_json(g2.value, g2.uncertainty)},
                          {"center_area", p.center},
                          {"side_mean_area", p.side_mean()},
                          {"side_peaks", p.side.size()}};
        } catch (const InvalidArgument& e) {
            out["hbt"] = {{"error", e.what()}};
        }
    }

    if (hom && outputs == 2) {
        const double cycle = period * static_cast<double>(cfg.channel_count());
        const auto half = static_cast<TimePs>(3.0 * cycle + 0.5 * period);
        const HistogramRange range{-half, 2 * half, a.bin_width_ps};
        CorrelationHistogram h = build_histogram(tags[0], tags[1], range, 1);
        h.meta.start_channel = 0;
        h.meta.stop_channel = 1;
        if (histograms)
            histograms->push_back({"hom", h});
        json j;
        const auto starts = static_cast<double>(tags[0].size());
        try {
            const PeakAreas p = periodic_peak_areas(h, cycle, period);
            j["center_area"] = p.center;
            j["start_events"] = tags[0].size();
            if (starts > 0.0)
                j["center_normalized"] = estimate_json(p.center / starts, std::sqrt(p.center) / starts);
            const double u = p.side_mean();
            j["uncorrelated_mean_area"] = u;
            if (u > 0.0) {
                const double ratio = p.center / u;
                const double ratio_err =
                    ratio * std::sqrt((p.center > 0 ? 1.0 / p.center : 0.0) + 1.0 / p.side_total());
                j["v_alternative"] =
                    estimate_json(hom_visibility_alternative(p.center, u), 2.0 * ratio_err);
            }
        } catch (const InvalidArgument& e) {
            j["error"] = e.what();
        }
        out["hom"] = j;
    }
    return out;
}

json predict_rates(const PredictOptions& opt)
{
    const RateModel& m = opt.model;
    const RateModel& s = opt.sigma;
    json rates = json::array();
    const int lo = opt.order.value_or(1);
    const int hi = opt.order.value_or(m.m);
    for (int n = lo; n <= hi; ++n) {
        const double r = analytic_coincidence_rate(n, m, opt.mode);
        // Independent relative errors; R ~ rr * eta_b^(1-n) * (eta_qd eta_r eta_det)^n * bracket.
        auto rel = [](double sigma, double value, double power) {
            return value > 0.0 ? power * sigma / value : 0.0;
        };
        double var = 0.0;
        const double dn = n;
        const double terms[] = {
            rel(s.rr_hz, m.rr_hz, 1.0),
            rel(s.eta_qd, m.eta_qd, dn),
            rel(s.eta_routing, m.eta_routing, dn),
            rel(s.eta_det, m.eta_det, dn),
            opt.mode == BlinkingMode::slow ? rel(s.eta_blinking, m.eta_blinking, 1.0 - dn) : 0.0,
        };
        for (const double t : terms)
            var += t * t;
        if (m.m >= 2) {
            const double w = (1.0 - m.eta_sw) / (m.m - 1);
            const double dbr = dn * (std::pow(m.eta_sw, n - 1) - std::pow(w, n - 1));
            const double br = coincidence_bracket(n, m.m, m.eta_sw);
            if (br > 0.0)
                var += std::pow(dbr * s.eta_sw / br, 2);
        }
        rates.push_back({{"n", n}, {"rate_hz", r}, {"rate_uncertainty_hz", r * std::sqrt(var)}});
    }
    return {{"model", model_json(m)},
            {"blinking_mode", std::string(to_string(opt.mode))},
            {"rates", rates}};
}

json strip_volatile(json report)
{
    if (report.contains("run")) {
        report["run"].erase("wall_time_s");
        report["run"].erase("threads");
    }
    return report;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const SimulateOptions& opt, std::ostream& log)
{
    ScenarioConfig cfg;
    try {
        cfg = load_config_file(opt.config_path, opt.use_env);
        if (opt.seed)
            cfg.rng_seed = *opt.seed;
        if (opt.pulses)
            cfg.clock = cfg.clock.with_pulses(*opt.pulses);
        validate_config(cfg);
    } catch (const ConfigError& e) {
        log << e.what() << '\n';
        return kExitConfigError;
    } catch (const std::invalid_argument& e) {
        log << "invalid configuration: " << e.what() << '\n';
        return kExitConfigError;
    }
    if (!prepare_out_dir(opt.out_dir, log))
        return kExitIoError;

    const auto t0 = std::chrono::steady_clock::now();
    SimulationOptions sim_opt;
    sim_opt.threads = std::max(1u, opt.threads);
    const SimulationResult res = run_simulation(cfg, sim_opt);

    std::vector<NamedHistogram> hists;
    json report;
    report["command"] = "simulate";
    report["config"] = config_echo(cfg);
    report["metrics"] = analyze_tags(cfg, res.tags, &hists);
    report["analytic"] = analytic_section(cfg, res.on_fraction, true);
    const auto& c = res.counters;
    report["counters"] = {{"photons_in", c.photons_in},
                          {"photons_lost", c.photons_lost},
                          {"photons_correct", c.photons_correct},
                          {"photons_misrouted", c.photons_misrouted},
                          {"channel_exits", c.channel_exits},
                          {"detector_arrivals", c.detector_arrivals},
                          {"detector_candidates", c.detector_candidates}};
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report["run"] = {{"seed", cfg.rng_seed},
                     {"n_pulses", cfg.clock.n_pulses()},
                     {"duration_s", cfg.clock.duration_s()},
                     {"on_fraction", res.on_fraction},
                     {"on_pulses", res.on_pulses},
                     {"threads", sim_opt.threads},
                     {"wall_time_s", wall}};

    const auto tags = merge_streams(res.tags);
    {
        const fs::path tag_path = opt.out_dir / ("tags." + std::string(file_extension(opt.format)));
        std::ofstream f(tag_path, std::ios::binary);
        if (!f) {
            log << "error: cannot write " << tag_path.string() << '\n';
            return kExitIoError;
        }
        write_tags(f, tags, opt.format);
        f.close();
        if (!f) {
            log << "error: failed writing " << tag_path.string() << '\n';
            return kExitIoError;
        }
    }
    if (!write_histograms(opt.out_dir / "histograms", hists, log))
        return kExitIoError;
    if (opt.debug_emission_pulses > 0) {
        std::ostringstream os;
        write_emission_debug_csv(os, cfg, opt.debug_emission_pulses);
        if (!write_text_file(opt.out_dir / "debug_emission.csv", os.str(), log))
            return kExitIoError;
    }
    if (opt.debug_drive) {
        const DemuxNetwork network(cfg.network, cfg.clock.pulse_period_ps());
        const TimePs cycle = cfg.clock.pulse_period_ps() * static_cast<TimePs>(network.channel_count());
        for (std::size_t s = 0; s < network.spec().stages.size(); ++s) {
            std::ostringstream os;
            write_drive_csv(os, network, s, 0, 2 * cycle, 100);
            if (!write_text_file(opt.out_dir / ("debug_drive_stage" + std::to_string(s) + ".csv"),
                                 os.str(), log))
                return kExitIoError;
        }
    }
    if (!write_text_file(opt.out_dir / "report.json", report.dump(2) + "\n", log))
        return kExitIoError;
    log << "simulated " << cfg.clock.n_pulses() << " pulses, " << tags.size() << " tags -> "
        << opt.out_dir.string() << '\n';
    return kExitOk;
}

int cmd_analyze(const AnalyzeOptions& opt, std::ostream& log)
{
    ScenarioConfig cfg;
    try {
        cfg = opt.config_path.empty() ? default_scenario_config()
                                      : load_config_file(opt.config_path, opt.use_env);
        validate_config(cfg);
    } catch (const ConfigError& e) {
        log << e.what() << '\n';
        return kExitConfigError;
    } catch (const std::invalid_argument& e) {
        log << "invalid configuration: " << e.what() << '\n';
        return kExitConfigError;
    }

    TagFormat format = TagFormat::binary;
    try {
        if (opt.format) {
            format = *opt.format;
        } else {
            std::string ext = opt.tag_path.extension().string();
            format = tag_format_from_string(ext.empty() ? "binary" : ext.substr(1));
        }
    } catch (const InvalidArgument& e) {
        log << "error: " << e.what() << '\n';
        return kExitConfigError;
    }

    std::vector<TimeTag> tags;
    {
        std::ifstream f(opt.tag_path, std::ios::binary);
        if (!f) {
            log << "error: cannot open " << opt.tag_path.string() << '\n';
            return kExitIoError;
        }
        try {
            tags = read_tags(f, format);
        } catch (const TagFileError& e) {
            log << "error: " << opt.tag_path.string() << ": " << e.what() << '\n';
            return kExitIoError;
        }
    }
    const std::size_t outputs = cfg.hom ? 2 : cfg.channel_count();
    for (const auto& t : tags) {
        if (t.channel >= outputs) {
            log << "error: tag channel " << static_cast<unsigned>(t.channel)
                << " outside the configured " << outputs << " outputs\n";
            return kExitIoError;
        }
    }
    const auto streams = split_by_channel(tags, outputs);

    std::vector<NamedHistogram> hists;
    json report;
    report["command"] = "analyze";
    report["tag_file"] = opt.tag_path.filename().string();
    report["config"] = config_echo(cfg);
    report["metrics"] = analyze_tags(cfg, streams, &hists);
    if (!cfg.hom)
        report["analytic"] = analytic_section(cfg, 0.0, false);

    if (opt.out_dir.empty()) {
        log << report.dump(2) << '\n';
        return kExitOk;
    }
    if (!prepare_out_dir(opt.out_dir, log) || !write_histograms(opt.out_dir / "histograms", hists, log) ||
        !write_text_file(opt.out_dir / "report.json", report.dump(2) + "\n", log))
        return kExitIoError;
    return kExitOk;
}

int cmd_predict(const PredictOptions& opt, std::ostream& out, std::ostream& log)
{
    if (const auto errs = rate_model_violations(opt.model); !errs.empty()) {
        for (const auto& e : errs)
            log << "invalid rate model: " << e << '\n';
        return kExitConfigError;
    }
    if (opt.order && (*opt.order < 1 || *opt.order > opt.model.m)) {
        log << "error: coincidence order " << *opt.order << " outside 1.." << opt.model.m << '\n';
        return kExitConfigError;
    }
    out << predict_rates(opt).dump(2) << '\n';
    return kExitOk;
}

}  // namespace qdemux::cli
