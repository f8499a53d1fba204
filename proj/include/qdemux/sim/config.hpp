// Scenario configuration: flat "key = value" text with '#' comments.
//
//   schema_version = 1
//   rng_seed = 42
//   clock.repetition_rate_hz = 7.62e7
//   network.channels = 4
//   network.default.er_switch = 36
//   network.stage.0.er_pass = 30
//   detector.2.efficiency = 0.68
//
// network.default.* and detector.default.* apply to every stage/detector and
// are folded into explicit per-stage and per-detector values; the canonical
// serialization lists everything explicitly. Any canonical key can be
// overridden through the environment as QDEMUX_<KEY>, with dots turned into
// underscores and letters upper-cased (QDEMUX_SOURCE_ETA_QD).
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qdemux/analytics/rate_model.hpp"
#include "qdemux/detection/detection.hpp"
#include "qdemux/network/demux.hpp"
#include "qdemux/source/source.hpp"

namespace qdemux {

inline constexpr int kSchemaVersion = 1;

struct AnalysisSpec {
    TimePs coincidence_window_ps = 2000;
    TimePs bin_width_ps = 100;
    /// Keep every d-th pump pulse as histogram start; 0 means the channel count.
    int sync_divider = 0;
    /// Highest coincidence order reported; 0 means the channel count.
    int max_order = 0;
    bool switching = true;
    bool hbt = false;
    int hbt_start_channel = 0;
    int hbt_stop_channel = 1;
    /// Side peaks analysed on each side of zero delay.
    int hbt_side_peaks = 4;
};

struct ScenarioConfig {
    int schema_version = kSchemaVersion;
    std::uint64_t rng_seed = 1;
    PulseClock clock{76.2e6, 0};
    SourceParams source;
    DemuxNetworkSpec network;
    std::vector<DetectorParams> detectors;
    AnalysisSpec analysis;
    /// Two outputs combined on a beamsplitter ahead of two detectors.
    std::optional<HomBenchSpec> hom;

    std::size_t channel_count() const { return network.channel_transmissions.size(); }
    int effective_sync_divider() const;
    int effective_max_order() const;
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

/// Measured per-channel transmissions of the four-channel bench.
std::vector<double> bench_channel_transmissions();

/// Stage extinction ratios (switch, pass) of the four-channel bench, in heap
/// order.
std::vector<std::pair<double, double>> bench_stage_extinctions();

/// Four-channel configuration with the bench parameters.
ScenarioConfig default_scenario_config();

/// Every problem with the configuration, empty when valid.
std::vector<std::string> config_violations(const ScenarioConfig& config);

/// Throws ConfigError listing all problems.
void validate_config(const ScenarioConfig& config);

using ConfigMap = std::map<std::string, std::string, std::less<>>;

/// Syntax-level parse. Throws ConfigError on malformed lines or duplicates.
ConfigMap parse_config_text(std::string_view text);

/// Builds a configuration from key/value pairs. Unknown keys and unparsable
/// values are errors. The result is not validated.
ScenarioConfig config_from_map(const ConfigMap& map);

ScenarioConfig parse_config(std::string_view text);

/// Canonical text form; parse_config(serialize_config(c)) reproduces c.
std::string serialize_config(const ScenarioConfig& config);

/// Applies QDEMUX_* environment overrides to every canonical key.
/// `getenv` is injectable for tests.
ScenarioConfig apply_env_overrides(const ScenarioConfig& config,
                                   const char* (*getenv_fn)(const char*) = nullptr);

/// Environment variable name for a config key.
std::string env_var_name(std::string_view key);

/// Reads, parses, applies environment overrides and validates.
ScenarioConfig load_config_file(const std::filesystem::path& path, bool use_env = true);

/// Rate model of the configured setup: eta_sw from the exact routing matrix,
/// eta_det the mean detector efficiency.
RateModel rate_model_from_config(const ScenarioConfig& config);

}  // namespace qdemux
