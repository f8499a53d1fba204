// simulate / analyze / predict. The tools/ executable only parses flags and
// forwards here, so tests can drive the commands directly.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qdemux/analytics/histogram.hpp"
#include "qdemux/core/tag_io.hpp"
#include "qdemux/sim/config.hpp"

namespace qdemux::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfigError = 2,
    kExitIoError = 3,
};

struct SimulateOptions {
    std::filesystem::path config_path;
    std::filesystem::path out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> pulses;
    unsigned threads = 1;
    TagFormat format = TagFormat::binary;
    bool use_env = true;
    /// Emission debug dump of the first N pulses (0 = none).
    std::uint64_t debug_emission_pulses = 0;
    bool debug_drive = false;
};

struct AnalyzeOptions {
    std::filesystem::path tag_path;
    /// Clock and analysis settings; the default scenario when empty.
    std::filesystem::path config_path;
    std::filesystem::path out_dir;
    std::optional<TagFormat> format;  ///< from the file extension when unset
    bool use_env = true;
};

struct PredictOptions {
    RateModel model;
    BlinkingMode mode = BlinkingMode::slow;
    /// Single order to report; all 1..m when unset.
    std::optional<int> order;
    /// Independent 1-sigma errors of the model parameters.
    RateModel sigma{0.0, 0, 0.0, 0.0, 0.0, 0.0, 0.0};
};

/// Named histograms produced by an analysis, for CSV export.
struct NamedHistogram {
    std::string name;
    CorrelationHistogram histogram;
};

/// Metrics computed from detector tags: singles, all coincidence subsets,
/// switching metrics, g2(0) and two-photon interference areas as enabled by
/// the analysis settings. Pure function of its inputs.
nlohmann::json analyze_tags(const ScenarioConfig& config, const std::vector<TagStream>& tags,
                            std::vector<NamedHistogram>* histograms = nullptr);

/// Closed-form rates with independent error propagation.
nlohmann::json predict_rates(const PredictOptions& options);

/// Bench rate model: 76.2 MHz, m = 4, eta_b 0.36, eta_qd 0.009, eta_routing
/// 0.84, eta_det 0.68, eta_sw 0.946.
RateModel reference_rate_model();

int cmd_simulate(const SimulateOptions& options, std::ostream& log);
int cmd_analyze(const AnalyzeOptions& options, std::ostream& log);
int cmd_predict(const PredictOptions& options, std::ostream& out, std::ostream& log);

/// Report keys that vary between identical runs (wall time).
nlohmann::json strip_volatile(nlohmann::json report);

}  // namespace qdemux::cli
