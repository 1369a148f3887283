#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "eegmi/evaluation.hpp"
#include "eegmi/features.hpp"
#include "eegmi/ica.hpp"
#include "eegmi/mlp.hpp"
#include "eegmi/windowing.hpp"

namespace eegmi {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct DataConfig {
    std::string source;             // URL or local directory
    std::filesystem::path cache_dir;  // empty: default_cache_dir()
    std::vector<int> subjects{1};
    std::vector<int> runs{3, 4, 7, 8, 11, 12};
    std::string montage = "motor";  // "motor" (46 channels) or "all"
    double fs = 160.0;              // nominal rate used for second-based settings
};

struct FilterConfig {
    double notch_hz = 50.0;
    double notch_q = 30.0;
    double bp_low = 0.5;
    double bp_high = 40.0;
    int bp_order = 4;
    double ica_hp_hz = 1.0;
    int ica_hp_order = 4;
};

struct IcaStageConfig {
    bool enabled = true;
    int n_components = 30;
    int max_iter = 200;
    double tol = 1e-4;
    ArtifactThresholds thresholds;
};

struct SplitConfig {
    double ratio = 0.8;
    SplitMode mode = SplitMode::WindowRandom;
    bool report_trialwise = true;
};

struct PipelineConfig {
    std::uint64_t seed = 0;
    /// Fit feature normalisation on the full matrix instead of the train split.
    bool paper_protocol = false;
    DataConfig data;
    FilterConfig filters;
    IcaStageConfig ica;
    WindowSpec window;
    FeatureOptions features;
    TrainConfig train;
    Activation activation = Activation::Relu;
    SplitConfig split;
    std::filesystem::path out_dir = "eegmi-out";
};

/// Window settings as they may appear in a config file or on the command
/// line. Seconds are converted with the nominal sampling rate.
struct WindowOverrides {
    std::optional<std::size_t> window_len;
    std::optional<double> window_sec;
    std::optional<std::size_t> stride;
    std::optional<double> overlap_pct;
};

/// Resolves overrides on top of `base`. window_len/window_sec and
/// stride/overlap_pct are mutually exclusive pairs.
WindowSpec resolve_window(const WindowSpec& base, const WindowOverrides& o, double fs);

PipelineConfig default_config();

/// Parses YAML text; omitted keys keep their defaults, unknown keys throw.
PipelineConfig parse_config(std::string_view yaml_text);
PipelineConfig load_config(const std::filesystem::path& path);

/// Canonical YAML rendering of every field (stable key order).
std::string dump_config(const PipelineConfig& config);

/// Checks ranges and cross-field constraints; throws ConfigError.
void validate_config(const PipelineConfig& config);

}  // namespace eegmi
