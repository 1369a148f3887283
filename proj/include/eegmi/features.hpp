#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "eegmi/windowing.hpp"

namespace eegmi {

/// Normalisation of the skewness / kurtosis denominators.
enum class MomentConvention {
    /// 1/N central moment over a 1/(N-1) variance, as printed with the
    /// feature definitions.
    Printed,
    /// Standard population (biased) estimator, 1/N throughout.
    Population,
};

struct TimeFeatures {
    double mean = 0.0;
    double variance = 0.0;
    double skewness = 0.0;
    double kurtosis = 0.0;  // excess
    double abs_area = 0.0;  // sum |x_i|, unit sample spacing
    bool degenerate = false;
};

TimeFeatures time_features(std::span<const double> window, MomentConvention convention = MomentConvention::Printed);

struct WelchConfig {
    std::size_t segment = 256;
    std::size_t overlap = 128;
};

struct Psd {
    std::vector<double> freqs;  // Hz
    std::vector<double> power;  // units^2 / Hz, one-sided
};

/// Averaged Hann-tapered periodograms of mean-removed segments with
/// one-sided density scaling (sum(power) * df ~ variance).
Psd welch_psd(std::span<const double> x, double fs, const WelchConfig& config = {});

struct PsdFeatures {
    double peak_frequency = 0.0;
    double peak_amplitude = 0.0;
};

/// Band-limited argmax of the PSD; ties resolve to the lower frequency and an
/// all-zero band yields (0, 0).
PsdFeatures psd_peak_features(const Psd& psd, double band_low = 0.5, double band_high = 40.0);

enum class FeatureMode { Time, Frequency, Both };

std::string_view to_string(FeatureMode mode);
FeatureMode parse_feature_mode(std::string_view text);

/// Per-channel feature names in column order for a mode.
std::vector<std::string> feature_names(FeatureMode mode);

struct FeatureOptions {
    FeatureMode mode = FeatureMode::Both;
    WelchConfig welch;
    MomentConvention convention = MomentConvention::Printed;
    double band_low = 0.5;
    double band_high = 40.0;
};

/// Rows are windows; columns are channel-major, `ch.<name>.<feature>`.
struct FeatureMatrix {
    std::vector<std::string> columns;
    Eigen::MatrixXd values;  // rows x columns
    std::vector<int> labels;
    std::vector<TrialKey> trials;
    std::vector<std::size_t> starts;

    std::size_t rows() const { return labels.size(); }
};

/// Computes features for every window (rows sorted by subject, run, start).
FeatureMatrix assemble_feature_matrix(std::span<const LabeledWindow> windows, const FeatureOptions& options = {});

struct NormalizerStats {
    std::vector<double> mean;
    std::vector<double> stddev;
    bool fitted = false;
};

class NotFittedError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Per-column population mean / standard deviation over `rows` (all rows when empty).
NormalizerStats fit_normalizer(const Eigen::MatrixXd& matrix, std::span<const std::size_t> rows = {});

/// (x - mean) / stddev per column; columns with stddev 0 map to 0.
Eigen::MatrixXd apply_normalizer(const Eigen::MatrixXd& matrix, const NormalizerStats& stats);

struct NormalizedMatrix {
    Eigen::MatrixXd values;
    NormalizerStats stats;
};

NormalizedMatrix zscore_fit_transform(const Eigen::MatrixXd& matrix);

void save_feature_csv(const FeatureMatrix& matrix, const std::filesystem::path& path);
FeatureMatrix load_feature_csv(const std::filesystem::path& path);

void save_normalizer(const NormalizerStats& stats, const std::vector<std::string>& columns,
                     const std::filesystem::path& path);
NormalizerStats load_normalizer(const std::filesystem::path& path);

}  // namespace eegmi
