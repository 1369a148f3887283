#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace eegmi {

class RankDeficientError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// PCA whitening fitted on channels x samples data.
struct Whitening {
    Eigen::VectorXd channel_means;
    /// n_components x channels; rows ordered by descending eigenvalue.
    Eigen::MatrixXd matrix;
    /// channels x n_components, the pseudo-inverse of `matrix`.
    Eigen::MatrixXd dewhitening;
    Eigen::VectorXd eigenvalues;

    int n_components() const { return static_cast<int>(matrix.rows()); }
    int n_channels() const { return static_cast<int>(matrix.cols()); }
};

struct WhitenedData {
    Eigen::MatrixXd z;  // n_components x samples, zero mean, identity covariance
    Whitening whitening;
};

/// Centers each channel and projects onto the leading principal axes scaled
/// to unit variance. Covariances use the 1/T normalisation.
WhitenedData center_and_whiten(const Eigen::MatrixXd& x, int n_components);

struct FastIcaConfig {
    int max_iter = 200;
    double tol = 1e-4;
    std::uint64_t seed = 0;
};

struct IcaDecomposition {
    /// Orthonormal unmixing in whitened space: sources = unmixing * z.
    Eigen::MatrixXd unmixing;
    /// Channel-space mixing, x - means ~= mixing * sources.
    Eigen::MatrixXd mixing;
    Eigen::MatrixXd sources;
    int iterations = 0;
    bool converged = false;
};

/// Symmetric FastICA with the log-cosh contrast (g = tanh). When
/// `whitening` is given the channel-space mixing matrix is filled in.
IcaDecomposition fastica(const Eigen::MatrixXd& z, const FastIcaConfig& config,
                         const Whitening* whitening = nullptr);

struct ComponentStat {
    double variance = 0.0;
    double skewness = 0.0;
    double kurtosis = 0.0;  // excess
    double kurtosis_zscore = 0.0;
    double variance_zscore = 0.0;
    double skewness_zscore = 0.0;
    double entropy = 0.0;  // nats
    double max_abs_pearson = 0.0;
    bool degenerate = false;
};

struct ComponentStats {
    std::vector<ComponentStat> components;

    std::size_t size() const { return components.size(); }
};

/// Population z-scores (ddof 0) of `values`; all zeros when their spread is 0.
std::vector<double> zscores(std::span<const double> values);

/// Shannon entropy (nats) of a `bins`-bin amplitude histogram over the
/// sample range.
double histogram_entropy(std::span<const double> samples, int bins = 50);

/// Row-wise statistics of a sources matrix (components x samples). The
/// z-score columns are standardised across non-degenerate components.
ComponentStats component_stats(const Eigen::MatrixXd& sources);

struct ArtifactThresholds {
    double zscore_limit = 0.23;
    bool use_zscore = true;
    double abs_kurtosis_limit = 8.83;
    bool use_abs_kurtosis = false;
    double central_moment_limit = 3.05;
    bool use_central_moment = false;
    double pearson_limit = 0.5;
    bool use_pearson = false;
};

/// Sorted indices of components flagged by any enabled rule. Degenerate
/// components are always flagged.
std::vector<int> detect_artifact_components(const ComponentStats& stats, const ArtifactThresholds& thresholds);

/// Back-projects `x` through the fitted unmixing with the excluded sources
/// zeroed. With no exclusions this returns the PCA-truncated input.
Eigen::MatrixXd remove_components(const Eigen::MatrixXd& x, const Whitening& whitening,
                                  const Eigen::MatrixXd& unmixing, std::span<const int> exclusion);

/// Everything needed to re-apply a fitted cleaning step.
struct IcaModel {
    Whitening whitening;
    Eigen::MatrixXd unmixing;
    std::vector<int> exclusion;
    FastIcaConfig config;
    ArtifactThresholds thresholds;
    int iterations = 0;
    bool converged = false;
};

/// Whitening + FastICA + stats + detection on one channels x samples block.
struct IcaFitResult {
    IcaModel model;
    ComponentStats stats;
};

IcaFitResult fit_ica(const Eigen::MatrixXd& x, int n_components, const FastIcaConfig& config,
                     const ArtifactThresholds& thresholds);

inline constexpr int kIcaFormatVersion = 1;

void save_ica_model(const IcaModel& model, const std::filesystem::path& path);
IcaModel load_ica_model(const std::filesystem::path& path);

/// CSV with one row per component: variance, skewness, kurtosis, the three
/// z-scores, entropy, max |pearson|, degenerate flag. An optional trailing
/// `flagged` column is written when `exclusion` is given and ignored on load.
void save_component_stats(const ComponentStats& stats, const std::filesystem::path& path,
                          std::span<const int> exclusion = {});
ComponentStats load_component_stats(const std::filesystem::path& path);

}  // namespace eegmi
