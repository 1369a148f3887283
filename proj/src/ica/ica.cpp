#include "eegmi/ica.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace eegmi {

namespace {

/// (W W^T)^{-1/2} W
Eigen::MatrixXd symmetric_decorrelation(const Eigen::MatrixXd& w) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(w * w.transpose());
    const Eigen::VectorXd inv_sqrt = eig.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    return eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose() * w;
}

}  // namespace

WhitenedData center_and_whiten(const Eigen::MatrixXd& x, int n_components) {
    const Eigen::Index channels = x.rows();
    const Eigen::Index samples = x.cols();
    if (n_components < 1 || n_components > channels)
        throw std::invalid_argument("n_components must be in 1.." + std::to_string(channels));
    if (samples <= channels) throw std::invalid_argument("whitening needs more samples than channels");

    WhitenedData out;
    auto& wh = out.whitening;
    wh.channel_means = x.rowwise().mean();
    const Eigen::MatrixXd centered = x.colwise() - wh.channel_means;
    const Eigen::MatrixXd cov = centered * centered.transpose() / static_cast<double>(samples);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw std::runtime_error("covariance eigendecomposition failed");
    const Eigen::VectorXd& values = eig.eigenvalues();  // ascending
    const double largest = values(channels - 1);
    const double smallest_kept = values(channels - n_components);
    if (!(largest > 0) || smallest_kept <= largest * 1e-10)
        throw RankDeficientError("covariance rank is below the requested " + std::to_string(n_components) +
                                 " components");

    wh.matrix.resize(n_components, channels);
    wh.dewhitening.resize(channels, n_components);
    wh.eigenvalues.resize(n_components);
    for (int k = 0; k < n_components; ++k) {
        const Eigen::Index src = channels - 1 - k;
        Eigen::VectorXd v = eig.eigenvectors().col(src);
        Eigen::Index argmax = 0;
        v.cwiseAbs().maxCoeff(&argmax);
        if (v(argmax) < 0) v = -v;
        const double lambda = values(src);
        wh.eigenvalues(k) = lambda;
        wh.matrix.row(k) = v.transpose() / std::sqrt(lambda);
        wh.dewhitening.col(k) = v * std::sqrt(lambda);
    }
    out.z = wh.matrix * centered;
    return out;
}

IcaDecomposition fastica(const Eigen::MatrixXd& z, const FastIcaConfig& config, const Whitening* whitening) {
    const Eigen::Index n = z.rows();
    const double t = static_cast<double>(z.cols());
    if (n < 1 || z.cols() < 2) throw std::invalid_argument("fastica needs at least one component and two samples");

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd w(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) w(i, j) = normal(rng);
    w = symmetric_decorrelation(w);

    IcaDecomposition out;
    for (int it = 1; it <= config.max_iter; ++it) {
        const Eigen::MatrixXd g = (w * z).array().tanh().matrix();
        const Eigen::VectorXd g_prime_mean = (1.0 - g.array().square()).rowwise().mean();
        Eigen::MatrixXd w_new = g * z.transpose() / t - g_prime_mean.asDiagonal() * w;
        w_new = symmetric_decorrelation(w_new);
        const double lim = ((w_new.cwiseProduct(w)).rowwise().sum().cwiseAbs().array() - 1.0).abs().maxCoeff();
        w = std::move(w_new);
        out.iterations = it;
        if (lim < config.tol) {
            out.converged = true;
            break;
        }
    }
    out.unmixing = w;
    out.sources = w * z;
    if (whitening) out.mixing = whitening->dewhitening * w.transpose();
    return out;
}

std::vector<double> zscores(std::span<const double> values) {
    std::vector<double> out(values.size(), 0.0);
    if (values.empty()) return out;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());
    const double sd = std::sqrt(var);
    if (!(sd > 0)) return out;
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - mean) / sd;
    return out;
}

double histogram_entropy(std::span<const double> samples, int bins) {
    if (samples.empty() || bins < 1) return 0.0;
    const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (!(hi > lo)) return 0.0;
    std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
    const double width = (hi - lo) / bins;
    for (double v : samples) {
        auto b = static_cast<std::size_t>((v - lo) / width);
        counts[std::min(b, counts.size() - 1)]++;
    }
    double h = 0.0;
    const double total = static_cast<double>(samples.size());
    for (auto c : counts)
        if (c > 0) {
            const double p = static_cast<double>(c) / total;
            h -= p * std::log(p);
        }
    return h;
}

ComponentStats component_stats(const Eigen::MatrixXd& sources) {
    const Eigen::Index n = sources.rows();
    const Eigen::Index t = sources.cols();
    ComponentStats stats;
    stats.components.resize(static_cast<std::size_t>(n));
    Eigen::MatrixXd standardized = Eigen::MatrixXd::Zero(n, t);

    for (Eigen::Index i = 0; i < n; ++i) {
        auto& c = stats.components[static_cast<std::size_t>(i)];
        if (t < 2) {
            c.degenerate = true;
            continue;
        }
        const Eigen::ArrayXd row = sources.row(i).array();
        const Eigen::ArrayXd d = row - row.mean();
        const double m2 = d.square().mean();
        c.variance = m2;
        if (!(m2 > 1e-300) || !std::isfinite(m2)) {
            c.variance = 0.0;
            c.degenerate = true;
            continue;
        }
        const double m3 = d.cube().mean();
        const double m4 = d.square().square().mean();
        c.skewness = m3 / std::pow(m2, 1.5);
        c.kurtosis = m4 / (m2 * m2) - 3.0;
        std::vector<double> samples(row.begin(), row.end());
        c.entropy = histogram_entropy(samples, 50);
        standardized.row(i) = (d / std::sqrt(m2 * static_cast<double>(t))).matrix().transpose();
    }

    const Eigen::MatrixXd corr = standardized * standardized.transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
        auto& c = stats.components[static_cast<std::size_t>(i)];
        if (c.degenerate) continue;
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i && !stats.components[static_cast<std::size_t>(j)].degenerate)
                c.max_abs_pearson = std::max(c.max_abs_pearson, std::abs(corr(i, j)));
    }

    std::vector<double> kurt, var, skew;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < stats.components.size(); ++i) {
        const auto& c = stats.components[i];
        if (c.degenerate) continue;
        idx.push_back(i);
        kurt.push_back(c.kurtosis);
        var.push_back(c.variance);
        skew.push_back(c.skewness);
    }
    const auto zk = zscores(kurt);
    const auto zv = zscores(var);
    const auto zs = zscores(skew);
    for (std::size_t k = 0; k < idx.size(); ++k) {
        auto& c = stats.components[idx[k]];
        c.kurtosis_zscore = zk[k];
        c.variance_zscore = zv[k];
        c.skewness_zscore = zs[k];
    }
    return stats;
}

std::vector<int> detect_artifact_components(const ComponentStats& stats, const ArtifactThresholds& th) {
    std::vector<int> flagged;
    for (std::size_t i = 0; i < stats.components.size(); ++i) {
        const auto& c = stats.components[i];
        bool bad = c.degenerate;
        if (th.use_zscore && c.kurtosis_zscore > th.zscore_limit) bad = true;
        if (th.use_abs_kurtosis && c.kurtosis > th.abs_kurtosis_limit) bad = true;
        if (th.use_central_moment && (std::abs(c.variance_zscore) > th.central_moment_limit ||
                                      std::abs(c.skewness_zscore) > th.central_moment_limit))
            bad = true;
        if (th.use_pearson && c.max_abs_pearson >= th.pearson_limit) bad = true;
        if (bad) flagged.push_back(static_cast<int>(i));
    }
    return flagged;
}

Eigen::MatrixXd remove_components(const Eigen::MatrixXd& x, const Whitening& whitening,
                                  const Eigen::MatrixXd& unmixing, std::span<const int> exclusion) {
    const int n = whitening.n_components();
    if (x.rows() != whitening.n_channels())
        throw std::invalid_argument("channel count does not match the fitted whitening");
    if (unmixing.rows() != n || unmixing.cols() != n)
        throw std::invalid_argument("unmixing shape does not match the whitening");
    for (int k : exclusion)
        if (k < 0 || k >= n) throw std::out_of_range("excluded component " + std::to_string(k) + " out of range");

    Eigen::MatrixXd sources = unmixing * (whitening.matrix * (x.colwise() - whitening.channel_means));
    for (int k : exclusion) sources.row(k).setZero();
    Eigen::MatrixXd cleaned = whitening.dewhitening * (unmixing.transpose() * sources);
    cleaned.colwise() += whitening.channel_means;
    return cleaned;
}

IcaFitResult fit_ica(const Eigen::MatrixXd& x, int n_components, const FastIcaConfig& config,
                     const ArtifactThresholds& thresholds) {
    auto white = center_and_whiten(x, n_components);
    auto dec = fastica(white.z, config, &white.whitening);
    IcaFitResult out;
    out.stats = component_stats(dec.sources);
    out.model.whitening = std::move(white.whitening);
    out.model.unmixing = dec.unmixing;
    out.model.exclusion = detect_artifact_components(out.stats, thresholds);
    out.model.config = config;
    out.model.thresholds = thresholds;
    out.model.iterations = dec.iterations;
    out.model.converged = dec.converged;
    return out;
}

}  // namespace eegmi
