#include "eegmi/features.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <tuple>

namespace eegmi {

TimeFeatures time_features(std::span<const double> x, MomentConvention convention) {
    const std::size_t n = x.size();
    if (n < 2) throw std::invalid_argument("time features need at least 2 samples");
    TimeFeatures f;
    double sum = 0.0, area = 0.0;
    for (double v : x) {
        sum += v;
        area += std::abs(v);
    }
    const double nn = static_cast<double>(n);
    f.mean = sum / nn;
    f.abs_area = area;

    double s2 = 0.0, s3 = 0.0, s4 = 0.0;
    for (double v : x) {
        const double d = v - f.mean;
        const double d2 = d * d;
        s2 += d2;
        s3 += d2 * d;
        s4 += d2 * d2;
    }
    f.variance = s2 / nn;
    if (!(f.variance > 1e-24 * std::max(1.0, f.mean * f.mean))) {
        f.degenerate = true;
        return f;
    }
    const double spread = convention == MomentConvention::Printed ? s2 / (nn - 1.0) : f.variance;
    f.skewness = (s3 / nn) / std::pow(spread, 1.5);
    f.kurtosis = (s4 / nn) / (spread * spread) - 3.0;
    return f;
}

Psd welch_psd(std::span<const double> x, double fs, const WelchConfig& cfg) {
    const std::size_t seg = cfg.segment;
    if (seg < 2 || cfg.overlap >= seg) throw std::invalid_argument("invalid Welch segment/overlap");
    if (x.size() < seg)
        throw std::invalid_argument("signal of " + std::to_string(x.size()) + " samples shorter than one " +
                                    std::to_string(seg) + "-sample Welch segment");
    const std::size_t step = seg - cfg.overlap;
    const std::size_t segments = (x.size() - seg) / step + 1;

    static thread_local Eigen::FFT<double> fft = [] {
        Eigen::FFT<double> f;
        f.SetFlag(Eigen::FFT<double>::HalfSpectrum);
        return f;
    }();
    static thread_local std::vector<double> window;
    static thread_local double window_power = 0.0;
    if (window.size() != seg) {
        window.resize(seg);
        window_power = 0.0;
        for (std::size_t i = 0; i < seg; ++i) {
            // periodic Hann
            window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(seg));
            window_power += window[i] * window[i];
        }
    }

    const std::size_t bins = seg / 2 + 1;
    Psd psd;
    psd.freqs.resize(bins);
    psd.power.assign(bins, 0.0);
    for (std::size_t k = 0; k < bins; ++k) psd.freqs[k] = static_cast<double>(k) * fs / static_cast<double>(seg);

    std::vector<double> buf(seg);
    std::vector<std::complex<double>> spec;
    for (std::size_t s = 0; s < segments; ++s) {
        const double* p = x.data() + s * step;
        double mean = 0.0;
        for (std::size_t i = 0; i < seg; ++i) mean += p[i];
        mean /= static_cast<double>(seg);
        for (std::size_t i = 0; i < seg; ++i) buf[i] = (p[i] - mean) * window[i];
        fft.fwd(spec, buf);
        for (std::size_t k = 0; k < bins; ++k) psd.power[k] += std::norm(spec[k]);
    }
    const double scale = 1.0 / (fs * window_power * static_cast<double>(segments));
    for (std::size_t k = 0; k < bins; ++k) {
        const bool edge = k == 0 || (seg % 2 == 0 && k == bins - 1);
        psd.power[k] *= scale * (edge ? 1.0 : 2.0);
    }
    return psd;
}

PsdFeatures psd_peak_features(const Psd& psd, double band_low, double band_high) {
    PsdFeatures out;
    bool any = false;
    double best = -1.0;
    for (std::size_t k = 0; k < psd.freqs.size(); ++k) {
        const double f = psd.freqs[k];
        if (f < band_low || f > band_high) continue;
        any = true;
        if (psd.power[k] < 0) throw std::invalid_argument("PSD must be non-negative");
        if (psd.power[k] > best) {
            best = psd.power[k];
            out.peak_frequency = f;
            out.peak_amplitude = psd.power[k];
        }
    }
    if (!any) throw std::invalid_argument("no PSD bins inside the peak-search band");
    if (out.peak_amplitude == 0.0) return {};
    return out;
}

std::string_view to_string(FeatureMode mode) {
    switch (mode) {
        case FeatureMode::Time: return "time";
        case FeatureMode::Frequency: return "frequency";
        case FeatureMode::Both: return "both";
    }
    return "?";
}

FeatureMode parse_feature_mode(std::string_view text) {
    if (text == "time") return FeatureMode::Time;
    if (text == "frequency") return FeatureMode::Frequency;
    if (text == "both") return FeatureMode::Both;
    throw std::invalid_argument("feature mode must be time, frequency or both (got '" + std::string(text) + "')");
}

std::vector<std::string> feature_names(FeatureMode mode) {
    std::vector<std::string> names;
    if (mode != FeatureMode::Frequency) names = {"mean", "variance", "skewness", "kurtosis", "abs_area"};
    if (mode != FeatureMode::Time) {
        names.push_back("peak_freq");
        names.push_back("peak_amp");
    }
    return names;
}

FeatureMatrix assemble_feature_matrix(std::span<const LabeledWindow> windows, const FeatureOptions& options) {
    FeatureMatrix out;
    if (windows.empty()) return out;

    const auto* first = windows.front().source;
    const auto channels = static_cast<std::size_t>(first->data.rows());
    const std::size_t length = windows.front().length;
    for (const auto& w : windows) {
        if (static_cast<std::size_t>(w.source->data.rows()) != channels)
            throw std::invalid_argument("windows have mixed channel counts");
        if (w.length != length) throw std::invalid_argument("windows have mixed lengths");
    }

    const auto names = feature_names(options.mode);
    for (std::size_t c = 0; c < channels; ++c)
        for (const auto& n : names) out.columns.push_back("ch." + first->channels[c] + "." + n);

    std::vector<std::size_t> order(windows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& wa = windows[a];
        const auto& wb = windows[b];
        return std::tie(wa.trial.subject, wa.trial.run, wa.start) < std::tie(wb.trial.subject, wb.trial.run, wb.start);
    });

    const bool want_time = options.mode != FeatureMode::Frequency;
    const bool want_freq = options.mode != FeatureMode::Time;
    const std::size_t per_channel = names.size();
    out.values.resize(static_cast<Eigen::Index>(windows.size()), static_cast<Eigen::Index>(channels * per_channel));
    out.labels.reserve(windows.size());
    out.trials.reserve(windows.size());
    out.starts.reserve(windows.size());

    std::vector<double> buf(length);
    for (std::size_t r = 0; r < order.size(); ++r) {
        const auto& w = windows[order[r]];
        const auto view = w.view();
        for (std::size_t c = 0; c < channels; ++c) {
            for (std::size_t i = 0; i < length; ++i)
                buf[i] = view(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i));
            auto col = static_cast<Eigen::Index>(c * per_channel);
            const auto row = static_cast<Eigen::Index>(r);
            if (want_time) {
                const auto t = time_features(buf, options.convention);
                out.values(row, col++) = t.mean;
                out.values(row, col++) = t.variance;
                out.values(row, col++) = t.skewness;
                out.values(row, col++) = t.kurtosis;
                out.values(row, col++) = t.abs_area;
            }
            if (want_freq) {
                const auto p = psd_peak_features(welch_psd(buf, w.source->fs, options.welch), options.band_low,
                                                 options.band_high);
                out.values(row, col++) = p.peak_frequency;
                out.values(row, col++) = p.peak_amplitude;
            }
        }
        out.labels.push_back(static_cast<int>(w.label));
        out.trials.push_back(w.trial);
        out.starts.push_back(w.start);
    }
    if (!out.values.allFinite()) throw std::runtime_error("feature matrix contains NaN or Inf");
    return out;
}

NormalizerStats fit_normalizer(const Eigen::MatrixXd& m, std::span<const std::size_t> rows) {
    const std::size_t n = rows.empty() ? static_cast<std::size_t>(m.rows()) : rows.size();
    if (n < 2) throw std::invalid_argument("normaliser fit needs at least 2 rows");
    NormalizerStats s;
    const auto cols = static_cast<std::size_t>(m.cols());
    s.mean.assign(cols, 0.0);
    s.stddev.assign(cols, 0.0);
    auto row_at = [&](std::size_t i) { return static_cast<Eigen::Index>(rows.empty() ? i : rows[i]); };
    for (std::size_t c = 0; c < cols; ++c) {
        const auto col = static_cast<Eigen::Index>(c);
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += m(row_at(i), col);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = m(row_at(i), col) - mean;
            var += d * d;
        }
        s.mean[c] = mean;
        s.stddev[c] = std::sqrt(var / static_cast<double>(n));
    }
    s.fitted = true;
    return s;
}

Eigen::MatrixXd apply_normalizer(const Eigen::MatrixXd& m, const NormalizerStats& s) {
    if (!s.fitted) throw NotFittedError("normaliser applied before fit");
    if (s.mean.size() != static_cast<std::size_t>(m.cols()))
        throw std::invalid_argument("normaliser column count does not match the matrix");
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const double mu = s.mean[static_cast<std::size_t>(c)];
        const double sd = s.stddev[static_cast<std::size_t>(c)];
        if (sd > 0) out.col(c) = (m.col(c).array() - mu) / sd;
        else out.col(c).setZero();
    }
    return out;
}

NormalizedMatrix zscore_fit_transform(const Eigen::MatrixXd& matrix) {
    NormalizedMatrix out;
    out.stats = fit_normalizer(matrix);
    out.values = apply_normalizer(matrix, out.stats);
    return out;
}

}  // namespace eegmi
