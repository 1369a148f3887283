#include "eegmi/filters.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

namespace eegmi {

namespace {

using cplx = std::complex<double>;

void require(bool ok, const std::string& message) {
    if (!ok) throw FilterDesignError(message);
}

std::vector<cplx> butterworth_prototype_poles(int order) {
    std::vector<cplx> poles;
    for (int k = 1; k <= order; ++k) {
        double theta = std::numbers::pi * (2.0 * k + order - 1) / (2.0 * order);
        poles.push_back(std::polar(1.0, theta));
    }
    return poles;
}

double prewarp(double f, double fs) { return 2.0 * fs * std::tan(std::numbers::pi * f / fs); }

cplx bilinear(cplx s, double fs) { return (2.0 * fs + s) / (2.0 * fs - s); }

/// Groups digital poles into conjugate pairs / real pairs / one leftover real.
std::vector<std::vector<cplx>> group_poles(std::vector<cplx> poles) {
    constexpr double tol = 1e-10;
    std::vector<std::vector<cplx>> groups;
    std::vector<double> reals;
    for (const auto& p : poles) {
        if (std::abs(p.imag()) <= tol) reals.push_back(p.real());
        else if (p.imag() > 0) groups.push_back({p, std::conj(p)});
    }
    std::sort(groups.begin(), groups.end(),
              [](const auto& a, const auto& b) { return std::abs(a[0]) < std::abs(b[0]); });
    std::sort(reals.begin(), reals.end());
    for (std::size_t i = 0; i + 1 < reals.size(); i += 2) groups.push_back({reals[i], reals[i + 1]});
    if (reals.size() % 2 == 1) groups.push_back({reals.back()});
    return groups;
}

Biquad section_from_poles(const std::vector<cplx>& poles) {
    Biquad s;
    if (poles.size() == 2) {
        s.a1 = -(poles[0] + poles[1]).real();
        s.a2 = (poles[0] * poles[1]).real();
    } else {
        s.a1 = -poles[0].real();
        s.a2 = 0.0;
    }
    return s;
}

void normalise_gain(Biquad& s, double omega) {
    double g = std::abs(s.response(omega));
    s.b0 /= g;
    s.b1 /= g;
    s.b2 /= g;
}

/// Per-section steady-state state for a unit step (transposed direct form II).
std::vector<std::array<double, 2>> step_initial_state(const BiquadCascade& c) {
    std::vector<std::array<double, 2>> zi;
    double level = 1.0;
    for (const auto& s : c.sections) {
        double dc = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
        double s2 = (s.b2 - s.a2 * dc) * level;
        double s1 = (s.b1 - s.a1 * dc) * level + s2;
        zi.push_back({s1, s2});
        level *= dc;
    }
    return zi;
}

void run_cascade(std::vector<double>& x, const BiquadCascade& c, const std::vector<std::array<double, 2>>& zi,
                 double scale) {
    for (std::size_t k = 0; k < c.sections.size(); ++k) {
        const auto& s = c.sections[k];
        double z1 = zi[k][0] * scale;
        double z2 = zi[k][1] * scale;
        for (double& v : x) {
            double in = v;
            double out = s.b0 * in + z1;
            z1 = s.b1 * in - s.a1 * out + z2;
            z2 = s.b2 * in - s.a2 * out;
            v = out;
        }
    }
}

}  // namespace

FilterSpec FilterSpec::notch(double f0, double q, double fs) {
    FilterSpec s;
    s.kind = FilterKind::Notch;
    s.f0 = f0;
    s.q = q;
    s.fs = fs;
    return s;
}

FilterSpec FilterSpec::band_pass(double low, double high, int order, double fs) {
    FilterSpec s;
    s.kind = FilterKind::BandPass;
    s.low = low;
    s.high = high;
    s.order = order;
    s.fs = fs;
    return s;
}

FilterSpec FilterSpec::high_pass(double cutoff, int order, double fs) {
    FilterSpec s;
    s.kind = FilterKind::HighPass;
    s.f0 = cutoff;
    s.order = order;
    s.fs = fs;
    return s;
}

std::complex<double> Biquad::response(double omega) const {
    const cplx z1 = std::polar(1.0, -omega);
    const cplx z2 = z1 * z1;
    return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
}

bool Biquad::stable() const { return std::abs(a2) < 1.0 && std::abs(a1) < 1.0 + a2; }

int BiquadCascade::order() const {
    int n = 0;
    for (const auto& s : sections) n += s.order();
    return n;
}

std::complex<double> BiquadCascade::response(double freq_hz, double fs) const {
    const double omega = 2.0 * std::numbers::pi * freq_hz / fs;
    cplx h = 1.0;
    for (const auto& s : sections) h *= s.response(omega);
    return h;
}

std::vector<double> BiquadCascade::apply(std::span<const double> x) const {
    std::vector<double> y(x.begin(), x.end());
    std::vector<std::array<double, 2>> zero(sections.size(), {0.0, 0.0});
    run_cascade(y, *this, zero, 0.0);
    return y;
}

BiquadCascade design_filter(const FilterSpec& spec) {
    const double nyquist = spec.fs / 2.0;
    require(spec.fs > 0, "sampling rate must be positive");
    BiquadCascade cascade;

    switch (spec.kind) {
        case FilterKind::Notch: {
            require(spec.f0 > 0 && spec.f0 < nyquist, "notch frequency must lie strictly inside (0, fs/2)");
            require(spec.q > 0, "notch Q must be positive");
            const double w0 = 2.0 * std::numbers::pi * spec.f0 / spec.fs;
            const double bw = w0 / spec.q;
            const double gain = 1.0 / (1.0 + std::tan(bw / 2.0));
            const double c = std::cos(w0);
            Biquad s;
            s.b0 = gain;
            s.b1 = -2.0 * c * gain;
            s.b2 = gain;
            s.a1 = -2.0 * c * gain;
            s.a2 = 2.0 * gain - 1.0;
            cascade.sections.push_back(s);
            break;
        }
        case FilterKind::BandPass: {
            require(spec.order >= 1, "filter order must be at least 1");
            require(spec.low > 0 && spec.low < nyquist, "band-pass low edge must lie strictly inside (0, fs/2)");
            require(spec.high > 0 && spec.high < nyquist, "band-pass high edge must lie strictly inside (0, fs/2)");
            require(spec.low < spec.high, "band-pass low edge must be below the high edge");
            const double wl = prewarp(spec.low, spec.fs);
            const double wh = prewarp(spec.high, spec.fs);
            const double w0 = std::sqrt(wl * wh);
            const double bw = wh - wl;
            std::vector<cplx> digital;
            for (const auto& p : butterworth_prototype_poles(spec.order)) {
                const cplx b = p * bw;
                const cplx disc = std::sqrt(b * b - 4.0 * w0 * w0);
                digital.push_back(bilinear((b + disc) / 2.0, spec.fs));
                digital.push_back(bilinear((b - disc) / 2.0, spec.fs));
            }
            // analog centre w0 maps to this digital frequency, where |H| = 1
            const double omega_ref = 2.0 * std::atan(w0 / (2.0 * spec.fs));
            for (const auto& group : group_poles(digital)) {
                Biquad s = section_from_poles(group);
                s.b0 = 1.0;
                s.b1 = 0.0;
                s.b2 = -1.0;
                normalise_gain(s, omega_ref);
                cascade.sections.push_back(s);
            }
            break;
        }
        case FilterKind::HighPass: {
            require(spec.order >= 1, "filter order must be at least 1");
            require(spec.f0 > 0 && spec.f0 < nyquist, "high-pass cutoff must lie strictly inside (0, fs/2)");
            const double wc = prewarp(spec.f0, spec.fs);
            std::vector<cplx> digital;
            for (const auto& p : butterworth_prototype_poles(spec.order)) digital.push_back(bilinear(wc / p, spec.fs));
            for (const auto& group : group_poles(digital)) {
                Biquad s = section_from_poles(group);
                if (group.size() == 2) {
                    s.b0 = 1.0;
                    s.b1 = -2.0;
                    s.b2 = 1.0;
                } else {
                    s.b0 = 1.0;
                    s.b1 = -1.0;
                    s.b2 = 0.0;
                }
                normalise_gain(s, std::numbers::pi);
                cascade.sections.push_back(s);
            }
            break;
        }
    }
    for (const auto& s : cascade.sections) require(s.stable(), "designed section is unstable");
    return cascade;
}

std::vector<double> filter_zero_phase(std::span<const double> signal, const BiquadCascade& cascade) {
    const std::size_t n = signal.size();
    const std::size_t pad = 3 * static_cast<std::size_t>(cascade.order());
    if (n <= pad)
        throw std::invalid_argument("signal of " + std::to_string(n) + " samples too short for zero-phase filtering (needs > " +
                                    std::to_string(pad) + ")");
    if (cascade.sections.empty()) return {signal.begin(), signal.end()};

    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * signal[0] - signal[i]);
    ext.insert(ext.end(), signal.begin(), signal.end());
    for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * signal[n - 1] - signal[n - 1 - i]);

    const auto zi = step_initial_state(cascade);
    run_cascade(ext, cascade, zi, ext.front());
    std::reverse(ext.begin(), ext.end());
    run_cascade(ext, cascade, zi, ext.front());
    std::reverse(ext.begin(), ext.end());
    return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

}  // namespace eegmi
