#pragma once

#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

namespace eegmi {

class FilterDesignError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class FilterKind { Notch, BandPass, HighPass };

struct FilterSpec {
    FilterKind kind = FilterKind::Notch;
    double f0 = 50.0;    // notch centre / high-pass cutoff (Hz)
    double low = 0.5;    // band-pass edges (Hz)
    double high = 40.0;
    double q = 30.0;     // notch quality factor
    int order = 4;       // Butterworth prototype order
    double fs = 160.0;

    static FilterSpec notch(double f0, double q, double fs);
    static FilterSpec band_pass(double low, double high, int order, double fs);
    static FilterSpec high_pass(double cutoff, int order, double fs);
};

/// Second-order section, denominator normalised so a0 = 1.
struct Biquad {
    double b0 = 1, b1 = 0, b2 = 0;
    double a1 = 0, a2 = 0;

    /// 1 for a first-order section (b2 = a2 = 0), else 2.
    int order() const { return (b2 == 0.0 && a2 == 0.0) ? 1 : 2; }
    std::complex<double> response(double omega) const;
    bool stable() const;
};

struct BiquadCascade {
    std::vector<Biquad> sections;

    int order() const;
    /// H(e^{j 2 pi f / fs}).
    std::complex<double> response(double freq_hz, double fs) const;
    double magnitude(double freq_hz, double fs) const { return std::abs(response(freq_hz, fs)); }
    /// Single causal pass, zero initial state.
    std::vector<double> apply(std::span<const double> x) const;
};

/// Notch: one biquad, unit gain at DC and Nyquist, zero at f0.
/// BandPass/HighPass: Butterworth via bilinear transform with prewarping.
BiquadCascade design_filter(const FilterSpec& spec);

/// Forward-backward filtering with odd reflection of 3 x cascade order
/// samples at each edge and steady-state initial conditions.
std::vector<double> filter_zero_phase(std::span<const double> signal, const BiquadCascade& cascade);

}  // namespace eegmi
