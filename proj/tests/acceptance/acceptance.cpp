// Acceptance harness: one PASS/FAIL line per criterion.
//   eegmi_acceptance            criteria 1-3 and 7-9 (offline)
//   eegmi_acceptance --corpus   criteria 4-6 on the public recordings; exit 77 when unreachable

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "eegmi/config.hpp"
#include "eegmi/evaluation.hpp"
#include "eegmi/features.hpp"
#include "eegmi/fetch.hpp"
#include "eegmi/filters.hpp"
#include "eegmi/hashing.hpp"
#include "eegmi/ica.hpp"
#include "eegmi/mlp.hpp"
#include "eegmi/pipeline.hpp"
#include "eegmi/windowing.hpp"
#include "synthetic.hpp"

namespace fs = std::filesystem;
using namespace eegmi;

namespace {

// Pinned tolerances.
constexpr double kZscoreAffinityR2 = 0.9999;
constexpr double kF1Tolerance = 0.0005;
constexpr double kIcaCorrelation = 0.95;
constexpr int kIcaTrials = 20;
constexpr double kBlinkRestoredCorrelation = 0.95;
constexpr double kGradRelErr = 1e-5;
constexpr double kAdamStepTol = 1e-6;
constexpr double kNotchMinDb = 40.0;
constexpr double kParsevalTol = 0.05;
constexpr double kFeatureRelTol = 1e-10;
constexpr int kSegmentTriples = 1000;
constexpr double kSubjectOneMinAccuracy = 0.89;
constexpr double kFrequencyOnlyMax = 0.60;
constexpr double kNineSubjectMinMean = 0.88;
constexpr double kTableRuntimeSec = 1.0;

struct Outcome {
    int id;
    std::string name;
    bool pass;
    std::string detail;
};

std::vector<Outcome> g_results;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    g_results.push_back({id, name, pass, detail});
    std::cout << (pass ? "PASS" : "FAIL") << "  C" << id << " " << name << ": " << detail << std::endl;
}

std::string num(double v, int digits = 4) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- published IC statistics ----

struct IcRow {
    double variance, skewness, kurtosis, zscore;
    bool contaminated;
};

// Motor imagery runs.
const std::vector<IcRow> kImageryRows = {
    {0.034742, 0.108255, -0.383753, -0.725933, false},   {0.0343778, 0.0130993, -0.626377, -0.807453, false},
    {0.0226487, 0.200304, -0.775486, -0.857553, false},  {0.0176305, 0.243581, -0.812049, -0.869838, false},
    {0.02656, -0.450154, 1.34709, -0.144385, false},     {0.0293302, 0.247553, 1.05753, -0.241674, false},
    {0.0321314, 0.408744, 0.822696, -0.320576, false},   {0.032728, 0.422592, 0.482036, -0.435035, false},
    {0.0287436, 0.463421, -0.0855045, -0.625724, false}, {0.0253485, 0.400195, -0.436871, -0.743781, false},
    {0.0194755, 0.11406, -0.856049, -0.884621, false},   {0.0749796, -2.52961, 8.80182, 2.360347, true},
    {0.0543406, -2.60722, 9.06572, 2.449017, true},      {0.0601778, -3.06529, 11.5707, 3.290666, true},
    {0.0701443, -1.39425, 4.1624, 0.801538, true},       {0.0664136, -1.33049, 3.78757, 0.675599, true},
    {0.0375335, -0.707176, 0.721974, -0.354418, false},  {0.0364201, -1.67454, 3.93, 0.723453, true},
    {0.0495347, -3.35156, 12.4, 3.569295, true},         {0.0473867, -0.12192, -0.146448, -0.646201, false},
};

// Motor execution runs. Row 17 is labelled clean although its z-score is 1.18.
const std::vector<IcRow> kExecutionRows = {
    {0.0257566, -1.25491, 1.60076, -0.304928, false},     {0.0256388, -0.823197, 0.0381866, -0.698148, false},
    {0.0185465, -0.572666, 0.801421, -0.506080, false},   {0.0149535, -0.405297, 0.745096, -0.520255, false},
    {0.0209963, 0.417453, -0.144257, -0.744060, false},   {0.0227839, 0.00712086, 0.210892, -0.654687, false},
    {0.0236176, -0.458646, 0.588885, -0.559565, false},   {0.0240898, -0.776216, 0.946091, -0.469674, false},
    {0.0212467, -0.627045, 0.66175, -0.541229, false},    {0.0200463, -0.275208, 0.331227, -0.624404, false},
    {0.016156, 0.00076477, 0.0478366, -0.695720, false},  {0.124933, -2.91501, 12.3423, 2.398167, true},
    {0.0926662, -3.31493, 14.1188, 2.845225, true},       {0.110129, -3.31426, 13.7095, 2.742223, true},
    {0.098688, -2.33557, 9.37312, 1.650985, true},        {0.0933006, -2.35998, 9.61372, 1.711530, true},
    {0.044788, -1.9429, 7.49195, 1.177589, false},        {0.0537186, -3.27878, 13.4315, 0.672277, true},
    {0.094339, -3.51884, 15.0059, 3.068464, true},        {0.0461517, 0.114449, 4.09738, 0.323346, true},
};

/// 1-based rows where the default rule disagrees with the published label.
std::vector<int> flag_mismatches(const std::vector<IcRow>& rows) {
    ComponentStats stats;
    for (const auto& r : rows) {
        ComponentStat c;
        c.variance = r.variance;
        c.skewness = r.skewness;
        c.kurtosis = r.kurtosis;
        c.kurtosis_zscore = r.zscore;
        stats.components.push_back(c);
    }
    const auto flagged = detect_artifact_components(stats, ArtifactThresholds{});
    std::vector<bool> is_flagged(rows.size(), false);
    for (int k : flagged) is_flagged[static_cast<std::size_t>(k)] = true;
    std::vector<int> bad;
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (is_flagged[i] != rows[i].contaminated) bad.push_back(static_cast<int>(i) + 1);
    return bad;
}

void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto mi = flag_mismatches(kImageryRows);
    const auto me = flag_mismatches(kExecutionRows);
    const double dt = seconds_since(t0);
    const bool pass = mi.empty() && me == std::vector<int>{17} && dt < kTableRuntimeSec;
    std::string detail = "imagery " + std::to_string(20 - mi.size()) + "/20, execution " +
                         std::to_string(20 - me.size()) + "/20 (mismatch rows:";
    for (int r : me) detail += " " + std::to_string(r);
    detail += "; row 17 z=1.18 > 0.23 is labelled clean in the source), " + num(dt * 1000, 2) + " ms";
    report(1, "ic-flag-reproduction", pass, detail);
}

void criterion_2() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t n = kImageryRows.size();
    double mk = 0, mz = 0;
    for (const auto& r : kImageryRows) {
        mk += r.kurtosis;
        mz += r.zscore;
    }
    mk /= static_cast<double>(n);
    mz /= static_cast<double>(n);
    double sxx = 0, sxy = 0, syy = 0;
    for (const auto& r : kImageryRows) {
        sxx += (r.kurtosis - mk) * (r.kurtosis - mk);
        sxy += (r.kurtosis - mk) * (r.zscore - mz);
        syy += (r.zscore - mz) * (r.zscore - mz);
    }
    const double slope = sxy / sxx;
    const double intercept = mz - slope * mk;
    double ss_res = 0;
    for (const auto& r : kImageryRows) ss_res += std::pow(r.zscore - (slope * r.kurtosis + intercept), 2);
    const double r2 = 1.0 - ss_res / syy;
    const double dt = seconds_since(t0);
    // z = (k - mu) / sigma  =>  sigma = 1 / slope, mu = -intercept / slope
    report(2, "zscore-affinity", r2 >= kZscoreAffinityR2 && dt < kTableRuntimeSec,
           "R^2 = " + num(r2, 8) + " (implied mu " + num(-intercept / slope) + ", sigma " + num(1.0 / slope) + "), " +
               num(dt * 1000, 2) + " ms");
}

void criterion_3() {
    struct Row {
        double p, r, f1;
    };
    const std::vector<Row> rows = {{0.9594, 0.9186, 0.9386}, {0.9349, 0.9670, 0.9507}, {0.9561, 0.9371, 0.9465},
                                   {0.9272, 0.9530, 0.9399}};
    double worst = 0.0;
    for (const auto& r : rows) worst = std::max(worst, std::abs(f1_score(r.p, r.r) - r.f1));
    report(3, "f1-arithmetic", worst <= kF1Tolerance, "max |F1 - published| = " + num(worst, 6));
}

// ---- FastICA oracle ----

double abs_corr(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
    const Eigen::ArrayXd x = (a.array() - a.mean()).transpose();
    const Eigen::ArrayXd y = (b.array() - b.mean()).transpose();
    return std::abs((x * y).sum() / std::sqrt(x.square().sum() * y.square().sum()));
}

double three_source_trial(std::uint64_t seed) {
    const Eigen::Index t = 5000;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd s(3, t);
    const double period = 97.0 + static_cast<double>(seed % 13);
    for (Eigen::Index i = 0; i < t; ++i) {
        s(0, i) = u(rng);
        const double v = 0.5 * u(rng);
        s(1, i) = -std::copysign(1.0, v) * std::log(1.0 - 2.0 * std::abs(v));
        const double ph = static_cast<double>(i) / period;
        s(2, i) = 2.0 * (ph - std::floor(ph)) - 1.0;
    }
    Eigen::MatrixXd a(3, 3);
    for (Eigen::Index i = 0; i < 9; ++i) a.data()[i] = g(rng);
    const Eigen::MatrixXd x = a * s;
    const auto w = center_and_whiten(x, 3);
    const auto dec = fastica(w.z, FastIcaConfig{400, 1e-6, seed + 1});
    // Greedy one-to-one matching on |corr|.
    double worst = 1.0;
    std::vector<bool> used(3, false);
    for (int i = 0; i < 3; ++i) {
        int best_j = -1;
        double best = -1;
        for (int j = 0; j < 3; ++j)
            if (!used[static_cast<std::size_t>(j)]) {
                const double c = abs_corr(s.row(i), dec.sources.row(j));
                if (c > best) {
                    best = c;
                    best_j = j;
                }
            }
        used[static_cast<std::size_t>(best_j)] = true;
        worst = std::min(worst, best);
    }
    return worst;
}

struct BlinkResult {
    double contaminated = 0.0;
    double cleaned = 0.0;
    std::size_t excluded = 0;
};

/// Adds blinks to a blink-free recording, runs the preprocessing + ICA
/// cleaning path and compares the cleaned Fp1 with the blink-free Fp1.
BlinkResult blink_cleanup() {
    eegmi::testing::SyntheticRunOptions o;
    o.seconds = 120;
    o.seed = 21;
    o.blink_rate_hz = 0.0;
    const Recording pristine = eegmi::testing::synthetic_recording(o);
    Recording dirty = pristine;
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto n = pristine.length();
    std::vector<double> blink(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (u(rng) >= 0.4 / pristine.fs) continue;
        const double amp = 100.0 + 50.0 * u(rng);
        for (long k = -48; k <= 48; ++k) {
            const long j = static_cast<long>(i) + k;
            if (j < 0 || j >= static_cast<long>(n)) continue;
            const double z = static_cast<double>(k) / (0.1 * pristine.fs);
            blink[static_cast<std::size_t>(j)] += amp * std::exp(-z * z);
        }
    }
    const std::map<std::string, double> weights = {{"Fp1.", 1.0}, {"Fpz.", 1.0}, {"Fp2.", 1.0}, {"Af7.", 0.5},
                                                   {"Af3.", 0.5}, {"Afz.", 0.5}, {"Af4.", 0.5}, {"Af8.", 0.5},
                                                   {"F7..", 0.2}, {"F3..", 0.25}, {"Fz..", 0.25}, {"F4..", 0.25},
                                                   {"F8..", 0.2}};
    for (std::size_t c = 0; c < dirty.channels.size(); ++c) {
        auto it = weights.find(dirty.channels[c]);
        if (it == weights.end()) continue;
        for (std::size_t i = 0; i < n; ++i) dirty.data[c][i] += it->second * blink[i];
    }

    auto cfg = default_config();
    cfg.data.montage = "all";
    const auto clean_pre = preprocess_recording(pristine, cfg);
    const auto dirty_pre = preprocess_recording(dirty, cfg);
    const auto cleaned = clean_run(dirty_pre, cfg, 5);
    const Eigen::Index fp1 = 21;
    BlinkResult r;
    r.contaminated = abs_corr(dirty_pre.band.data.row(fp1), clean_pre.band.data.row(fp1));
    r.cleaned = abs_corr(cleaned.signal.data.row(fp1), clean_pre.band.data.row(fp1));
    r.excluded = cleaned.ica ? cleaned.ica->model.exclusion.size() : 0;
    return r;
}

void criterion_7() {
    double worst = 1.0;
    int passed = 0;
    for (int trial = 0; trial < kIcaTrials; ++trial) {
        const double c = three_source_trial(1000 + static_cast<std::uint64_t>(trial));
        worst = std::min(worst, c);
        passed += c >= kIcaCorrelation;
    }
    const auto b = blink_cleanup();
    const bool pass = passed == kIcaTrials && b.cleaned >= kBlinkRestoredCorrelation;
    report(7, "fastica-oracle", pass,
           std::to_string(passed) + "/" + std::to_string(kIcaTrials) + " trials, min |corr| " + num(worst) +
               "; Fp1 corr with blink-free signal " + num(b.contaminated) + " -> " + num(b.cleaned) + " (" +
               std::to_string(b.excluded) + " components removed)");
}

// ---- numerical property suite ----

double gradient_check_error() {
    const std::vector<int> sizes = {6, 9, 7, 4};
    auto p = init_mlp(sizes, 3, Activation::Tanh);
    for (auto& l : p.layers) l.bias.setConstant(0.03);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd x(10, 6);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    std::vector<int> y;
    for (int i = 0; i < 10; ++i) y.push_back(i % 4);
    const auto lg = loss_and_grad(p, x, y);
    const double h = 1e-6;
    double worst = 0.0;
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        auto probe = [&](double& theta, double analytic) {
            const double keep = theta;
            theta = keep + h;
            const double up = cross_entropy(forward(p, x).logits, y);
            theta = keep - h;
            const double down = cross_entropy(forward(p, x).logits, y);
            theta = keep;
            const double numeric = (up - down) / (2.0 * h);
            worst = std::max(worst, std::abs(numeric - analytic) / std::max(1.0, std::abs(numeric) + std::abs(analytic)));
        };
        for (Eigen::Index i = 0; i < p.layers[l].weights.size(); ++i)
            probe(p.layers[l].weights.data()[i], lg.grads.layers[l].weights.data()[i]);
        for (Eigen::Index i = 0; i < p.layers[l].bias.size(); ++i)
            probe(p.layers[l].bias.data()[i], lg.grads.layers[l].bias.data()[i]);
    }
    return worst;
}

/// Largest deviation of |first Adam update| from lr over parameters with a
/// gradient well above epsilon.
double adam_first_step_error() {
    const std::vector<int> sizes = {5, 8, 4};
    auto p = init_mlp(sizes, 6);
    const auto before = p;
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(12, 5);
    std::vector<int> y;
    for (int i = 0; i < 12; ++i) y.push_back(i % 4);
    const auto lg = loss_and_grad(p, x, y);
    AdamHyper hyper;
    auto st = AdamState::for_params(p, hyper);
    adam_step(p, st, lg.grads);
    double worst = 0.0;
    for (std::size_t l = 0; l < p.layers.size(); ++l)
        for (Eigen::Index i = 0; i < p.layers[l].weights.size(); ++i) {
            const double g = lg.grads.layers[l].weights.data()[i];
            if (std::abs(g) < 1e-3) continue;
            const double step = std::abs(p.layers[l].weights.data()[i] - before.layers[l].weights.data()[i]);
            worst = std::max(worst, std::abs(step - hyper.lr));
        }
    return worst;
}

int zero_phase_lag() {
    const auto c = design_filter(FilterSpec::band_pass(0.5, 40, 4, 160));
    std::vector<double> x(4000);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, 1.0);
    for (auto& v : x) v = g(rng);
    const auto y = filter_zero_phase(x, c);
    int best_lag = 0;
    double best = -1e300;
    for (int lag = -20; lag <= 20; ++lag) {
        double acc = 0;
        for (std::size_t i = 200; i < x.size() - 200; ++i) acc += x[i] * y[static_cast<std::size_t>(static_cast<long>(i) + lag)];
        if (acc > best) {
            best = acc;
            best_lag = lag;
        }
    }
    return best_lag;
}

double parseval_error() {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0.0, 2.0);
    std::vector<double> x(8192);
    for (auto& v : x) v = g(rng);
    const auto psd = welch_psd(x, 160.0);
    double area = 0;
    for (double p : psd.power) area += p;
    area *= psd.freqs[1];
    return std::abs(area / time_features(x).variance - 1.0);
}

double feature_oracle_error() {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(0.0, 5.0);
    double worst = 0.0;
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); };
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(560);
        for (auto& v : x) v = g(rng) + (trial % 3 == 0 ? std::pow(g(rng), 2) : 0.0);
        const double n = static_cast<double>(x.size());
        double sum = 0, area = 0;
        for (double v : x) {
            sum += v;
            area += std::fabs(v);
        }
        const double mean = sum / n;
        double c2 = 0, c3 = 0, c4 = 0;
        for (double v : x) {
            c2 += std::pow(v - mean, 2);
            c3 += std::pow(v - mean, 3);
            c4 += std::pow(v - mean, 4);
        }
        const double s = std::sqrt(c2 / (n - 1));
        const auto f = time_features(x);
        worst = std::max({worst, rel(f.mean, mean), rel(f.variance, c2 / n), rel(f.skewness, (c3 / n) / std::pow(s, 3)),
                          rel(f.kurtosis, (c4 / n) / std::pow(s, 4) - 3.0), rel(f.abs_area, area)});
    }
    return worst;
}

int segmentation_mismatches() {
    std::mt19937_64 rng(10);
    int bad = 0;
    for (int i = 0; i < kSegmentTriples; ++i) {
        const std::size_t w = std::uniform_int_distribution<std::size_t>(2, 800)(rng);
        const std::size_t s = std::uniform_int_distribution<std::size_t>(1, w)(rng);
        const std::size_t l = std::uniform_int_distribution<std::size_t>(0, 20000)(rng);
        std::size_t count = 0;
        for (std::size_t st = 0; st + w <= l; st += s) ++count;
        bad += segment_count(l, WindowSpec{w, s}) != count;
    }
    return bad;
}

void criterion_8() {
    const double grad = gradient_check_error();
    const double adam = adam_first_step_error();
    const auto notch = design_filter(FilterSpec::notch(50, 30, 160));
    const double notch_db = -20.0 * std::log10(std::max(notch.magnitude(50.0, 160.0), 1e-300));
    const int lag = zero_phase_lag();
    const double parseval = parseval_error();
    const double feat = feature_oracle_error();
    const int seg = segmentation_mismatches();
    const bool pass = grad <= kGradRelErr && adam <= kAdamStepTol && notch_db >= kNotchMinDb && lag == 0 &&
                      parseval <= kParsevalTol && feat <= kFeatureRelTol && seg == 0;
    std::ostringstream d;
    d << "grad rel err " << std::scientific << std::setprecision(2) << grad << ", adam |step|-lr " << adam
      << std::fixed << ", notch " << (notch_db > 300 ? std::string(">300") : num(notch_db, 1)) << " dB, lag " << lag
      << ", parseval " << num(parseval * 100, 2) << "%, features " << std::scientific << feat << ", segmentation "
      << (kSegmentTriples - seg) << "/" << kSegmentTriples;
    report(8, "numerical-suite", pass, d.str());
}

// ---- determinism ----

PipelineConfig synthetic_config(const fs::path& mirror, const fs::path& root, const std::string& name) {
    auto c = default_config();
    c.seed = 2024;
    c.data.source = mirror.string();
    c.data.cache_dir = root / (name + "-cache");
    c.data.subjects = {1, 2};
    c.data.runs = {3, 4, 7, 8};
    c.ica.n_components = 20;
    c.window = WindowSpec{320, 32};
    c.train.epochs = 4;
    c.out_dir = root / (name + "-out");
    return c;
}

std::map<std::string, std::string> output_hashes(const fs::path& out) {
    std::map<std::string, std::string> h;
    for (const auto& e : fs::recursive_directory_iterator(out)) {
        if (!e.is_regular_file()) continue;
        const auto rel = e.path().lexically_relative(out).generic_string();
        if (rel == "manifest.json" || rel == "config.yaml") continue;  // timestamps / output path
        h[rel] = sha256_file(e.path());
    }
    return h;
}

void criterion_9() {
    const auto root = eegmi::testing::scratch_dir("acceptance-determinism");
    const auto mirror = root / "mirror";
    eegmi::testing::SyntheticRunOptions o;
    o.seconds = 60;
    o.seed = 77;
    for (int s : {1, 2}) eegmi::testing::write_synthetic_subject(mirror, s, {3, 4, 7, 8}, o);
    const auto a = synthetic_config(mirror, root, "a");
    const auto b = synthetic_config(mirror, root, "b");
    run_pipeline(a);
    run_pipeline(b);
    const auto ha = output_hashes(a.out_dir);
    const auto hb = output_hashes(b.out_dir);
    std::size_t differing = 0, models = 0, features = 0, reports = 0;
    for (const auto& [rel, hash] : ha) {
        auto it = hb.find(rel);
        if (it == hb.end() || it->second != hash) ++differing;
        models += rel.ends_with(".bin");
        features += rel.ends_with("features.csv");
        reports += rel.starts_with("reports/");
    }
    const bool pass = differing == 0 && ha.size() == hb.size() && models > 0 && features > 0 && reports > 0;
    report(9, "determinism", pass,
           std::to_string(ha.size() - differing) + "/" + std::to_string(ha.size()) + " artifacts byte-identical (" +
               std::to_string(features) + " feature matrices, " + std::to_string(models) + " models, " +
               std::to_string(reports) + " report files)");
    fs::remove_all(root);
}

// ---- corpus criteria ----

fs::path corpus_out_root() {
    if (const char* env = std::getenv("EEGMI_ACCEPTANCE_OUT"); env && *env) return env;
    return fs::temp_directory_path() / "eegmi-acceptance-corpus";
}

std::string corpus_source() {
    if (const char* env = std::getenv("EEGMI_DATA_SOURCE"); env && *env) return env;
    return kDefaultSourceUrl;
}

PipelineConfig paper_config(const std::vector<int>& subjects, const std::string& name) {
    auto c = default_config();
    c.paper_protocol = true;
    c.data.source = corpus_source();
    c.data.subjects = subjects;
    c.out_dir = corpus_out_root() / name;
    return c;
}

int run_corpus() {
    std::cout << "corpus source: " << corpus_source() << std::endl;
    try {
        FetchOptions fo;
        fo.runs = default_config().data.runs;
        fetch_subject(1, corpus_source(), default_cache_dir(), fo);
    } catch (const std::exception& e) {
        std::cout << "SKIP  C4-C6: recordings unavailable (" << e.what() << ")" << std::endl;
        return 77;
    }

    // 4: subject 1, full-matrix normalisation
    auto t0 = std::chrono::steady_clock::now();
    const auto c1 = paper_config({1}, "subject1");
    const auto run = run_pipeline(c1);
    const double minutes = seconds_since(t0) / 60.0;
    const auto& s1 = run.report.subjects.at(0);
    report(4, "subject1-reproduction", s1.ok && s1.test_accuracy >= kSubjectOneMinAccuracy,
           s1.ok ? "test " + num(s1.test_accuracy * 100, 2) + "% (train " + num(s1.train_accuracy * 100, 2) +
                       "%, trial-wise " + (s1.trialwise_accuracy ? num(*s1.trialwise_accuracy * 100, 2) + "%" : "n/a") +
                       "), " + num(minutes, 1) + " min"
                 : "failed: " + s1.error);

    // 5: feature domain ordering on the same cleaned signals
    if (s1.ok) {
        const auto cleaned = load_cleaned_runs(c1, 1);
        const auto seed = subject_seed(c1, 1);
        std::map<FeatureMode, double> acc;
        acc[FeatureMode::Both] = s1.test_accuracy;
        for (FeatureMode m : {FeatureMode::Time, FeatureMode::Frequency}) {
            auto c = c1;
            c.features.mode = m;
            c.split.report_trialwise = false;
            acc[m] = run_windows_in_memory(cleaned, c, seed).test_accuracy;
        }
        const bool pass = acc[FeatureMode::Both] > acc[FeatureMode::Time] &&
                          acc[FeatureMode::Time] > acc[FeatureMode::Frequency] &&
                          acc[FeatureMode::Frequency] < kFrequencyOnlyMax;
        report(5, "feature-domain-ordering", pass,
               "both " + num(acc[FeatureMode::Both] * 100, 2) + "%, time " + num(acc[FeatureMode::Time] * 100, 2) +
                   "%, frequency " + num(acc[FeatureMode::Frequency] * 100, 2) + "%");
    } else {
        report(5, "feature-domain-ordering", false, "subject 1 did not complete");
    }

    // 6: subjects 1-9
    t0 = std::chrono::steady_clock::now();
    const auto nine = run_pipeline(paper_config({1, 2, 3, 4, 5, 6, 7, 8, 9}, "subjects1-9"));
    std::string per;
    for (const auto& s : nine.report.subjects)
        per += " S" + std::to_string(s.subject) + "=" + (s.ok ? num(s.test_accuracy * 100, 1) : std::string("failed"));
    report(6, "nine-subject-mean", nine.report.succeeded == 9 && nine.report.mean_accuracy >= kNineSubjectMinMean,
           "mean " + num(nine.report.mean_accuracy * 100, 2) + "% over " + std::to_string(nine.report.succeeded) +
               "/9 (published reference means: 94.68% / 94.72% / 94.77%);" + per + "; " +
               num(seconds_since(t0) / 3600.0, 2) + " h");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    const bool corpus = argc > 1 && std::strcmp(argv[1], "--corpus") == 0;
    try {
        if (corpus) {
            if (run_corpus() == 77) return 77;
        } else {
            criterion_1();
            criterion_2();
            criterion_3();
            criterion_7();
            criterion_8();
            criterion_9();
            std::cout << "NOTE  C4-C6 need the public recordings; run `eegmi_acceptance --corpus`" << std::endl;
        }
    } catch (const std::exception& e) {
        std::cout << "FAIL  harness error: " << e.what() << std::endl;
        return 1;
    }
    std::size_t failed = 0;
    for (const auto& r : g_results) failed += !r.pass;
    std::cout << (failed ? "FAILED " : "OK ") << (g_results.size() - failed) << "/" << g_results.size() << std::endl;
    return failed ? 1 : 0;
}
