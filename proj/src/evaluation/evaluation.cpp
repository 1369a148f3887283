#include "eegmi/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <stdexcept>

#include "eegmi/hashing.hpp"

namespace eegmi {

std::string_view to_string(SplitMode mode) {
    return mode == SplitMode::WindowRandom ? "window-random" : "trial-wise";
}

SplitMode parse_split_mode(std::string_view text) {
    if (text == "window-random") return SplitMode::WindowRandom;
    if (text == "trial-wise") return SplitMode::TrialWise;
    throw std::invalid_argument("split mode must be window-random or trial-wise (got '" + std::string(text) + "')");
}

Split split_dataset(std::size_t rows, const SplitSpec& spec, std::span<const TrialKey> trials) {
    if (!(spec.ratio > 0.0 && spec.ratio < 1.0)) throw std::invalid_argument("split ratio must be in (0, 1)");
    if (rows < 2) throw std::invalid_argument("splitting needs at least 2 rows");
    std::mt19937_64 rng(spec.seed);
    Split out;

    if (spec.mode == SplitMode::WindowRandom) {
        std::vector<std::size_t> perm(rows);
        for (std::size_t i = 0; i < rows; ++i) perm[i] = i;
        std::shuffle(perm.begin(), perm.end(), rng);
        auto n_train = static_cast<std::size_t>(std::llround(spec.ratio * static_cast<double>(rows)));
        n_train = std::clamp<std::size_t>(n_train, 1, rows - 1);
        out.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
        out.eval.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
    } else {
        if (trials.size() != rows) throw std::invalid_argument("trial-wise split needs one trial key per row");
        std::set<TrialKey> unique(trials.begin(), trials.end());
        if (unique.size() < 2) throw std::invalid_argument("trial-wise split needs at least two trials");
        std::vector<TrialKey> keys(unique.begin(), unique.end());
        std::shuffle(keys.begin(), keys.end(), rng);
        auto n_train = static_cast<std::size_t>(std::llround(spec.ratio * static_cast<double>(keys.size())));
        n_train = std::clamp<std::size_t>(n_train, 1, keys.size() - 1);
        std::set<TrialKey> train_keys(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(n_train));
        for (std::size_t i = 0; i < rows; ++i) (train_keys.contains(trials[i]) ? out.train : out.eval).push_back(i);
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.eval.begin(), out.eval.end());
    return out;
}

std::size_t ConfusionMatrix::total() const {
    std::size_t t = 0;
    for (const auto& row : counts)
        for (auto c : row) t += c;
    return t;
}

std::size_t ConfusionMatrix::row_sum(int true_class) const {
    std::size_t t = 0;
    for (auto c : counts[static_cast<std::size_t>(true_class)]) t += c;
    return t;
}

std::size_t ConfusionMatrix::column_sum(int predicted_class) const {
    std::size_t t = 0;
    for (const auto& row : counts) t += row[static_cast<std::size_t>(predicted_class)];
    return t;
}

double f1_score(double precision, double recall) {
    return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

ConfusionAndMetrics confusion_and_metrics(std::span<const int> truth, std::span<const int> predicted) {
    if (truth.size() != predicted.size()) throw std::invalid_argument("truth and prediction lengths differ");
    ConfusionAndMetrics out;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int t = truth[i];
        const int p = predicted[i];
        if (t < 0 || t >= kNumClasses || p < 0 || p >= kNumClasses) throw std::out_of_range("class label out of range");
        out.confusion.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)]++;
    }
    auto& m = out.metrics;
    m.total = truth.size();
    std::size_t trace = 0;
    for (int c = 0; c < kNumClasses; ++c) {
        auto& cm = m.classes[static_cast<std::size_t>(c)];
        const std::size_t tp = out.confusion.counts[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
        const std::size_t predicted_c = out.confusion.column_sum(c);
        cm.support = out.confusion.row_sum(c);
        cm.no_predictions = predicted_c == 0;
        cm.precision = predicted_c ? static_cast<double>(tp) / static_cast<double>(predicted_c) : 0.0;
        cm.recall = cm.support ? static_cast<double>(tp) / static_cast<double>(cm.support) : 0.0;
        cm.f1 = f1_score(cm.precision, cm.recall);
        trace += tp;
    }
    m.accuracy = m.total ? static_cast<double>(trace) / static_cast<double>(m.total) : 0.0;
    return out;
}

IntraSubjectReport intra_subject_evaluate(std::span<const int> subjects, std::uint64_t global_seed,
                                          const SubjectRunner& runner) {
    if (subjects.empty()) throw std::invalid_argument("subject list is empty");
    IntraSubjectReport report;
    std::vector<double> acc;
    for (int s : subjects) {
        SubjectOutcome outcome;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            outcome = runner(s, mix_seed(global_seed, static_cast<std::uint64_t>(s)));
            outcome.ok = true;
        } catch (const std::exception& e) {
            outcome = SubjectOutcome{};
            outcome.ok = false;
            outcome.error = e.what();
        }
        outcome.subject = s;
        outcome.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (outcome.ok) acc.push_back(outcome.test_accuracy);
        report.subjects.push_back(std::move(outcome));
    }
    report.succeeded = acc.size();
    if (!acc.empty()) {
        double mean = 0.0;
        for (double a : acc) mean += a;
        mean /= static_cast<double>(acc.size());
        double var = 0.0;
        for (double a : acc) var += (a - mean) * (a - mean);
        report.mean_accuracy = mean;
        report.std_accuracy = std::sqrt(var / static_cast<double>(acc.size()));
    }
    return report;
}

std::vector<SweepConfig> default_sweep_configs() {
    return {{0.5, 90}, {1.0, 75}, {1.0, 90}, {2.0, 75}, {2.0, 90},
            {2.5, 75}, {2.5, 90}, {3.5, 50}, {3.5, 99}, {4.0, 90}};
}

SweepReport window_sweep(std::span<const SweepConfig> configs, double fs, std::uint64_t global_seed,
                         const SweepRunner& runner) {
    std::vector<SweepRow> rows;
    for (const auto& c : configs) {
        if (!(c.overlap_pct >= 0.0) || c.overlap_pct >= 100.0)
            throw std::invalid_argument("overlap must be below 100 %");
        if (!(c.window_sec > 0.0)) throw std::invalid_argument("window length must be positive");
        SweepRow row;
        row.config = c;
        row.window_len = static_cast<std::size_t>(std::llround(c.window_sec * fs));
        row.stride = stride_for_overlap(row.window_len, c.overlap_pct);
        WindowSpec{row.window_len, row.stride}.validate();
        rows.push_back(row);
    }
    SweepReport report;
    for (auto& row : rows) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::uint64_t seed = mix_seed(global_seed, row.window_len * 1000003ULL + row.stride);
        try {
            auto outcome = runner(row.window_len, row.stride, seed);
            row.ok = true;
            row.train_accuracy = outcome.train_accuracy;
            row.val_accuracy = outcome.val_accuracy;
            row.windows = outcome.windows;
        } catch (const std::exception& e) {
            row.ok = false;
            row.error = e.what();
        }
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.rows.push_back(row);
    }
    return report;
}

}  // namespace eegmi
