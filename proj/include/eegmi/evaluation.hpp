#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eegmi/mlp.hpp"
#include "eegmi/windowing.hpp"

namespace eegmi {

enum class SplitMode { WindowRandom, TrialWise };

std::string_view to_string(SplitMode mode);
SplitMode parse_split_mode(std::string_view text);

struct SplitSpec {
    double ratio = 0.8;
    SplitMode mode = SplitMode::WindowRandom;
    std::uint64_t seed = 0;
};

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> eval;
};

/// Disjoint, exhaustive, seeded split of `rows` rows. TrialWise keeps every
/// window of a trial on one side and needs `trials` (one key per row).
Split split_dataset(std::size_t rows, const SplitSpec& spec, std::span<const TrialKey> trials = {});

struct ConfusionMatrix {
    std::array<std::array<std::size_t, kNumClasses>, kNumClasses> counts{};  // [true][predicted]

    std::size_t total() const;
    std::size_t row_sum(int true_class) const;
    std::size_t column_sum(int predicted_class) const;
};

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
    bool no_predictions = false;  // precision undefined, reported as 0
};

struct MetricsReport {
    std::array<ClassMetrics, kNumClasses> classes{};
    double accuracy = 0.0;
    std::size_t total = 0;
};

/// 2PR / (P + R), or 0 when P + R = 0.
double f1_score(double precision, double recall);

struct ConfusionAndMetrics {
    ConfusionMatrix confusion;
    MetricsReport metrics;
};

ConfusionAndMetrics confusion_and_metrics(std::span<const int> truth, std::span<const int> predicted);

/// Outcome of one full pipeline run for one subject.
struct SubjectOutcome {
    int subject = 0;
    bool ok = false;
    std::string error;
    double train_accuracy = 0.0;
    double val_accuracy = 0.0;
    double test_accuracy = 0.0;
    std::optional<double> trialwise_accuracy;
    MetricsReport metrics;
    TrainHistory history;
    std::size_t windows = 0;
    double seconds = 0.0;
};

struct IntraSubjectReport {
    std::vector<SubjectOutcome> subjects;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;
    std::size_t succeeded = 0;
};

/// Runs one subject; `seed` is already derived for that subject.
using SubjectRunner = std::function<SubjectOutcome(int subject, std::uint64_t seed)>;

/// Runs every subject independently; a failing subject is reported without
/// aborting the others. Mean/std cover the successful subjects' test accuracy.
IntraSubjectReport intra_subject_evaluate(std::span<const int> subjects, std::uint64_t global_seed,
                                          const SubjectRunner& runner);

struct SweepConfig {
    double window_sec = 3.5;
    double overlap_pct = 99.0;
};

/// The ten window / overlap configurations evaluated for segmentation.
std::vector<SweepConfig> default_sweep_configs();

struct SweepRow {
    SweepConfig config;
    std::size_t window_len = 0;
    std::size_t stride = 0;
    bool ok = false;
    std::string error;
    double train_accuracy = 0.0;
    double val_accuracy = 0.0;
    std::size_t windows = 0;
    double seconds = 0.0;
};

struct SweepReport {
    std::vector<SweepRow> rows;
};

/// Runs (window_len, stride, seed) for one configuration.
using SweepRunner = std::function<SubjectOutcome(std::size_t window_len, std::size_t stride, std::uint64_t seed)>;

/// One row per configuration; overlap >= 100 % is rejected before any run.
SweepReport window_sweep(std::span<const SweepConfig> configs, double fs, std::uint64_t global_seed,
                         const SweepRunner& runner);

// Report emission.
void write_metrics_csv(const ConfusionAndMetrics& result, const std::filesystem::path& path);
void write_confusion_csv(const ConfusionMatrix& confusion, const std::filesystem::path& path);
void write_history_csv(const TrainHistory& history, const std::filesystem::path& path);
void write_subjects_csv(const IntraSubjectReport& report, const std::filesystem::path& path);
void write_sweep_csv(const SweepReport& report, const std::filesystem::path& path, bool include_time = true);

struct PlotSeries {
    std::string name;
    std::vector<double> values;
};

/// Self-contained SVG line chart (x = epoch index starting at 1).
std::string svg_line_plot(const std::string& title, const std::string& y_label, std::span<const PlotSeries> series);
void write_history_plots(const TrainHistory& history, const std::filesystem::path& dir, const std::string& stem);

}  // namespace eegmi
