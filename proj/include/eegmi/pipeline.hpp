#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "eegmi/config.hpp"
#include "eegmi/edf.hpp"
#include "eegmi/evaluation.hpp"
#include "eegmi/features.hpp"
#include "eegmi/ica.hpp"
#include "eegmi/mlp.hpp"
#include "eegmi/windowing.hpp"

namespace eegmi {

// In-memory building blocks for one subject.

/// Two filtered copies of one run: the analysis stream (notch + band-pass)
/// and the ICA fitting stream (notch + high-pass).
struct PreprocessedRun {
    RunSignal band;
    RunSignal ica_input;
};

PreprocessedRun preprocess_recording(const Recording& recording, const PipelineConfig& config);

struct CleanedRun {
    RunSignal signal;
    std::optional<IcaFitResult> ica;  // empty when ICA is disabled
};

/// Fits ICA on the high-passed stream and removes the flagged components
/// from the band-passed stream.
CleanedRun clean_run(const PreprocessedRun& run, const PipelineConfig& config, std::uint64_t seed);

/// Segments and labels every run; windows point into `runs`.
LabelingResult segment_runs(const std::vector<RunSignal>& runs, const WindowSpec& spec);

struct TrainedSplit {
    SplitMode mode = SplitMode::WindowRandom;
    Split split;
    NormalizerStats normalizer;
    TrainResult result;
};

/// Split, normalise (full matrix when paper_protocol is set, else train rows)
/// and train.
TrainedSplit train_split(const FeatureMatrix& features, const PipelineConfig& config, SplitMode mode,
                         std::uint64_t subject_seed);

struct SplitEvaluation {
    Evaluation train;
    Evaluation test;
    ConfusionAndMetrics metrics;  // on the test rows
};

SplitEvaluation evaluate_split(const FeatureMatrix& features, const Split& split, const NormalizerStats& normalizer,
                               const MlpParams& model);

/// The exact split train_split uses for this seed.
Split split_for(const FeatureMatrix& features, const PipelineConfig& config, SplitMode mode,
                std::uint64_t subject_seed);

/// Segment + features + train + evaluate on cleaned runs, no persistence.
SubjectOutcome run_windows_in_memory(const std::vector<RunSignal>& cleaned, const PipelineConfig& config,
                                     std::uint64_t subject_seed);

// Staged, persisted execution.

enum class Stage { Fetch, Preprocess, Ica, Segment, Features, Train, Evaluate, Report };
inline constexpr int kStageCount = 8;

std::string_view to_string(Stage stage);
Stage parse_stage(std::string_view text);

struct StageEvent {
    Stage stage = Stage::Fetch;
    int subject = 0;  // 0 for the report stage
    bool skipped = false;
};

struct RunOptions {
    Stage until = Stage::Report;
    bool force = false;  // recompute even when hashes match
    bool verbose = false;
};

struct PipelineRun {
    std::vector<StageEvent> events;
    IntraSubjectReport report;
    std::filesystem::path manifest_path;
};

class OutputLockedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Runs fetch -> ... -> `until` for every configured subject inside
/// `config.out_dir`. Stages whose input hash and artifact hashes match the
/// manifest are skipped. A subject that fails is recorded and the others
/// continue.
PipelineRun run_pipeline(const PipelineConfig& config, const RunOptions& options = {});

/// Loads the cleaned runs for one subject, running the pipeline through
/// the ICA stage first.
std::vector<RunSignal> load_cleaned_runs(const PipelineConfig& config, int subject);

/// Sweep over window configurations for one subject, reusing cached
/// cleaned signals. Writes `reports/sweep.csv` under the output directory.
SweepReport run_sweep(const PipelineConfig& config, int subject, std::span<const SweepConfig> configs);

/// Per-subject seed used by the staged pipeline.
std::uint64_t subject_seed(const PipelineConfig& config, int subject);

/// Verifies that every artifact in the manifest exists with its recorded
/// hash and that every file under the output directory is referenced.
/// Returns a list of problems (empty when consistent).
std::vector<std::string> verify_manifest(const std::filesystem::path& out_dir);

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Evaluates an acceptance manifest (YAML list of {name, file, key, min,
/// max}) against JSON reports relative to `base_dir`.
std::vector<CheckResult> run_checks(const std::filesystem::path& manifest, const std::filesystem::path& base_dir);

}  // namespace eegmi
