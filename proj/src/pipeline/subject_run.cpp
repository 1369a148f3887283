#include <algorithm>
#include <stdexcept>

#include "eegmi/filters.hpp"
#include "eegmi/hashing.hpp"
#include "eegmi/montage.hpp"
#include "eegmi/pipeline.hpp"

namespace eegmi {

namespace {

constexpr std::uint64_t kIcaSalt = 0x1CA0'0000;
constexpr std::uint64_t kSplitSalt = 0x5B17'0000;
constexpr std::uint64_t kTrainSalt = 0x7A19'0000;

Eigen::MatrixXd filter_rows(const std::vector<std::vector<double>>& rows, const BiquadCascade& first,
                            const BiquadCascade& second) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto t = static_cast<Eigen::Index>(rows.empty() ? 0 : rows.front().size());
    Eigen::MatrixXd out(n, t);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto a = filter_zero_phase(rows[static_cast<std::size_t>(i)], first);
        const auto b = filter_zero_phase(a, second);
        out.row(i) = Eigen::Map<const Eigen::RowVectorXd>(b.data(), t);
    }
    return out;
}

RunSignal signal_shell(const Recording& rec, TaskClass task) {
    RunSignal s;
    s.subject = rec.subject_id;
    s.run = rec.run_id;
    s.task = task;
    s.fs = rec.fs;
    s.channels = rec.channels;
    s.events = rec.events;
    return s;
}

std::uint64_t mode_salt(SplitMode mode) { return mode == SplitMode::WindowRandom ? 1 : 2; }

}  // namespace

std::uint64_t subject_seed(const PipelineConfig& config, int subject) {
    return mix_seed(config.seed, static_cast<std::uint64_t>(subject));
}

PreprocessedRun preprocess_recording(const Recording& recording, const PipelineConfig& config) {
    const auto task = task_for_run(recording.run_id);
    if (!task) throw std::invalid_argument("run " + std::to_string(recording.run_id) + " is not a left/right fist run");
    const Recording rec = config.data.montage == "motor" ? select_channels(recording, motor_montage()) : recording;
    const auto& f = config.filters;
    const auto notch = design_filter(FilterSpec::notch(f.notch_hz, f.notch_q, rec.fs));
    const auto band = design_filter(FilterSpec::band_pass(f.bp_low, f.bp_high, f.bp_order, rec.fs));
    const auto high = design_filter(FilterSpec::high_pass(f.ica_hp_hz, f.ica_hp_order, rec.fs));

    PreprocessedRun out;
    out.band = signal_shell(rec, *task);
    out.band.data = filter_rows(rec.data, notch, band);
    out.ica_input = signal_shell(rec, *task);
    out.ica_input.data = filter_rows(rec.data, notch, high);
    return out;
}

CleanedRun clean_run(const PreprocessedRun& run, const PipelineConfig& config, std::uint64_t seed) {
    CleanedRun out;
    out.signal = run.band;
    if (!config.ica.enabled) return out;
    FastIcaConfig ica;
    ica.max_iter = config.ica.max_iter;
    ica.tol = config.ica.tol;
    ica.seed = mix_seed(seed, kIcaSalt + static_cast<std::uint64_t>(run.band.run));
    auto fit = fit_ica(run.ica_input.data, config.ica.n_components, ica, config.ica.thresholds);
    out.signal.data = remove_components(run.band.data, fit.model.whitening, fit.model.unmixing, fit.model.exclusion);
    out.ica = std::move(fit);
    return out;
}

LabelingResult segment_runs(const std::vector<RunSignal>& runs, const WindowSpec& spec) {
    spec.validate();
    LabelingResult all;
    for (const auto& run : runs) {
        const auto starts = segment(run.length(), spec);
        auto part = label_windows(starts, run, spec.window_len);
        all.windows.insert(all.windows.end(), part.windows.begin(), part.windows.end());
        all.dropped_rest += part.dropped_rest;
        all.dropped_tie += part.dropped_tie;
        all.dropped_uncovered += part.dropped_uncovered;
    }
    return all;
}

Split split_for(const FeatureMatrix& features, const PipelineConfig& config, SplitMode mode, std::uint64_t seed) {
    SplitSpec spec;
    spec.ratio = config.split.ratio;
    spec.mode = mode;
    spec.seed = mix_seed(seed, kSplitSalt + mode_salt(mode));
    return split_dataset(features.rows(), spec, features.trials);
}

TrainedSplit train_split(const FeatureMatrix& features, const PipelineConfig& config, SplitMode mode,
                         std::uint64_t seed) {
    TrainedSplit out;
    out.mode = mode;
    out.split = split_for(features, config, mode, seed);
    out.normalizer = config.paper_protocol ? fit_normalizer(features.values)
                                           : fit_normalizer(features.values, out.split.train);
    const Eigen::MatrixXd x = apply_normalizer(features.values, out.normalizer);
    TrainConfig tc = config.train;
    tc.seed = mix_seed(seed, kTrainSalt + mode_salt(mode));
    const auto sizes = default_layer_sizes(static_cast<int>(x.cols()), kNumClasses);
    const auto init = init_mlp(sizes, tc.seed, config.activation);
    out.result = train(x, features.labels, out.split.train, out.split.eval, init, tc);
    return out;
}

SplitEvaluation evaluate_split(const FeatureMatrix& features, const Split& split, const NormalizerStats& normalizer,
                               const MlpParams& model) {
    const Eigen::MatrixXd x = apply_normalizer(features.values, normalizer);
    SplitEvaluation out;
    out.train = evaluate(model, x, features.labels, split.train);
    out.test = evaluate(model, x, features.labels, split.eval);
    std::vector<int> truth;
    truth.reserve(split.eval.size());
    for (auto r : split.eval) truth.push_back(features.labels[r]);
    out.metrics = confusion_and_metrics(truth, out.test.predictions);
    return out;
}

SubjectOutcome run_windows_in_memory(const std::vector<RunSignal>& cleaned, const PipelineConfig& config,
                                     std::uint64_t seed) {
    const auto labeled = segment_runs(cleaned, config.window);
    if (labeled.windows.size() < 2) throw std::runtime_error("fewer than two labelled windows");
    const auto features = assemble_feature_matrix(labeled.windows, config.features);

    SubjectOutcome out;
    out.windows = features.rows();
    const auto primary = train_split(features, config, config.split.mode, seed);
    const auto ev = evaluate_split(features, primary.split, primary.normalizer, primary.result.best);
    out.train_accuracy = ev.train.accuracy;
    out.test_accuracy = ev.test.accuracy;
    const auto& hist = primary.result.history;
    out.val_accuracy = hist.best_epoch >= 0 ? hist.epochs[static_cast<std::size_t>(hist.best_epoch)].val_accuracy : 0.0;
    out.metrics = ev.metrics.metrics;
    out.history = hist;
    if (config.split.report_trialwise && config.split.mode != SplitMode::TrialWise) {
        const auto tw = train_split(features, config, SplitMode::TrialWise, seed);
        out.trialwise_accuracy = evaluate_split(features, tw.split, tw.normalizer, tw.result.best).test.accuracy;
    }
    out.ok = true;
    return out;
}

}  // namespace eegmi
