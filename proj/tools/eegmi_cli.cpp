// eegmi: command-line front end for the motor imagery / execution pipeline.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eegmi/config.hpp"
#include "eegmi/container.hpp"
#include "eegmi/ica.hpp"
#include "eegmi/numeric_text.hpp"
#include "eegmi/pipeline.hpp"

namespace fs = std::filesystem;
using namespace eegmi;

namespace {

std::vector<int> parse_subjects(const std::string& text) {
    std::vector<int> out;
    std::stringstream in(text);
    std::string part;
    while (std::getline(in, part, ',')) {
        if (part.empty()) continue;
        const auto dash = part.find('-');
        if (dash == std::string::npos) {
            out.push_back(static_cast<int>(parse_integer(part)));
        } else {
            const auto lo = parse_integer(part.substr(0, dash));
            const auto hi = parse_integer(part.substr(dash + 1));
            if (hi < lo) throw ConfigError("bad subject range '" + part + "'");
            for (auto s = lo; s <= hi; ++s) out.push_back(static_cast<int>(s));
        }
    }
    if (out.empty()) throw ConfigError("no subjects given");
    return out;
}

std::vector<SweepConfig> parse_sweep(const std::string& text) {
    std::vector<SweepConfig> out;
    std::stringstream in(text);
    std::string part;
    while (std::getline(in, part, ',')) {
        const auto colon = part.find(':');
        if (colon == std::string::npos) throw ConfigError("sweep entries look like <seconds>:<overlap %>");
        out.push_back({parse_double(part.substr(0, colon)), parse_double(part.substr(colon + 1))});
    }
    return out;
}

struct Flags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string subjects;
    std::string out;
    std::string cache_dir;
    std::string source;
    bool paper_protocol = false;
    bool verbose = false;
    bool force = false;

    std::optional<double> notch_hz, notch_q, bp_low, bp_high, ica_hp_hz;
    std::optional<int> bp_order;

    std::optional<int> n_components;
    bool no_ica = false;
    std::optional<double> z_limit, abs_kurtosis, central_moment, pearson;

    WindowOverrides window;
    std::string features;
    std::string moments;

    std::optional<int> epochs, batch;
    std::optional<double> split, lr;
    std::string split_mode;
    bool no_trialwise = false;
};

void add_global_flags(CLI::App& app, Flags& f) {
    app.add_option("--config", f.config_path, "YAML configuration file");
    app.add_option("--seed", f.seed, "Global seed");
    app.add_option("--subjects", f.subjects, "Subject ids, e.g. 1 or 1-9 or 1,4,7");
    app.add_option("--out", f.out, "Output directory");
    app.add_option("--cache-dir", f.cache_dir, "Dataset cache directory (default $EEGMI_CACHE_DIR)");
    app.add_option("--source", f.source, "Dataset URL or local mirror directory");
    app.add_flag("--paper-protocol", f.paper_protocol, "Fit feature normalisation on the full matrix");
    app.add_flag("-v,--verbose", f.verbose, "Report every stage");
    app.add_flag("--force", f.force, "Recompute stages even when up to date");

    app.add_option("--notch-hz", f.notch_hz, "Notch centre (Hz)");
    app.add_option("--notch-q", f.notch_q, "Notch quality factor");
    app.add_option("--bp-low", f.bp_low, "Band-pass lower edge (Hz)");
    app.add_option("--bp-high", f.bp_high, "Band-pass upper edge (Hz)");
    app.add_option("--bp-order", f.bp_order, "Band-pass Butterworth order");
    app.add_option("--ica-hp-hz", f.ica_hp_hz, "High-pass cutoff of the ICA fitting stream (Hz)");

    app.add_option("--n-components", f.n_components, "ICA components");
    app.add_flag("--no-ica", f.no_ica, "Skip artifact removal");
    app.add_option("--z-limit", f.z_limit, "Kurtosis z-score limit");
    app.add_option("--abs-kurtosis", f.abs_kurtosis, "Also flag components above this kurtosis");
    app.add_option("--central-moment", f.central_moment, "Also flag |z(variance)| or |z(skewness)| above this");
    app.add_option("--pearson", f.pearson, "Also flag components with max |pearson| at or above this");

    app.add_option("--window-sec", f.window.window_sec, "Window length (s)");
    app.add_option("--window-len", f.window.window_len, "Window length (samples)");
    auto* stride = app.add_option("--stride", f.window.stride, "Window stride (samples)");
    auto* overlap = app.add_option("--overlap-pct", f.window.overlap_pct, "Window overlap (%)");
    stride->excludes(overlap);
    app.add_option("--features", f.features, "Feature set: time, frequency or both");
    app.add_option("--moments", f.moments, "Skewness/kurtosis convention: printed or population");

    app.add_option("--epochs", f.epochs, "Training epochs");
    app.add_option("--batch", f.batch, "Mini-batch size");
    app.add_option("--lr", f.lr, "Adam learning rate");
    app.add_option("--split", f.split, "Training fraction");
    app.add_option("--split-mode", f.split_mode, "window-random or trial-wise");
    app.add_flag("--no-trialwise", f.no_trialwise, "Skip the additional trial-wise evaluation");
}

PipelineConfig build_config(const Flags& f) {
    PipelineConfig c = f.config_path.empty() ? default_config() : load_config(f.config_path);
    if (f.seed) c.seed = *f.seed;
    if (!f.subjects.empty()) c.data.subjects = parse_subjects(f.subjects);
    if (!f.out.empty()) c.out_dir = f.out;
    if (!f.cache_dir.empty()) c.data.cache_dir = f.cache_dir;
    if (!f.source.empty()) c.data.source = f.source;
    if (f.paper_protocol) c.paper_protocol = true;

    auto& fl = c.filters;
    if (f.notch_hz) fl.notch_hz = *f.notch_hz;
    if (f.notch_q) fl.notch_q = *f.notch_q;
    if (f.bp_low) fl.bp_low = *f.bp_low;
    if (f.bp_high) fl.bp_high = *f.bp_high;
    if (f.bp_order) fl.bp_order = *f.bp_order;
    if (f.ica_hp_hz) fl.ica_hp_hz = *f.ica_hp_hz;

    auto& t = c.ica.thresholds;
    if (f.n_components) c.ica.n_components = *f.n_components;
    if (f.no_ica) c.ica.enabled = false;
    if (f.z_limit) t.zscore_limit = *f.z_limit;
    if (f.abs_kurtosis) t.abs_kurtosis_limit = *f.abs_kurtosis, t.use_abs_kurtosis = true;
    if (f.central_moment) t.central_moment_limit = *f.central_moment, t.use_central_moment = true;
    if (f.pearson) t.pearson_limit = *f.pearson, t.use_pearson = true;

    c.window = resolve_window(c.window, f.window, c.data.fs);
    if (!f.features.empty()) c.features.mode = parse_feature_mode(f.features);
    if (f.moments == "population") c.features.convention = MomentConvention::Population;
    else if (f.moments == "printed") c.features.convention = MomentConvention::Printed;
    else if (!f.moments.empty()) throw ConfigError("--moments must be printed or population");

    if (f.epochs) c.train.epochs = *f.epochs;
    if (f.batch) c.train.batch_size = *f.batch;
    if (f.lr) c.train.adam.lr = *f.lr;
    if (f.split) c.split.ratio = *f.split;
    if (!f.split_mode.empty()) c.split.mode = parse_split_mode(f.split_mode);
    if (f.no_trialwise) c.split.report_trialwise = false;
    validate_config(c);
    return c;
}

std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f%%", 100.0 * v);
    return buf;
}

int run_stage(const PipelineConfig& c, Stage until, bool force, bool verbose) {
    RunOptions opt;
    opt.until = until;
    opt.force = force;
    opt.verbose = verbose;
    const auto run = run_pipeline(c, opt);
    std::size_t skipped = 0;
    for (const auto& e : run.events) skipped += e.skipped;
    std::cout << "stages: " << run.events.size() - skipped << " run, " << skipped << " up to date\n";
    int failed = 0;
    for (const auto& s : run.report.subjects) {
        if (!s.ok) {
            ++failed;
            std::cout << "subject " << s.subject << ": FAILED (" << s.error << ")\n";
        } else if (until >= Stage::Evaluate) {
            std::cout << "subject " << s.subject << ": train " << pct(s.train_accuracy) << ", test "
                      << pct(s.test_accuracy);
            if (s.trialwise_accuracy) std::cout << ", trial-wise test " << pct(*s.trialwise_accuracy);
            std::cout << " (" << s.windows << " windows)\n";
        }
    }
    if (until >= Stage::Evaluate && run.report.succeeded > 0) {
        std::cout << "mean test accuracy " << pct(run.report.mean_accuracy) << " (std " << pct(run.report.std_accuracy)
                  << ", " << run.report.succeeded << "/" << run.report.subjects.size() << " subjects)\n";
        if (until == Stage::Report) std::cout << "published reference means: 94.68% / 94.72% / 94.77%\n";
    }
    std::cout << "manifest: " << run.manifest_path.string() << "\n";
    return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"EEG motor imagery / execution classification pipeline"};
    app.require_subcommand(1);
    Flags flags;
    add_global_flags(app, flags);

    struct StageCmd {
        const char* name;
        Stage stage;
        const char* help;
    };
    const StageCmd stage_cmds[] = {
        {"fetch", Stage::Fetch, "Download (or reuse cached) EDF runs"},
        {"preprocess", Stage::Preprocess, "Notch, band-pass and ICA high-pass filtering"},
        {"segment", Stage::Segment, "Cut and label sliding windows"},
        {"features", Stage::Features, "Compute the feature matrix"},
        {"train", Stage::Train, "Train the MLP"},
        {"eval", Stage::Evaluate, "Evaluate the trained model"},
        {"report", Stage::Report, "Write CSV and SVG reports"},
    };
    std::vector<std::pair<CLI::App*, Stage>> stage_apps;
    for (const auto& s : stage_cmds) stage_apps.emplace_back(app.add_subcommand(s.name, s.help)->fallthrough(), s.stage);
    std::string checkpoint;
    for (auto& [sub, stage] : stage_apps)
        if (stage == Stage::Train) sub->add_option("--checkpoint", checkpoint, "Copy the best model here");

    auto* ica = app.add_subcommand("ica", "ICA artifact removal")->fallthrough()->require_subcommand(1);
    auto* ica_fit = ica->add_subcommand("fit", "Fit ICA per run and remove flagged components")->fallthrough();
    std::string stats_path;
    auto* ica_detect = ica->add_subcommand("detect", "Re-apply detection thresholds to a component stats CSV")->fallthrough();
    ica_detect->add_option("stats", stats_path, "Component statistics CSV")->required();
    std::string model_path, input_path, output_path;
    auto* ica_apply = ica->add_subcommand("apply", "Clean a signal container with a fitted ICA model")->fallthrough();
    ica_apply->add_option("--model", model_path, "Fitted ICA model")->required();
    ica_apply->add_option("--input", input_path, "Input signal container")->required();
    ica_apply->add_option("--output", output_path, "Output signal container")->required();

    auto* sweep = app.add_subcommand("sweep", "Window length / overlap sweep")->fallthrough();
    std::string sweep_spec;
    sweep->add_option("--configs", sweep_spec, "Comma list of <seconds>:<overlap %> (default: the ten standard pairs)");

    auto* config = app.add_subcommand("config", "Configuration helpers")->require_subcommand(1);
    auto* print_defaults = config->add_subcommand("print-defaults", "Print every default setting as YAML");
    auto* config_show = config->add_subcommand("show", "Print the effective configuration")->fallthrough();

    auto* check = app.add_subcommand("check", "Evaluate an acceptance manifest against reports")->fallthrough();
    std::string check_path;
    check->add_option("manifest", check_path, "Acceptance manifest (YAML)")->required();

    auto* verify = app.add_subcommand("verify", "Check the run manifest against the output directory")->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        if (print_defaults->parsed()) {
            std::cout << dump_config(default_config());
            return 0;
        }
        const PipelineConfig cfg = build_config(flags);
        if (config_show->parsed()) {
            std::cout << dump_config(cfg);
            return 0;
        }
        for (auto& [sub, stage] : stage_apps) {
            if (!sub->parsed()) continue;
            const int rc = run_stage(cfg, stage, flags.force, flags.verbose);
            if (stage == Stage::Train && !checkpoint.empty() && rc == 0) {
                if (cfg.data.subjects.size() != 1) throw ConfigError("--checkpoint needs exactly one subject");
                char dir[16];
                std::snprintf(dir, sizeof(dir), "S%03d", cfg.data.subjects.front());
                fs::copy_file(cfg.out_dir / dir / "train" / "model.bin", checkpoint, fs::copy_options::overwrite_existing);
                std::cout << "checkpoint: " << checkpoint << "\n";
            }
            return rc;
        }
        if (ica_fit->parsed()) return run_stage(cfg, Stage::Ica, flags.force, flags.verbose);
        if (ica_detect->parsed()) {
            const auto stats = load_component_stats(stats_path);
            const auto flagged = detect_artifact_components(stats, cfg.ica.thresholds);
            std::printf("%-9s %12s %12s %12s %10s  %s\n", "component", "variance", "skewness", "kurtosis", "z-score", "flag");
            for (std::size_t k = 0; k < stats.size(); ++k) {
                const auto& c = stats.components[k];
                const bool f = std::find(flagged.begin(), flagged.end(), static_cast<int>(k)) != flagged.end();
                std::printf("%-9zu %12.6g %12.6g %12.6g %10.6f  %s\n", k, c.variance, c.skewness, c.kurtosis,
                            c.kurtosis_zscore, f ? "#" : "*");
            }
            std::cout << flagged.size() << " of " << stats.size() << " components flagged\n";
            return 0;
        }
        if (ica_apply->parsed()) {
            const auto model = load_ica_model(model_path);
            auto signal = load_signal(input_path);
            signal.data = remove_components(signal.data, model.whitening, model.unmixing, model.exclusion);
            save_signal(signal, output_path);
            std::cout << "removed " << model.exclusion.size() << " components -> " << output_path << "\n";
            return 0;
        }
        if (sweep->parsed()) {
            const auto configs = sweep_spec.empty() ? default_sweep_configs() : parse_sweep(sweep_spec);
            const auto report = run_sweep(cfg, cfg.data.subjects.front(), configs);
            std::printf("%8s %8s %6s %7s %9s %9s %9s %9s\n", "window_s", "overlap", "len", "stride", "windows", "train",
                        "val", "seconds");
            int failed = 0;
            for (const auto& r : report.rows) {
                if (!r.ok) {
                    ++failed;
                    std::printf("%8g %8g %6zu %7zu  FAILED: %s\n", r.config.window_sec, r.config.overlap_pct,
                                r.window_len, r.stride, r.error.c_str());
                    continue;
                }
                std::printf("%8g %8g %6zu %7zu %9zu %9s %9s %9.1f\n", r.config.window_sec, r.config.overlap_pct,
                            r.window_len, r.stride, r.windows, pct(r.train_accuracy).c_str(),
                            pct(r.val_accuracy).c_str(), r.seconds);
            }
            return failed ? 1 : 0;
        }
        if (check->parsed()) {
            const auto results = run_checks(check_path, cfg.out_dir);
            int failed = 0;
            for (const auto& r : results) {
                failed += !r.passed;
                std::cout << (r.passed ? "PASS  " : "FAIL  ") << r.name << "  (" << r.detail << ")\n";
            }
            std::cout << results.size() - failed << "/" << results.size() << " checks passed\n";
            return failed ? 1 : 0;
        }
        if (verify->parsed()) {
            const auto problems = verify_manifest(cfg.out_dir);
            for (const auto& p : problems) std::cout << p << "\n";
            std::cout << (problems.empty() ? "manifest consistent\n" : "manifest inconsistent\n");
            return problems.empty() ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
