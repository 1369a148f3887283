#include "eegmi/pipeline.hpp"

#include <fcntl.h>
#include <signal.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "eegmi/container.hpp"
#include "eegmi/fetch.hpp"
#include "eegmi/hashing.hpp"
#include "eegmi/numeric_text.hpp"

namespace eegmi {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kManifestName = "manifest.json";
constexpr const char* kLockName = ".lock";
constexpr const char* kConfigName = "config.yaml";
constexpr int kManifestFormat = 1;

// Published intra-subject means, printed next to the computed value.
constexpr double kReferenceMeans[] = {0.9468, 0.9472, 0.9477};

std::string subject_dir(int subject) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "S%03d", subject);
    return buf;
}

std::string run_tag(int run) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "R%02d", run);
    return buf;
}

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_file_atomic(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + tmp.string());
        f << text;
        if (!f) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

class OutputLock {
public:
    explicit OutputLock(const fs::path& dir) : path_(dir / kLockName) {
        fs::create_directories(dir);
        for (int attempt = 0; attempt < 2; ++attempt) {
            const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
            if (fd >= 0) {
                const std::string pid = std::to_string(::getpid()) + "\n";
                [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
                ::close(fd);
                return;
            }
            if (errno != EEXIST) throw std::runtime_error("cannot create lock file " + path_.string());
            if (!stale()) break;
            std::error_code ec;
            fs::remove(path_, ec);
        }
        throw OutputLockedError("output directory " + dir.string() + " is locked by another process (" +
                                path_.string() + ")");
    }
    ~OutputLock() {
        std::error_code ec;
        fs::remove(path_, ec);
    }
    OutputLock(const OutputLock&) = delete;
    OutputLock& operator=(const OutputLock&) = delete;

private:
    bool stale() const {
        std::ifstream f(path_);
        long pid = 0;
        if (!(f >> pid) || pid <= 0) return true;
        return ::kill(static_cast<pid_t>(pid), 0) != 0 && errno == ESRCH;
    }

    fs::path path_;
};

/// Relative to the output directory when inside it, else absolute.
std::string artifact_key(const fs::path& out_dir, const fs::path& p) {
    const auto abs = fs::absolute(p).lexically_normal();
    const auto rel = abs.lexically_relative(fs::absolute(out_dir).lexically_normal());
    if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
    return abs.generic_string();
}

fs::path artifact_path(const fs::path& out_dir, const std::string& key) {
    const fs::path p(key);
    return p.is_absolute() ? p : out_dir / p;
}

class Manifest {
public:
    explicit Manifest(fs::path out_dir) : out_dir_(std::move(out_dir)) {
        const auto path = out_dir_ / kManifestName;
        if (fs::exists(path)) {
            try {
                doc_ = json::parse(read_text(path));
            } catch (const json::exception& e) {
                throw std::runtime_error(path.string() + ": corrupt manifest: " + e.what());
            }
            if (doc_.value("format", 0) != kManifestFormat) throw std::runtime_error(path.string() + ": unsupported manifest format");
        } else {
            doc_ = {{"format", kManifestFormat}, {"created", utc_now()}, {"stages", json::object()},
                    {"failures", json::object()}};
        }
    }

    json& doc() { return doc_; }

    const json* entry(const std::string& key) const {
        auto it = doc_["stages"].find(key);
        return it == doc_["stages"].end() ? nullptr : &*it;
    }

    /// True when the recorded input hash matches and every artifact is intact.
    bool current(const std::string& key, const std::string& input_hash) const {
        const auto* e = entry(key);
        if (!e || e->value("input_hash", "") != input_hash) return false;
        for (const auto& [name, hash] : (*e)["artifacts"].items()) {
            const auto p = artifact_path(out_dir_, name);
            if (!fs::is_regular_file(p) || sha256_file(p) != hash.get<std::string>()) return false;
        }
        return true;
    }

    std::map<std::string, std::string> artifacts(const std::string& key) const {
        std::map<std::string, std::string> out;
        if (const auto* e = entry(key))
            for (const auto& [name, hash] : (*e)["artifacts"].items()) out[name] = hash.get<std::string>();
        return out;
    }

    void record(const std::string& key, const std::string& input_hash, const std::vector<fs::path>& files) {
        json arts = json::object();
        for (const auto& f : files) arts[artifact_key(out_dir_, f)] = sha256_file(f);
        doc_["stages"][key] = {{"input_hash", input_hash}, {"completed", utc_now()}, {"artifacts", arts}};
        save();
    }

    void forget(const std::string& key) {
        doc_["stages"].erase(key);
        save();
    }

    void set_failure(int subject, const std::string& stage, const std::string& error) {
        doc_["failures"][subject_dir(subject)] = {{"stage", stage}, {"error", error}};
        save();
    }

    void clear_failure(int subject) {
        if (doc_["failures"].erase(subject_dir(subject))) save();
    }

    void save() {
        doc_["updated"] = utc_now();
        write_file_atomic(out_dir_ / kManifestName, doc_.dump(2) + "\n");
    }

private:
    fs::path out_dir_;
    json doc_;
};

std::string stage_key(int subject, Stage stage) { return subject_dir(subject) + "/" + std::string(to_string(stage)); }

std::string hash_inputs(Stage stage, const std::string& settings, const std::vector<std::map<std::string, std::string>>& upstream) {
    std::string text = std::string(to_string(stage)) + "\n" + settings + "\n";
    for (const auto& arts : upstream)
        for (const auto& [name, hash] : arts) text += name + " " + hash + "\n";
    return sha256_hex(text);
}

/// Settings that feed each stage, rendered canonically.
std::string stage_settings(const PipelineConfig& c, Stage stage, int subject) {
    std::ostringstream s;
    auto n = [](double v) { return format_double(v); };
    switch (stage) {
        case Stage::Fetch:
            s << "source " << c.data.source << "\nruns";
            for (int r : c.data.runs) s << ' ' << r;
            break;
        case Stage::Preprocess: {
            const auto& f = c.filters;
            s << "montage " << c.data.montage << "\nnotch " << n(f.notch_hz) << ' ' << n(f.notch_q) << "\nbp "
              << n(f.bp_low) << ' ' << n(f.bp_high) << ' ' << f.bp_order << "\nhp " << n(f.ica_hp_hz) << ' '
              << f.ica_hp_order;
            break;
        }
        case Stage::Ica: {
            const auto& t = c.ica.thresholds;
            s << "enabled " << c.ica.enabled << "\nn " << c.ica.n_components << "\niter " << c.ica.max_iter << ' '
              << n(c.ica.tol) << "\nseed " << subject_seed(c, subject) << "\nz " << t.use_zscore << ' '
              << n(t.zscore_limit) << "\nk " << t.use_abs_kurtosis << ' ' << n(t.abs_kurtosis_limit) << "\nc "
              << t.use_central_moment << ' ' << n(t.central_moment_limit) << "\np " << t.use_pearson << ' '
              << n(t.pearson_limit);
            break;
        }
        case Stage::Segment:
            s << "window " << c.window.window_len << ' ' << c.window.stride;
            break;
        case Stage::Features: {
            const auto& f = c.features;
            s << "mode " << to_string(f.mode) << "\nmoments " << static_cast<int>(f.convention) << "\nwelch "
              << f.welch.segment << ' ' << f.welch.overlap << "\nband " << n(f.band_low) << ' ' << n(f.band_high);
            break;
        }
        case Stage::Train:
        case Stage::Evaluate: {
            const auto& t = c.train;
            s << "seed " << subject_seed(c, subject) << "\npaper " << c.paper_protocol << "\nsplit " << n(c.split.ratio)
              << ' ' << to_string(c.split.mode) << ' ' << c.split.report_trialwise << "\ntrain " << t.epochs << ' '
              << t.batch_size << ' ' << t.shuffle << ' ' << n(t.adam.lr) << ' ' << n(t.adam.beta1) << ' '
              << n(t.adam.beta2) << ' ' << n(t.adam.epsilon) << ' ' << static_cast<int>(c.activation);
            break;
        }
        case Stage::Report:
            break;
    }
    return s.str();
}

std::vector<fs::path> files_with_suffix(const Manifest& m, const fs::path& out_dir, const std::string& key,
                                        const std::string& suffix) {
    std::vector<fs::path> out;
    for (const auto& [name, hash] : m.artifacts(key))
        if (name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
            out.push_back(artifact_path(out_dir, name));
    std::sort(out.begin(), out.end());
    return out;
}

// ---- windows.csv ----

void save_windows(const LabelingResult& labeled, const fs::path& path) {
    std::string out = "subject,run,start,length,label,event_index\n";
    for (const auto& w : labeled.windows) {
        out += std::to_string(w.trial.subject) + ',' + std::to_string(w.trial.run) + ',' + std::to_string(w.start) +
               ',' + std::to_string(w.length) + ',' + std::to_string(static_cast<int>(w.label)) + ',' +
               std::to_string(w.trial.event_index) + '\n';
    }
    write_file_atomic(path, out);
}

std::vector<LabeledWindow> load_windows(const fs::path& path, const std::vector<RunSignal>& runs) {
    std::map<int, const RunSignal*> by_run;
    for (const auto& r : runs) by_run[r.run] = &r;
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    std::getline(f, line);
    std::vector<LabeledWindow> out;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<long long> v;
        std::istringstream in(line);
        std::string cell;
        while (std::getline(in, cell, ',')) v.push_back(parse_integer(cell));
        if (v.size() != 6) throw std::runtime_error(path.string() + ": malformed window row");
        auto it = by_run.find(static_cast<int>(v[1]));
        if (it == by_run.end()) throw std::runtime_error(path.string() + ": window refers to a missing run");
        LabeledWindow w;
        w.source = it->second;
        w.start = static_cast<std::size_t>(v[2]);
        w.length = static_cast<std::size_t>(v[3]);
        if (w.start + w.length > w.source->length()) throw std::runtime_error(path.string() + ": window out of range");
        w.label = static_cast<ClassLabel>(v[4]);
        w.trial = {static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[5])};
        out.push_back(w);
    }
    return out;
}

// ---- history.csv ----

TrainHistory load_history(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    std::getline(f, line);
    TrainHistory h;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream in(line);
        std::string cell;
        while (std::getline(in, cell, ',')) cells.push_back(cell);
        if (cells.size() != 8) throw std::runtime_error(path.string() + ": malformed history row");
        EpochRecord r;
        r.train_loss = parse_double(cells[1]);
        r.train_accuracy = parse_double(cells[2]);
        r.train_mse = parse_double(cells[3]);
        r.val_loss = parse_double(cells[4]);
        r.val_accuracy = parse_double(cells[5]);
        r.val_mse = parse_double(cells[6]);
        if (cells[7] == "1") h.best_epoch = static_cast<int>(h.epochs.size());
        h.epochs.push_back(r);
    }
    return h;
}

json metrics_json(const MetricsReport& m) {
    json classes = json::object();
    for (int c = 0; c < kNumClasses; ++c) {
        const auto& cm = m.classes[static_cast<std::size_t>(c)];
        classes[std::string(to_string(static_cast<ClassLabel>(c)))] = {
            {"precision", cm.precision}, {"recall", cm.recall}, {"f1", cm.f1},
            {"support", cm.support},     {"no_predictions", cm.no_predictions}};
    }
    return {{"accuracy", m.accuracy}, {"total", m.total}, {"classes", classes}};
}

MetricsReport metrics_from_json(const json& j) {
    MetricsReport m;
    m.accuracy = j.at("accuracy").get<double>();
    m.total = j.at("total").get<std::size_t>();
    for (int c = 0; c < kNumClasses; ++c) {
        const auto& e = j.at("classes").at(std::string(to_string(static_cast<ClassLabel>(c))));
        auto& cm = m.classes[static_cast<std::size_t>(c)];
        cm.precision = e.at("precision").get<double>();
        cm.recall = e.at("recall").get<double>();
        cm.f1 = e.at("f1").get<double>();
        cm.support = e.at("support").get<std::size_t>();
        cm.no_predictions = e.at("no_predictions").get<bool>();
    }
    return m;
}

SubjectOutcome outcome_from_json(const json& j) {
    SubjectOutcome o;
    o.ok = true;
    o.windows = j.at("windows").get<std::size_t>();
    o.train_accuracy = j.at("train_accuracy").get<double>();
    o.val_accuracy = j.at("val_accuracy").get<double>();
    o.test_accuracy = j.at("test_accuracy").get<double>();
    if (j.contains("trialwise_accuracy")) o.trialwise_accuracy = j.at("trialwise_accuracy").get<double>();
    o.metrics = metrics_from_json(j.at("metrics"));
    return o;
}

// ---- the staged executor ----

class Executor {
public:
    Executor(const PipelineConfig& config, const RunOptions& options, std::vector<StageEvent>& events)
        : c_(config), opt_(options), out_(config.out_dir), manifest_(config.out_dir), events_(events) {
        cache_ = c_.data.cache_dir.empty() ? default_cache_dir() : c_.data.cache_dir;
        const std::string cfg = dump_config(c_);
        const auto cfg_path = out_ / kConfigName;
        if (!fs::exists(cfg_path) || read_text(cfg_path) != cfg) write_file_atomic(cfg_path, cfg);
        manifest_.doc()["config_hash"] = sha256_hex(cfg);
        manifest_.doc()["config_file"] = {{"path", kConfigName}, {"sha256", sha256_hex(cfg)}};
        manifest_.save();
    }

    Manifest& manifest() { return manifest_; }

    /// Runs every per-subject stage up to `until` (capped at Evaluate).
    SubjectOutcome run_subject(int subject) {
        const std::uint64_t seed = subject_seed(c_, subject);
        Stage current = Stage::Fetch;
        try {
            for (int s = 0; s <= static_cast<int>(Stage::Evaluate) && s <= static_cast<int>(opt_.until); ++s) {
                current = static_cast<Stage>(s);
                step(subject, current, seed);
            }
            manifest_.clear_failure(subject);
        } catch (const std::exception& e) {
            const std::string msg = std::string(to_string(current)) + ": " + e.what();
            manifest_.set_failure(subject, std::string(to_string(current)), e.what());
            if (opt_.verbose) std::cerr << "[" << subject_dir(subject) << "] failed in " << msg << "\n";
            throw std::runtime_error(msg);
        }
        if (opt_.until < Stage::Evaluate) {
            SubjectOutcome o;
            o.ok = true;
            return o;
        }
        const auto eval_json = json::parse(read_text(subject_path(subject, Stage::Evaluate) / "evaluation.json"));
        auto o = outcome_from_json(eval_json);
        o.history = load_history(subject_path(subject, Stage::Train) / "history.csv");
        return o;
    }

    void report(const IntraSubjectReport& report) {
        std::vector<std::map<std::string, std::string>> upstream;
        std::string settings;
        for (const auto& s : report.subjects) {
            settings += subject_dir(s.subject) + (s.ok ? " ok\n" : " failed " + s.error + "\n");
            if (s.ok) upstream.push_back(manifest_.artifacts(stage_key(s.subject, Stage::Evaluate)));
        }
        const std::string key = "reports";
        const auto hash = hash_inputs(Stage::Report, settings, upstream);
        if (!opt_.force && manifest_.current(key, hash)) {
            note(0, Stage::Report, true);
            return;
        }
        const auto dir = out_ / "reports";
        fs::remove_all(dir);
        fs::create_directories(dir);
        std::vector<fs::path> files;

        write_subjects_csv(report, dir / "subjects.csv");
        files.push_back(dir / "subjects.csv");
        json subjects = json::object();
        for (const auto& s : report.subjects) {
            const std::string tag = subject_dir(s.subject);
            if (!s.ok) {
                subjects[std::to_string(s.subject)] = {{"ok", false}, {"error", s.error}};
                continue;
            }
            const auto eval_dir = subject_path(s.subject, Stage::Evaluate);
            for (const char* name : {"metrics.csv", "confusion.csv"}) {
                const auto target = dir / (tag + "_" + name);
                write_file_atomic(target, read_text(eval_dir / name));
                files.push_back(target);
            }
            write_history_plots(s.history, dir, tag);
            files.push_back(dir / (tag + "_accuracy.svg"));
            files.push_back(dir / (tag + "_loss.svg"));
            json entry = json::parse(read_text(eval_dir / "evaluation.json"));
            entry["ok"] = true;
            subjects[std::to_string(s.subject)] = entry;
        }
        json summary = {{"subjects", subjects},
                        {"succeeded", report.succeeded},
                        {"requested", report.subjects.size()},
                        {"mean_test_accuracy", report.mean_accuracy},
                        {"std_test_accuracy", report.std_accuracy},
                        {"reference_mean_accuracy", kReferenceMeans}};
        write_file_atomic(dir / "summary.json", summary.dump(2) + "\n");
        files.push_back(dir / "summary.json");
        manifest_.record(key, hash, files);
        note(0, Stage::Report, false);
    }

    fs::path subject_path(int subject, Stage stage) const {
        return out_ / subject_dir(subject) / std::string(to_string(stage));
    }

private:
    void note(int subject, Stage stage, bool skipped) {
        events_.push_back({stage, subject, skipped});
        if (opt_.verbose)
            std::cerr << "[" << (subject ? subject_dir(subject) : std::string("all")) << "] " << to_string(stage)
                      << (skipped ? ": up to date\n" : ": done\n");
    }

    std::vector<std::map<std::string, std::string>> upstream(int subject, std::initializer_list<Stage> stages) const {
        std::vector<std::map<std::string, std::string>> out;
        for (Stage s : stages) out.push_back(manifest_.artifacts(stage_key(subject, s)));
        return out;
    }

    void step(int subject, Stage stage, std::uint64_t seed) {
        const std::string key = stage_key(subject, stage);
        std::vector<std::map<std::string, std::string>> up;
        switch (stage) {
            case Stage::Fetch: break;
            case Stage::Preprocess: up = upstream(subject, {Stage::Fetch}); break;
            case Stage::Ica: up = upstream(subject, {Stage::Preprocess}); break;
            case Stage::Segment: up = upstream(subject, {Stage::Ica}); break;
            case Stage::Features: up = upstream(subject, {Stage::Ica, Stage::Segment}); break;
            case Stage::Train: up = upstream(subject, {Stage::Features}); break;
            case Stage::Evaluate: up = upstream(subject, {Stage::Features, Stage::Train}); break;
            case Stage::Report: return;
        }
        const auto hash = hash_inputs(stage, stage_settings(c_, stage, subject), up);
        if (!opt_.force && manifest_.current(key, hash)) {
            note(subject, stage, true);
            return;
        }
        const auto dir = subject_path(subject, stage);
        if (stage != Stage::Fetch) {
            fs::remove_all(dir);
            fs::create_directories(dir);
        }
        std::vector<fs::path> files;
        try {
            files = execute(subject, stage, seed, dir, hash);
        } catch (...) {
            manifest_.forget(key);
            if (stage != Stage::Fetch) fs::remove_all(dir);
            throw;
        }
        manifest_.record(key, hash, files);
        note(subject, stage, false);
    }

    std::vector<fs::path> execute(int subject, Stage stage, std::uint64_t seed, const fs::path& dir,
                                 const std::string& input_hash) {
        std::vector<fs::path> files;
        switch (stage) {
            case Stage::Fetch: {
                FetchOptions fo;
                fo.runs = c_.data.runs;
                return fetch_subject(subject, c_.data.source, cache_, fo);
            }
            case Stage::Preprocess: {
                for (const auto& edf : files_with_suffix(manifest_, out_, stage_key(subject, Stage::Fetch), ".edf")) {
                    const auto rec = load_recording(edf.string());
                    if (rec.subject_id != subject) throw std::runtime_error(edf.string() + ": subject mismatch");
                    const auto pre = preprocess_recording(rec, c_);
                    const auto base = dir / run_tag(rec.run_id);
                    save_signal(pre.band, base.string() + ".band.sig");
                    save_signal(pre.ica_input, base.string() + ".hpf.sig");
                    files.push_back(base.string() + ".band.sig");
                    files.push_back(base.string() + ".hpf.sig");
                }
                return files;
            }
            case Stage::Ica: {
                const auto bands = files_with_suffix(manifest_, out_, stage_key(subject, Stage::Preprocess), ".band.sig");
                const auto hpfs = files_with_suffix(manifest_, out_, stage_key(subject, Stage::Preprocess), ".hpf.sig");
                if (bands.size() != hpfs.size()) throw std::runtime_error("preprocess artifacts incomplete");
                for (std::size_t i = 0; i < bands.size(); ++i) {
                    PreprocessedRun pre{load_signal(bands[i]), load_signal(hpfs[i])};
                    const auto cleaned = clean_run(pre, c_, seed);
                    const auto base = (dir / run_tag(pre.band.run)).string();
                    save_signal(cleaned.signal, base + ".clean.sig");
                    files.push_back(base + ".clean.sig");
                    if (cleaned.ica) {
                        save_ica_model(cleaned.ica->model, base + ".ica");
                        save_component_stats(cleaned.ica->stats, base + ".stats.csv", cleaned.ica->model.exclusion);
                        files.push_back(base + ".ica");
                        files.push_back(base + ".stats.csv");
                        if (!cleaned.ica->model.converged)
                            std::cerr << "warning: " << subject_dir(subject) << " " << run_tag(pre.band.run)
                                      << ": FastICA did not converge in " << cleaned.ica->model.iterations
                                      << " iterations\n";
                    }
                }
                return files;
            }
            case Stage::Segment: {
                const auto runs = cleaned_runs(subject);
                const auto labeled = segment_runs(runs, c_.window);
                save_windows(labeled, dir / "windows.csv");
                json counts = {{"kept", labeled.windows.size()},
                               {"dropped_rest", labeled.dropped_rest},
                               {"dropped_tie", labeled.dropped_tie},
                               {"dropped_uncovered", labeled.dropped_uncovered}};
                write_file_atomic(dir / "counts.json", counts.dump(2) + "\n");
                return {dir / "windows.csv", dir / "counts.json"};
            }
            case Stage::Features: {
                const auto runs = cleaned_runs(subject);
                const auto windows = load_windows(subject_path(subject, Stage::Segment) / "windows.csv", runs);
                if (windows.size() < 2) throw std::runtime_error("fewer than two labelled windows");
                const auto matrix = assemble_feature_matrix(windows, c_.features);
                save_feature_csv(matrix, dir / "features.csv");
                return {dir / "features.csv"};
            }
            case Stage::Train: {
                const auto matrix = load_feature_csv(subject_path(subject, Stage::Features) / "features.csv");
                for (SplitMode mode : modes()) {
                    const auto trained = train_split(matrix, c_, mode, seed);
                    const std::string sfx = mode == c_.split.mode ? "" : "_trialwise";
                    save_normalizer(trained.normalizer, matrix.columns, dir / ("normalizer" + sfx + ".txt"));
                    save_model(trained.result.best, input_hash, dir / ("model" + sfx + ".bin"));
                    write_history_csv(trained.result.history, dir / ("history" + sfx + ".csv"));
                    for (const char* f : {"normalizer", "model", "history"}) {
                        const std::string ext = std::string(f) == "model" ? ".bin" : std::string(f) == "history" ? ".csv" : ".txt";
                        files.push_back(dir / (std::string(f) + sfx + ext));
                    }
                }
                return files;
            }
            case Stage::Evaluate: {
                const auto matrix = load_feature_csv(subject_path(subject, Stage::Features) / "features.csv");
                const auto train_dir = subject_path(subject, Stage::Train);
                json result;
                for (SplitMode mode : modes()) {
                    const std::string sfx = mode == c_.split.mode ? "" : "_trialwise";
                    const auto split = split_for(matrix, c_, mode, seed);
                    const auto norm = load_normalizer(train_dir / ("normalizer" + sfx + ".txt"));
                    const auto model = load_model(train_dir / ("model" + sfx + ".bin"));
                    const auto ev = evaluate_split(matrix, split, norm, model);
                    write_metrics_csv(ev.metrics, dir / ("metrics" + sfx + ".csv"));
                    write_confusion_csv(ev.metrics.confusion, dir / ("confusion" + sfx + ".csv"));
                    files.push_back(dir / ("metrics" + sfx + ".csv"));
                    files.push_back(dir / ("confusion" + sfx + ".csv"));
                    if (sfx.empty()) {
                        const auto hist = load_history(train_dir / "history.csv");
                        result["windows"] = matrix.rows();
                        result["train_rows"] = split.train.size();
                        result["test_rows"] = split.eval.size();
                        result["split"] = std::string(to_string(mode));
                        result["train_accuracy"] = ev.train.accuracy;
                        result["test_accuracy"] = ev.test.accuracy;
                        result["test_loss"] = ev.test.loss;
                        result["val_accuracy"] = ev.test.accuracy;
                        result["best_epoch"] = hist.best_epoch + 1;
                        result["metrics"] = metrics_json(ev.metrics.metrics);
                    } else {
                        result["trialwise_accuracy"] = ev.test.accuracy;
                        result["trialwise_train_accuracy"] = ev.train.accuracy;
                    }
                }
                write_file_atomic(dir / "evaluation.json", result.dump(2) + "\n");
                files.push_back(dir / "evaluation.json");
                return files;
            }
            case Stage::Report: break;
        }
        return files;
    }

    std::vector<SplitMode> modes() const {
        std::vector<SplitMode> m{c_.split.mode};
        if (c_.split.report_trialwise && c_.split.mode != SplitMode::TrialWise) m.push_back(SplitMode::TrialWise);
        return m;
    }

public:
    std::vector<RunSignal> cleaned_runs(int subject) const {
        std::vector<RunSignal> runs;
        for (const auto& p : files_with_suffix(manifest_, out_, stage_key(subject, Stage::Ica), ".clean.sig"))
            runs.push_back(load_signal(p));
        if (runs.empty()) throw std::runtime_error("no cleaned runs for " + subject_dir(subject));
        return runs;
    }

private:
    const PipelineConfig& c_;
    RunOptions opt_;
    fs::path out_;
    fs::path cache_;
    Manifest manifest_;
    std::vector<StageEvent>& events_;
};

PipelineRun run_locked(const PipelineConfig& config, const RunOptions& options) {
    PipelineRun run;
    Executor exec(config, options, run.events);
    run.report = intra_subject_evaluate(config.data.subjects, config.seed,
                                        [&](int subject, std::uint64_t) { return exec.run_subject(subject); });
    if (options.until == Stage::Report) exec.report(run.report);
    run.manifest_path = config.out_dir / kManifestName;
    return run;
}

}  // namespace

std::string_view to_string(Stage stage) {
    static constexpr std::string_view kNames[] = {"fetch", "preprocess", "ica", "segment",
                                                  "features", "train", "evaluate", "report"};
    return kNames[static_cast<int>(stage)];
}

Stage parse_stage(std::string_view text) {
    for (int i = 0; i < kStageCount; ++i)
        if (to_string(static_cast<Stage>(i)) == text) return static_cast<Stage>(i);
    throw std::invalid_argument("unknown stage '" + std::string(text) + "'");
}

PipelineRun run_pipeline(const PipelineConfig& config, const RunOptions& options) {
    validate_config(config);
    OutputLock lock(config.out_dir);
    return run_locked(config, options);
}

std::vector<RunSignal> load_cleaned_runs(const PipelineConfig& config, int subject) {
    validate_config(config);
    OutputLock lock(config.out_dir);
    std::vector<StageEvent> events;
    RunOptions opt;
    opt.until = Stage::Ica;
    Executor exec(config, opt, events);
    exec.run_subject(subject);
    return exec.cleaned_runs(subject);
}

SweepReport run_sweep(const PipelineConfig& config, int subject, std::span<const SweepConfig> configs) {
    const auto runs = load_cleaned_runs(config, subject);
    const std::uint64_t seed = subject_seed(config, subject);
    auto report = window_sweep(configs, config.data.fs, seed, [&](std::size_t len, std::size_t stride, std::uint64_t s) {
        PipelineConfig c = config;
        c.window = {len, stride};
        c.split.report_trialwise = false;
        return run_windows_in_memory(runs, c, s);
    });
    OutputLock lock(config.out_dir);
    Manifest manifest(config.out_dir);
    const auto path = config.out_dir / "sweep" / (subject_dir(subject) + "_sweep.csv");
    fs::create_directories(path.parent_path());
    write_sweep_csv(report, path);
    manifest.record("sweep/" + subject_dir(subject), sha256_hex(dump_config(config)), {path});
    return report;
}

std::vector<std::string> verify_manifest(const fs::path& out_dir) {
    std::vector<std::string> problems;
    const auto mpath = out_dir / kManifestName;
    if (!fs::exists(mpath)) return {"no manifest in " + out_dir.string()};
    const json doc = json::parse(read_text(mpath));
    std::set<std::string> referenced{kManifestName, kLockName};
    if (doc.contains("config_file")) {
        const std::string p = doc["config_file"]["path"].get<std::string>();
        referenced.insert(p);
        if (!fs::exists(out_dir / p) || sha256_file(out_dir / p) != doc["config_file"]["sha256"].get<std::string>())
            problems.push_back("config file missing or modified: " + p);
    }
    for (const auto& [key, entry] : doc["stages"].items()) {
        for (const auto& [name, hash] : entry["artifacts"].items()) {
            referenced.insert(name);
            const auto p = artifact_path(out_dir, name);
            if (!fs::is_regular_file(p)) problems.push_back(key + ": missing artifact " + name);
            else if (sha256_file(p) != hash.get<std::string>()) problems.push_back(key + ": hash mismatch for " + name);
        }
    }
    for (const auto& e : fs::recursive_directory_iterator(out_dir)) {
        if (!e.is_regular_file()) continue;
        const auto rel = e.path().lexically_relative(out_dir).generic_string();
        if (!referenced.contains(rel)) problems.push_back("unreferenced file " + rel);
    }
    return problems;
}

std::vector<CheckResult> run_checks(const fs::path& manifest, const fs::path& base_dir) {
    YAML::Node root;
    try {
        root = YAML::LoadFile(manifest.string());
    } catch (const YAML::Exception& e) {
        throw std::runtime_error(manifest.string() + ": " + e.what());
    }
    if (!root["checks"] || !root["checks"].IsSequence()) throw std::runtime_error(manifest.string() + ": expected a 'checks' list");
    std::vector<CheckResult> out;
    std::map<std::string, json> cache;
    for (const auto& node : root["checks"]) {
        CheckResult r;
        r.name = node["name"] ? node["name"].as<std::string>() : node["key"].as<std::string>("");
        try {
            const auto file = node["file"].as<std::string>();
            const auto key = node["key"].as<std::string>();
            if (!cache.contains(file)) cache[file] = json::parse(read_text(base_dir / file));
            const json* cur = &cache[file];
            std::istringstream parts(key);
            std::string part;
            while (std::getline(parts, part, '.')) {
                if (!cur->is_object() || !cur->contains(part)) throw std::runtime_error("key '" + key + "' not found");
                cur = &(*cur)[part];
            }
            if (!cur->is_number()) throw std::runtime_error("key '" + key + "' is not numeric");
            const double v = cur->get<double>();
            r.passed = true;
            r.detail = key + " = " + format_double(v);
            if (node["min"] && v < node["min"].as<double>()) {
                r.passed = false;
                r.detail += " < min " + node["min"].as<std::string>();
            }
            if (node["max"] && v > node["max"].as<double>()) {
                r.passed = false;
                r.detail += " > max " + node["max"].as<std::string>();
            }
        } catch (const std::exception& e) {
            r.passed = false;
            r.detail = e.what();
        }
        out.push_back(r);
    }
    return out;
}

}  // namespace eegmi
