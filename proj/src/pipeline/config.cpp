#include "eegmi/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "eegmi/fetch.hpp"
#include "eegmi/numeric_text.hpp"

namespace eegmi {

namespace {

void check_keys(const YAML::Node& node, const std::string& where, const std::set<std::string>& allowed) {
    if (!node.IsMap()) throw ConfigError(where + ": expected a mapping");
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!allowed.contains(key)) throw ConfigError("unknown config key '" + (where.empty() ? key : where + "." + key) + "'");
    }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& out, const std::string& where) {
    const auto v = node[key];
    if (!v) return;
    try {
        out = v.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError("bad value for '" + where + "." + key + "'");
    }
}

template <typename T>
void read_opt(const YAML::Node& node, const char* key, std::optional<T>& out, const std::string& where) {
    if (!node[key]) return;
    T v{};
    read(node, key, v, where);
    out = v;
}

std::string num(double v) { return format_double(v); }

std::string yes(bool b) { return b ? "true" : "false"; }

}  // namespace

WindowSpec resolve_window(const WindowSpec& base, const WindowOverrides& o, double fs) {
    if (o.window_len && o.window_sec) throw ConfigError("window_len and window_sec are mutually exclusive");
    if (o.stride && o.overlap_pct) throw ConfigError("stride and overlap_pct are mutually exclusive");
    WindowSpec spec = base;
    if (o.window_len) spec.window_len = *o.window_len;
    if (o.window_sec) {
        if (!(*o.window_sec > 0.0)) throw ConfigError("window_sec must be positive");
        spec.window_len = static_cast<std::size_t>(std::llround(*o.window_sec * fs));
    }
    if (o.stride) spec.stride = *o.stride;
    if (o.overlap_pct) {
        try {
            spec.stride = stride_for_overlap(spec.window_len, *o.overlap_pct);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return spec;
}

PipelineConfig default_config() {
    PipelineConfig c;
    c.data.source = kDefaultSourceUrl;
    return c;
}

PipelineConfig parse_config(std::string_view yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(yaml_text));
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    PipelineConfig c = default_config();
    if (root.IsNull()) return c;
    check_keys(root, "", {"seed", "paper_protocol", "data", "filters", "ica", "window", "features", "train", "split", "output"});
    read(root, "seed", c.seed, "");
    read(root, "paper_protocol", c.paper_protocol, "");

    if (auto n = root["data"]) {
        check_keys(n, "data", {"source", "cache_dir", "subjects", "runs", "montage", "fs"});
        read(n, "source", c.data.source, "data");
        std::string cache;
        read(n, "cache_dir", cache, "data");
        c.data.cache_dir = cache;
        read(n, "subjects", c.data.subjects, "data");
        read(n, "runs", c.data.runs, "data");
        read(n, "montage", c.data.montage, "data");
        read(n, "fs", c.data.fs, "data");
    }
    if (auto n = root["filters"]) {
        check_keys(n, "filters", {"notch_hz", "notch_q", "bp_low", "bp_high", "bp_order", "ica_hp_hz", "ica_hp_order"});
        auto& f = c.filters;
        read(n, "notch_hz", f.notch_hz, "filters");
        read(n, "notch_q", f.notch_q, "filters");
        read(n, "bp_low", f.bp_low, "filters");
        read(n, "bp_high", f.bp_high, "filters");
        read(n, "bp_order", f.bp_order, "filters");
        read(n, "ica_hp_hz", f.ica_hp_hz, "filters");
        read(n, "ica_hp_order", f.ica_hp_order, "filters");
    }
    if (auto n = root["ica"]) {
        check_keys(n, "ica", {"enabled", "n_components", "max_iter", "tol", "zscore_limit", "use_zscore",
                              "abs_kurtosis_limit", "use_abs_kurtosis", "central_moment_limit", "use_central_moment",
                              "pearson_limit", "use_pearson"});
        auto& i = c.ica;
        read(n, "enabled", i.enabled, "ica");
        read(n, "n_components", i.n_components, "ica");
        read(n, "max_iter", i.max_iter, "ica");
        read(n, "tol", i.tol, "ica");
        auto& t = i.thresholds;
        read(n, "zscore_limit", t.zscore_limit, "ica");
        read(n, "use_zscore", t.use_zscore, "ica");
        read(n, "abs_kurtosis_limit", t.abs_kurtosis_limit, "ica");
        read(n, "use_abs_kurtosis", t.use_abs_kurtosis, "ica");
        read(n, "central_moment_limit", t.central_moment_limit, "ica");
        read(n, "use_central_moment", t.use_central_moment, "ica");
        read(n, "pearson_limit", t.pearson_limit, "ica");
        read(n, "use_pearson", t.use_pearson, "ica");
    }
    if (auto n = root["window"]) {
        check_keys(n, "window", {"window_len", "window_sec", "stride", "overlap_pct"});
        WindowOverrides o;
        read_opt(n, "window_len", o.window_len, "window");
        read_opt(n, "window_sec", o.window_sec, "window");
        read_opt(n, "stride", o.stride, "window");
        read_opt(n, "overlap_pct", o.overlap_pct, "window");
        c.window = resolve_window(c.window, o, c.data.fs);
    }
    if (auto n = root["features"]) {
        check_keys(n, "features", {"mode", "moments", "welch_segment", "welch_overlap", "band_low", "band_high"});
        auto& f = c.features;
        std::string mode;
        read(n, "mode", mode, "features");
        if (!mode.empty()) {
            try {
                f.mode = parse_feature_mode(mode);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
        }
        std::string moments;
        read(n, "moments", moments, "features");
        if (moments == "population") f.convention = MomentConvention::Population;
        else if (moments == "printed") f.convention = MomentConvention::Printed;
        else if (!moments.empty()) throw ConfigError("features.moments must be printed or population");
        read(n, "welch_segment", f.welch.segment, "features");
        read(n, "welch_overlap", f.welch.overlap, "features");
        read(n, "band_low", f.band_low, "features");
        read(n, "band_high", f.band_high, "features");
    }
    if (auto n = root["train"]) {
        check_keys(n, "train", {"epochs", "batch_size", "shuffle", "lr", "beta1", "beta2", "epsilon", "activation"});
        auto& t = c.train;
        read(n, "epochs", t.epochs, "train");
        read(n, "batch_size", t.batch_size, "train");
        read(n, "shuffle", t.shuffle, "train");
        read(n, "lr", t.adam.lr, "train");
        read(n, "beta1", t.adam.beta1, "train");
        read(n, "beta2", t.adam.beta2, "train");
        read(n, "epsilon", t.adam.epsilon, "train");
        std::string act;
        read(n, "activation", act, "train");
        if (act == "tanh") c.activation = Activation::Tanh;
        else if (act == "relu") c.activation = Activation::Relu;
        else if (!act.empty()) throw ConfigError("train.activation must be relu or tanh");
    }
    if (auto n = root["split"]) {
        check_keys(n, "split", {"ratio", "mode", "report_trialwise"});
        read(n, "ratio", c.split.ratio, "split");
        std::string mode;
        read(n, "mode", mode, "split");
        if (!mode.empty()) {
            try {
                c.split.mode = parse_split_mode(mode);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
        }
        read(n, "report_trialwise", c.split.report_trialwise, "split");
    }
    if (auto n = root["output"]) {
        check_keys(n, "output", {"dir"});
        std::string dir;
        read(n, "dir", dir, "output");
        if (!dir.empty()) c.out_dir = dir;
    }
    validate_config(c);
    return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

void validate_config(const PipelineConfig& c) {
    if (c.data.subjects.empty()) throw ConfigError("data.subjects is empty");
    for (int s : c.data.subjects)
        if (s < 1 || s > 109) throw ConfigError("subject ids must be in 1..109");
    if (c.data.runs.empty()) throw ConfigError("data.runs is empty");
    for (int r : c.data.runs)
        if (!task_for_run(r)) throw ConfigError("run " + std::to_string(r) + " is not a left/right fist run");
    if (c.data.montage != "motor" && c.data.montage != "all") throw ConfigError("data.montage must be motor or all");
    if (!(c.data.fs > 0.0)) throw ConfigError("data.fs must be positive");
    const auto& f = c.filters;
    if (!(f.bp_low > 0.0 && f.bp_low < f.bp_high)) throw ConfigError("filters: need 0 < bp_low < bp_high");
    if (f.bp_order < 1 || f.ica_hp_order < 1) throw ConfigError("filter orders must be >= 1");
    if (!(f.notch_hz > 0.0) || !(f.notch_q > 0.0) || !(f.ica_hp_hz > 0.0))
        throw ConfigError("filters: notch_hz, notch_q and ica_hp_hz must be positive");
    if (c.ica.n_components < 1) throw ConfigError("ica.n_components must be >= 1");
    if (c.ica.max_iter < 1 || !(c.ica.tol > 0.0)) throw ConfigError("ica: max_iter and tol must be positive");
    try {
        c.window.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (c.features.welch.segment < 2 || c.features.welch.overlap >= c.features.welch.segment)
        throw ConfigError("features: need welch_overlap < welch_segment");
    if (c.train.epochs < 1 || c.train.batch_size < 1) throw ConfigError("train: epochs and batch_size must be >= 1");
    if (!(c.train.adam.lr > 0.0)) throw ConfigError("train.lr must be positive");
    if (!(c.split.ratio > 0.0 && c.split.ratio < 1.0)) throw ConfigError("split.ratio must be in (0, 1)");
}

std::string dump_config(const PipelineConfig& c) {
    YAML::Emitter e;
    e << YAML::BeginMap;
    e << YAML::Key << "seed" << YAML::Value << c.seed;
    e << YAML::Key << "paper_protocol" << YAML::Value << yes(c.paper_protocol);

    e << YAML::Key << "data" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "source" << YAML::Value << c.data.source;
    e << YAML::Key << "cache_dir" << YAML::Value << c.data.cache_dir.string();
    e << YAML::Key << "subjects" << YAML::Value << YAML::Flow << c.data.subjects;
    e << YAML::Key << "runs" << YAML::Value << YAML::Flow << c.data.runs;
    e << YAML::Key << "montage" << YAML::Value << c.data.montage;
    e << YAML::Key << "fs" << YAML::Value << num(c.data.fs);
    e << YAML::EndMap;

    const auto& f = c.filters;
    e << YAML::Key << "filters" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "notch_hz" << YAML::Value << num(f.notch_hz);
    e << YAML::Key << "notch_q" << YAML::Value << num(f.notch_q);
    e << YAML::Key << "bp_low" << YAML::Value << num(f.bp_low);
    e << YAML::Key << "bp_high" << YAML::Value << num(f.bp_high);
    e << YAML::Key << "bp_order" << YAML::Value << f.bp_order;
    e << YAML::Key << "ica_hp_hz" << YAML::Value << num(f.ica_hp_hz);
    e << YAML::Key << "ica_hp_order" << YAML::Value << f.ica_hp_order;
    e << YAML::EndMap;

    const auto& t = c.ica.thresholds;
    e << YAML::Key << "ica" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "enabled" << YAML::Value << yes(c.ica.enabled);
    e << YAML::Key << "n_components" << YAML::Value << c.ica.n_components;
    e << YAML::Key << "max_iter" << YAML::Value << c.ica.max_iter;
    e << YAML::Key << "tol" << YAML::Value << num(c.ica.tol);
    e << YAML::Key << "zscore_limit" << YAML::Value << num(t.zscore_limit);
    e << YAML::Key << "use_zscore" << YAML::Value << yes(t.use_zscore);
    e << YAML::Key << "abs_kurtosis_limit" << YAML::Value << num(t.abs_kurtosis_limit);
    e << YAML::Key << "use_abs_kurtosis" << YAML::Value << yes(t.use_abs_kurtosis);
    e << YAML::Key << "central_moment_limit" << YAML::Value << num(t.central_moment_limit);
    e << YAML::Key << "use_central_moment" << YAML::Value << yes(t.use_central_moment);
    e << YAML::Key << "pearson_limit" << YAML::Value << num(t.pearson_limit);
    e << YAML::Key << "use_pearson" << YAML::Value << yes(t.use_pearson);
    e << YAML::EndMap;

    e << YAML::Key << "window" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "window_len" << YAML::Value << c.window.window_len;
    e << YAML::Key << "stride" << YAML::Value << c.window.stride;
    e << YAML::EndMap;

    const auto& fe = c.features;
    e << YAML::Key << "features" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "mode" << YAML::Value << std::string(to_string(fe.mode));
    e << YAML::Key << "moments" << YAML::Value << (fe.convention == MomentConvention::Printed ? "printed" : "population");
    e << YAML::Key << "welch_segment" << YAML::Value << fe.welch.segment;
    e << YAML::Key << "welch_overlap" << YAML::Value << fe.welch.overlap;
    e << YAML::Key << "band_low" << YAML::Value << num(fe.band_low);
    e << YAML::Key << "band_high" << YAML::Value << num(fe.band_high);
    e << YAML::EndMap;

    const auto& tr = c.train;
    e << YAML::Key << "train" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "epochs" << YAML::Value << tr.epochs;
    e << YAML::Key << "batch_size" << YAML::Value << tr.batch_size;
    e << YAML::Key << "shuffle" << YAML::Value << yes(tr.shuffle);
    e << YAML::Key << "lr" << YAML::Value << num(tr.adam.lr);
    e << YAML::Key << "beta1" << YAML::Value << num(tr.adam.beta1);
    e << YAML::Key << "beta2" << YAML::Value << num(tr.adam.beta2);
    e << YAML::Key << "epsilon" << YAML::Value << num(tr.adam.epsilon);
    e << YAML::Key << "activation" << YAML::Value << (c.activation == Activation::Relu ? "relu" : "tanh");
    e << YAML::EndMap;

    e << YAML::Key << "split" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "ratio" << YAML::Value << num(c.split.ratio);
    e << YAML::Key << "mode" << YAML::Value << std::string(to_string(c.split.mode));
    e << YAML::Key << "report_trialwise" << YAML::Value << yes(c.split.report_trialwise);
    e << YAML::EndMap;

    e << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "dir" << YAML::Value << c.out_dir.string();
    e << YAML::EndMap;
    e << YAML::EndMap;
    return std::string(e.c_str()) + "\n";
}

}  // namespace eegmi
