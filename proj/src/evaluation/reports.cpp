#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "eegmi/evaluation.hpp"
#include "eegmi/numeric_text.hpp"

namespace eegmi {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

std::string class_name(int c) { return std::string(to_string(static_cast<ClassLabel>(c))); }

std::string fixed(double v, int digits) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(digits);
    s << v;
    return s.str();
}

std::string escape_xml(const std::string& in) {
    std::string out;
    for (char ch : in) {
        switch (ch) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

}  // namespace

void write_metrics_csv(const ConfusionAndMetrics& result, const std::filesystem::path& path) {
    std::string out = "class,precision,recall,f1,support,no_predictions\n";
    const auto& m = result.metrics;
    for (int c = 0; c < kNumClasses; ++c) {
        const auto& cm = m.classes[static_cast<std::size_t>(c)];
        out += class_name(c) + ',';
        append_double(out, cm.precision);
        out += ',';
        append_double(out, cm.recall);
        out += ',';
        append_double(out, cm.f1);
        out += ',' + std::to_string(cm.support) + ',' + (cm.no_predictions ? "1" : "0") + '\n';
    }
    out += "accuracy,,,";
    append_double(out, m.accuracy);
    out += ',' + std::to_string(m.total) + ",\n";
    write_text(path, out);
}

void write_confusion_csv(const ConfusionMatrix& confusion, const std::filesystem::path& path) {
    std::string out = "true\\predicted";
    for (int c = 0; c < kNumClasses; ++c) out += ',' + class_name(c);
    out += '\n';
    for (int t = 0; t < kNumClasses; ++t) {
        out += class_name(t);
        for (int p = 0; p < kNumClasses; ++p)
            out += ',' + std::to_string(confusion.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)]);
        out += '\n';
    }
    write_text(path, out);
}

void write_history_csv(const TrainHistory& history, const std::filesystem::path& path) {
    std::string out = "epoch,train_loss,train_accuracy,train_mse,val_loss,val_accuracy,val_mse,best\n";
    for (std::size_t e = 0; e < history.epochs.size(); ++e) {
        const auto& r = history.epochs[e];
        out += std::to_string(e + 1);
        for (double v : {r.train_loss, r.train_accuracy, r.train_mse, r.val_loss, r.val_accuracy, r.val_mse}) {
            out += ',';
            append_double(out, v);
        }
        out += static_cast<int>(e) == history.best_epoch ? ",1\n" : ",0\n";
    }
    write_text(path, out);
}

void write_subjects_csv(const IntraSubjectReport& report, const std::filesystem::path& path) {
    std::string out = "subject,status,train_accuracy,val_accuracy,test_accuracy,trialwise_accuracy,windows,error\n";
    for (const auto& s : report.subjects) {
        out += std::to_string(s.subject) + ',' + (s.ok ? "ok" : "failed") + ',';
        if (s.ok) {
            append_double(out, s.train_accuracy);
            out += ',';
            append_double(out, s.val_accuracy);
            out += ',';
            append_double(out, s.test_accuracy);
            out += ',';
            if (s.trialwise_accuracy) append_double(out, *s.trialwise_accuracy);
        } else {
            out += ",,,";
        }
        std::string err = s.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        out += ',' + std::to_string(s.windows) + ',' + err + '\n';
    }
    out += "mean,,,,";
    append_double(out, report.mean_accuracy);
    out += ",,,\nstd,,,,";
    append_double(out, report.std_accuracy);
    out += ",,,\n";
    write_text(path, out);
}

void write_sweep_csv(const SweepReport& report, const std::filesystem::path& path, bool include_time) {
    std::string out = "window_sec,overlap_pct,window_len,stride,windows,train_accuracy,val_accuracy,status";
    out += include_time ? ",seconds\n" : "\n";
    for (const auto& r : report.rows) {
        append_double(out, r.config.window_sec);
        out += ',';
        append_double(out, r.config.overlap_pct);
        out += ',' + std::to_string(r.window_len) + ',' + std::to_string(r.stride) + ',' + std::to_string(r.windows) + ',';
        if (r.ok) {
            append_double(out, r.train_accuracy);
            out += ',';
            append_double(out, r.val_accuracy);
            out += ",ok";
        } else {
            out += ",,failed";
        }
        if (include_time) out += ',' + fixed(r.seconds, 3);
        out += '\n';
    }
    write_text(path, out);
}

std::string svg_line_plot(const std::string& title, const std::string& y_label, std::span<const PlotSeries> series) {
    constexpr double kW = 640, kH = 400, kLeft = 60, kRight = 130, kTop = 40, kBottom = 50;
    static const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

    std::size_t n = 0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& s : series) {
        n = std::max(n, s.values.size());
        for (double v : s.values)
            if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
    }
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
    const double pw = kW - kLeft - kRight;
    const double ph = kH - kTop - kBottom;
    auto sx = [&](std::size_t i) { return kLeft + (n > 1 ? pw * static_cast<double>(i) / static_cast<double>(n - 1) : pw / 2); };
    auto sy = [&](double v) { return kTop + ph * (1.0 - (v - lo) / (hi - lo)); };

    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
    svg += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
    svg += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
           escape_xml(title) + "</text>\n";
    svg += "<g stroke=\"black\" stroke-width=\"1\">";
    svg += "<line x1=\"" + fixed(kLeft, 1) + "\" y1=\"" + fixed(kTop + ph, 1) + "\" x2=\"" + fixed(kLeft + pw, 1) +
           "\" y2=\"" + fixed(kTop + ph, 1) + "\"/>";
    svg += "<line x1=\"" + fixed(kLeft, 1) + "\" y1=\"" + fixed(kTop, 1) + "\" x2=\"" + fixed(kLeft, 1) + "\" y2=\"" +
           fixed(kTop + ph, 1) + "\"/></g>\n";
    svg += "<g font-family=\"sans-serif\" font-size=\"11\">\n";
    for (int t = 0; t <= 4; ++t) {
        const double v = lo + (hi - lo) * t / 4.0;
        svg += "<text x=\"" + fixed(kLeft - 6, 1) + "\" y=\"" + fixed(sy(v) + 4, 1) + "\" text-anchor=\"end\">" +
               fixed(v, 3) + "</text>\n";
    }
    if (n > 0) {
        svg += "<text x=\"" + fixed(sx(0), 1) + "\" y=\"" + fixed(kTop + ph + 16, 1) + "\" text-anchor=\"middle\">1</text>\n";
        svg += "<text x=\"" + fixed(sx(n - 1), 1) + "\" y=\"" + fixed(kTop + ph + 16, 1) +
               "\" text-anchor=\"middle\">" + std::to_string(n) + "</text>\n";
    }
    svg += "<text x=\"" + fixed(kLeft + pw / 2, 1) + "\" y=\"" + fixed(kH - 12, 1) +
           "\" text-anchor=\"middle\">epoch</text>\n";
    svg += "<text x=\"16\" y=\"" + fixed(kTop + ph / 2, 1) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
           fixed(kTop + ph / 2, 1) + ")\">" + escape_xml(y_label) + "</text>\n</g>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = kColors[k % std::size(kColors)];
        std::string pts;
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            if (!std::isfinite(s.values[i])) continue;
            if (!pts.empty()) pts += ' ';
            pts += fixed(sx(i), 2) + ',' + fixed(sy(s.values[i]), 2);
        }
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + pts +
               "\"/>\n";
        const double ly = kTop + 14 + 18.0 * static_cast<double>(k);
        svg += "<line x1=\"" + fixed(kW - kRight + 10, 1) + "\" y1=\"" + fixed(ly - 4, 1) + "\" x2=\"" +
               fixed(kW - kRight + 30, 1) + "\" y2=\"" + fixed(ly - 4, 1) + "\" stroke=\"" + color +
               "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + fixed(kW - kRight + 36, 1) + "\" y=\"" + fixed(ly, 1) +
               "\" font-family=\"sans-serif\" font-size=\"11\">" + escape_xml(s.name) + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

void write_history_plots(const TrainHistory& history, const std::filesystem::path& dir, const std::string& stem) {
    PlotSeries tr_acc{"train", {}}, va_acc{"validation", {}}, tr_loss{"train", {}}, va_loss{"validation", {}};
    for (const auto& e : history.epochs) {
        tr_acc.values.push_back(e.train_accuracy);
        va_acc.values.push_back(e.val_accuracy);
        tr_loss.values.push_back(e.train_loss);
        va_loss.values.push_back(e.val_loss);
    }
    const PlotSeries acc[] = {tr_acc, va_acc};
    const PlotSeries loss[] = {tr_loss, va_loss};
    write_text(dir / (stem + "_accuracy.svg"), svg_line_plot(stem + " accuracy", "accuracy", acc));
    write_text(dir / (stem + "_loss.svg"), svg_line_plot(stem + " loss", "loss", loss));
}

}  // namespace eegmi
