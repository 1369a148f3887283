#include "eegmi/windowing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace eegmi {

void WindowSpec::validate() const {
    if (window_len < 2) throw std::invalid_argument("window length must be at least 2 samples");
    if (stride < 1 || stride > window_len) throw std::invalid_argument("stride must be in 1..window length");
}

std::size_t stride_for_overlap(std::size_t window_len, double overlap_pct) {
    if (!(overlap_pct >= 0.0) || overlap_pct >= 100.0)
        throw std::invalid_argument("overlap must be in [0, 100) percent");
    const double s = std::round(static_cast<double>(window_len) * (1.0 - overlap_pct / 100.0));
    return std::max<std::size_t>(1, static_cast<std::size_t>(s));
}

std::size_t segment_count(std::size_t length, const WindowSpec& spec) {
    spec.validate();
    if (length < spec.window_len) return 0;
    return (length - spec.window_len) / spec.stride + 1;
}

std::vector<std::size_t> segment(std::size_t length, const WindowSpec& spec) {
    const std::size_t count = segment_count(length, spec);
    std::vector<std::size_t> starts(count);
    for (std::size_t i = 0; i < count; ++i) starts[i] = i * spec.stride;
    return starts;
}

std::string_view to_string(ClassLabel label) {
    switch (label) {
        case ClassLabel::MeLeft: return "ME-Left";
        case ClassLabel::MeRight: return "ME-Right";
        case ClassLabel::MiLeft: return "MI-Left";
        case ClassLabel::MiRight: return "MI-Right";
    }
    return "?";
}

ClassLabel make_label(TaskClass task, EventCode hand) {
    if (hand == EventCode::T0) throw std::invalid_argument("rest annotations carry no class");
    const bool left = hand == EventCode::T1;
    if (task == TaskClass::MotorExecution) return left ? ClassLabel::MeLeft : ClassLabel::MeRight;
    return left ? ClassLabel::MiLeft : ClassLabel::MiRight;
}

LabelingResult label_windows(std::span<const std::size_t> starts, const RunSignal& run, std::size_t window_len) {
    struct Span {
        std::size_t begin, end;
        EventCode code;
        int index;
    };
    std::vector<Span> spans;
    for (std::size_t i = 0; i < run.events.size(); ++i) {
        const auto& e = run.events[i];
        auto b = static_cast<std::size_t>(std::llround(e.onset * run.fs));
        auto en = static_cast<std::size_t>(std::llround((e.onset + e.duration) * run.fs));
        en = std::min(en, run.length());
        if (en > b) spans.push_back({b, en, e.code, static_cast<int>(i)});
    }

    LabelingResult out;
    std::size_t first_span = 0;
    for (std::size_t start : starts) {
        const std::size_t end = start + window_len;
        if (end > run.length()) throw std::out_of_range("window extends past the end of the run");
        while (first_span < spans.size() && spans[first_span].end <= start) ++first_span;

        std::size_t best = 0, second = 0;
        const Span* winner = nullptr;
        for (std::size_t k = first_span; k < spans.size() && spans[k].begin < end; ++k) {
            const std::size_t cover = std::min(end, spans[k].end) - std::max(start, spans[k].begin);
            if (cover > best) {
                second = best;
                best = cover;
                winner = &spans[k];
            } else if (cover > second) {
                second = cover;
            }
        }
        if (winner && best == second) {
            ++out.dropped_tie;
        } else if (!winner || 2 * best <= window_len) {
            ++out.dropped_uncovered;
        } else if (winner->code == EventCode::T0) {
            ++out.dropped_rest;
        } else {
            LabeledWindow w;
            w.source = &run;
            w.start = start;
            w.length = window_len;
            w.label = make_label(run.task, winner->code);
            w.trial = TrialKey{run.subject, run.run, winner->index};
            out.windows.push_back(w);
        }
    }
    return out;
}

}  // namespace eegmi
