#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "eegmi/edf.hpp"
#include "eegmi/montage.hpp"

namespace eegmi {

struct WindowSpec {
    std::size_t window_len = 560;  // 3.5 s at 160 Hz
    std::size_t stride = 1;

    /// Throws std::invalid_argument unless 1 <= stride <= window_len and window_len >= 2.
    void validate() const;
};

/// max(1, round(window_len * (1 - overlap_pct / 100))); overlap must be in [0, 100).
std::size_t stride_for_overlap(std::size_t window_len, double overlap_pct);

/// Window starts {0, s, 2s, ...} fitting inside `length` samples.
std::vector<std::size_t> segment(std::size_t length, const WindowSpec& spec);

/// floor((L - W) / s) + 1 when L >= W, else 0.
std::size_t segment_count(std::size_t length, const WindowSpec& spec);

enum class ClassLabel : int { MeLeft = 0, MeRight = 1, MiLeft = 2, MiRight = 3 };
inline constexpr int kNumClasses = 4;

std::string_view to_string(ClassLabel label);
ClassLabel make_label(TaskClass task, EventCode hand);

/// Identifies the annotated trial a window was cut from.
struct TrialKey {
    int subject = 0;
    int run = 0;
    int event_index = 0;

    auto operator<=>(const TrialKey&) const = default;
};

/// A cleaned, channel-selected run ready for segmentation.
struct RunSignal {
    int subject = 0;
    int run = 0;
    TaskClass task = TaskClass::MotorExecution;
    double fs = 160.0;
    std::vector<std::string> channels;
    Eigen::MatrixXd data;  // channels x samples
    std::vector<Event> events;

    std::size_t length() const { return static_cast<std::size_t>(data.cols()); }
};

struct LabeledWindow {
    const RunSignal* source = nullptr;
    std::size_t start = 0;
    std::size_t length = 0;
    ClassLabel label = ClassLabel::MeLeft;
    TrialKey trial;

    /// channels x length view into the source signal.
    auto view() const { return source->data.middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(length)); }
};

struct LabelingResult {
    std::vector<LabeledWindow> windows;
    std::size_t dropped_rest = 0;
    std::size_t dropped_tie = 0;
    std::size_t dropped_uncovered = 0;  // no annotation covers a strict majority

    std::size_t dropped() const { return dropped_rest + dropped_tie + dropped_uncovered; }
};

/// Labels each window by the annotation covering a strict majority of its
/// samples. Rest (T0) majorities, exact ties, and windows without a
/// majority annotation are dropped and counted.
LabelingResult label_windows(std::span<const std::size_t> starts, const RunSignal& run, std::size_t window_len);

}  // namespace eegmi
