#pragma once

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "eegmi/edf.hpp"

namespace eegmi {

class MissingChannelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Ordered electrode selection.
struct Montage {
    std::vector<std::string> names;

    std::size_t size() const { return names.size(); }
};

/// The 46 sensor-pair electrodes over motor, parietal, frontal, temporal and
/// occipital sites used by the classifier.
Montage motor_montage();

/// Lower-cases and strips trailing dots/whitespace ("Fc5." -> "fc5").
std::string normalize_channel_name(std::string_view name);

/// Restricts and reorders `recording` to the montage order.
/// Throws MissingChannelError for any name with no match.
Recording select_channels(const Recording& recording, const Montage& montage);

enum class TaskClass { MotorExecution, MotorImagery };

std::string_view to_string(TaskClass task);

/// ME -> {3, 7, 11}; MI -> {4, 8, 12}.
std::set<int> runs_for_task(TaskClass task);

std::optional<TaskClass> task_for_run(int run_id);

}  // namespace eegmi
