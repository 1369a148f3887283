#include "eegmi/montage.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>

namespace eegmi {

Montage motor_montage() {
    return Montage{{"FC5", "FC6", "FC3", "FC4", "FC1", "FC2", "C3",  "C4",  "CP5", "CP6", "CP3", "CP4",
                    "CP1", "CP2", "FP1", "FP2", "AF7", "AF8", "AF3", "AF4", "PO7", "PO8", "O1",  "O2",
                    "F5",  "F6",  "F7",  "F8",  "F1",  "F2",  "T7",  "T8",  "T9",  "T10", "TP7", "TP8",
                    "P5",  "P6",  "P3",  "P4",  "P1",  "P2",  "PO3", "PO4", "Cz",  "CPz"}};
}

std::string normalize_channel_name(std::string_view name) {
    while (!name.empty() && (name.back() == '.' || std::isspace(static_cast<unsigned char>(name.back()))))
        name.remove_suffix(1);
    while (!name.empty() && std::isspace(static_cast<unsigned char>(name.front()))) name.remove_prefix(1);
    std::string out(name);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

Recording select_channels(const Recording& recording, const Montage& montage) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < recording.channels.size(); ++i)
        index.emplace(normalize_channel_name(recording.channels[i]), i);

    Recording out;
    out.fs = recording.fs;
    out.events = recording.events;
    out.subject_id = recording.subject_id;
    out.run_id = recording.run_id;
    out.channels.reserve(montage.size());
    out.data.reserve(montage.size());
    for (const auto& name : montage.names) {
        auto it = index.find(normalize_channel_name(name));
        if (it == index.end()) throw MissingChannelError("channel '" + name + "' not present in recording");
        out.channels.push_back(recording.channels[it->second]);
        out.data.push_back(recording.data[it->second]);
    }
    return out;
}

std::string_view to_string(TaskClass task) {
    return task == TaskClass::MotorExecution ? "ME" : "MI";
}

std::set<int> runs_for_task(TaskClass task) {
    if (task == TaskClass::MotorExecution) return {3, 7, 11};
    return {4, 8, 12};
}

std::optional<TaskClass> task_for_run(int run_id) {
    for (auto task : {TaskClass::MotorExecution, TaskClass::MotorImagery})
        if (runs_for_task(task).contains(run_id)) return task;
    return std::nullopt;
}

}  // namespace eegmi
