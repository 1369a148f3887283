#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "eegmi/windowing.hpp"

namespace eegmi {

inline constexpr std::uint32_t kSignalFormatVersion = 1;

/// Little-endian binary container for one run:
///   "EEGMISIG" | u32 version | i32 subject | i32 run | u32 task | f64 fs
///   | u32 channels | u64 samples | per channel: u32 length + name bytes
///   | u32 events | per event: u32 code, f64 onset, f64 duration
///   | channels x samples f64, channel-major.
std::vector<std::uint8_t> encode_signal(const RunSignal& signal);
RunSignal decode_signal(const std::vector<std::uint8_t>& bytes);

void save_signal(const RunSignal& signal, const std::filesystem::path& path);
RunSignal load_signal(const std::filesystem::path& path);

}  // namespace eegmi
