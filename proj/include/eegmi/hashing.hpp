#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace eegmi {

/// Lower-case hex SHA-256 digest.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);
std::string sha256_file(const std::filesystem::path& path);

/// Deterministic 64-bit seed mixing (splitmix64 finalizer over both inputs).
std::uint64_t mix_seed(std::uint64_t global_seed, std::uint64_t salt);

}  // namespace eegmi
