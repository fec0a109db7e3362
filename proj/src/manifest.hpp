#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

namespace tipinet {

inline constexpr const char* kToolName = "tipinet";
inline constexpr const char* kToolVersion = "0.1.0";

std::uint64_t fnv1a64(std::span<const unsigned char> bytes);

// "fnv1a64:<16 hex digits>" over the file's bytes.
std::string fingerprint_file(const std::filesystem::path& path);

}  // namespace tipinet
