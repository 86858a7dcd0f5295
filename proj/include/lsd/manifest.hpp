// Reproducibility record written alongside every output set.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace lsd::cli {

inline constexpr const char* kToolVersion = "0.1.0";

// FNV-1a 64-bit content hashes; cheap, stable, dependency-free.
std::uint64_t fnv1a64(std::string_view bytes);
std::string checksum_hex(std::string_view bytes);
std::string checksum_file_hex(const std::filesystem::path& path);

struct RunManifest {
    std::string command;
    std::vector<std::string> input_paths;
    std::string output_dir;
    std::map<std::string, std::string> parameters;
    std::map<std::string, std::string> config_checksums;  // input path -> hex
    std::string tool_version = kToolVersion;

    std::string to_json() const;
    // Writes <output_dir>/manifest.json.
    void write() const;
};

} // namespace lsd::cli
