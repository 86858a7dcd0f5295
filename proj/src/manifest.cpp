#include "lsd/manifest.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "lsd/errors.hpp"

namespace lsd::cli {

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t hash = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    return hash;
}

std::string checksum_hex(std::string_view bytes) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

std::string checksum_file_hex(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open input for checksum: " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return checksum_hex(buffer.str());
}

std::string RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["tool_version"] = tool_version;
    j["input_paths"] = input_paths;
    j["output_dir"] = output_dir;
    j["parameters"] = parameters;
    j["config_checksums"] = config_checksums;
    return j.dump(2) + "\n";
}

void RunManifest::write() const {
    const std::filesystem::path path = std::filesystem::path(output_dir) / "manifest.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write manifest: " + path.string());
    }
    out << to_json();
}

} // namespace lsd::cli
