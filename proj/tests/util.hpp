#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

namespace testutil {

namespace fs = std::filesystem;

/// Fresh empty directory under the build tree.
inline fs::path scratch(const std::string& name) {
    const fs::path dir = fs::path(MFVIS_TEST_TMP) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

inline std::vector<char> read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline fs::path source_path(const std::string& rel) { return fs::path(MFVIS_SOURCE_DIR) / rel; }

}  // namespace testutil
