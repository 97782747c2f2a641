#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

namespace sdmforge {

// File/format failures; the CLI maps these to exit code 3.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Missing trained model or other required artifact; CLI exit code 4.
struct ArtifactError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Write-to-temp + rename so readers never observe a partial file.
inline void atomic_write_file(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + tmp);
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw IoError("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw IoError("rename failed: " + tmp + " -> " + path);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return data;
}

}  // namespace sdmforge
