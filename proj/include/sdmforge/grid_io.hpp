#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "sdmforge/grid.hpp"
#include "sdmforge/io_error.hpp"

namespace sdmforge {

struct ClampInfo {
    bool applied = false;
    double lo = kClampLo;
    double hi = kClampHi;
};

// Legacy ASCII VTK structured points, hand-inspectable and viewable anywhere.
inline void write_vtk(const ScalarGrid& g, const std::string& path,
                      const std::string& title = "sdmforge signed distance map") {
    std::ostringstream os;
    os << "# vtk DataFile Version 3.0\n";
    os << title << "\n";
    os << "ASCII\n";
    os << "DATASET STRUCTURED_POINTS\n";
    os << "DIMENSIONS " << g.spec.nx << " " << g.spec.ny << " " << g.spec.nz << "\n";
    os.precision(9);
    os << "ORIGIN " << g.spec.origin.x << " " << g.spec.origin.y << " " << g.spec.origin.z
       << "\n";
    os << "SPACING " << g.spec.spacing << " " << g.spec.spacing << " " << g.spec.spacing << "\n";
    os << "POINT_DATA " << g.values.size() << "\n";
    os << "SCALARS sdm float 1\n";
    os << "LOOKUP_TABLE default\n";
    for (std::size_t i = 0; i < g.values.size(); ++i) {
        os << g.values[i];
        os << (((i + 1) % 9 == 0) ? '\n' : ' ');
    }
    if (g.values.size() % 9 != 0) os << "\n";
    atomic_write_file(path, os.str());
}

inline ScalarGrid read_vtk(const std::string& path) {
    std::istringstream in(read_file(path));
    std::string line;
    auto next_line = [&]() -> std::string {
        if (!std::getline(in, line)) throw IoError("truncated VTK file: " + path);
        return line;
    };
    if (next_line().rfind("# vtk DataFile", 0) != 0)
        throw IoError("not a legacy VTK file: " + path);
    next_line();  // title
    if (next_line() != "ASCII") throw IoError("expected ASCII VTK file: " + path);
    if (next_line() != "DATASET STRUCTURED_POINTS")
        throw IoError("expected STRUCTURED_POINTS dataset: " + path);

    GridSpec spec;
    std::size_t point_count = 0;
    for (int header = 0; header < 4; ++header) {
        std::istringstream ls(next_line());
        std::string tag;
        ls >> tag;
        if (tag == "DIMENSIONS")
            ls >> spec.nx >> spec.ny >> spec.nz;
        else if (tag == "ORIGIN")
            ls >> spec.origin.x >> spec.origin.y >> spec.origin.z;
        else if (tag == "SPACING") {
            double sy, sz;
            ls >> spec.spacing >> sy >> sz;
            if (spec.spacing != sy || spec.spacing != sz)
                throw IoError("anisotropic spacing not supported: " + path);
        } else if (tag == "POINT_DATA")
            ls >> point_count;
        else
            throw IoError("unexpected VTK header line '" + line + "' in " + path);
        if (!ls) throw IoError("bad VTK header line '" + line + "' in " + path);
    }
    if (next_line().rfind("SCALARS", 0) != 0) throw IoError("expected SCALARS in " + path);
    if (next_line().rfind("LOOKUP_TABLE", 0) != 0)
        throw IoError("expected LOOKUP_TABLE in " + path);

    spec.validate();
    if (point_count != spec.voxel_count())
        throw IoError("POINT_DATA count does not match DIMENSIONS in " + path);
    ScalarGrid g(spec);
    for (std::size_t i = 0; i < g.values.size(); ++i)
        if (!(in >> g.values[i])) throw IoError("truncated VTK value section: " + path);
    return g;
}

// Raw little-endian float32 payload + JSON sidecar. `base` yields base.raw
// and base.json.
inline void write_raw(const ScalarGrid& g, const std::string& base,
                      const ClampInfo& clamp = {}) {
    static_assert(sizeof(float) == 4);
    std::string bytes(reinterpret_cast<const char*>(g.values.data()),
                      g.values.size() * sizeof(float));
    atomic_write_file(base + ".raw", bytes);
    nlohmann::json j;
    j["version"] = 1;
    j["dims"] = {g.spec.nx, g.spec.ny, g.spec.nz};
    j["origin"] = {g.spec.origin.x, g.spec.origin.y, g.spec.origin.z};
    j["spacing"] = g.spec.spacing;
    j["order"] = "x-fastest";
    j["dtype"] = "float32-le";
    j["payload"] = std::filesystem::path(base + ".raw").filename().string();
    j["clamp"] = {{"applied", clamp.applied}, {"lo", clamp.lo}, {"hi", clamp.hi}};
    atomic_write_file(base + ".json", j.dump(2) + "\n");
}

inline ScalarGrid read_raw(const std::string& base) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(base + ".json"));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("cannot parse sidecar " + base + ".json: " + e.what());
    }
    GridSpec spec;
    spec.nx = j.at("dims")[0];
    spec.ny = j.at("dims")[1];
    spec.nz = j.at("dims")[2];
    spec.origin = {j.at("origin")[0], j.at("origin")[1], j.at("origin")[2]};
    spec.spacing = j.at("spacing");
    spec.validate();
    const std::string payload =
        (std::filesystem::path(base).parent_path() / j.at("payload").get<std::string>())
            .string();
    const std::string bytes = read_file(payload);
    if (bytes.size() != spec.voxel_count() * sizeof(float))
        throw IoError("raw payload " + payload + " has " + std::to_string(bytes.size()) +
                      " bytes but sidecar expects " +
                      std::to_string(spec.voxel_count() * sizeof(float)));
    ScalarGrid g(spec);
    std::memcpy(g.values.data(), bytes.data(), bytes.size());
    return g;
}

// Reads either a .vtk file or a raw+sidecar pair (pass the base or .raw path).
inline ScalarGrid read_grid_any(const std::string& path) {
    if (path.ends_with(".vtk")) return read_vtk(path);
    std::string base = path;
    for (const char* ext : {".raw", ".json"})
        if (base.ends_with(ext)) base = base.substr(0, base.size() - std::strlen(ext));
    return read_raw(base);
}

// One axis-aligned slice as an 8-bit PGM, values mapped linearly from
// [lo, hi] to [0, 255]; the header comment records the mapping.
inline void write_pgm_slice(const ScalarGrid& g, int axis, int index, const std::string& path,
                            double lo = kClampLo, double hi = kClampHi) {
    if (axis < 0 || axis > 2) throw std::invalid_argument("write_pgm_slice: axis must be 0..2");
    const int n_axis = axis == 0 ? g.spec.nx : (axis == 1 ? g.spec.ny : g.spec.nz);
    if (index < 0 || index >= n_axis)
        throw std::invalid_argument("write_pgm_slice: slice index out of range");
    const int ua = axis == 0 ? 1 : 0;
    const int va = axis == 2 ? 1 : 2;
    const int nu = ua == 0 ? g.spec.nx : g.spec.ny;
    const int nv = va == 1 ? g.spec.ny : g.spec.nz;

    std::ostringstream os;
    os << "P5\n";
    os << "# sdmforge slice axis=" << "xyz"[axis] << " index=" << index << " map=[" << lo << ","
       << hi << "]->[0,255]\n";
    os << nu << " " << nv << "\n255\n";
    for (int v = 0; v < nv; ++v)
        for (int u = 0; u < nu; ++u) {
            int ijk[3];
            ijk[axis] = index;
            ijk[ua] = u;
            ijk[va] = v;
            const double x = g.at(ijk[0], ijk[1], ijk[2]);
            const double t = std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
            os << static_cast<char>(static_cast<unsigned char>(std::lround(t * 255.0)));
        }
    atomic_write_file(path, os.str());
}

}  // namespace sdmforge
