#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>

#include "sdmforge/io_error.hpp"
#include "sdmforge/mesh.hpp"

namespace sdmforge {

inline void write_obj(const TriangleMesh& m, const std::string& path) {
    std::ostringstream os;
    os.precision(9);
    for (const Vec3& v : m.vertices) os << "v " << v.x << " " << v.y << " " << v.z << "\n";
    for (const auto& f : m.faces)
        os << "f " << f[0] + 1 << " " << f[1] + 1 << " " << f[2] + 1 << "\n";
    atomic_write_file(path, os.str());
}

inline TriangleMesh read_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open OBJ file: " + path);
    TriangleMesh m;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag == "v") {
            Vec3 v;
            if (!(ls >> v.x >> v.y >> v.z)) throw IoError("bad OBJ vertex line: " + line);
            m.vertices.push_back(v);
        } else if (tag == "f") {
            std::array<int, 3> f{};
            for (int k = 0; k < 3; ++k) {
                std::string tok;
                if (!(ls >> tok)) throw IoError("bad OBJ face line: " + line);
                // accept v, v/vt, v/vt/vn forms
                f[k] = std::stoi(tok.substr(0, tok.find('/'))) - 1;
                if (f[k] < 0) throw IoError("OBJ face index out of range: " + line);
            }
            m.faces.push_back(f);
        }
    }
    for (const auto& f : m.faces)
        for (int v : f)
            if (v >= static_cast<int>(m.vertices.size()))
                throw IoError("OBJ face references missing vertex in " + path);
    return m;
}

// Binary STL: 80-byte header, little-endian. Vertices are welded back
// together on read (exact float match) so closed meshes survive round trips.
inline void write_stl(const TriangleMesh& m, const std::string& path) {
    std::string buf;
    buf.resize(80, '\0');
    std::memcpy(buf.data(), "sdmforge binary stl", 19);
    const uint32_t n = static_cast<uint32_t>(m.faces.size());
    buf.append(reinterpret_cast<const char*>(&n), 4);
    for (std::size_t f = 0; f < m.faces.size(); ++f) {
        const Triangle t = m.triangle(f);
        const Vec3 nrm = t.raw_normal().normalized();
        float rec[12] = {
            static_cast<float>(nrm.x), static_cast<float>(nrm.y), static_cast<float>(nrm.z),
            static_cast<float>(t.a.x), static_cast<float>(t.a.y), static_cast<float>(t.a.z),
            static_cast<float>(t.b.x), static_cast<float>(t.b.y), static_cast<float>(t.b.z),
            static_cast<float>(t.c.x), static_cast<float>(t.c.y), static_cast<float>(t.c.z)};
        buf.append(reinterpret_cast<const char*>(rec), sizeof(rec));
        const uint16_t attr = 0;
        buf.append(reinterpret_cast<const char*>(&attr), 2);
    }
    atomic_write_file(path, buf);
}

inline TriangleMesh read_stl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open STL file: " + path);
    char header[80];
    in.read(header, 80);
    uint32_t n = 0;
    in.read(reinterpret_cast<char*>(&n), 4);
    if (!in) throw IoError("truncated STL header: " + path);
    TriangleMesh m;
    std::map<std::tuple<float, float, float>, int> weld;
    auto vertex_id = [&](float x, float y, float z) {
        const auto key = std::make_tuple(x, y, z);
        auto it = weld.find(key);
        if (it != weld.end()) return it->second;
        const int id = static_cast<int>(m.vertices.size());
        m.vertices.push_back({x, y, z});
        weld.emplace(key, id);
        return id;
    };
    for (uint32_t f = 0; f < n; ++f) {
        float rec[12];
        uint16_t attr;
        in.read(reinterpret_cast<char*>(rec), sizeof(rec));
        in.read(reinterpret_cast<char*>(&attr), 2);
        if (!in) throw IoError("truncated STL payload: " + path);
        m.faces.push_back({vertex_id(rec[3], rec[4], rec[5]), vertex_id(rec[6], rec[7], rec[8]),
                           vertex_id(rec[9], rec[10], rec[11])});
    }
    return m;
}

}  // namespace sdmforge
