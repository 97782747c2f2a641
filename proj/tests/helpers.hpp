#pragma once

#include <array>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "sdmforge/cochlea.hpp"
#include "sdmforge/grid.hpp"
#include "sdmforge/mesh.hpp"

namespace sdmforge::testing {

// Axis-aligned unit cube [0,1]^3, 12 outward triangles.
inline TriangleMesh unit_cube_mesh() {
    TriangleMesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                  {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
    m.faces = {{0, 3, 2}, {0, 2, 1},   // z = 0
               {4, 5, 6}, {4, 6, 7},   // z = 1
               {0, 1, 5}, {0, 5, 4},   // y = 0
               {1, 2, 6}, {1, 6, 5},   // x = 1
               {2, 3, 7}, {2, 7, 6},   // y = 1
               {3, 0, 4}, {3, 4, 7}};  // x = 0
    m.build_pseudonormals();
    return m;
}

inline TriangleMesh regular_tetrahedron() {
    TriangleMesh m;
    m.vertices = {{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
    m.faces = {{0, 1, 2}, {0, 2, 3}, {0, 3, 1}, {1, 3, 2}};
    m.build_pseudonormals();
    return m;
}

// Subdivided icosahedron projected to the given radius.
inline TriangleMesh icosphere(int subdivisions, double radius, Vec3 center = {}) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    TriangleMesh m;
    m.vertices = {{-1, t, 0}, {1, t, 0},   {-1, -t, 0}, {1, -t, 0},
                  {0, -1, t}, {0, 1, t},   {0, -1, -t}, {0, 1, -t},
                  {t, 0, -1}, {t, 0, 1},   {-t, 0, -1}, {-t, 0, 1}};
    for (Vec3& v : m.vertices) v = v.normalized();
    m.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
               {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
               {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
               {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            const int id = static_cast<int>(m.vertices.size());
            m.vertices.push_back(((m.vertices[a] + m.vertices[b]) * 0.5).normalized());
            midpoint.emplace(key, id);
            return id;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(m.faces.size() * 4);
        for (const auto& f : m.faces) {
            const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        m.faces = std::move(next);
    }
    for (Vec3& v : m.vertices) v = v * radius + center;
    m.build_pseudonormals();
    return m;
}

// Exact signed distance field of a sphere, negative inside.
inline ScalarGrid analytic_sphere_sdm(double radius, const GridSpec& g, Vec3 center = {}) {
    ScalarGrid out(g);
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                out.at(i, j, k) =
                    static_cast<float>(distance(g.voxel_center(i, j, k), center) - radius);
    return out;
}

inline GridSpec small_grid(int nx, int ny, int nz, double spacing, Vec3 origin) {
    GridSpec g;
    g.nx = nx;
    g.ny = ny;
    g.nz = nz;
    g.spacing = spacing;
    g.origin = origin;
    return g;
}

inline ShapeParams default_shape() { return {3.5, 0.6, 0.15, 0.0}; }

}  // namespace sdmforge::testing
