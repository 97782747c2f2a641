#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sdmforge/rng.hpp"
#include "sdmforge/triangle.hpp"
#include "sdmforge/vec3.hpp"

namespace sdmforge {

inline constexpr double kOnSurfaceEps = 1e-9;  // mm

// Indexed triangle surface. Pseudonormal caches are filled by
// build_pseudonormals(), which also checks the closed-manifold contract;
// open triangle soups (e.g. extracted isosurfaces) may skip that step and
// only use the raw vertices/faces plus face normals.
struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;

    // caches
    std::vector<Vec3> face_normals;          // unit
    std::vector<Vec3> vertex_pseudonormals;  // unit, angle-weighted
    std::vector<Vec3> edge_pseudonormals;    // unit, mean of the 2 adjacent face normals
    std::vector<std::array<int, 3>> face_edge_ids;  // edge id of face edge k = (v_k, v_{k+1})
    bool pseudonormals_ready = false;

    std::size_t face_count() const { return faces.size(); }
    std::size_t vertex_count() const { return vertices.size(); }

    Triangle triangle(std::size_t f) const {
        const auto& fc = faces[f];
        return {vertices[fc[0]], vertices[fc[1]], vertices[fc[2]]};
    }

    double signed_volume() const {
        double v6 = 0.0;
        for (const auto& f : faces) {
            const Vec3& a = vertices[f[0]];
            const Vec3& b = vertices[f[1]];
            const Vec3& c = vertices[f[2]];
            v6 += a.dot(b.cross(c));
        }
        return v6 / 6.0;
    }

    // V - E + F over the unique undirected edge set.
    long euler_characteristic() const {
        std::map<std::pair<int, int>, int> edges;
        for (const auto& f : faces)
            for (int k = 0; k < 3; ++k) {
                int u = f[k], v = f[(k + 1) % 3];
                if (u > v) std::swap(u, v);
                edges[{u, v}]++;
            }
        return static_cast<long>(vertices.size()) - static_cast<long>(edges.size()) +
               static_cast<long>(faces.size());
    }

    void compute_face_normals() {
        face_normals.resize(faces.size());
        for (std::size_t f = 0; f < faces.size(); ++f) {
            const Triangle t = triangle(f);
            if (t.degenerate())
                throw std::runtime_error("mesh: degenerate face #" + std::to_string(f));
            face_normals[f] = t.raw_normal().normalized();
        }
    }

    // Fills all pseudonormal caches. Requires a closed, consistently wound,
    // outward-oriented 2-manifold; reports the offending edge otherwise.
    void build_pseudonormals() {
        compute_face_normals();

        // Map undirected edge -> id, tracking both directed occurrences.
        std::map<std::pair<int, int>, std::array<int, 2>> edge_dir_count;  // (fwd, rev)
        std::map<std::pair<int, int>, std::vector<int>> edge_faces;
        face_edge_ids.assign(faces.size(), {-1, -1, -1});
        for (std::size_t f = 0; f < faces.size(); ++f)
            for (int k = 0; k < 3; ++k) {
                const int u = faces[f][k], v = faces[f][(k + 1) % 3];
                if (u == v)
                    throw std::runtime_error("mesh: face #" + std::to_string(f) +
                                             " repeats vertex " + std::to_string(u));
                const std::pair<int, int> key = std::minmax(u, v);
                auto& cnt = edge_dir_count[key];
                cnt[u < v ? 0 : 1]++;
                edge_faces[key].push_back(static_cast<int>(f));
            }

        for (const auto& [key, cnt] : edge_dir_count) {
            const std::string ename =
                "(" + std::to_string(key.first) + "," + std::to_string(key.second) + ")";
            const int total = cnt[0] + cnt[1];
            if (total != 2)
                throw std::runtime_error("mesh not closed: edge " + ename + " borders " +
                                         std::to_string(total) + " faces (expected 2)");
            if (cnt[0] != 1 || cnt[1] != 1)
                throw std::runtime_error("mesh inconsistently wound at edge " + ename);
        }

        if (signed_volume() <= 0.0)
            throw std::runtime_error("mesh: winding encloses negative volume (normals point inward)");

        // Edge pseudonormals, one per undirected edge.
        edge_pseudonormals.clear();
        edge_pseudonormals.reserve(edge_faces.size());
        std::map<std::pair<int, int>, int> edge_ids;
        for (const auto& [key, fs] : edge_faces) {
            const Vec3 n = (face_normals[fs[0]] + face_normals[fs[1]]).normalized();
            edge_ids[key] = static_cast<int>(edge_pseudonormals.size());
            edge_pseudonormals.push_back(n);
        }
        for (std::size_t f = 0; f < faces.size(); ++f)
            for (int k = 0; k < 3; ++k) {
                const std::pair<int, int> key = std::minmax(faces[f][k], faces[f][(k + 1) % 3]);
                face_edge_ids[f][k] = edge_ids.at(key);
            }

        // Angle-weighted vertex pseudonormals.
        vertex_pseudonormals.assign(vertices.size(), Vec3{});
        for (std::size_t f = 0; f < faces.size(); ++f)
            for (int k = 0; k < 3; ++k) {
                const Vec3& p0 = vertices[faces[f][k]];
                const Vec3& p1 = vertices[faces[f][(k + 1) % 3]];
                const Vec3& p2 = vertices[faces[f][(k + 2) % 3]];
                const Vec3 e1 = (p1 - p0).normalized();
                const Vec3 e2 = (p2 - p0).normalized();
                const double cosang = std::clamp(e1.dot(e2), -1.0, 1.0);
                vertex_pseudonormals[faces[f][k]] += face_normals[f] * std::acos(cosang);
            }
        for (auto& n : vertex_pseudonormals) n = n.normalized();

        pseudonormals_ready = true;
    }

    // Pseudonormal for the feature carrying a closest point on face f.
    const Vec3& region_normal(int f, ClosestRegion region) const {
        if (region == ClosestRegion::face) return face_normals[f];
        if (region_is_vertex(region)) return vertex_pseudonormals[faces[f][static_cast<int>(region)]];
        return edge_pseudonormals[face_edge_ids[f][static_cast<int>(region) - 3]];
    }
};

inline std::pair<Vec3, Vec3> mesh_bounds(const TriangleMesh& m) {
    if (m.vertices.empty()) throw std::invalid_argument("mesh_bounds: empty mesh");
    Vec3 lo = m.vertices[0], hi = m.vertices[0];
    for (const Vec3& v : m.vertices) {
        lo = Vec3::min(lo, v);
        hi = Vec3::max(hi, v);
    }
    return {lo, hi};
}

struct NearestTriangle {
    double dist = 0.0;
    int face = -1;
    ClosestRegion region = ClosestRegion::face;
    Vec3 point{};
};

// Exact nearest feature by exhaustive scan; ties broken toward the lowest
// face index so every engine picks the same feature.
inline NearestTriangle nearest_point_naive(const Vec3& p, const TriangleMesh& m) {
    NearestTriangle best;
    best.dist = std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < m.faces.size(); ++f) {
        const ClosestPoint cp = point_triangle_closest(p, m.triangle(f));
        if (cp.dist < best.dist) best = {cp.dist, static_cast<int>(f), cp.region, cp.point};
    }
    return best;
}

// Signed distance from a resolved nearest feature, negative inside.
inline double signed_distance_from(const Vec3& p, const TriangleMesh& m,
                                   const NearestTriangle& hit) {
    const Vec3& n = m.region_normal(hit.face, hit.region);
    return (p - hit.point).dot(n) >= 0.0 ? hit.dist : -hit.dist;
}

namespace detail {

struct RayHitScan {
    int crossings = 0;
    bool risky = false;
};

// Moller-Trumbore crossing count for ray p + t*d, t > 0. Flags hits too close
// to edges/vertices or to the ray origin for a retry with another direction.
inline RayHitScan count_ray_crossings(const Vec3& p, const Vec3& d, const TriangleMesh& m) {
    RayHitScan out;
    constexpr double kBaryEps = 1e-9;
    for (std::size_t f = 0; f < m.faces.size(); ++f) {
        const Triangle t = m.triangle(f);
        const Vec3 e1 = t.b - t.a;
        const Vec3 e2 = t.c - t.a;
        const Vec3 pv = d.cross(e2);
        const double det = e1.dot(pv);
        const double scale = e1.norm() * e2.norm();
        if (std::abs(det) < 1e-12 * scale) {
            // Ray (nearly) parallel to this triangle's plane: grazing is only
            // possible when the origin sits essentially in that plane.
            const Vec3 n = e1.cross(e2);
            const double nn = n.norm();
            if (nn > 0.0 && std::abs((p - t.a).dot(n)) < 1e-6 * nn) {
                out.risky = true;
                return out;
            }
            continue;
        }
        const double inv = 1.0 / det;
        const Vec3 tv = p - t.a;
        const double u = tv.dot(pv) * inv;
        if (u < -kBaryEps || u > 1.0 + kBaryEps) continue;
        const Vec3 qv = tv.cross(e1);
        const double v = d.dot(qv) * inv;
        if (v < -kBaryEps || u + v > 1.0 + kBaryEps) continue;
        const double tt = e2.dot(qv) * inv;
        if (tt <= 0.0) continue;
        if (u < kBaryEps || v < kBaryEps || u + v > 1.0 - kBaryEps || tt < kBaryEps) {
            out.risky = true;
            return out;
        }
        out.crossings++;
    }
    return out;
}

}  // namespace detail

// Ray-parity inside test; independent of the pseudonormal machinery and used
// as its oracle. Errors if p lies on the surface.
inline bool point_in_mesh(const Vec3& p, const TriangleMesh& m) {
    const NearestTriangle near = nearest_point_naive(p, m);
    if (near.dist <= kOnSurfaceEps)
        throw std::invalid_argument("point_in_mesh: point lies on the surface");

    Rng rng(0x5eed0123456789abull);
    for (int attempt = 0; attempt < 32; ++attempt) {
        Vec3 d{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        const double n = d.norm();
        if (n < 0.1) continue;
        d = d / n;
        const auto scan = detail::count_ray_crossings(p, d, m);
        if (scan.risky) continue;
        return (scan.crossings % 2) == 1;
    }
    throw std::runtime_error("point_in_mesh: no clean ray found after 32 attempts");
}

}  // namespace sdmforge
