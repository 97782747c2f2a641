#pragma once

#include <array>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "sdmforge/bvh.hpp"
#include "sdmforge/grid.hpp"
#include "sdmforge/mc_tables.hpp"
#include "sdmforge/mesh.hpp"
#include "sdmforge/rng.hpp"

namespace sdmforge {

// Triangle surface extracted from a level set. Closure is not guaranteed;
// vertices lie on grid-cell edges between voxels straddling the iso value.
struct IsoMesh {
    TriangleMesh mesh;
    GridSpec source;
    double iso = 0.0;
    bool empty_warning = false;  // iso outside the grid's value range
};

// Standard 256-case marching cubes with shared, linearly interpolated edge
// vertices. Triangles are wound so normals point toward increasing values
// (outward for an inside-negative SDM).
inline IsoMesh marching_cubes(const ScalarGrid& s, double iso) {
    const GridSpec& g = s.spec;
    IsoMesh out;
    out.source = g;
    out.iso = iso;

    float vmin = s.values[0], vmax = s.values[0];
    for (float v : s.values) {
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
    }
    if (!(iso > vmin && iso < vmax)) {
        out.empty_warning = true;
        return out;
    }

    // one shared vertex per lattice edge; -1 = not created yet
    const std::size_t nvox = g.voxel_count();
    std::array<std::vector<int>, 3> edge_vertex;
    for (auto& ev : edge_vertex) ev.assign(nvox, -1);

    auto vertex_on_edge = [&](int i, int j, int k, int axis) -> int {
        const std::size_t base = g.index(i, j, k);
        int& slot = edge_vertex[axis][base];
        if (slot >= 0) return slot;
        const int i2 = i + (axis == 0), j2 = j + (axis == 1), k2 = k + (axis == 2);
        const double v1 = s.at(i, j, k);
        const double v2 = s.at(i2, j2, k2);
        const double t = (iso - v1) / (v2 - v1);
        const Vec3 p1 = g.voxel_center(i, j, k);
        const Vec3 p2 = g.voxel_center(i2, j2, k2);
        slot = static_cast<int>(out.mesh.vertices.size());
        out.mesh.vertices.push_back(p1 + (p2 - p1) * t);
        return slot;
    };

    // cube edge -> (corner voxel offset, axis)
    auto cell_edge_vertex = [&](int i, int j, int k, int e) -> int {
        const int c0 = detail::kMcEdgeCorners[e][0];
        const int c1 = detail::kMcEdgeCorners[e][1];
        const auto& o0 = detail::kMcCornerOffset[c0];
        const auto& o1 = detail::kMcCornerOffset[c1];
        int axis = 0;
        for (int a = 0; a < 3; ++a)
            if (o0[a] != o1[a]) axis = a;
        const int bi = i + std::min(o0[0], o1[0]);
        const int bj = j + std::min(o0[1], o1[1]);
        const int bk = k + std::min(o0[2], o1[2]);
        return vertex_on_edge(bi, bj, bk, axis);
    };

    for (int k = 0; k + 1 < g.nz; ++k)
        for (int j = 0; j + 1 < g.ny; ++j)
            for (int i = 0; i + 1 < g.nx; ++i) {
                int ci = 0;
                for (int c = 0; c < 8; ++c) {
                    const auto& o = detail::kMcCornerOffset[c];
                    if (s.at(i + o[0], j + o[1], k + o[2]) < iso) ci |= 1 << c;
                }
                if (detail::kMcEdgeTable[ci] == 0) continue;
                const int8_t* row = detail::kMcTriTable[ci];
                for (int t = 0; row[t] != -1; t += 3) {
                    const int a = cell_edge_vertex(i, j, k, row[t]);
                    const int b = cell_edge_vertex(i, j, k, row[t + 1]);
                    const int c = cell_edge_vertex(i, j, k, row[t + 2]);
                    if (a == b || b == c || a == c) continue;
                    const Triangle tri{out.mesh.vertices[a], out.mesh.vertices[b],
                                       out.mesh.vertices[c]};
                    if (tri.degenerate()) continue;
                    // table order faces the below-iso side; emit reversed so
                    // normals point toward increasing values
                    out.mesh.faces.push_back({a, c, b});
                }
            }
    if (out.mesh.faces.empty()) out.empty_warning = true;
    return out;
}

// ---------------------------------------------------------------------------
// Slice isocontours (marching squares)

struct ContourSet {
    double level = 0.0;
    // each polyline is a chain of (u,v) points in the slice plane's mm coords
    std::vector<std::vector<std::array<double, 2>>> polylines;
};

namespace detail {

struct SegmentSink {
    std::vector<std::array<double, 4>> segments;  // u0 v0 u1 v1
    void add(double u0, double v0, double u1, double v1) {
        segments.push_back({u0, v0, u1, v1});
    }
};

inline std::vector<std::vector<std::array<double, 2>>> chain_segments(
    const std::vector<std::array<double, 4>>& segments) {
    using Point = std::pair<double, double>;
    std::multimap<Point, std::size_t> by_endpoint;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        by_endpoint.emplace(Point{segments[i][0], segments[i][1]}, i);
        by_endpoint.emplace(Point{segments[i][2], segments[i][3]}, i);
    }
    std::vector<bool> used(segments.size(), false);
    std::vector<std::vector<std::array<double, 2>>> polylines;

    auto other_end = [&](std::size_t seg, const Point& p) -> Point {
        const auto& s = segments[seg];
        if (Point{s[0], s[1]} == p) return {s[2], s[3]};
        return {s[0], s[1]};
    };
    auto next_unused = [&](const Point& p, std::size_t skip) -> std::optional<std::size_t> {
        auto [lo, hi] = by_endpoint.equal_range(p);
        for (auto it = lo; it != hi; ++it)
            if (!used[it->second] && it->second != skip) return it->second;
        return std::nullopt;
    };

    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (used[i]) continue;
        used[i] = true;
        std::vector<std::array<double, 2>> chain{{segments[i][0], segments[i][1]},
                                                 {segments[i][2], segments[i][3]}};
        // extend forward
        Point tail{chain.back()[0], chain.back()[1]};
        while (auto nxt = next_unused(tail, SIZE_MAX)) {
            used[*nxt] = true;
            tail = other_end(*nxt, tail);
            chain.push_back({tail.first, tail.second});
            if (tail == Point{chain.front()[0], chain.front()[1]}) break;
        }
        // extend backward unless already closed
        Point head{chain.front()[0], chain.front()[1]};
        if (head != tail) {
            while (auto nxt = next_unused(head, SIZE_MAX)) {
                used[*nxt] = true;
                head = other_end(*nxt, head);
                chain.insert(chain.begin(), {head.first, head.second});
            }
        }
        polylines.push_back(std::move(chain));
    }
    return polylines;
}

}  // namespace detail

// Marching-squares contours of one axis-aligned slice, one ContourSet per
// level. Plane coordinates: axis=0 -> (y,z), axis=1 -> (x,z), axis=2 -> (x,y).
inline std::vector<ContourSet> slice_isocontours(const ScalarGrid& s, int axis, int index,
                                                 const std::vector<double>& levels = {0.0, 1.0}) {
    const GridSpec& g = s.spec;
    if (axis < 0 || axis > 2) throw std::invalid_argument("slice_isocontours: axis must be 0..2");
    const int n_axis = axis == 0 ? g.nx : (axis == 1 ? g.ny : g.nz);
    if (index < 0 || index >= n_axis)
        throw std::invalid_argument("slice_isocontours: slice index out of range");

    const int ua = axis == 0 ? 1 : 0;
    const int va = axis == 2 ? 1 : 2;
    const int nu = ua == 0 ? g.nx : g.ny;
    const int nv = va == 1 ? g.ny : g.nz;

    auto value = [&](int u, int v) -> double {
        int ijk[3];
        ijk[axis] = index;
        ijk[ua] = u;
        ijk[va] = v;
        return s.at(ijk[0], ijk[1], ijk[2]);
    };
    auto coord_u = [&](double u) { return (ua == 0 ? g.origin.x : g.origin.y) + g.spacing * u; };
    auto coord_v = [&](double v) { return (va == 1 ? g.origin.y : g.origin.z) + g.spacing * v; };

    std::vector<ContourSet> out;
    for (double level : levels) {
        detail::SegmentSink sink;
        for (int v = 0; v + 1 < nv; ++v)
            for (int u = 0; u + 1 < nu; ++u) {
                const double f00 = value(u, v), f10 = value(u + 1, v);
                const double f11 = value(u + 1, v + 1), f01 = value(u, v + 1);
                int c = 0;
                if (f00 < level) c |= 1;
                if (f10 < level) c |= 2;
                if (f11 < level) c |= 4;
                if (f01 < level) c |= 8;
                if (c == 0 || c == 15) continue;
                // interpolated crossings on the 4 cell edges
                auto lerp = [&](double fa, double fb, double a, double b) {
                    return a + (level - fa) / (fb - fa) * (b - a);
                };
                const double eb = coord_u(lerp(f00, f10, u, u + 1));  // bottom, v
                const double et = coord_u(lerp(f01, f11, u, u + 1));  // top, v+1
                const double el = coord_v(lerp(f00, f01, v, v + 1));  // left, u
                const double er = coord_v(lerp(f10, f11, v, v + 1));  // right, u+1
                const double u0 = coord_u(u), u1 = coord_u(u + 1);
                const double v0 = coord_v(v), v1 = coord_v(v + 1);
                switch (c) {
                    case 1: case 14: sink.add(eb, v0, u0, el); break;
                    case 2: case 13: sink.add(eb, v0, u1, er); break;
                    case 3: case 12: sink.add(u0, el, u1, er); break;
                    case 4: case 11: sink.add(u1, er, et, v1); break;
                    case 6: case 9: sink.add(eb, v0, et, v1); break;
                    case 7: case 8: sink.add(u0, el, et, v1); break;
                    case 5:  // saddle: fixed pairing (bottom-left, top-right)
                        sink.add(eb, v0, u0, el);
                        sink.add(u1, er, et, v1);
                        break;
                    case 10:
                        sink.add(eb, v0, u1, er);
                        sink.add(u0, el, et, v1);
                        break;
                }
            }
        ContourSet cs;
        cs.level = level;
        cs.polylines = detail::chain_segments(sink.segments);
        out.push_back(std::move(cs));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Mesh-to-mesh distance metrics

struct SurfaceDistance {
    double mean = 0.0;
    double hausdorff_sym = 0.0;
};

namespace detail {

inline std::vector<Vec3> sample_surface(const TriangleMesh& m, int n, Rng& rng) {
    std::vector<double> cumulative(m.faces.size());
    double total = 0.0;
    for (std::size_t f = 0; f < m.faces.size(); ++f) {
        total += m.triangle(f).area();
        cumulative[f] = total;
    }
    if (!(total > 0.0)) throw std::invalid_argument("sample_surface: mesh has zero area");
    std::vector<Vec3> pts;
    pts.reserve(n);
    for (int s = 0; s < n; ++s) {
        const double r = rng.uniform(0.0, total);
        const std::size_t f =
            std::lower_bound(cumulative.begin(), cumulative.end(), r) - cumulative.begin();
        const Triangle t = m.triangle(std::min(f, m.faces.size() - 1));
        const double su = std::sqrt(rng.uniform());
        const double v = rng.uniform();
        const double wa = 1.0 - su, wb = su * (1.0 - v), wc = su * v;
        pts.push_back(t.a * wa + t.b * wb + t.c * wc);
    }
    return pts;
}

}  // namespace detail

// Area-weighted sampled symmetric surface distance: mean over both directed
// sample sets plus the symmetric (sampled) Hausdorff distance. Each mesh's
// sample stream is keyed to the mesh itself, so swapping the arguments swaps
// the two directed sums and the outputs are identical.
inline SurfaceDistance surface_distance(const TriangleMesh& a, const TriangleMesh& b,
                                        int n_samples = 10000, uint64_t seed = 20240) {
    const Bvh bvh_a = build_bvh(a);
    const Bvh bvh_b = build_bvh(b);
    auto mesh_stream = [&](const TriangleMesh& m) {
        return Rng(hash_combine(seed, hash_combine(m.vertex_count(), m.face_count())));
    };
    Rng rng_a = mesh_stream(a);
    Rng rng_b = mesh_stream(b);
    const std::vector<Vec3> pa = detail::sample_surface(a, n_samples, rng_a);
    const std::vector<Vec3> pb = detail::sample_surface(b, n_samples, rng_b);

    double sum_ab = 0.0, sum_ba = 0.0, max_ab = 0.0, max_ba = 0.0;
    for (const Vec3& p : pa) {
        const double d = nearest_point_bvh(p, b, bvh_b).dist;
        sum_ab += d;
        max_ab = std::max(max_ab, d);
    }
    for (const Vec3& p : pb) {
        const double d = nearest_point_bvh(p, a, bvh_a).dist;
        sum_ba += d;
        max_ba = std::max(max_ba, d);
    }
    return {(sum_ab + sum_ba) / (2.0 * n_samples), std::max(max_ab, max_ba)};
}

}  // namespace sdmforge
