#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdmforge/bvh.hpp"
#include "sdmforge/grid.hpp"
#include "sdmforge/mesh.hpp"
#include "sdmforge/rng.hpp"
#include "sdmforge/threading.hpp"

namespace sdmforge {

enum class BackendId { naive, bvh, edt, surrogate, pointwise };

inline const char* backend_name(BackendId id) {
    switch (id) {
        case BackendId::naive: return "naive";
        case BackendId::bvh: return "bvh";
        case BackendId::edt: return "edt";
        case BackendId::surrogate: return "surrogate";
        case BackendId::pointwise: return "pointwise";
    }
    return "?";
}

inline BackendId backend_from_name(const std::string& s) {
    for (BackendId id : {BackendId::naive, BackendId::bvh, BackendId::edt, BackendId::surrogate,
                         BackendId::pointwise})
        if (s == backend_name(id)) return id;
    throw std::invalid_argument("unknown backend '" + s +
                                "' (expected naive|bvh|edt|surrogate|pointwise)");
}

namespace detail {

inline void require_pseudonormals(const TriangleMesh& m, const char* who) {
    if (!m.pseudonormals_ready)
        throw std::invalid_argument(std::string(who) +
                                    ": mesh pseudonormal caches missing (call build_pseudonormals)");
}

}  // namespace detail

// Reference engine: exhaustive point-to-triangle scan per voxel, signed by the
// angle-weighted pseudonormal of the nearest feature. Everything else in this
// project is checked against it.
inline ScalarGrid sdm_naive(const TriangleMesh& m, const GridSpec& g) {
    detail::require_pseudonormals(m, "sdm_naive");
    g.validate();
    ScalarGrid out(g);
    const std::size_t rows = static_cast<std::size_t>(g.ny) * g.nz;
    parallel_for(rows, [&](std::size_t r0, std::size_t r1) {
        for (std::size_t r = r0; r < r1; ++r) {
            const int j = static_cast<int>(r % g.ny);
            const int k = static_cast<int>(r / g.ny);
            for (int i = 0; i < g.nx; ++i) {
                const Vec3 p = g.voxel_center(i, j, k);
                const NearestTriangle hit = nearest_point_naive(p, m);
                out.values[g.index(i, j, k)] =
                    static_cast<float>(signed_distance_from(p, m, hit));
            }
        }
    });
    return out;
}

// BVH engine: identical output to sdm_naive, obtained by pruned traversal.
// Within each grid row the previous voxel's winning triangle warm-starts the
// bound, which makes coherent queries nearly free.
inline ScalarGrid sdm_bvh(const TriangleMesh& m, const Bvh& bvh, const GridSpec& g) {
    detail::require_pseudonormals(m, "sdm_bvh");
    if (bvh.source_faces != m.faces.size())
        throw std::invalid_argument("sdm_bvh: BVH does not match the mesh");
    g.validate();
    ScalarGrid out(g);
    const std::size_t rows = static_cast<std::size_t>(g.ny) * g.nz;
    parallel_for(rows, [&](std::size_t r0, std::size_t r1) {
        for (std::size_t r = r0; r < r1; ++r) {
            const int j = static_cast<int>(r % g.ny);
            const int k = static_cast<int>(r / g.ny);
            int warm = -1;
            for (int i = 0; i < g.nx; ++i) {
                const Vec3 p = g.voxel_center(i, j, k);
                const NearestTriangle hit = nearest_point_bvh(p, m, bvh, warm);
                warm = hit.face;
                out.values[g.index(i, j, k)] =
                    static_cast<float>(signed_distance_from(p, m, hit));
            }
        }
    });
    return out;
}

inline ScalarGrid sdm_bvh(const TriangleMesh& m, const GridSpec& g) {
    const Bvh bvh = build_bvh(m);
    return sdm_bvh(m, bvh, g);
}

namespace detail {

// All x-positions where the line {y=y0, z=z0} crosses the surface, or a retry
// request when a crossing is too close to a triangle edge/vertex.
struct ScanlineHits {
    std::vector<double> xs;
    bool risky = false;
};

inline ScanlineHits scanline_crossings(const TriangleMesh& m, double y0, double z0) {
    constexpr double kBaryEps = 1e-9;
    ScanlineHits out;
    for (std::size_t f = 0; f < m.faces.size(); ++f) {
        const Triangle t = m.triangle(f);
        const double by = t.b.y - t.a.y, bz = t.b.z - t.a.z;
        const double cy = t.c.y - t.a.y, cz = t.c.z - t.a.z;
        const double denom = by * cz - cy * bz;
        const double scale = (by * by + bz * bz) + (cy * cy + cz * cz);
        const double py = y0 - t.a.y, pz = z0 - t.a.z;
        if (std::abs(denom) < 1e-12 * scale) {
            // projected triangle is (almost) a segment; ask for a jittered line
            // only when the line actually passes through its neighbourhood
            const double lo_y = std::min({t.a.y, t.b.y, t.c.y}) - 1e-6;
            const double hi_y = std::max({t.a.y, t.b.y, t.c.y}) + 1e-6;
            const double lo_z = std::min({t.a.z, t.b.z, t.c.z}) - 1e-6;
            const double hi_z = std::max({t.a.z, t.b.z, t.c.z}) + 1e-6;
            if (y0 >= lo_y && y0 <= hi_y && z0 >= lo_z && z0 <= hi_z) {
                out.risky = true;
                return out;
            }
            continue;
        }
        const double l2 = (py * cz - pz * cy) / denom;
        const double l3 = (by * pz - bz * py) / denom;
        const double l1 = 1.0 - l2 - l3;
        const double lo = std::min({l1, l2, l3});
        if (lo < -kBaryEps) continue;
        if (lo < kBaryEps) {
            out.risky = true;
            return out;
        }
        out.xs.push_back(l1 * t.a.x + l2 * t.b.x + l3 * t.c.x);
    }
    return out;
}

}  // namespace detail

// Voxel-centre occupancy by scanline ray parity along +x. Rows whose ray
// grazes an edge, vertex or coplanar triangle are recast with a sub-micron
// jittered line (deterministic per row).
inline BinaryGrid rasterize(const TriangleMesh& m, const GridSpec& g) {
    g.validate();
    if (m.faces.empty()) throw std::invalid_argument("rasterize: empty mesh");
    BinaryGrid out(g);
    const std::size_t rows = static_cast<std::size_t>(g.ny) * g.nz;
    parallel_for(rows, [&](std::size_t r0, std::size_t r1) {
        for (std::size_t r = r0; r < r1; ++r) {
            const int j = static_cast<int>(r % g.ny);
            const int k = static_cast<int>(r / g.ny);
            Rng jitter(hash_combine(0x5ca11e5eed, r));
            detail::ScanlineHits hits;
            for (int attempt = 0; attempt < 8; ++attempt) {
                double dy = 0.0, dz = 0.0;
                if (attempt > 0) {
                    dy = g.spacing * 1e-4 * jitter.uniform(-1.0, 1.0);
                    dz = g.spacing * 1e-4 * jitter.uniform(-1.0, 1.0);
                }
                hits = detail::scanline_crossings(m, g.origin.y + g.spacing * j + dy,
                                                  g.origin.z + g.spacing * k + dz);
                if (!hits.risky) break;
            }
            if (hits.risky)
                throw std::runtime_error("rasterize: no clean scanline after 8 jitters (row " +
                                         std::to_string(r) + ")");
            std::sort(hits.xs.begin(), hits.xs.end());
            for (int i = 0; i < g.nx; ++i) {
                const double x = g.origin.x + g.spacing * i;
                const std::size_t below =
                    std::lower_bound(hits.xs.begin(), hits.xs.end(), x) - hits.xs.begin();
                out.values[g.index(i, j, k)] = static_cast<uint8_t>(below % 2);
            }
        }
    });
    return out;
}

struct EdtResult {
    ScalarGrid squared;  // squared distance in voxel units
    bool empty_input = false;
};

namespace detail {

inline constexpr int64_t kEdtInf = int64_t{1} << 50;

// 1D squared-distance lower envelope (Felzenszwalb-Huttenlocher) over a
// strided input line, written to a dense output. Parabola boundaries are kept
// as exact integer rationals so results match brute force bit-for-bit.
inline void edt_pass_1d(const int64_t* f, int n, int stride, int64_t* d_dense,
                        std::vector<int>& v, std::vector<int64_t>& zn,
                        std::vector<int64_t>& zd) {
    v.assign(n, 0);
    zn.assign(n + 1, 0);
    zd.assign(n + 1, 0);
    int k = -1;
    for (int q = 0; q < n; ++q) {
        const int64_t fq = f[q * stride];
        if (fq >= kEdtInf) continue;
        while (k >= 0) {
            const int pidx = v[k];
            const int64_t num = fq + int64_t{q} * q - f[pidx * stride] - int64_t{pidx} * pidx;
            const int64_t den = 2 * int64_t{q - pidx};
            // pop while s(q, v[k]) <= z[k]
            bool pop;
            if (k == 0)
                pop = false;  // z[0] = -inf
            else
                pop = num * zd[k] <= zn[k] * den;
            if (!pop) {
                ++k;
                v[k] = q;
                zn[k] = num;
                zd[k] = den;
                break;
            }
            --k;
        }
        if (k < 0) {
            k = 0;
            v[0] = q;
            zn[0] = 0;
            zd[0] = 0;  // sentinel: -inf boundary
        }
    }
    if (k < 0) {
        for (int x = 0; x < n; ++x) d_dense[x] = kEdtInf;
        return;
    }
    const int top = k;
    k = 0;
    for (int x = 0; x < n; ++x) {
        while (k < top && zn[k + 1] < int64_t{x} * zd[k + 1]) ++k;
        const int64_t dx = int64_t{x} - v[k];
        d_dense[x] = dx * dx + f[v[k] * stride];
    }
}

}  // namespace detail

// Exact squared Euclidean distance transform (voxel units) to the true voxels
// of a binary grid, by three separable 1D passes.
inline EdtResult edt_squared(const BinaryGrid& in) {
    const GridSpec& g = in.spec;
    const std::size_t n = g.voxel_count();
    std::vector<int64_t> buf(n);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
        buf[i] = in.values[i] ? 0 : detail::kEdtInf;
        any |= in.values[i] != 0;
    }
    EdtResult result;
    result.squared = ScalarGrid(g);
    if (!any) {
        result.empty_input = true;
        std::fill(result.squared.values.begin(), result.squared.values.end(),
                  std::numeric_limits<float>::max());
        return result;
    }

    // pass along x (stride 1), then y (stride nx), then z (stride nx*ny)
    const int nx = g.nx, ny = g.ny, nz = g.nz;
    auto run_lines = [&](std::size_t lines, auto base_of, int len, int stride) {
        parallel_for(lines, [&](std::size_t l0, std::size_t l1) {
            std::vector<int64_t> tmp(len);
            std::vector<int> v;
            std::vector<int64_t> zn, zd;
            for (std::size_t l = l0; l < l1; ++l) {
                int64_t* base = buf.data() + base_of(l);
                detail::edt_pass_1d(base, len, stride, tmp.data(), v, zn, zd);
                for (int i = 0; i < len; ++i) base[i * stride] = tmp[i];
            }
        });
    };
    // x lines: one per (j,k)
    run_lines(static_cast<std::size_t>(ny) * nz,
              [&](std::size_t l) { return l * nx; }, nx, 1);
    // y lines: one per (i,k)
    run_lines(static_cast<std::size_t>(nx) * nz,
              [&](std::size_t l) {
                  const std::size_t i = l % nx, k = l / nx;
                  return i + static_cast<std::size_t>(nx) * ny * k;
              },
              ny, nx);
    // z lines: one per (i,j)
    run_lines(static_cast<std::size_t>(nx) * ny, [&](std::size_t l) { return l; }, nz, nx * ny);

    for (std::size_t i = 0; i < n; ++i)
        result.squared.values[i] = static_cast<float>(buf[i]);
    return result;
}

struct SdmEdtResult {
    ScalarGrid grid;
    bool undersampled = false;
};

// Rasterize + exact EDT to the two-sided boundary voxel set, signed by the
// rasterization. Near-surface agreement with the mesh engines is limited by
// one voxel diagonal.
inline SdmEdtResult sdm_edt(const TriangleMesh& m, const GridSpec& g) {
    const BinaryGrid raster = rasterize(m, g);
    SdmEdtResult out;

    bool any_inside = false;
    for (uint8_t v : raster.values) any_inside |= v != 0;
    if (!any_inside) {
        out.undersampled = true;
        out.grid = ScalarGrid(g, std::numeric_limits<float>::max());
        return out;
    }

    BinaryGrid boundary(g);
    auto occupied = [&](int i, int j, int k) -> uint8_t {
        return raster.values[g.index(i, j, k)];
    };
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const uint8_t c = occupied(i, j, k);
                bool flip = false;
                if (i > 0 && occupied(i - 1, j, k) != c) flip = true;
                if (!flip && i + 1 < g.nx && occupied(i + 1, j, k) != c) flip = true;
                if (!flip && j > 0 && occupied(i, j - 1, k) != c) flip = true;
                if (!flip && j + 1 < g.ny && occupied(i, j + 1, k) != c) flip = true;
                if (!flip && k > 0 && occupied(i, j, k - 1) != c) flip = true;
                if (!flip && k + 1 < g.nz && occupied(i, j, k + 1) != c) flip = true;
                boundary.values[g.index(i, j, k)] = flip ? 1 : 0;
            }

    const EdtResult edt = edt_squared(boundary);
    out.grid = ScalarGrid(g);
    for (std::size_t i = 0; i < g.voxel_count(); ++i) {
        const double d = g.spacing * std::sqrt(static_cast<double>(edt.squared.values[i]));
        out.grid.values[i] = static_cast<float>(raster.values[i] ? -d : d);
    }
    return out;
}

}  // namespace sdmforge
