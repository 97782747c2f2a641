#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdmforge/grid.hpp"
#include "sdmforge/mesh.hpp"
#include "sdmforge/rng.hpp"

namespace sdmforge {

// The four deformation parameters of the cochlea shape model: basal spiral
// radius a [mm], per-turn radial decay alpha, vertical rise b [mm/rad] and
// initial phase phi [rad].
struct ShapeParams {
    double a = 3.5;
    double alpha = 0.6;
    double b = 0.15;
    double phi = 0.0;

    std::array<double, 4> as_array() const { return {a, alpha, b, phi}; }
};

inline constexpr std::array<double, 4> kParamLo = {2.0, 0.0, 0.05, -std::numbers::pi / 4};
inline constexpr std::array<double, 4> kParamHi = {5.0, 1.2, 0.25, std::numbers::pi / 4};
inline constexpr std::array<const char*, 4> kParamName = {"a", "alpha", "b", "phi"};

inline ShapeParams params_from_array(const std::array<double, 4>& v) {
    return {v[0], v[1], v[2], v[3]};
}

inline void validate_params(const ShapeParams& p) {
    const auto v = p.as_array();
    for (int i = 0; i < 4; ++i)
        if (!(v[i] >= kParamLo[i] && v[i] <= kParamHi[i]))
            throw std::invalid_argument(std::string("shape parameter ") + kParamName[i] + "=" +
                                        std::to_string(v[i]) + " outside [" +
                                        std::to_string(kParamLo[i]) + ", " +
                                        std::to_string(kParamHi[i]) + "]");
}

// Map each parameter to [-1, 1] over its validity range.
inline std::array<double, 4> normalize_params(const ShapeParams& p) {
    const auto v = p.as_array();
    std::array<double, 4> n{};
    for (int i = 0; i < 4; ++i) n[i] = 2.0 * (v[i] - kParamLo[i]) / (kParamHi[i] - kParamLo[i]) - 1.0;
    return n;
}

struct TessellationSpec {
    double target_edge = 0.30;                      // mm
    double t_max = 5.0 * std::numbers::pi;          // 2.5 turns
    double tube_radius0 = 0.6;                      // mm at t = 0
    double tube_radius_decay = 0.3;                 // per turn

    void validate() const {
        if (!(target_edge > 0.15 && target_edge < 0.45))
            throw std::invalid_argument("target_edge must lie in (0.15, 0.45) mm");
        if (!(t_max > 0.0)) throw std::invalid_argument("t_max must be positive");
    }
};

inline Vec3 centerline_point(const ShapeParams& p, double t,
                             const TessellationSpec& spec = {}) {
    validate_params(p);
    if (!(t >= 0.0 && t <= spec.t_max))
        throw std::invalid_argument("centerline parameter t=" + std::to_string(t) +
                                    " outside [0, " + std::to_string(spec.t_max) + "]");
    const double r = p.a * std::exp(-p.alpha * t / (2.0 * std::numbers::pi));
    return {r * std::cos(t + p.phi), r * std::sin(t + p.phi), p.b * t};
}

inline double tube_radius(const TessellationSpec& spec, double t) {
    return spec.tube_radius0 * std::exp(-spec.tube_radius_decay * t / (2.0 * std::numbers::pi));
}

namespace detail {

inline Vec3 centerline_tangent(const ShapeParams& p, double t) {
    const double k = p.alpha / (2.0 * std::numbers::pi);
    const double r = p.a * std::exp(-k * t);
    const double c = std::cos(t + p.phi), s = std::sin(t + p.phi);
    return Vec3{-k * r * c - r * s, -k * r * s + r * c, p.b}.normalized();
}

// Rotate v by the minimal rotation taking unit vector from -> to.
inline Vec3 rotate_between(const Vec3& v, const Vec3& from, const Vec3& to) {
    const Vec3 axis = from.cross(to);
    const double s = axis.norm();
    const double c = std::clamp(from.dot(to), -1.0, 1.0);
    if (s < 1e-14) return c > 0.0 ? v : -v;
    const Vec3 k = axis / s;
    // Rodrigues with sin/cos taken from the geometry directly
    return v * c + k.cross(v) * s + k * (k.dot(v)) * (1.0 - c);
}

}  // namespace detail

struct TessellationInfo {
    int n_rings = 0;
    int n_seg = 0;
    std::vector<double> ring_t;       // centerline parameter per ring
    std::vector<Vec3> ring_centers;
    std::vector<Vec3> ring_tangents;
    std::vector<Vec3> ring_u;         // transported frame axis per ring
};

// Closed generalized-cylinder tube around the spiral centerline, capped with
// hemispheres. Rings are placed at equal arc-length steps; ring frames follow
// the centerline by parallel transport so the tube never twists.
inline TriangleMesh tessellate(const ShapeParams& p, const TessellationSpec& spec = {},
                               TessellationInfo* info = nullptr) {
    validate_params(p);
    spec.validate();

    // Arc length table for equal-step ring placement.
    constexpr int kSamples = 2048;
    std::vector<double> ts(kSamples + 1), cum(kSamples + 1, 0.0);
    for (int i = 0; i <= kSamples; ++i) ts[i] = spec.t_max * i / kSamples;
    {
        Vec3 prev = centerline_point(p, ts[0], spec);
        for (int i = 1; i <= kSamples; ++i) {
            const Vec3 cur = centerline_point(p, ts[i], spec);
            cum[i] = cum[i - 1] + distance(prev, cur);
            prev = cur;
        }
    }
    const double total_len = cum.back();
    const double step = 0.83 * spec.target_edge;

    const int n_rings = std::max(8, static_cast<int>(std::ceil(total_len / step)) + 1);
    auto t_at_arc = [&](double s) {
        if (s <= 0.0) return 0.0;
        if (s >= total_len) return spec.t_max;
        const auto it = std::lower_bound(cum.begin(), cum.end(), s);
        const std::size_t hi = static_cast<std::size_t>(it - cum.begin());
        const double frac = (s - cum[hi - 1]) / (cum[hi] - cum[hi - 1]);
        return ts[hi - 1] + frac * (ts[hi] - ts[hi - 1]);
    };

    const double rho_mid = tube_radius(spec, t_at_arc(0.5 * total_len));
    const int n_seg = std::max(
        8, static_cast<int>(std::ceil(2.0 * std::numbers::pi * rho_mid / step)));

    // Centerline samples, tangents, parallel-transported frames.
    std::vector<double> ring_t(n_rings);
    std::vector<Vec3> centers(n_rings), tangents(n_rings), frame_u(n_rings), frame_w(n_rings);
    for (int i = 0; i < n_rings; ++i) {
        ring_t[i] = t_at_arc(total_len * i / (n_rings - 1));
        centers[i] = centerline_point(p, ring_t[i], spec);
        tangents[i] = detail::centerline_tangent(p, ring_t[i]);
    }
    {
        Vec3 u = tangents[0].cross(Vec3{0, 0, 1});
        if (u.norm() < 1e-6) u = tangents[0].cross(Vec3{1, 0, 0});
        frame_u[0] = u.normalized();
        for (int i = 1; i < n_rings; ++i) {
            Vec3 ui = detail::rotate_between(frame_u[i - 1], tangents[i - 1], tangents[i]);
            ui = (ui - tangents[i] * ui.dot(tangents[i])).normalized();
            frame_u[i] = ui;
        }
        for (int i = 0; i < n_rings; ++i) frame_w[i] = tangents[i].cross(frame_u[i]);
    }

    TriangleMesh m;
    auto ring_vertex = [&](int i, int j) {
        return static_cast<int>(i) * n_seg + (j % n_seg);
    };
    const double dtheta = 2.0 * std::numbers::pi / n_seg;
    for (int i = 0; i < n_rings; ++i) {
        const double rho = tube_radius(spec, ring_t[i]);
        for (int j = 0; j < n_seg; ++j) {
            const double th = dtheta * j;
            m.vertices.push_back(centers[i] + (frame_u[i] * std::cos(th) + frame_w[i] * std::sin(th)) * rho);
        }
    }
    auto add_quad = [&](int a, int b, int c, int d, bool flip) {
        if (!flip) {
            m.faces.push_back({a, b, c});
            m.faces.push_back({a, c, d});
        } else {
            m.faces.push_back({a, c, b});
            m.faces.push_back({a, d, c});
        }
    };
    for (int i = 0; i + 1 < n_rings; ++i)
        for (int j = 0; j < n_seg; ++j)
            add_quad(ring_vertex(i, j), ring_vertex(i, j + 1), ring_vertex(i + 1, j + 1),
                     ring_vertex(i + 1, j), false);

    // Hemispherical caps. The start cap bulges along -tangent, the end cap
    // along +tangent; the start cap's winding flips to stay outward.
    auto add_cap = [&](int ring_index, const Vec3& axis, bool flip) {
        const double rho = tube_radius(spec, ring_t[ring_index]);
        const Vec3& u = frame_u[ring_index];
        const Vec3& w = frame_w[ring_index];
        const Vec3& c0 = centers[ring_index];
        const int n_lat = std::max(2, static_cast<int>(std::round(0.5 * std::numbers::pi * rho / step)));
        // previous ring starts as the tube's boundary ring
        std::vector<int> prev(n_seg);
        for (int j = 0; j < n_seg; ++j) prev[j] = ring_vertex(ring_index, j);
        for (int k = 1; k < n_lat; ++k) {
            const double psi = 0.5 * std::numbers::pi * (1.0 - static_cast<double>(k) / n_lat);
            std::vector<int> cur(n_seg);
            for (int j = 0; j < n_seg; ++j) {
                const double th = dtheta * j;
                const Vec3 radial = u * std::cos(th) + w * std::sin(th);
                cur[j] = static_cast<int>(m.vertices.size());
                m.vertices.push_back(c0 + (radial * std::sin(psi) + axis * std::cos(psi)) * rho);
            }
            for (int j = 0; j < n_seg; ++j)
                add_quad(prev[j], prev[(j + 1) % n_seg], cur[(j + 1) % n_seg], cur[j], flip);
            prev = cur;
        }
        const int pole = static_cast<int>(m.vertices.size());
        m.vertices.push_back(c0 + axis * rho);
        for (int j = 0; j < n_seg; ++j) {
            if (!flip)
                m.faces.push_back({prev[j], prev[(j + 1) % n_seg], pole});
            else
                m.faces.push_back({prev[j], pole, prev[(j + 1) % n_seg]});
        }
    };
    add_cap(0, -tangents[0], true);
    add_cap(n_rings - 1, tangents[n_rings - 1], false);

    if (info) {
        info->n_rings = n_rings;
        info->n_seg = n_seg;
        info->ring_t = ring_t;
        info->ring_centers = centers;
        info->ring_tangents = tangents;
        info->ring_u = frame_u;
    }
    m.build_pseudonormals();
    return m;
}

// All n^4 uniformly spaced parameter combinations, endpoints included,
// ordered with a slowest and phi fastest.
inline std::vector<ShapeParams> param_grid(int n_per_axis) {
    if (n_per_axis < 2) throw std::invalid_argument("param_grid: need at least 2 per axis");
    auto axis_value = [&](int axis, int i) {
        return kParamLo[axis] + (kParamHi[axis] - kParamLo[axis]) * i / (n_per_axis - 1);
    };
    std::vector<ShapeParams> out;
    out.reserve(static_cast<std::size_t>(n_per_axis) * n_per_axis * n_per_axis * n_per_axis);
    for (int ia = 0; ia < n_per_axis; ++ia)
        for (int ial = 0; ial < n_per_axis; ++ial)
            for (int ib = 0; ib < n_per_axis; ++ib)
                for (int ip = 0; ip < n_per_axis; ++ip)
                    out.push_back({axis_value(0, ia), axis_value(1, ial), axis_value(2, ib),
                                   axis_value(3, ip)});
    return out;
}

inline ShapeParams sample_random_params(Rng& rng) {
    ShapeParams p;
    p.a = rng.uniform(kParamLo[0], kParamHi[0]);
    p.alpha = rng.uniform(kParamLo[1], kParamHi[1]);
    p.b = rng.uniform(kParamLo[2], kParamHi[2]);
    p.phi = rng.uniform(kParamLo[3], kParamHi[3]);
    return p;
}

// The fixed 50x50x60 sampling lattice every SDM in this project lives on.
inline GridSpec default_grid_spec() {
    GridSpec g;
    g.origin = {-5.0, -5.0, -2.0};
    g.spacing = 0.2;
    g.nx = 50;
    g.ny = 50;
    g.nz = 60;
    return g;
}

}  // namespace sdmforge
