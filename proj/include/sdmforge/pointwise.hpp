#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <vector>

#include "sdmforge/bvh.hpp"
#include "sdmforge/cochlea.hpp"
#include "sdmforge/grid.hpp"
#include "sdmforge/isosurface.hpp"
#include "sdmforge/nn.hpp"
#include "sdmforge/surrogate.hpp"
#include "sdmforge/threading.hpp"

namespace sdmforge {

// Point-based baseline: an MLP mapping (4 normalized params, 3 normalized
// coordinates) to the signed distance at that point. Filling a grid means one
// network evaluation per voxel, which is exactly the cost this project's grid
// decoder avoids.
struct PointwiseArch {
    int width = 128;
    int hidden_layers = 6;
};

inline std::vector<LayerSpec> pointwise_layers(const PointwiseArch& a) {
    std::vector<LayerSpec> layers;
    std::size_t off = 0;
    auto add = [&](const std::string& name, std::vector<int> shape, int fan_in) {
        const std::size_t count = detail::shape_count(shape);
        layers.push_back({name, std::move(shape), off, count, fan_in});
        off += count;
    };
    int nin = 7;
    for (int h = 0; h < a.hidden_layers; ++h) {
        const std::string p = "hidden" + std::to_string(h);
        add(p + ".w", {a.width, nin}, nin);
        add(p + ".b", {a.width}, nin);
        nin = a.width;
    }
    add("out.w", {1, nin}, nin);
    add("out.b", {1}, nin);
    return layers;
}

inline std::size_t pointwise_weight_count(const PointwiseArch& a) {
    std::size_t n = 0;
    for (const LayerSpec& l : pointwise_layers(a)) n += l.count;
    return n;
}

struct PointwiseModel {
    PointwiseArch arch;
    GridSpec grid;  // defines the coordinate normalization box
    std::vector<float> weights;
    std::array<double, 4> norm_lo = kParamLo;
    std::array<double, 4> norm_hi = kParamHi;
    double clamp_delta = 0.2;  // mm, clamp-loss band
    SurrogateModel::Meta meta;
};

inline PointwiseModel pw_init(uint64_t seed, const PointwiseArch& arch = {},
                              const GridSpec& grid = default_grid_spec()) {
    PointwiseModel m;
    m.arch = arch;
    m.grid = grid;
    m.weights.assign(pointwise_weight_count(arch), 0.0f);
    m.meta.seed = seed;
    Rng rng(seed);
    for (const LayerSpec& l : pointwise_layers(arch)) {
        if (l.name.ends_with(".b")) continue;
        nn::init_uniform(std::span<float>(m.weights.data() + l.offset, l.count), l.fan_in, rng);
    }
    return m;
}

namespace detail {

template <class T>
struct PwActs {
    std::vector<std::vector<T>> hidden;  // post-ReLU per hidden layer
    T out = T(0);
};

// 7 normalized inputs for (params, position).
template <class T>
std::array<T, 7> pw_inputs(const PointwiseModel& m, const ShapeParams& p, const Vec3& x) {
    const auto v = p.as_array();
    std::array<T, 7> in{};
    for (int i = 0; i < 4; ++i)
        in[i] = static_cast<T>(2.0 * (v[i] - m.norm_lo[i]) / (m.norm_hi[i] - m.norm_lo[i]) - 1.0);
    const Vec3 lo = m.grid.origin;
    const Vec3 hi = m.grid.voxel_center(m.grid.nx - 1, m.grid.ny - 1, m.grid.nz - 1);
    in[4] = static_cast<T>(2.0 * (x.x - lo.x) / (hi.x - lo.x) - 1.0);
    in[5] = static_cast<T>(2.0 * (x.y - lo.y) / (hi.y - lo.y) - 1.0);
    in[6] = static_cast<T>(2.0 * (x.z - lo.z) / (hi.z - lo.z) - 1.0);
    return in;
}

template <class T>
T pw_forward_core(const PointwiseArch& a, const T* w, const std::array<T, 7>& in,
                  PwActs<T>& acts) {
    acts.hidden.resize(a.hidden_layers);
    const T* cur = in.data();
    int nin = 7;
    std::size_t off = 0;
    for (int h = 0; h < a.hidden_layers; ++h) {
        acts.hidden[h].assign(a.width, T(0));
        nn::linear_forward(cur, nin, w + off, w + off + static_cast<std::size_t>(a.width) * nin,
                           acts.hidden[h].data(), a.width);
        nn::relu_forward(acts.hidden[h].data(), acts.hidden[h].size());
        off += static_cast<std::size_t>(a.width) * nin + a.width;
        cur = acts.hidden[h].data();
        nin = a.width;
    }
    T out = T(0);
    nn::linear_forward(cur, nin, w + off, w + off + nin, &out, 1);
    acts.out = out;
    return out;
}

// dL/d(out) -> gradient over all weights.
template <class T>
void pw_backward_core(const PointwiseArch& a, const T* w, const std::array<T, 7>& in,
                      const PwActs<T>& acts, T dout, T* grad) {
    // offsets per layer
    std::vector<std::size_t> offs;
    std::size_t off = 0;
    int nin = 7;
    for (int h = 0; h < a.hidden_layers; ++h) {
        offs.push_back(off);
        off += static_cast<std::size_t>(a.width) * nin + a.width;
        nin = a.width;
    }
    const std::size_t out_off = off;

    std::vector<T> d_cur(1, dout), d_prev;
    // output layer
    {
        const T* x = a.hidden_layers > 0 ? acts.hidden.back().data() : in.data();
        d_prev.assign(nin, T(0));
        nn::linear_backward(x, nin, w + out_off, d_cur.data(), 1, d_prev.data(), grad + out_off,
                            grad + out_off + nin);
    }
    for (int h = a.hidden_layers - 1; h >= 0; --h) {
        nn::relu_backward(acts.hidden[h].data(), d_prev.data(), d_prev.size());
        const int lin = h == 0 ? 7 : a.width;
        const T* x = h == 0 ? in.data() : acts.hidden[h - 1].data();
        d_cur.assign(lin, T(0));
        nn::linear_backward(x, lin, w + offs[h], d_prev.data(), a.width,
                            h == 0 ? static_cast<T*>(nullptr) : d_cur.data(), grad + offs[h],
                            grad + offs[h] + static_cast<std::size_t>(a.width) * lin);
        std::swap(d_prev, d_cur);
    }
}

}  // namespace detail

inline double pw_forward(const PointwiseModel& m, const ShapeParams& p, const Vec3& x) {
    if (m.weights.size() != pointwise_weight_count(m.arch))
        throw std::invalid_argument("pointwise: weight vector does not match architecture");
    detail::PwActs<float> acts;
    const auto in = detail::pw_inputs<float>(m, p, x);
    return pw_forward_core<float>(m.arch, m.weights.data(), in, acts);
}

// One network evaluation per voxel centre, engine-identical ordering.
inline ScalarGrid pw_fill_grid(const PointwiseModel& m, const ShapeParams& p,
                               const GridSpec& g) {
    if (m.weights.size() != pointwise_weight_count(m.arch))
        throw std::invalid_argument("pointwise: weight vector does not match architecture");
    ScalarGrid out(g);
    const std::size_t rows = static_cast<std::size_t>(g.ny) * g.nz;
    parallel_for(rows, [&](std::size_t r0, std::size_t r1) {
        detail::PwActs<float> acts;
        for (std::size_t r = r0; r < r1; ++r) {
            const int j = static_cast<int>(r % g.ny);
            const int k = static_cast<int>(r / g.ny);
            for (int i = 0; i < g.nx; ++i) {
                const auto in = detail::pw_inputs<float>(m, p, g.voxel_center(i, j, k));
                out.values[g.index(i, j, k)] =
                    pw_forward_core<float>(m.arch, m.weights.data(), in, acts);
            }
        }
    });
    return out;
}

struct PwSample {
    ShapeParams params;
    Vec3 point;
    double target = 0.0;  // signed distance in mm
};

// Clamp loss: mean |clamp(pred, +-delta) - clamp(target, +-delta)|.
inline LossAndGradient pw_loss_and_gradient(const PointwiseModel& m,
                                            const std::vector<PwSample>& batch) {
    if (batch.empty()) throw std::invalid_argument("pw_loss_and_gradient: empty batch");
    const double delta = m.clamp_delta;
    LossAndGradient out;
    out.gradient.assign(m.weights.size(), 0.0f);
    detail::PwActs<float> acts;
    double loss = 0.0;
    for (const PwSample& s : batch) {
        const auto in = detail::pw_inputs<float>(m, s.params, s.point);
        const double pred = pw_forward_core<float>(m.arch, m.weights.data(), in, acts);
        const double cp = std::clamp(pred, -delta, delta);
        const double ct = std::clamp(s.target, -delta, delta);
        loss += std::abs(cp - ct);
        double d = 0.0;
        if (std::abs(pred) < delta) d = (cp > ct) ? 1.0 : (cp < ct ? -1.0 : 0.0);
        d /= static_cast<double>(batch.size());
        if (d != 0.0)
            detail::pw_backward_core<float>(m.arch, m.weights.data(), in, acts,
                                            static_cast<float>(d), out.gradient.data());
    }
    out.mse = loss / static_cast<double>(batch.size());
    return out;
}

struct PwTrainConfig {
    int points_per_step = 256;
    long steps = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double near_surface_ratio = 0.8;
    double jitter_sigma = 0.5;  // mm, normal offset for near-surface samples
    uint64_t seed = 1;
};

// DeepSDF-style training: per step draw one random shape, sample points near
// its surface (plus some uniform box points), regress the clamped distance.
inline PointwiseModel pw_train(const PointwiseModel& m0, const PwTrainConfig& cfg,
                               std::vector<double>* trace = nullptr,
                               bool log_progress = false) {
    PointwiseModel m = m0;
    m.meta.seed = cfg.seed;
    nn::Adam<float> adam;
    adam.lr = cfg.lr;
    adam.beta1 = cfg.beta1;
    adam.beta2 = cfg.beta2;
    adam.eps = cfg.adam_eps;
    Rng rng(cfg.seed);

    const Vec3 lo = m.grid.origin;
    const Vec3 hi = m.grid.voxel_center(m.grid.nx - 1, m.grid.ny - 1, m.grid.nz - 1);

    for (long step = 0; step < cfg.steps; ++step) {
        const ShapeParams p = sample_random_params(rng);
        const TriangleMesh mesh = tessellate(p);
        const Bvh bvh = build_bvh(mesh);
        std::vector<PwSample> batch;
        batch.reserve(cfg.points_per_step);
        const int n_near =
            static_cast<int>(std::lround(cfg.points_per_step * cfg.near_surface_ratio));
        std::vector<Vec3> surf = detail::sample_surface(mesh, n_near, rng);
        for (Vec3 q : surf) {
            q += Vec3{rng.normal(), rng.normal(), rng.normal()} * cfg.jitter_sigma;
            q = Vec3::min(Vec3::max(q, lo), hi);
            const NearestTriangle hit = nearest_point_bvh(q, mesh, bvh);
            batch.push_back({p, q, signed_distance_from(q, mesh, hit)});
        }
        for (int i = n_near; i < cfg.points_per_step; ++i) {
            const Vec3 q{rng.uniform(lo.x, hi.x), rng.uniform(lo.y, hi.y),
                         rng.uniform(lo.z, hi.z)};
            const NearestTriangle hit = nearest_point_bvh(q, mesh, bvh);
            batch.push_back({p, q, signed_distance_from(q, mesh, hit)});
        }
        LossAndGradient lg = pw_loss_and_gradient(m, batch);
        adam.step(std::span<float>(m.weights), std::span<const float>(lg.gradient));
        if (trace) trace->push_back(lg.mse);
        m.meta.final_loss = lg.mse;
        if (log_progress && (step % 100 == 0 || step + 1 == cfg.steps))
            std::fprintf(stderr, "[pw_train] step %ld/%ld loss=%.6f\n", step, cfg.steps, lg.mse);
    }
    m.meta.steps = m0.meta.steps + cfg.steps;
    return m;
}

}  // namespace sdmforge
