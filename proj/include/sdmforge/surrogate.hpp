#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdmforge/cochlea.hpp"
#include "sdmforge/grid.hpp"
#include "sdmforge/nn.hpp"
#include "sdmforge/sdm.hpp"
#include "sdmforge/threading.hpp"

namespace sdmforge {

// Parameter-to-grid decoder layout: a small MLP embeds the 4 normalized shape
// parameters into a coarse feature grid, which three {trilinear upsample,
// 3x3x3 conv, per-channel parameter conditioning, ReLU} stages refine up to
// the output resolution; a 1x1x1 linear conv produces the scalar field.
struct GridDecoderArch {
    std::array<int, 3> coarse{5, 5, 6};
    int coarse_ch = 32;
    std::array<int, 2> embed{64, 256};
    std::array<std::array<int, 3>, 3> stage_dims{{{13, 13, 15}, {25, 25, 30}, {50, 50, 60}}};
    std::array<int, 3> stage_ch{16, 8, 8};

    std::array<int, 3> out_dims() const { return stage_dims[2]; }

    static GridDecoderArch standard() { return {}; }

    // Shrunk variant for 64-bit finite-difference gradient checks.
    static GridDecoderArch reduced() {
        GridDecoderArch a;
        a.coarse = {3, 3, 3};
        a.coarse_ch = 4;
        a.embed = {8, 32};
        a.stage_dims = {{{4, 4, 5}, {6, 6, 7}, {8, 8, 10}}};
        a.stage_ch = {2, 1, 1};
        return a;
    }
};

struct LayerSpec {
    std::string name;
    std::vector<int> shape;
    std::size_t offset = 0;
    std::size_t count = 0;
    int fan_in = 1;
};

namespace detail {

inline std::size_t shape_count(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
}

}  // namespace detail

inline std::vector<LayerSpec> decoder_layers(const GridDecoderArch& a) {
    std::vector<LayerSpec> layers;
    std::size_t off = 0;
    auto add = [&](const std::string& name, std::vector<int> shape, int fan_in) {
        const std::size_t count = detail::shape_count(shape);
        layers.push_back({name, std::move(shape), off, count, fan_in});
        off += count;
    };
    const int coarse_n = a.coarse[0] * a.coarse[1] * a.coarse[2] * a.coarse_ch;
    add("embed0.w", {a.embed[0], 4}, 4);
    add("embed0.b", {a.embed[0]}, 4);
    add("embed1.w", {a.embed[1], a.embed[0]}, a.embed[0]);
    add("embed1.b", {a.embed[1]}, a.embed[0]);
    add("embed2.w", {coarse_n, a.embed[1]}, a.embed[1]);
    add("embed2.b", {coarse_n}, a.embed[1]);
    int cin = a.coarse_ch;
    for (int s = 0; s < 3; ++s) {
        const std::string p = "stage" + std::to_string(s);
        add(p + ".conv.w", {27, cin, a.stage_ch[s]}, 27 * cin);
        add(p + ".conv.b", {a.stage_ch[s]}, 27 * cin);
        add(p + ".cond.w", {2 * a.stage_ch[s], 4}, 4);
        add(p + ".cond.b", {2 * a.stage_ch[s]}, 4);
        cin = a.stage_ch[s];
    }
    add("head.w", {cin, 1}, cin);
    add("head.b", {1}, cin);
    return layers;
}

inline std::size_t decoder_weight_count(const GridDecoderArch& a) {
    std::size_t n = 0;
    for (const LayerSpec& l : decoder_layers(a)) n += l.count;
    return n;
}

namespace detail {

// Resolved weight offsets for fast lookup during forward/backward.
struct DecoderOffsets {
    std::size_t e0w, e0b, e1w, e1b, e2w, e2b;
    std::array<std::size_t, 3> conv_w, conv_b, cond_w, cond_b;
    std::size_t head_w, head_b;
    std::size_t total;

    explicit DecoderOffsets(const GridDecoderArch& a) {
        const auto layers = decoder_layers(a);
        auto find = [&](const std::string& name) {
            for (const LayerSpec& l : layers)
                if (l.name == name) return l.offset;
            throw std::logic_error("decoder layer missing: " + name);
        };
        e0w = find("embed0.w");
        e0b = find("embed0.b");
        e1w = find("embed1.w");
        e1b = find("embed1.b");
        e2w = find("embed2.w");
        e2b = find("embed2.b");
        for (int s = 0; s < 3; ++s) {
            const std::string p = "stage" + std::to_string(s);
            conv_w[s] = find(p + ".conv.w");
            conv_b[s] = find(p + ".conv.b");
            cond_w[s] = find(p + ".cond.w");
            cond_b[s] = find(p + ".cond.b");
        }
        head_w = find("head.w");
        head_b = find("head.b");
        total = layers.back().offset + layers.back().count;
    }
};

template <class T>
struct DecoderActs {
    std::vector<T> e0, e1;
    nn::Tensor3<T> coarse;
    std::array<nn::Tensor3<T>, 3> resized;
    std::array<nn::Tensor3<T>, 3> conved;
    std::array<std::vector<T>, 3> cond;
    std::array<nn::Tensor3<T>, 3> filmed;  // post-ReLU
    nn::Tensor3<T> out;
};

// Forward pass. p_embed feeds the embedding MLP, p_cond the per-stage
// conditioning branches; they are the same normalized parameters except in
// tests that isolate the conditioning path.
template <class T>
void decoder_forward(const GridDecoderArch& a, const DecoderOffsets& off, const T* w,
                     const std::array<T, 4>& p_embed, const std::array<T, 4>& p_cond,
                     DecoderActs<T>& acts) {
    acts.e0.assign(a.embed[0], T(0));
    acts.e1.assign(a.embed[1], T(0));
    nn::linear_forward(p_embed.data(), 4, w + off.e0w, w + off.e0b, acts.e0.data(), a.embed[0]);
    nn::relu_forward(acts.e0.data(), acts.e0.size());
    nn::linear_forward(acts.e0.data(), a.embed[0], w + off.e1w, w + off.e1b, acts.e1.data(),
                       a.embed[1]);
    nn::relu_forward(acts.e1.data(), acts.e1.size());

    acts.coarse.resize(a.coarse[0], a.coarse[1], a.coarse[2], a.coarse_ch);
    nn::linear_forward(acts.e1.data(), a.embed[1], w + off.e2w, w + off.e2b,
                       acts.coarse.v.data(), static_cast<int>(acts.coarse.v.size()));

    const nn::Tensor3<T>* x = &acts.coarse;
    for (int s = 0; s < 3; ++s) {
        nn::resize_forward(*x, a.stage_dims[s][0], a.stage_dims[s][1], a.stage_dims[s][2],
                           acts.resized[s]);
        nn::conv3_forward(acts.resized[s], w + off.conv_w[s], w + off.conv_b[s], acts.conved[s],
                          a.stage_ch[s]);
        acts.cond[s].assign(2 * a.stage_ch[s], T(0));
        nn::linear_forward(p_cond.data(), 4, w + off.cond_w[s], w + off.cond_b[s],
                           acts.cond[s].data(), 2 * a.stage_ch[s]);
        nn::film_forward(acts.conved[s], acts.cond[s].data(),
                         acts.cond[s].data() + a.stage_ch[s], acts.filmed[s]);
        nn::relu_forward(acts.filmed[s].v.data(), acts.filmed[s].v.size());
        x = &acts.filmed[s];
    }
    nn::conv1_forward(acts.filmed[2], w + off.head_w, w + off.head_b, acts.out, 1);
}

// Backward pass; `dout` holds dL/d(final grid) and is consumed. Gradients
// accumulate into `grad` (same layout as the weights).
template <class T>
void decoder_backward(const GridDecoderArch& a, const DecoderOffsets& off, const T* w,
                      const std::array<T, 4>& p_embed, const std::array<T, 4>& p_cond,
                      DecoderActs<T>& acts, nn::Tensor3<T>& dout, T* grad) {
    nn::Tensor3<T> dx, dtmp;
    nn::conv1_backward(acts.filmed[2], w + off.head_w, dout, dx, grad + off.head_w,
                       grad + off.head_b);

    std::array<T, 4> dp_cond_sink{};  // conditioning input grads are not needed
    for (int s = 2; s >= 0; --s) {
        nn::relu_backward(acts.filmed[s].v.data(), dx.v.data(), dx.v.size());
        std::vector<T> dcond(2 * a.stage_ch[s], T(0));
        nn::film_backward(acts.conved[s], acts.cond[s].data(), dx, dtmp, dcond.data(),
                          dcond.data() + a.stage_ch[s]);
        nn::linear_backward(p_cond.data(), 4, w + off.cond_w[s], dcond.data(),
                            2 * a.stage_ch[s], dp_cond_sink.data(), grad + off.cond_w[s],
                            grad + off.cond_b[s]);
        nn::conv3_backward(acts.resized[s], w + off.conv_w[s], dtmp, dx, grad + off.conv_w[s],
                           grad + off.conv_b[s]);
        const auto& src = s == 0 ? acts.coarse : acts.filmed[s - 1];
        nn::resize_backward(dx, src.nx, src.ny, src.nz, src.c, dtmp);
        std::swap(dx, dtmp);
    }

    // embedding MLP
    std::vector<T> de1(a.embed[1], T(0)), de0(a.embed[0], T(0));
    nn::linear_backward(acts.e1.data(), a.embed[1], w + off.e2w, dx.v.data(),
                        static_cast<int>(dx.v.size()), de1.data(), grad + off.e2w,
                        grad + off.e2b);
    nn::relu_backward(acts.e1.data(), de1.data(), de1.size());
    nn::linear_backward(acts.e0.data(), a.embed[0], w + off.e1w, de1.data(), a.embed[1],
                        de0.data(), grad + off.e1w, grad + off.e1b);
    nn::relu_backward(acts.e0.data(), de0.data(), de0.size());
    nn::linear_backward(p_embed.data(), 4, w + off.e0w, de0.data(), a.embed[0],
                        static_cast<T*>(nullptr), grad + off.e0w, grad + off.e0b);
}

}  // namespace detail

// Trainable parameter-to-grid surrogate ("grid decoder"): architecture,
// flat little-endian-serializable weight vector, normalization ranges and
// training provenance.
struct SurrogateModel {
    GridDecoderArch arch;
    GridSpec grid;
    std::vector<float> weights;
    std::array<double, 4> norm_lo = kParamLo;
    std::array<double, 4> norm_hi = kParamHi;
    struct Meta {
        uint64_t seed = 0;
        long steps = 0;
        double final_loss = 0.0;
    } meta;

    std::array<float, 4> normalized(const ShapeParams& p) const {
        const auto v = p.as_array();
        std::array<float, 4> n{};
        for (int i = 0; i < 4; ++i) {
            if (!(v[i] >= norm_lo[i] && v[i] <= norm_hi[i]))
                throw std::invalid_argument(std::string("surrogate: parameter ") +
                                            kParamName[i] + " outside the trained range");
            n[i] = static_cast<float>(2.0 * (v[i] - norm_lo[i]) / (norm_hi[i] - norm_lo[i]) -
                                      1.0);
        }
        return n;
    }
};

inline SurrogateModel init_model(uint64_t seed,
                                 const GridDecoderArch& arch = GridDecoderArch::standard(),
                                 const GridSpec& grid = default_grid_spec()) {
    const auto out = arch.out_dims();
    if (out[0] != grid.nx || out[1] != grid.ny || out[2] != grid.nz)
        throw std::invalid_argument("init_model: architecture output dims do not match grid");
    SurrogateModel m;
    m.arch = arch;
    m.grid = grid;
    m.weights.assign(decoder_weight_count(arch), 0.0f);
    m.meta.seed = seed;
    Rng rng(seed);
    for (const LayerSpec& l : decoder_layers(arch)) {
        if (l.name.ends_with(".b")) continue;  // biases start at zero
        nn::init_uniform(std::span<float>(m.weights.data() + l.offset, l.count), l.fan_in, rng);
    }
    return m;
}

namespace detail {

// Test hook: run the decoder with separate embedding/conditioning parameters.
inline ScalarGrid surrogate_forward_split(const SurrogateModel& m, const ShapeParams& p_embed,
                                          const ShapeParams& p_cond) {
    const DecoderOffsets off(m.arch);
    if (off.total != m.weights.size())
        throw std::invalid_argument("surrogate: weight vector does not match architecture");
    DecoderActs<float> acts;
    decoder_forward<float>(m.arch, off, m.weights.data(), m.normalized(p_embed),
                           m.normalized(p_cond), acts);
    ScalarGrid g(m.grid);
    for (std::size_t i = 0; i < g.values.size(); ++i) g.values[i] = acts.out.v[i];
    return g;
}

}  // namespace detail

// Deterministic single-grid inference.
inline ScalarGrid surrogate_forward(const SurrogateModel& m, const ShapeParams& p) {
    return detail::surrogate_forward_split(m, p, p);
}

struct LossAndGradient {
    double mse = 0.0;
    std::vector<float> gradient;
};

struct TrainSample {
    ShapeParams params;
    const ScalarGrid* target = nullptr;
};

// Mean squared voxel error over the batch plus d(mse)/d(weights).
// Per-sample passes may run on parallel workers; the reduction order is fixed.
inline LossAndGradient loss_and_gradient(const SurrogateModel& m,
                                         const std::vector<TrainSample>& batch) {
    if (batch.empty()) throw std::invalid_argument("loss_and_gradient: empty batch");
    const detail::DecoderOffsets off(m.arch);
    if (off.total != m.weights.size())
        throw std::invalid_argument("surrogate: weight vector does not match architecture");
    const std::size_t nvox = m.grid.voxel_count();
    for (const TrainSample& s : batch) {
        if (!s.target || s.target->values.size() != nvox)
            throw std::invalid_argument("loss_and_gradient: target grid shape mismatch");
    }

    const std::size_t nb = batch.size();
    std::vector<std::vector<float>> grads(nb);
    std::vector<double> errs(nb, 0.0);
    const double scale = 2.0 / (static_cast<double>(nb) * static_cast<double>(nvox));

    parallel_for(nb, [&](std::size_t b0, std::size_t b1) {
        detail::DecoderActs<float> acts;
        nn::Tensor3<float> dout;
        for (std::size_t b = b0; b < b1; ++b) {
            const auto pn = m.normalized(batch[b].params);
            decoder_forward<float>(m.arch, off, m.weights.data(), pn, pn, acts);
            dout.resize(acts.out.nx, acts.out.ny, acts.out.nz, 1);
            double err = 0.0;
            const float* tgt = batch[b].target->values.data();
            for (std::size_t i = 0; i < nvox; ++i) {
                const double d = static_cast<double>(acts.out.v[i]) - tgt[i];
                err += d * d;
                dout.v[i] = static_cast<float>(d * scale);
            }
            errs[b] = err;
            grads[b].assign(m.weights.size(), 0.0f);
            decoder_backward<float>(m.arch, off, m.weights.data(), pn, pn, acts, dout,
                                    grads[b].data());
        }
    });

    LossAndGradient out;
    out.gradient.assign(m.weights.size(), 0.0f);
    double err_total = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
        err_total += errs[b];
        const std::vector<float>& g = grads[b];
        for (std::size_t i = 0; i < g.size(); ++i) out.gradient[i] += g[i];
    }
    out.mse = err_total / (static_cast<double>(nb) * static_cast<double>(nvox));
    return out;
}

struct TrainConfig {
    int batch = 8;
    long steps = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double static_ratio = 0.5;  // fraction of each batch drawn from the static set
    uint64_t seed = 1;
    BackendId reference_backend = BackendId::bvh;
    double clamp_lo = kClampLo;
    double clamp_hi = kClampHi;

    void validate() const {
        if (batch < 1) throw std::invalid_argument("TrainConfig: batch must be >= 1");
        if (steps < 0) throw std::invalid_argument("TrainConfig: steps must be >= 0");
        if (lr < 0.0) throw std::invalid_argument("TrainConfig: learning rate must be >= 0");
        if (!(static_ratio >= 0.0 && static_ratio <= 1.0))
            throw std::invalid_argument("TrainConfig: static/online ratio must lie in [0,1]");
    }
};

struct StaticSample {
    ShapeParams params;
    ScalarGrid sdm;  // clamped reference
};

// Reference SDM for a parameter set using a mesh-based backend.
inline ScalarGrid reference_sdm(const ShapeParams& p, const GridSpec& g, BackendId backend) {
    switch (backend) {
        case BackendId::naive: {
            TriangleMesh mesh = tessellate(p);
            return sdm_naive(mesh, g);
        }
        case BackendId::bvh: {
            TriangleMesh mesh = tessellate(p);
            return sdm_bvh(mesh, g);
        }
        case BackendId::edt: {
            TriangleMesh mesh = tessellate(p);
            return sdm_edt(mesh, g).grid;
        }
        default:
            throw std::invalid_argument(
                "reference_sdm: reference backend must be naive, bvh or edt");
    }
}

// Precomputed clamped SDMs for the uniform parameter lattice.
inline std::vector<StaticSample> build_static_set(int n_per_axis, const GridSpec& g,
                                                  BackendId backend = BackendId::bvh,
                                                  double lo = kClampLo, double hi = kClampHi) {
    std::vector<StaticSample> out;
    for (const ShapeParams& p : param_grid(n_per_axis))
        out.push_back({p, clamp_grid(reference_sdm(p, g, backend), lo, hi)});
    return out;
}

// Adaptive-moment training over a static/online sample mix. Fully reproducible
// from cfg.seed; the loss trace is appended per step.
inline SurrogateModel train(const SurrogateModel& m0, const TrainConfig& cfg,
                            const std::vector<StaticSample>& static_set,
                            std::vector<double>* trace = nullptr,
                            bool log_progress = false) {
    cfg.validate();
    const int k_static = static_cast<int>(std::lround(cfg.batch * cfg.static_ratio));
    if (k_static > 0 && static_set.empty())
        throw std::invalid_argument("train: static set is empty but static_ratio > 0");
    for (const StaticSample& s : static_set)
        if (s.sdm.values.size() != m0.grid.voxel_count())
            throw std::invalid_argument("train: static sample grid mismatch");

    SurrogateModel m = m0;
    m.meta.seed = cfg.seed;
    nn::Adam<float> adam;
    adam.lr = cfg.lr;
    adam.beta1 = cfg.beta1;
    adam.beta2 = cfg.beta2;
    adam.eps = cfg.adam_eps;

    Rng rng(cfg.seed);
    std::vector<ScalarGrid> online(cfg.batch);
    for (long step = 0; step < cfg.steps; ++step) {
        std::vector<TrainSample> batch;
        batch.reserve(cfg.batch);
        for (int i = 0; i < k_static; ++i) {
            const StaticSample& s = static_set[rng.uniform_index(static_set.size())];
            batch.push_back({s.params, &s.sdm});
        }
        for (int i = k_static; i < cfg.batch; ++i) {
            const ShapeParams p = sample_random_params(rng);
            online[i] = clamp_grid(reference_sdm(p, m.grid, cfg.reference_backend),
                                   cfg.clamp_lo, cfg.clamp_hi);
            batch.push_back({p, &online[i]});
        }
        LossAndGradient lg = loss_and_gradient(m, batch);
        adam.step(std::span<float>(m.weights), std::span<const float>(lg.gradient));
        if (trace) trace->push_back(lg.mse);
        m.meta.final_loss = lg.mse;
        if (log_progress && (step % 50 == 0 || step + 1 == cfg.steps))
            std::fprintf(stderr, "[train] step %ld/%ld mse=%.6f\n", step, cfg.steps, lg.mse);
    }
    m.meta.steps = m0.meta.steps + cfg.steps;
    return m;
}

}  // namespace sdmforge
