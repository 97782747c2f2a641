#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <string>
#include <vector>

#include "sdmforge/rng.hpp"
#include "sdmforge/threading.hpp"

namespace sdmforge::nn {

// Dense 3D feature map, channel-last: index = c + C*(i + nx*(j + ny*k)).
// The voxel ordering matches ScalarGrid's x-fastest layout.
template <class T>
struct Tensor3 {
    int nx = 0, ny = 0, nz = 0, c = 0;
    std::vector<T> v;

    void resize(int nx_, int ny_, int nz_, int c_) {
        nx = nx_;
        ny = ny_;
        nz = nz_;
        c = c_;
        v.assign(static_cast<std::size_t>(nx) * ny * nz * c, T(0));
    }
    std::size_t voxels() const { return static_cast<std::size_t>(nx) * ny * nz; }
    T* at(int i, int j, int k) {
        return v.data() + static_cast<std::size_t>(c) * (i + static_cast<std::size_t>(nx) * (j + static_cast<std::size_t>(ny) * k));
    }
    const T* at(int i, int j, int k) const {
        return v.data() + static_cast<std::size_t>(c) * (i + static_cast<std::size_t>(nx) * (j + static_cast<std::size_t>(ny) * k));
    }
};

// ---------------------------------------------------------------------------
// Fully connected layer, weights row-major [nout][nin].

template <class T>
void linear_forward(const T* in, int nin, const T* w, const T* b, T* out, int nout) {
    for (int o = 0; o < nout; ++o) {
        T acc = b[o];
        const T* wr = w + static_cast<std::size_t>(o) * nin;
        for (int i = 0; i < nin; ++i) acc += wr[i] * in[i];
        out[o] = acc;
    }
}

template <class T>
void linear_backward(const T* in, int nin, const T* w, const T* dout, int nout, T* din,
                     T* dw, T* db) {
    if (din)
        for (int i = 0; i < nin; ++i) din[i] = T(0);
    for (int o = 0; o < nout; ++o) {
        const T g = dout[o];
        const T* wr = w + static_cast<std::size_t>(o) * nin;
        T* dwr = dw + static_cast<std::size_t>(o) * nin;
        if (din)
            for (int i = 0; i < nin; ++i) din[i] += g * wr[i];
        for (int i = 0; i < nin; ++i) dwr[i] += g * in[i];
        db[o] += g;
    }
}

template <class T>
void relu_forward(T* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (x[i] < T(0)) x[i] = T(0);
}

// `y` is the post-activation output; gradients flow where it is positive.
template <class T>
void relu_backward(const T* y, T* dy, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (y[i] <= T(0)) dy[i] = T(0);
}

// ---------------------------------------------------------------------------
// 3x3x3 "same" convolution, zero padding. Weight layout [tap][cin][cout]
// with tap = (dk+1)*9 + (dj+1)*3 + (di+1), so the cout loop runs contiguous.

#if defined(__GNUC__) || defined(__clang__)
#define SDMFORGE_VEC8 1
namespace detail {

using vf8 = float __attribute__((vector_size(32)));

inline vf8 vload8(const float* p) {
    vf8 v;
    __builtin_memcpy(&v, p, sizeof(v));
    return v;
}

inline void vstore8(float* p, vf8 v) { __builtin_memcpy(p, &v, sizeof(v)); }

inline vf8 vzero8() { return vf8{0, 0, 0, 0, 0, 0, 0, 0}; }

// fixed-tree horizontal sum
inline float vsum8(vf8 v) {
    return ((v[0] + v[4]) + (v[1] + v[5])) + ((v[2] + v[6]) + (v[3] + v[7]));
}

}  // namespace detail
#else
#define SDMFORGE_VEC8 0
#endif

namespace detail {

// COUT known at compile time keeps the accumulator in registers.
template <class T, int COUT>
void conv3_forward_impl(const Tensor3<T>& in, const T* w, const T* b, Tensor3<T>& out) {
    const int cin = in.c;
    const std::ptrdiff_t sx = cin;
    const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(cin) * in.nx;
    const std::ptrdiff_t sz = sy * in.ny;
    std::ptrdiff_t tap_off[27];
    for (int dk = -1; dk <= 1; ++dk)
        for (int dj = -1; dj <= 1; ++dj)
            for (int di = -1; di <= 1; ++di)
                tap_off[(dk + 1) * 9 + (dj + 1) * 3 + (di + 1)] = di * sx + dj * sy + dk * sz;

    // each output voxel is independent, so k-slabs parallelize bit-identically
    parallel_for(static_cast<std::size_t>(in.nz), [&](std::size_t k0, std::size_t k1) {
        for (int k = static_cast<int>(k0); k < static_cast<int>(k1); ++k)
            for (int j = 0; j < in.ny; ++j) {
                const bool interior_jk = k > 0 && k + 1 < in.nz && j > 0 && j + 1 < in.ny;
                for (int i = 0; i < in.nx; ++i) {
                    T acc[COUT];
                    for (int o = 0; o < COUT; ++o) acc[o] = b[o];
                    if (interior_jk && i > 0 && i + 1 < in.nx) {
#if SDMFORGE_VEC8
                        if constexpr (std::is_same_v<T, float> && COUT % 8 == 0 && COUT <= 32) {
                            // four independent accumulator banks hide the FMA
                            // latency chain; banks are reduced in a fixed order
                            constexpr int NV = COUT / 8;
                            detail::vf8 a0[NV], a1[NV], a2[NV], a3[NV];
                            for (int v = 0; v < NV; ++v) {
                                a0[v] = detail::vload8(b + 8 * v);
                                a1[v] = a2[v] = a3[v] = detail::vzero8();
                            }
                            const T* const base = in.at(i, j, k);
                            for (int tap = 0; tap < 27; ++tap) {
                                const float* __restrict x = base + tap_off[tap];
                                const float* __restrict wt =
                                    w + static_cast<std::size_t>(tap) * cin * COUT;
                                int ci = 0;
                                for (; ci + 4 <= cin; ci += 4) {
                                    const float x0 = x[ci], x1 = x[ci + 1];
                                    const float x2 = x[ci + 2], x3 = x[ci + 3];
                                    const float* w0 = wt + static_cast<std::size_t>(ci) * COUT;
                                    for (int v = 0; v < NV; ++v) {
                                        a0[v] += detail::vload8(w0 + 8 * v) * x0;
                                        a1[v] += detail::vload8(w0 + COUT + 8 * v) * x1;
                                        a2[v] += detail::vload8(w0 + 2 * COUT + 8 * v) * x2;
                                        a3[v] += detail::vload8(w0 + 3 * COUT + 8 * v) * x3;
                                    }
                                }
                                for (; ci < cin; ++ci) {
                                    const float* wr = wt + static_cast<std::size_t>(ci) * COUT;
                                    for (int v = 0; v < NV; ++v)
                                        a0[v] += detail::vload8(wr + 8 * v) * x[ci];
                                }
                            }
                            for (int v = 0; v < NV; ++v) {
                                const detail::vf8 s = (a0[v] + a1[v]) + (a2[v] + a3[v]);
                                detail::vstore8(acc + 8 * v, s);
                            }
                            T* y = out.at(i, j, k);
                            for (int o = 0; o < COUT; ++o) y[o] = acc[o];
                            continue;
                        }
#endif
                        // scalar interior path with the same bank structure
                        T acc1[COUT], acc2[COUT], acc3[COUT];
                        for (int o = 0; o < COUT; ++o) acc1[o] = acc2[o] = acc3[o] = T(0);
                        const T* const base = in.at(i, j, k);
                        for (int tap = 0; tap < 27; ++tap) {
                            const T* __restrict x = base + tap_off[tap];
                            const T* __restrict wt =
                                w + static_cast<std::size_t>(tap) * cin * COUT;
                            int ci = 0;
                            for (; ci + 4 <= cin; ci += 4) {
                                const T x0 = x[ci], x1 = x[ci + 1], x2 = x[ci + 2],
                                        x3 = x[ci + 3];
                                const T* __restrict w0 = wt + static_cast<std::size_t>(ci) * COUT;
                                const T* __restrict w1 = w0 + COUT;
                                const T* __restrict w2 = w1 + COUT;
                                const T* __restrict w3 = w2 + COUT;
                                for (int o = 0; o < COUT; ++o) {
                                    acc[o] += x0 * w0[o];
                                    acc1[o] += x1 * w1[o];
                                    acc2[o] += x2 * w2[o];
                                    acc3[o] += x3 * w3[o];
                                }
                            }
                            for (; ci < cin; ++ci) {
                                const T xv = x[ci];
                                const T* __restrict wr = wt + static_cast<std::size_t>(ci) * COUT;
                                for (int o = 0; o < COUT; ++o) acc[o] += xv * wr[o];
                            }
                        }
                        for (int o = 0; o < COUT; ++o)
                            acc[o] = (acc[o] + acc1[o]) + (acc2[o] + acc3[o]);
                    } else {
                        for (int dk = -1; dk <= 1; ++dk) {
                            const int kk = k + dk;
                            if (kk < 0 || kk >= in.nz) continue;
                            for (int dj = -1; dj <= 1; ++dj) {
                                const int jj = j + dj;
                                if (jj < 0 || jj >= in.ny) continue;
                                for (int di = -1; di <= 1; ++di) {
                                    const int ii = i + di;
                                    if (ii < 0 || ii >= in.nx) continue;
                                    const int tap = (dk + 1) * 9 + (dj + 1) * 3 + (di + 1);
                                    const T* __restrict x = in.at(ii, jj, kk);
                                    const T* __restrict wt =
                                        w + static_cast<std::size_t>(tap) * cin * COUT;
                                    for (int ci = 0; ci < cin; ++ci) {
                                        const T xv = x[ci];
                                        const T* __restrict wr =
                                            wt + static_cast<std::size_t>(ci) * COUT;
                                        for (int o = 0; o < COUT; ++o) acc[o] += xv * wr[o];
                                    }
                                }
                            }
                        }
                    }
                    T* y = out.at(i, j, k);
                    for (int o = 0; o < COUT; ++o) y[o] = acc[o];
                }
            }
    });
}

}  // namespace detail

namespace detail {

// runtime-width fallback, same loop order as the fixed kernels
template <class T>
void conv3_forward_generic(const Tensor3<T>& in, const T* w, const T* b, Tensor3<T>& out,
                           int cout) {
    const int cin = in.c;
    parallel_for(static_cast<std::size_t>(in.nz), [&](std::size_t k0, std::size_t k1) {
        std::vector<T> acc(cout);
        for (int k = static_cast<int>(k0); k < static_cast<int>(k1); ++k)
            for (int j = 0; j < in.ny; ++j)
                for (int i = 0; i < in.nx; ++i) {
                    for (int o = 0; o < cout; ++o) acc[o] = b[o];
                    for (int dk = -1; dk <= 1; ++dk) {
                        const int kk = k + dk;
                        if (kk < 0 || kk >= in.nz) continue;
                        for (int dj = -1; dj <= 1; ++dj) {
                            const int jj = j + dj;
                            if (jj < 0 || jj >= in.ny) continue;
                            for (int di = -1; di <= 1; ++di) {
                                const int ii = i + di;
                                if (ii < 0 || ii >= in.nx) continue;
                                const int tap = (dk + 1) * 9 + (dj + 1) * 3 + (di + 1);
                                const T* x = in.at(ii, jj, kk);
                                const T* wt = w + static_cast<std::size_t>(tap) * cin * cout;
                                for (int ci = 0; ci < cin; ++ci) {
                                    const T xv = x[ci];
                                    const T* wr = wt + static_cast<std::size_t>(ci) * cout;
                                    for (int o = 0; o < cout; ++o) acc[o] += xv * wr[o];
                                }
                            }
                        }
                    }
                    T* y = out.at(i, j, k);
                    for (int o = 0; o < cout; ++o) y[o] = acc[o];
                }
    });
}

// scalar per-voxel backward contribution (dx and dw; db handled separately)
template <class T>
void conv3_backward_voxel(const Tensor3<T>& in, const T* w, const Tensor3<T>& dout,
                          Tensor3<T>& din, T* dw, int i, int j, int k, int cin, int cout) {
    const T* g = dout.at(i, j, k);
    for (int dk = -1; dk <= 1; ++dk) {
        const int kk = k + dk;
        if (kk < 0 || kk >= in.nz) continue;
        for (int dj = -1; dj <= 1; ++dj) {
            const int jj = j + dj;
            if (jj < 0 || jj >= in.ny) continue;
            for (int di = -1; di <= 1; ++di) {
                const int ii = i + di;
                if (ii < 0 || ii >= in.nx) continue;
                const int tap = (dk + 1) * 9 + (dj + 1) * 3 + (di + 1);
                const T* x = in.at(ii, jj, kk);
                T* dx = din.at(ii, jj, kk);
                const T* wt = w + static_cast<std::size_t>(tap) * cin * cout;
                T* dwt = dw + static_cast<std::size_t>(tap) * cin * cout;
                for (int ci = 0; ci < cin; ++ci) {
                    const T xv = x[ci];
                    const T* wr = wt + static_cast<std::size_t>(ci) * cout;
                    T* dwr = dwt + static_cast<std::size_t>(ci) * cout;
                    T s = T(0);
                    for (int o = 0; o < cout; ++o) {
                        s += g[o] * wr[o];
                        dwr[o] += xv * g[o];
                    }
                    dx[ci] += s;
                }
            }
        }
    }
}

}  // namespace detail

template <class T>
void conv3_forward(const Tensor3<T>& in, const T* w, const T* b, Tensor3<T>& out, int cout) {
    out.resize(in.nx, in.ny, in.nz, cout);
    switch (cout) {
        case 1: detail::conv3_forward_impl<T, 1>(in, w, b, out); return;
        case 2: detail::conv3_forward_impl<T, 2>(in, w, b, out); return;
        case 4: detail::conv3_forward_impl<T, 4>(in, w, b, out); return;
        case 8: detail::conv3_forward_impl<T, 8>(in, w, b, out); return;
        case 16: detail::conv3_forward_impl<T, 16>(in, w, b, out); return;
        case 32: detail::conv3_forward_impl<T, 32>(in, w, b, out); return;
        default: detail::conv3_forward_generic(in, w, b, out, cout); return;
    }
}

template <class T>
void conv3_backward(const Tensor3<T>& in, const T* w, const Tensor3<T>& dout, Tensor3<T>& din,
                    T* dw, T* db) {
    const int cin = in.c;
    const int cout = dout.c;
    din.resize(in.nx, in.ny, in.nz, cin);
    const std::ptrdiff_t sx = cin;
    const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(cin) * in.nx;
    const std::ptrdiff_t sz = sy * in.ny;
    std::ptrdiff_t tap_off[27];
    for (int dk = -1; dk <= 1; ++dk)
        for (int dj = -1; dj <= 1; ++dj)
            for (int di = -1; di <= 1; ++di)
                tap_off[(dk + 1) * 9 + (dj + 1) * 3 + (di + 1)] = di * sx + dj * sy + dk * sz;

    // bias gradient in one dedicated pass
    for (std::size_t vx = 0; vx < dout.voxels(); ++vx) {
        const T* g = dout.v.data() + vx * cout;
        for (int o = 0; o < cout; ++o) db[o] += g[o];
    }

#if SDMFORGE_VEC8
    if constexpr (std::is_same_v<T, float>) {
        if (cout % 8 == 0 && cout <= 32) {
            const int nv = cout / 8;
            for (int k = 0; k < in.nz; ++k)
                for (int j = 0; j < in.ny; ++j) {
                    const bool interior_jk = k > 0 && k + 1 < in.nz && j > 0 && j + 1 < in.ny;
                    for (int i = 0; i < in.nx; ++i) {
                        if (!(interior_jk && i > 0 && i + 1 < in.nx)) continue;
                        const float* __restrict g = dout.at(i, j, k);
                        detail::vf8 gv[4];
                        for (int v = 0; v < nv; ++v) gv[v] = detail::vload8(g + 8 * v);
                        const float* const xbase = in.at(i, j, k);
                        float* const dxbase = din.at(i, j, k);
                        for (int tap = 0; tap < 27; ++tap) {
                            const float* __restrict x = xbase + tap_off[tap];
                            float* __restrict dx = dxbase + tap_off[tap];
                            const float* __restrict wt =
                                w + static_cast<std::size_t>(tap) * cin * cout;
                            float* __restrict dwt =
                                dw + static_cast<std::size_t>(tap) * cin * cout;
                            for (int ci = 0; ci < cin; ++ci) {
                                const float xv = x[ci];
                                const float* wr = wt + static_cast<std::size_t>(ci) * cout;
                                float* dwr = dwt + static_cast<std::size_t>(ci) * cout;
                                detail::vf8 prod = gv[0] * detail::vload8(wr);
                                detail::vstore8(dwr, detail::vload8(dwr) + gv[0] * xv);
                                for (int v = 1; v < nv; ++v) {
                                    prod += gv[v] * detail::vload8(wr + 8 * v);
                                    detail::vstore8(dwr + 8 * v,
                                                    detail::vload8(dwr + 8 * v) + gv[v] * xv);
                                }
                                dx[ci] += detail::vsum8(prod);
                            }
                        }
                    }
                }
            // borders fall through to the scalar loop below
            for (int k = 0; k < in.nz; ++k)
                for (int j = 0; j < in.ny; ++j) {
                    const bool interior_jk = k > 0 && k + 1 < in.nz && j > 0 && j + 1 < in.ny;
                    for (int i = 0; i < in.nx; ++i) {
                        if (interior_jk && i > 0 && i + 1 < in.nx) continue;
                        detail::conv3_backward_voxel(in, w, dout, din, dw, i, j, k, cin, cout);
                    }
                }
            return;
        }
    }
#endif
    for (int k = 0; k < in.nz; ++k)
        for (int j = 0; j < in.ny; ++j)
            for (int i = 0; i < in.nx; ++i)
                detail::conv3_backward_voxel(in, w, dout, din, dw, i, j, k, cin, cout);
}

// 1x1x1 convolution (per-voxel linear map), weights [cin][cout].
template <class T>
void conv1_forward(const Tensor3<T>& in, const T* w, const T* b, Tensor3<T>& out, int cout) {
    out.resize(in.nx, in.ny, in.nz, cout);
    const int cin = in.c;
    const std::size_t n = in.voxels();
    for (std::size_t vx = 0; vx < n; ++vx) {
        const T* x = in.v.data() + vx * cin;
        T* y = out.v.data() + vx * cout;
        for (int o = 0; o < cout; ++o) y[o] = b[o];
        for (int ci = 0; ci < cin; ++ci) {
            const T xv = x[ci];
            const T* wr = w + static_cast<std::size_t>(ci) * cout;
            for (int o = 0; o < cout; ++o) y[o] += xv * wr[o];
        }
    }
}

template <class T>
void conv1_backward(const Tensor3<T>& in, const T* w, const Tensor3<T>& dout, Tensor3<T>& din,
                    T* dw, T* db) {
    const int cin = in.c;
    const int cout = dout.c;
    din.resize(in.nx, in.ny, in.nz, cin);
    const std::size_t n = in.voxels();
    for (std::size_t vx = 0; vx < n; ++vx) {
        const T* x = in.v.data() + vx * cin;
        const T* g = dout.v.data() + vx * cout;
        T* dx = din.v.data() + vx * cin;
        for (int o = 0; o < cout; ++o) db[o] += g[o];
        for (int ci = 0; ci < cin; ++ci) {
            const T* wr = w + static_cast<std::size_t>(ci) * cout;
            T* dwr = dw + static_cast<std::size_t>(ci) * cout;
            T s = T(0);
            for (int o = 0; o < cout; ++o) {
                s += g[o] * wr[o];
                dwr[o] += x[ci] * g[o];
            }
            dx[ci] = s;
        }
    }
}

// ---------------------------------------------------------------------------
// Trilinear resize with align-corners sampling: output corner voxels map to
// input corner voxels, so constant fields resize to the same constant.

struct ResizeAxis {
    std::vector<int> i0, i1;
    std::vector<double> w1;  // weight of i1; i0 gets (1 - w1)
};

inline ResizeAxis make_resize_axis(int src, int dst) {
    ResizeAxis ax;
    ax.i0.resize(dst);
    ax.i1.resize(dst);
    ax.w1.resize(dst);
    for (int o = 0; o < dst; ++o) {
        double pos = dst > 1 ? static_cast<double>(o) * (src - 1) / (dst - 1) : 0.0;
        int i0 = static_cast<int>(pos);
        if (i0 > src - 2) i0 = src - 2;
        if (src == 1) i0 = 0;
        double w = pos - i0;
        ax.i0[o] = i0;
        ax.i1[o] = src == 1 ? 0 : i0 + 1;
        ax.w1[o] = w;
    }
    return ax;
}

template <class T>
void resize_forward(const Tensor3<T>& in, int nx, int ny, int nz, Tensor3<T>& out) {
    out.resize(nx, ny, nz, in.c);
    const ResizeAxis ax = make_resize_axis(in.nx, nx);
    const ResizeAxis ay = make_resize_axis(in.ny, ny);
    const ResizeAxis az = make_resize_axis(in.nz, nz);
    const int c = in.c;
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const T wx1 = static_cast<T>(ax.w1[i]);
                const T wy1 = static_cast<T>(ay.w1[j]);
                const T wz1 = static_cast<T>(az.w1[k]);
                const T* c000 = in.at(ax.i0[i], ay.i0[j], az.i0[k]);
                const T* c100 = in.at(ax.i1[i], ay.i0[j], az.i0[k]);
                const T* c010 = in.at(ax.i0[i], ay.i1[j], az.i0[k]);
                const T* c110 = in.at(ax.i1[i], ay.i1[j], az.i0[k]);
                const T* c001 = in.at(ax.i0[i], ay.i0[j], az.i1[k]);
                const T* c101 = in.at(ax.i1[i], ay.i0[j], az.i1[k]);
                const T* c011 = in.at(ax.i0[i], ay.i1[j], az.i1[k]);
                const T* c111 = in.at(ax.i1[i], ay.i1[j], az.i1[k]);
                T* y = out.at(i, j, k);
                // lerp form keeps constant fields bit-exact
                for (int ch = 0; ch < c; ++ch) {
                    const T v00 = c000[ch] + wx1 * (c100[ch] - c000[ch]);
                    const T v10 = c010[ch] + wx1 * (c110[ch] - c010[ch]);
                    const T v01 = c001[ch] + wx1 * (c101[ch] - c001[ch]);
                    const T v11 = c011[ch] + wx1 * (c111[ch] - c011[ch]);
                    const T v0 = v00 + wy1 * (v10 - v00);
                    const T v1 = v01 + wy1 * (v11 - v01);
                    y[ch] = v0 + wz1 * (v1 - v0);
                }
            }
}

template <class T>
void resize_backward(const Tensor3<T>& dout, int src_nx, int src_ny, int src_nz, int c,
                     Tensor3<T>& din) {
    din.resize(src_nx, src_ny, src_nz, c);
    const ResizeAxis ax = make_resize_axis(src_nx, dout.nx);
    const ResizeAxis ay = make_resize_axis(src_ny, dout.ny);
    const ResizeAxis az = make_resize_axis(src_nz, dout.nz);
    for (int k = 0; k < dout.nz; ++k)
        for (int j = 0; j < dout.ny; ++j)
            for (int i = 0; i < dout.nx; ++i) {
                const T wx1 = static_cast<T>(ax.w1[i]), wx0 = T(1) - wx1;
                const T wy1 = static_cast<T>(ay.w1[j]), wy0 = T(1) - wy1;
                const T wz1 = static_cast<T>(az.w1[k]), wz0 = T(1) - wz1;
                const T* g = dout.at(i, j, k);
                struct Corner {
                    T* p;
                    T w;
                };
                Corner corners[8] = {
                    {din.at(ax.i0[i], ay.i0[j], az.i0[k]), wx0 * wy0 * wz0},
                    {din.at(ax.i1[i], ay.i0[j], az.i0[k]), wx1 * wy0 * wz0},
                    {din.at(ax.i0[i], ay.i1[j], az.i0[k]), wx0 * wy1 * wz0},
                    {din.at(ax.i1[i], ay.i1[j], az.i0[k]), wx1 * wy1 * wz0},
                    {din.at(ax.i0[i], ay.i0[j], az.i1[k]), wx0 * wy0 * wz1},
                    {din.at(ax.i1[i], ay.i0[j], az.i1[k]), wx1 * wy0 * wz1},
                    {din.at(ax.i0[i], ay.i1[j], az.i1[k]), wx0 * wy1 * wz1},
                    {din.at(ax.i1[i], ay.i1[j], az.i1[k]), wx1 * wy1 * wz1},
                };
                for (const Corner& cr : corners)
                    for (int ch = 0; ch < c; ++ch) cr.p[ch] += cr.w * g[ch];
            }
}

// ---------------------------------------------------------------------------
// Per-channel scale-and-bias conditioning ("merged" parameter path):
// yated = (1 + s_c) * x + b_c, with s and b produced by a small linear layer.

template <class T>
void film_forward(const Tensor3<T>& in, const T* scale, const T* bias, Tensor3<T>& out) {
    out.resize(in.nx, in.ny, in.nz, in.c);
    const int c = in.c;
    const std::size_t n = in.voxels();
    for (std::size_t vx = 0; vx < n; ++vx) {
        const T* x = in.v.data() + vx * c;
        T* y = out.v.data() + vx * c;
        for (int ch = 0; ch < c; ++ch) y[ch] = (T(1) + scale[ch]) * x[ch] + bias[ch];
    }
}

template <class T>
void film_backward(const Tensor3<T>& in, const T* scale, const Tensor3<T>& dout,
                   Tensor3<T>& din, T* dscale, T* dbias) {
    const int c = in.c;
    din.resize(in.nx, in.ny, in.nz, c);
    const std::size_t n = in.voxels();
    for (std::size_t vx = 0; vx < n; ++vx) {
        const T* x = in.v.data() + vx * c;
        const T* g = dout.v.data() + vx * c;
        T* dx = din.v.data() + vx * c;
        for (int ch = 0; ch < c; ++ch) {
            dx[ch] = (T(1) + scale[ch]) * g[ch];
            dscale[ch] += g[ch] * x[ch];
            dbias[ch] += g[ch];
        }
    }
}

// ---------------------------------------------------------------------------
// Adaptive-moment gradient descent.

template <class T>
struct Adam {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::vector<T> m, v;
    long t = 0;

    void step(std::span<T> w, std::span<const T> g) {
        if (w.size() != g.size()) throw std::invalid_argument("Adam: size mismatch");
        if (m.size() != w.size()) {
            m.assign(w.size(), T(0));
            v.assign(w.size(), T(0));
        }
        ++t;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double gi = static_cast<double>(g[i]);
            m[i] = static_cast<T>(beta1 * m[i] + (1.0 - beta1) * gi);
            v[i] = static_cast<T>(beta2 * v[i] + (1.0 - beta2) * gi * gi);
            const double mh = m[i] / bc1;
            const double vh = v[i] / bc2;
            w[i] -= static_cast<T>(lr * mh / (std::sqrt(vh) + eps));
        }
    }
};

// Scaled-uniform init, U(-1/sqrt(fan_in), +1/sqrt(fan_in)).
template <class T>
void init_uniform(std::span<T> w, int fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (T& x : w) x = static_cast<T>(rng.uniform(-bound, bound));
}

}  // namespace sdmforge::nn
