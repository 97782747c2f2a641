#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdmforge/cochlea.hpp"
#include "sdmforge/grid.hpp"
#include "sdmforge/io_error.hpp"
#include "sdmforge/pointwise.hpp"
#include "sdmforge/sdm.hpp"
#include "sdmforge/surrogate.hpp"

namespace sdmforge {

// Trained models the surrogate/pointwise backends need; mesh backends ignore it.
struct BackendContext {
    const SurrogateModel* surrogate = nullptr;
    const PointwiseModel* pointwise = nullptr;
};

// Clamped SDM for any backend, the common currency of the fit pipeline.
inline ScalarGrid generate_clamped_sdm(const ShapeParams& p, const GridSpec& g,
                                       BackendId backend, const BackendContext& ctx = {},
                                       double lo = kClampLo, double hi = kClampHi) {
    switch (backend) {
        case BackendId::naive:
        case BackendId::bvh:
        case BackendId::edt:
            return clamp_grid(reference_sdm(p, g, backend), lo, hi);
        case BackendId::surrogate:
            if (!ctx.surrogate)
                throw ArtifactError("surrogate backend requested but no trained model loaded");
            return clamp_grid(surrogate_forward(*ctx.surrogate, p), lo, hi);
        case BackendId::pointwise:
            if (!ctx.pointwise)
                throw ArtifactError("pointwise backend requested but no trained model loaded");
            return clamp_grid(pw_fill_grid(*ctx.pointwise, p, g), lo, hi);
    }
    throw std::logic_error("unreachable backend");
}

// Target for shape recovery: a clamped SDM on the default lattice, optionally
// remembering the binary volume it was derived from.
struct FitTarget {
    ScalarGrid sdm;
    std::optional<BinaryGrid> binary;
    double l_ref = 0.2;  // mm

    static FitTarget from_sdm(ScalarGrid clamped, double l_ref = 0.2) {
        FitTarget t;
        t.sdm = std::move(clamped);
        t.l_ref = l_ref;
        t.validate();
        return t;
    }

    // Occupancy targets go through the same boundary-EDT conventions as the
    // edt engine, then clamp.
    static FitTarget from_binary(BinaryGrid occupancy, double l_ref = 0.2) {
        FitTarget t;
        t.l_ref = l_ref;
        const GridSpec g = occupancy.spec;
        BinaryGrid boundary(g);
        auto occ = [&](int i, int j, int k) { return occupancy.values[g.index(i, j, k)]; };
        for (int k = 0; k < g.nz; ++k)
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i) {
                    const uint8_t c = occ(i, j, k);
                    bool flip = false;
                    if (i > 0 && occ(i - 1, j, k) != c) flip = true;
                    if (!flip && i + 1 < g.nx && occ(i + 1, j, k) != c) flip = true;
                    if (!flip && j > 0 && occ(i, j - 1, k) != c) flip = true;
                    if (!flip && j + 1 < g.ny && occ(i, j + 1, k) != c) flip = true;
                    if (!flip && k > 0 && occ(i, j, k - 1) != c) flip = true;
                    if (!flip && k + 1 < g.nz && occ(i, j, k + 1) != c) flip = true;
                    boundary.values[g.index(i, j, k)] = flip ? 1 : 0;
                }
        const EdtResult edt = edt_squared(boundary);
        ScalarGrid sdm(g);
        for (std::size_t i = 0; i < g.voxel_count(); ++i) {
            const double d = g.spacing * std::sqrt(static_cast<double>(edt.squared.values[i]));
            sdm.values[i] = static_cast<float>(occupancy.values[i] ? -d : d);
        }
        t.sdm = clamp_grid(sdm);
        t.binary = std::move(occupancy);
        t.validate();
        return t;
    }

    void validate() const {
        if (!(sdm.spec == default_grid_spec()))
            throw std::invalid_argument("FitTarget: grid spec must equal default_grid_spec()");
        if (!(l_ref > 0.0)) throw std::invalid_argument("FitTarget: l_ref must be positive");
    }
};

// Mean squared difference between the backend's clamped SDM at p and the target.
inline double objective_mse(const ShapeParams& p, const FitTarget& target, BackendId backend,
                            const BackendContext& ctx = {}) {
    const ScalarGrid g = generate_clamped_sdm(p, target.sdm.spec, backend, ctx);
    double acc = 0.0;
    for (std::size_t i = 0; i < g.values.size(); ++i) {
        const double d = static_cast<double>(g.values[i]) - target.sdm.values[i];
        acc += d * d;
    }
    return acc / static_cast<double>(g.values.size());
}

// Per-voxel membership probability from the scaled SDM. The argument is
// negated relative to the log-odds formula so that inside (negative SDM)
// means probability above one half under this project's sign convention.
inline double membership_probability(double sdm_value, double l_ref) {
    const double q = 1.0 / (1.0 + std::exp(sdm_value / l_ref));
    return std::clamp(q, 1e-7, 1.0 - 1e-7);
}

// Negative Bernoulli log-likelihood of a binary volume under the backend SDM.
inline double objective_logodds(const ShapeParams& p, const FitTarget& target,
                                BackendId backend, const BackendContext& ctx = {}) {
    if (!target.binary)
        throw std::invalid_argument("objective_logodds: target carries no binary volume");
    const ScalarGrid g = generate_clamped_sdm(p, target.sdm.spec, backend, ctx);
    double nll = 0.0;
    const std::size_t n = g.values.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double q = membership_probability(g.values[i], target.l_ref);
        nll -= target.binary->values[i] ? std::log(q) : std::log(1.0 - q);
    }
    return nll / static_cast<double>(n);
}

enum class FitObjective { mse, logodds };

struct FitConfig {
    int restarts = 4;
    int max_iterations = 150;  // per restart
    double simplex_tol = 1e-5;    // normalized simplex extent
    double objective_tol = 1e-14;
    uint64_t seed = 0;
    FitObjective objective = FitObjective::mse;
};

struct FitResult {
    ShapeParams params;
    double objective = 0.0;
    long iterations = 0;          // across restarts
    std::vector<double> trace;    // best objective so far, per iteration
    double seconds = 0.0;
    BackendId backend = BackendId::bvh;
    long evaluations = 0;
};

namespace detail {

// Reflect a normalized coordinate into [0,1].
inline double fold_unit(double y) {
    y = std::fmod(y, 2.0);
    if (y < 0.0) y += 2.0;
    return y <= 1.0 ? y : 2.0 - y;
}

inline ShapeParams params_from_unit(const std::array<double, 4>& y) {
    std::array<double, 4> v{};
    for (int i = 0; i < 4; ++i)
        v[i] = kParamLo[i] + fold_unit(y[i]) * (kParamHi[i] - kParamLo[i]);
    return params_from_array(v);
}

}  // namespace detail

// Derivative-free shape recovery: Nelder-Mead over the 4 normalized
// parameters with reflection into the valid box, best of `restarts` seeded
// starts. Deterministic for a fixed target/backend/config/seed.
inline FitResult fit_shape(const FitTarget& target, BackendId backend, const FitConfig& cfg,
                           const BackendContext& ctx = {}) {
    target.validate();
    const auto t_start = std::chrono::steady_clock::now();

    FitResult result;
    result.backend = backend;
    result.objective = std::numeric_limits<double>::infinity();

    auto objective = [&](const std::array<double, 4>& y) {
        const ShapeParams p = detail::params_from_unit(y);
        ++result.evaluations;
        return cfg.objective == FitObjective::mse ? objective_mse(p, target, backend, ctx)
                                                  : objective_logodds(p, target, backend, ctx);
    };

    using Pt = std::array<double, 4>;
    for (int restart = 0; restart < cfg.restarts; ++restart) {
        Rng rng(hash_combine(cfg.seed, static_cast<uint64_t>(restart)));
        Pt center;
        if (restart == 0)
            center = {0.5, 0.5, 0.5, 0.5};
        else
            center = {rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};

        std::array<Pt, 5> simplex;
        std::array<double, 5> f{};
        simplex[0] = center;
        for (int i = 1; i < 5; ++i) {
            simplex[i] = center;
            simplex[i][i - 1] += 0.15;
        }
        for (int i = 0; i < 5; ++i) f[i] = objective(simplex[i]);

        auto order = [&] {
            std::array<int, 5> idx{0, 1, 2, 3, 4};
            std::sort(idx.begin(), idx.end(), [&](int a, int b) { return f[a] < f[b]; });
            std::array<Pt, 5> s2;
            std::array<double, 5> f2{};
            for (int i = 0; i < 5; ++i) {
                s2[i] = simplex[idx[i]];
                f2[i] = f[idx[i]];
            }
            simplex = s2;
            f = f2;
        };

        for (int iter = 0; iter < cfg.max_iterations; ++iter) {
            order();
            if (f[0] < result.objective) {
                result.objective = f[0];
                result.params = detail::params_from_unit(simplex[0]);
            }
            ++result.iterations;
            result.trace.push_back(result.objective);

            double extent = 0.0;
            for (int i = 1; i < 5; ++i)
                for (int d = 0; d < 4; ++d)
                    extent = std::max(extent, std::abs(simplex[i][d] - simplex[0][d]));
            if (extent < cfg.simplex_tol || f[0] <= cfg.objective_tol) break;

            Pt centroid{};
            for (int i = 0; i < 4; ++i)
                for (int d = 0; d < 4; ++d) centroid[d] += simplex[i][d] / 4.0;

            auto blend = [&](double coef) {
                Pt p;
                for (int d = 0; d < 4; ++d)
                    p[d] = centroid[d] + coef * (simplex[4][d] - centroid[d]);
                return p;
            };

            const Pt refl = blend(-1.0);
            const double fr = objective(refl);
            if (fr < f[0]) {
                const Pt expd = blend(-2.0);
                const double fe = objective(expd);
                if (fe < fr) {
                    simplex[4] = expd;
                    f[4] = fe;
                } else {
                    simplex[4] = refl;
                    f[4] = fr;
                }
            } else if (fr < f[3]) {
                simplex[4] = refl;
                f[4] = fr;
            } else {
                const Pt contr = blend(fr < f[4] ? -0.5 : 0.5);
                const double fc = objective(contr);
                if (fc < std::min(fr, f[4])) {
                    simplex[4] = contr;
                    f[4] = fc;
                } else {
                    for (int i = 1; i < 5; ++i) {
                        for (int d = 0; d < 4; ++d)
                            simplex[i][d] = simplex[0][d] + 0.5 * (simplex[i][d] - simplex[0][d]);
                        f[i] = objective(simplex[i]);
                    }
                }
            }
        }
        order();
        if (f[0] < result.objective) {
            result.objective = f[0];
            result.params = detail::params_from_unit(simplex[0]);
        }
    }

    result.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
}

// 4-field text record for a parameter set.
inline nlohmann::json params_to_json(const ShapeParams& p) {
    return {{"a", p.a}, {"alpha", p.alpha}, {"b", p.b}, {"phi", p.phi}};
}

inline ShapeParams params_from_json(const nlohmann::json& j) {
    return {j.at("a"), j.at("alpha"), j.at("b"), j.at("phi")};
}

inline nlohmann::json fit_report_json(const FitResult& r) {
    return {{"params", params_to_json(r.params)},
            {"objective", r.objective},
            {"iterations", r.iterations},
            {"evaluations", r.evaluations},
            {"trace", r.trace},
            {"seconds", r.seconds},
            {"backend", backend_name(r.backend)}};
}

// ---------------------------------------------------------------------------
// Mesh-vs-surrogate fit comparison

struct CompareCase {
    ShapeParams truth;
    FitResult mesh_fit;
    FitResult surrogate_fit;
    std::array<double, 4> abs_diff{};
    double p_err = 0.0;  // ||P_mesh - P_surrogate||
};

struct CompareReport {
    std::vector<CompareCase> cases;
    std::array<double, 4> mean_abs_diff{};
    double mean_p_err = 0.0;
    BackendId mesh_backend = BackendId::bvh;
};

// Runs both backends on each synthetic target with identical seeds.
// `second_backend` is the surrogate in the intended comparison but may be any
// backend (pointing it at the mesh backend itself gives P_err = 0 exactly).
inline CompareReport compare_fits(const std::vector<FitTarget>& targets,
                                  const std::vector<ShapeParams>& truths,
                                  BackendId mesh_backend, const BackendContext& ctx,
                                  const FitConfig& cfg,
                                  BackendId second_backend = BackendId::surrogate) {
    if (targets.size() != truths.size())
        throw std::invalid_argument("compare_fits: targets/truths size mismatch");
    CompareReport report;
    report.mesh_backend = mesh_backend;
    for (std::size_t c = 0; c < targets.size(); ++c) {
        CompareCase cc;
        cc.truth = truths[c];
        FitConfig case_cfg = cfg;
        case_cfg.seed = hash_combine(cfg.seed, c);
        cc.mesh_fit = fit_shape(targets[c], mesh_backend, case_cfg, ctx);
        cc.surrogate_fit = fit_shape(targets[c], second_backend, case_cfg, ctx);
        const auto pm = cc.mesh_fit.params.as_array();
        const auto ps = cc.surrogate_fit.params.as_array();
        double norm2 = 0.0;
        for (int i = 0; i < 4; ++i) {
            cc.abs_diff[i] = std::abs(pm[i] - ps[i]);
            norm2 += cc.abs_diff[i] * cc.abs_diff[i];
        }
        cc.p_err = std::sqrt(norm2);
        report.cases.push_back(std::move(cc));
    }
    for (const CompareCase& cc : report.cases) {
        for (int i = 0; i < 4; ++i) report.mean_abs_diff[i] += cc.abs_diff[i];
        report.mean_p_err += cc.p_err;
    }
    const double n = static_cast<double>(report.cases.size());
    if (n > 0) {
        for (int i = 0; i < 4; ++i) report.mean_abs_diff[i] /= n;
        report.mean_p_err /= n;
    }
    return report;
}

// CSV shaped like the parameter-error table: names row, ranges row, one row
// per case, then the mean errors.
inline std::string compare_report_csv(const CompareReport& r) {
    std::ostringstream os;
    os.precision(12);
    os << "row,a,alpha,b,phi,p_err\n";
    os << "range,\"(2.0,5.0)\",\"(0.0,1.2)\",\"(0.05,0.25)\",\"(-pi/4,pi/4)\",\n";
    for (std::size_t c = 0; c < r.cases.size(); ++c) {
        const auto& d = r.cases[c].abs_diff;
        os << "case" << c << "," << d[0] << "," << d[1] << "," << d[2] << "," << d[3] << ","
           << r.cases[c].p_err << "\n";
    }
    os << "mean_error," << r.mean_abs_diff[0] << "," << r.mean_abs_diff[1] << ","
       << r.mean_abs_diff[2] << "," << r.mean_abs_diff[3] << "," << r.mean_p_err << "\n";
    return os.str();
}

}  // namespace sdmforge
