#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sdmforge/fit.hpp"

#include "helpers.hpp"

using namespace sdmforge;
using Catch::Approx;

namespace {

FitTarget target_for(const ShapeParams& p, BackendId backend = BackendId::bvh) {
    return FitTarget::from_sdm(clamp_grid(reference_sdm(p, default_grid_spec(), backend)));
}

}  // namespace

TEST_CASE("objective_mse: zero at the generating parameters, positive elsewhere") {
    const ShapeParams truth{3.1, 0.5, 0.12, 0.2};
    const FitTarget target = target_for(truth);
    CHECK(objective_mse(truth, target, BackendId::bvh) == 0.0);

    const double perturbed = objective_mse({3.6, 0.5, 0.12, 0.2}, target, BackendId::bvh);
    CHECK(perturbed > 0.0);

    // strictly growing as a moves away from the truth
    const double nearer = objective_mse({3.3, 0.5, 0.12, 0.2}, target, BackendId::bvh);
    CHECK(nearer > 0.0);
    CHECK(perturbed > nearer);
}

TEST_CASE("membership probability and log-odds objective") {
    CHECK(membership_probability(0.0, 0.2) == Approx(0.5));
    CHECK(membership_probability(-0.2, 0.2) == Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-12));
    CHECK(membership_probability(-0.2, 0.2) == Approx(0.7310585786).epsilon(1e-9));
    // deep interior saturates (and is clamped for finiteness)
    CHECK(membership_probability(-5.0, 0.2) == Approx(1.0 - 1e-7));
    CHECK(membership_probability(5.0, 0.2) == Approx(1e-7));

    const ShapeParams truth{3.1, 0.5, 0.12, 0.2};
    const TriangleMesh mesh = tessellate(truth);
    const BinaryGrid occupancy = rasterize(mesh, default_grid_spec());
    const FitTarget target = FitTarget::from_binary(occupancy);
    const double at_truth = objective_logodds(truth, target, BackendId::bvh);
    const double off_truth = objective_logodds({4.1, 0.5, 0.12, 0.2}, target, BackendId::bvh);
    CHECK(std::isfinite(at_truth));
    CHECK(at_truth < off_truth);

    const FitTarget no_binary = target_for(truth);
    CHECK_THROWS_AS(objective_logodds(truth, no_binary, BackendId::bvh), std::invalid_argument);
}

TEST_CASE("FitTarget: binary conversion follows the edt engine conventions") {
    const ShapeParams p{3.4, 0.7, 0.14, -0.1};
    const TriangleMesh mesh = tessellate(p);
    const GridSpec g = default_grid_spec();
    const FitTarget from_bin = FitTarget::from_binary(rasterize(mesh, g));
    const ScalarGrid via_engine = clamp_grid(sdm_edt(mesh, g).grid);
    REQUIRE(from_bin.sdm.values.size() == via_engine.values.size());
    for (std::size_t i = 0; i < via_engine.values.size(); ++i)
        REQUIRE(from_bin.sdm.values[i] == via_engine.values[i]);

    // wrong lattice rejected
    ScalarGrid wrong(sdmforge::testing::small_grid(4, 4, 4, 1.0, {0, 0, 0}));
    CHECK_THROWS_AS(FitTarget::from_sdm(wrong), std::invalid_argument);
}

TEST_CASE("fit_shape: recovers a noise-free synthetic target", "[fit]") {
    const ShapeParams truth{3.8, 0.45, 0.18, -0.3};
    const FitTarget target = target_for(truth);
    FitConfig cfg;
    cfg.restarts = 2;
    cfg.max_iterations = 120;
    cfg.seed = 5;
    const FitResult r = fit_shape(target, BackendId::bvh, cfg);

    const auto rec = r.params.as_array();
    const auto tru = truth.as_array();
    for (int d = 0; d < 4; ++d) {
        const double width = kParamHi[d] - kParamLo[d];
        INFO(kParamName[d] << ": recovered " << rec[d] << " truth " << tru[d]);
        CHECK(std::abs(rec[d] - tru[d]) <= 0.01 * width);
    }

    // minimizer contract: monotone trace starting at/below the first simplex
    REQUIRE_FALSE(r.trace.empty());
    for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] <= r.trace[i - 1]);
    CHECK(r.objective == r.trace.back());
    CHECK(r.objective <= r.trace.front());
    CHECK(r.evaluations > 10);
    CHECK(r.seconds > 0.0);

    // recovered parameters stay in range
    for (int d = 0; d < 4; ++d) {
        CHECK(rec[d] >= kParamLo[d]);
        CHECK(rec[d] <= kParamHi[d]);
    }
}

TEST_CASE("fit_shape: deterministic given the seed") {
    const ShapeParams truth{2.9, 0.8, 0.1, 0.4};
    const FitTarget target = target_for(truth);
    FitConfig cfg;
    cfg.restarts = 1;
    cfg.max_iterations = 25;
    cfg.seed = 9;
    const FitResult a = fit_shape(target, BackendId::bvh, cfg);
    const FitResult b = fit_shape(target, BackendId::bvh, cfg);
    CHECK(a.params.as_array() == b.params.as_array());
    CHECK(a.objective == b.objective);
    CHECK(a.trace == b.trace);
    CHECK(a.iterations == b.iterations);
    CHECK(a.evaluations == b.evaluations);
}

TEST_CASE("fit_shape: surrogate backend without a model is a missing artifact") {
    const FitTarget target = target_for({3.5, 0.6, 0.15, 0.0});
    FitConfig cfg;
    cfg.restarts = 1;
    cfg.max_iterations = 5;
    CHECK_THROWS_AS(fit_shape(target, BackendId::surrogate, cfg), ArtifactError);
}

TEST_CASE("compare_fits: second backend equal to the mesh backend gives zero error") {
    Rng rng(33);
    std::vector<ShapeParams> truths;
    std::vector<FitTarget> targets;
    for (int c = 0; c < 2; ++c) {
        truths.push_back(sample_random_params(rng));
        targets.push_back(target_for(truths.back()));
    }
    FitConfig cfg;
    cfg.restarts = 1;
    cfg.max_iterations = 30;
    cfg.seed = 3;
    const CompareReport report =
        compare_fits(targets, truths, BackendId::bvh, {}, cfg, BackendId::bvh);
    REQUIRE(report.cases.size() == 2);
    for (const CompareCase& cc : report.cases) {
        CHECK(cc.p_err == 0.0);
        for (double d : cc.abs_diff) CHECK(d == 0.0);
    }
    CHECK(report.mean_p_err == 0.0);

    const std::string csv = compare_report_csv(report);
    CHECK(csv.find("\"(2.0,5.0)\"") != std::string::npos);
    CHECK(csv.find("\"(0.0,1.2)\"") != std::string::npos);
    CHECK(csv.find("\"(0.05,0.25)\"") != std::string::npos);
    CHECK(csv.find("\"(-pi/4,pi/4)\"") != std::string::npos);
    CHECK(csv.find("mean_error") != std::string::npos);
}

TEST_CASE("params json record") {
    const ShapeParams p{2.5, 0.9, 0.21, -0.6};
    const auto j = params_to_json(p);
    CHECK(j.at("a") == 2.5);
    CHECK(j.at("alpha") == 0.9);
    CHECK(j.at("b") == 0.21);
    CHECK(j.at("phi") == -0.6);
    const ShapeParams q = params_from_json(j);
    CHECK(q.as_array() == p.as_array());
}
