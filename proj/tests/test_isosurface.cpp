#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sdmforge/cochlea.hpp"
#include "sdmforge/isosurface.hpp"
#include "sdmforge/sdm.hpp"

#include "helpers.hpp"

using namespace sdmforge;
using sdmforge::testing::analytic_sphere_sdm;
using sdmforge::testing::icosphere;
using sdmforge::testing::small_grid;
using Catch::Approx;

namespace {

GridSpec sphere_grid() {
    return sdmforge::testing::small_grid(41, 41, 41, 0.2, {-4.0, -4.0, -4.0});
}

double trilinear_sample(const ScalarGrid& s, const Vec3& p) {
    const GridSpec& g = s.spec;
    const double fx = (p.x - g.origin.x) / g.spacing;
    const double fy = (p.y - g.origin.y) / g.spacing;
    const double fz = (p.z - g.origin.z) / g.spacing;
    const int i = std::clamp(static_cast<int>(std::floor(fx)), 0, g.nx - 2);
    const int j = std::clamp(static_cast<int>(std::floor(fy)), 0, g.ny - 2);
    const int k = std::clamp(static_cast<int>(std::floor(fz)), 0, g.nz - 2);
    const double u = fx - i, v = fy - j, w = fz - k;
    double acc = 0.0;
    for (int dk = 0; dk < 2; ++dk)
        for (int dj = 0; dj < 2; ++dj)
            for (int di = 0; di < 2; ++di)
                acc += s.at(i + di, j + dj, k + dk) * (di ? u : 1 - u) * (dj ? v : 1 - v) *
                       (dk ? w : 1 - w);
    return acc;
}

}  // namespace

TEST_CASE("marching_cubes: sphere vertices sit on the radius") {
    const ScalarGrid sdm = analytic_sphere_sdm(3.0, sphere_grid());
    const IsoMesh iso = marching_cubes(sdm, 0.0);
    REQUIRE_FALSE(iso.empty_warning);
    REQUIRE(iso.mesh.faces.size() > 500);
    for (const Vec3& v : iso.mesh.vertices) CHECK(std::abs(v.norm() - 3.0) < 0.1);
}

TEST_CASE("marching_cubes: orientation points toward positive values") {
    const ScalarGrid sdm = analytic_sphere_sdm(3.0, sphere_grid());
    const IsoMesh iso = marching_cubes(sdm, 0.0);
    std::size_t outward = 0;
    for (std::size_t f = 0; f < iso.mesh.faces.size(); ++f) {
        const Triangle t = iso.mesh.triangle(f);
        const Vec3 centroid = (t.a + t.b + t.c) / 3.0;
        if (t.raw_normal().dot(centroid) > 0.0) ++outward;
    }
    CHECK(outward == iso.mesh.faces.size());
}

TEST_CASE("marching_cubes: constant grid gives an empty flagged mesh") {
    ScalarGrid s(small_grid(4, 4, 4, 1.0, {0, 0, 0}), 1.0f);
    const IsoMesh iso = marching_cubes(s, 0.0);
    CHECK(iso.empty_warning);
    CHECK(iso.mesh.faces.empty());
}

TEST_CASE("marching_cubes: the 1 mm level set of the cochlea exists") {
    const TriangleMesh m = tessellate(sdmforge::testing::default_shape());
    const ScalarGrid sdm = sdm_bvh(m, default_grid_spec());
    const IsoMesh one_mm = marching_cubes(sdm, 1.0);
    CHECK_FALSE(one_mm.empty_warning);
    CHECK(one_mm.mesh.faces.size() > 1000);
    const IsoMesh zero = marching_cubes(sdm, 0.0);
    CHECK(zero.mesh.faces.size() > 1000);
}

TEST_CASE("marching_cubes: vertex interpolation residual is tiny") {
    const ScalarGrid sdm = analytic_sphere_sdm(2.5, sphere_grid());
    float vmin = sdm.values[0], vmax = sdm.values[0];
    for (float v : sdm.values) {
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
    }
    const IsoMesh iso = marching_cubes(sdm, 0.4);
    REQUIRE(iso.mesh.vertices.size() > 100);
    for (const Vec3& v : iso.mesh.vertices)
        CHECK(std::abs(trilinear_sample(sdm, v) - 0.4) <= 1e-6 * (vmax - vmin));
}

TEST_CASE("marching_cubes: extracting iso c equals extracting 0 from shifted field") {
    const ScalarGrid sdm = analytic_sphere_sdm(2.5, sphere_grid());
    ScalarGrid shifted = sdm;
    for (float& v : shifted.values) v -= 0.35f;
    const IsoMesh a = marching_cubes(sdm, 0.35f);
    const IsoMesh b = marching_cubes(shifted, 0.0);
    REQUIRE(a.mesh.vertices.size() == b.mesh.vertices.size());
    REQUIRE(a.mesh.faces == b.mesh.faces);
    for (std::size_t i = 0; i < a.mesh.vertices.size(); ++i)
        CHECK(distance(a.mesh.vertices[i], b.mesh.vertices[i]) < 1e-6);
}

TEST_CASE("slice_isocontours: sphere great circle") {
    const ScalarGrid sdm = analytic_sphere_sdm(3.0, sphere_grid());
    const auto sets = slice_isocontours(sdm, 2, 20, {0.0});  // z = 0 plane
    REQUIRE(sets.size() == 1);
    REQUIRE_FALSE(sets[0].polylines.empty());
    std::size_t points = 0;
    for (const auto& pl : sets[0].polylines)
        for (const auto& pt : pl) {
            CHECK(std::abs(std::hypot(pt[0], pt[1]) - 3.0) < 0.1);
            ++points;
        }
    CHECK(points > 20);
}

TEST_CASE("slice_isocontours: empty above the levels, nesting on a sphere") {
    const ScalarGrid sdm = analytic_sphere_sdm(3.0, sphere_grid());
    const auto empty = slice_isocontours(sdm, 2, 40, {0.0, 1.0});  // far plane z = 4
    CHECK(empty[0].polylines.empty());
    CHECK(empty[1].polylines.empty());

    const auto sets = slice_isocontours(sdm, 2, 20, {0.0, 1.0});
    REQUIRE_FALSE(sets[0].polylines.empty());
    REQUIRE_FALSE(sets[1].polylines.empty());
    double max_r0 = 0.0, min_r1 = 1e9;
    for (const auto& pl : sets[0].polylines)
        for (const auto& pt : pl) max_r0 = std::max(max_r0, std::hypot(pt[0], pt[1]));
    for (const auto& pl : sets[1].polylines)
        for (const auto& pt : pl) min_r1 = std::min(min_r1, std::hypot(pt[0], pt[1]));
    CHECK(max_r0 < min_r1);  // the zero contour nests inside the 1 mm contour
}

TEST_CASE("slice_isocontours: argument validation") {
    const ScalarGrid sdm = analytic_sphere_sdm(3.0, sphere_grid());
    CHECK_THROWS_AS(slice_isocontours(sdm, 3, 0), std::invalid_argument);
    CHECK_THROWS_AS(slice_isocontours(sdm, 2, 99), std::invalid_argument);
}

TEST_CASE("surface_distance: identity, offset spheres, ordering") {
    const TriangleMesh a = icosphere(3, 1.0);
    const SurfaceDistance self = surface_distance(a, a, 4000);
    CHECK(self.mean < 1e-9);
    CHECK(self.hausdorff_sym < 1e-9);

    const TriangleMesh b = icosphere(3, 1.1);
    const SurfaceDistance off = surface_distance(a, b, 4000);
    CHECK(off.mean == Approx(0.1).margin(0.01));
    CHECK(off.hausdorff_sym >= off.mean);

    const SurfaceDistance swapped = surface_distance(b, a, 4000);
    CHECK(off.mean == swapped.mean);
    CHECK(off.hausdorff_sym == swapped.hausdorff_sym);
}
