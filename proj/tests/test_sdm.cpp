#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>

#include "sdmforge/cochlea.hpp"
#include "sdmforge/sdm.hpp"

#include "helpers.hpp"

using namespace sdmforge;
using sdmforge::testing::analytic_sphere_sdm;
using sdmforge::testing::icosphere;
using sdmforge::testing::small_grid;
using sdmforge::testing::unit_cube_mesh;
using Catch::Approx;

namespace {

double timed(const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// O(N^2) oracle for the squared distance transform.
std::vector<int64_t> brute_force_edt(const BinaryGrid& g) {
    std::vector<std::array<int, 3>> trues;
    for (int k = 0; k < g.spec.nz; ++k)
        for (int j = 0; j < g.spec.ny; ++j)
            for (int i = 0; i < g.spec.nx; ++i)
                if (g.at(i, j, k)) trues.push_back({i, j, k});
    std::vector<int64_t> out(g.spec.voxel_count(), -1);
    for (int k = 0; k < g.spec.nz; ++k)
        for (int j = 0; j < g.spec.ny; ++j)
            for (int i = 0; i < g.spec.nx; ++i) {
                int64_t best = std::numeric_limits<int64_t>::max();
                for (const auto& t : trues) {
                    const int64_t dx = i - t[0], dy = j - t[1], dz = k - t[2];
                    best = std::min(best, dx * dx + dy * dy + dz * dz);
                }
                out[g.spec.index(i, j, k)] = best;
            }
    return out;
}

}  // namespace

TEST_CASE("backend names round-trip") {
    for (BackendId id : {BackendId::naive, BackendId::bvh, BackendId::edt, BackendId::surrogate,
                         BackendId::pointwise})
        CHECK(backend_from_name(backend_name(id)) == id);
    CHECK_THROWS_AS(backend_from_name("vulkan"), std::invalid_argument);
}

TEST_CASE("sdm_naive: unit cube values") {
    const TriangleMesh cube = unit_cube_mesh();
    const GridSpec g = small_grid(5, 4, 4, 0.5, {0, 0, 0});
    const ScalarGrid sdm = sdm_naive(cube, g);
    CHECK(sdm.at(1, 1, 1) == Approx(-0.5).margin(1e-7));  // centre
    CHECK(sdm.at(4, 1, 1) == Approx(1.0).margin(1e-7));   // (2.0, .5, .5): 1 mm past x=1
    CHECK(sdm.at(0, 0, 0) == Approx(0.0).margin(1e-7));   // corner voxel on the surface

    TriangleMesh raw = unit_cube_mesh();
    raw.pseudonormals_ready = false;
    CHECK_THROWS_AS(sdm_naive(raw, g), std::invalid_argument);
}

TEST_CASE("sdm_naive: icosphere centre equals minus the inradius") {
    const TriangleMesh sphere = icosphere(3, 1.0);
    // independent oracle: plane distance per face (the origin projects inside
    // every face of a subdivided icosahedron)
    double inradius = std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < sphere.faces.size(); ++f) {
        const Triangle t = sphere.triangle(f);
        const Vec3 n = t.raw_normal().normalized();
        inradius = std::min(inradius, std::abs(n.dot(t.a)));
    }
    const GridSpec g = small_grid(3, 3, 3, 0.25, {-0.25, -0.25, -0.25});
    const ScalarGrid sdm = sdm_naive(sphere, g);
    CHECK(sdm.at(1, 1, 1) == Approx(-inradius).margin(1e-6));
}

TEST_CASE("sdm_bvh: equals naive exactly on the cochlea grid") {
    const GridSpec g = default_grid_spec();
    Rng rng(2024);
    for (int trial = 0; trial < 2; ++trial) {
        const ShapeParams p = sample_random_params(rng);
        const TriangleMesh m = tessellate(p);
        const Bvh bvh = build_bvh(m);
        const ScalarGrid a = sdm_naive(m, g);
        const ScalarGrid b = sdm_bvh(m, bvh, g);
        float max_dev = 0.0f;
        for (std::size_t i = 0; i < a.values.size(); ++i)
            max_dev = std::max(max_dev, std::abs(a.values[i] - b.values[i]));
        CHECK(max_dev <= 1e-6f);
    }

    const TriangleMesh m = tessellate(sdmforge::testing::default_shape());
    const Bvh other = build_bvh(icosphere(1, 1.0));
    CHECK_THROWS_AS(sdm_bvh(m, other, g), std::invalid_argument);
}

TEST_CASE("sdm_bvh: faster than naive on the default shape", "[timing]") {
    const TriangleMesh m = tessellate(sdmforge::testing::default_shape());
    const Bvh bvh = build_bvh(m);
    const GridSpec g = default_grid_spec();
    ScalarGrid sink;
    const double t_naive = timed([&] { sink = sdm_naive(m, g); });
    const double t_bvh = timed([&] { sink = sdm_bvh(m, bvh, g); });
    INFO("naive " << t_naive << "s, bvh " << t_bvh << "s");
    CHECK(t_bvh < t_naive);
}

TEST_CASE("rasterize: unit cube interior voxels") {
    const TriangleMesh cube = unit_cube_mesh();
    const GridSpec g = small_grid(6, 6, 6, 0.25, {-0.125, -0.125, -0.125});
    const BinaryGrid r = rasterize(cube, g);
    int count = 0, expected = 0;
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const Vec3 c = g.voxel_center(i, j, k);
                const bool inside = c.x > 0 && c.x < 1 && c.y > 0 && c.y < 1 && c.z > 0 && c.z < 1;
                if (inside) ++expected;
                if (r.at(i, j, k)) ++count;
                CHECK(static_cast<bool>(r.at(i, j, k)) == inside);
            }
    CHECK(count == expected);
    CHECK(count == 4 * 4 * 4);
}

TEST_CASE("rasterize: far grid is empty, sign matches naive off the surface") {
    const TriangleMesh cube = unit_cube_mesh();
    const BinaryGrid far = rasterize(cube, small_grid(4, 4, 4, 0.5, {10, 10, 10}));
    for (uint8_t v : far.values) CHECK(v == 0);

    const TriangleMesh m = tessellate(sdmforge::testing::default_shape());
    const GridSpec g = default_grid_spec();
    const BinaryGrid r = rasterize(m, g);
    const ScalarGrid sdm = sdm_naive(m, g);
    for (std::size_t i = 0; i < r.values.size(); ++i) {
        if (std::abs(sdm.values[i]) <= g.spacing) continue;
        CHECK(static_cast<bool>(r.values[i]) == (sdm.values[i] < 0));
    }
}

TEST_CASE("edt_squared: 1D pattern and degenerate grids") {
    GridSpec g = small_grid(4, 2, 2, 1.0, {0, 0, 0});
    BinaryGrid b(g);
    for (int k = 0; k < 2; ++k)
        for (int j = 0; j < 2; ++j) b.at(1, j, k) = 1;
    const EdtResult r = edt_squared(b);
    CHECK_FALSE(r.empty_input);
    for (int k = 0; k < 2; ++k)
        for (int j = 0; j < 2; ++j) {
            CHECK(r.squared.at(0, j, k) == 1.0f);
            CHECK(r.squared.at(1, j, k) == 0.0f);
            CHECK(r.squared.at(2, j, k) == 1.0f);
            CHECK(r.squared.at(3, j, k) == 4.0f);
        }

    BinaryGrid all_true(g, 1);
    for (float v : edt_squared(all_true).squared.values) CHECK(v == 0.0f);

    BinaryGrid all_false(g, 0);
    const EdtResult empty = edt_squared(all_false);
    CHECK(empty.empty_input);
    for (float v : empty.squared.values) CHECK(v == std::numeric_limits<float>::max());
}

TEST_CASE("edt_squared: exact against brute force on random grids") {
    Rng rng(5150);
    for (int trial = 0; trial < 8; ++trial) {
        const GridSpec g = small_grid(20, 20, 20, 1.0, {0, 0, 0});
        BinaryGrid b(g);
        for (uint8_t& v : b.values) v = rng.uniform() < 0.1 ? 1 : 0;
        const EdtResult r = edt_squared(b);
        const std::vector<int64_t> oracle = brute_force_edt(b);
        for (std::size_t i = 0; i < oracle.size(); ++i)
            REQUIRE(static_cast<int64_t>(r.squared.values[i]) == oracle[i]);
    }
}

TEST_CASE("sdm_edt: sign field and near-surface agreement") {
    const TriangleMesh cube = unit_cube_mesh();
    const GridSpec gc = small_grid(14, 14, 14, 0.1, {-0.15, -0.15, -0.15});
    const SdmEdtResult ec = sdm_edt(cube, gc);
    const BinaryGrid rc = rasterize(cube, gc);
    CHECK_FALSE(ec.undersampled);
    for (std::size_t i = 0; i < rc.values.size(); ++i)
        CHECK(std::signbit(ec.grid.values[i]) == static_cast<bool>(rc.values[i]));
    // deep interior voxel within one voxel diagonal of the exact distance
    const ScalarGrid nc = sdm_naive(cube, gc);
    const std::size_t centre = gc.index(6, 6, 6);
    CHECK(std::abs(ec.grid.values[centre] - nc.values[centre]) <= 0.1 * std::sqrt(3.0));

    const TriangleMesh m = tessellate(sdmforge::testing::default_shape());
    const GridSpec g = default_grid_spec();
    const ScalarGrid naive = sdm_naive(m, g);
    const SdmEdtResult edt = sdm_edt(m, g);
    std::size_t near = 0, ok = 0;
    for (std::size_t i = 0; i < naive.values.size(); ++i) {
        if (std::abs(naive.values[i]) > 1.0f) continue;
        ++near;
        if (std::abs(edt.grid.values[i] - naive.values[i]) <= 0.347f) ++ok;
    }
    INFO("near voxels " << near << " within tolerance " << ok);
    CHECK(static_cast<double>(ok) / near >= 0.99);
}

TEST_CASE("sdm_edt: undersampled when nothing rasterizes") {
    // grid coarser than the tube: voxel centres all fall outside
    const TriangleMesh cube = unit_cube_mesh();
    const GridSpec g = small_grid(3, 3, 3, 5.0, {-6.0, -6.0, -6.0});
    const SdmEdtResult r = sdm_edt(cube, g);
    CHECK(r.undersampled);
    for (float v : r.grid.values) CHECK(v > 0.0f);
}

TEST_CASE("clamp_grid: spec examples") {
    GridSpec g = small_grid(2, 2, 2, 1.0, {0, 0, 0});
    ScalarGrid s(g);
    s.values = {-0.5f, 2.0f, 0.4f, -0.2f, 1.3f, 0.0f, -10.0f, 10.0f};
    const ScalarGrid c = clamp_grid(s);
    CHECK(c.values[0] == -0.2f);
    CHECK(c.values[1] == 1.3f);
    CHECK(c.values[2] == 0.4f);
    CHECK(c.values[3] == -0.2f);
    CHECK(c.values[4] == 1.3f);
    CHECK(c.values[5] == 0.0f);
    CHECK(c.values[6] == -0.2f);
    CHECK(c.values[7] == 1.3f);
}

TEST_CASE("eikonal property holds in the mid band") {
    const TriangleMesh m = tessellate(sdmforge::testing::default_shape());
    const GridSpec g = default_grid_spec();
    const ScalarGrid sdm = sdm_naive(m, g);
    std::size_t band = 0, ok = 0;
    for (int k = 1; k + 1 < g.nz; ++k)
        for (int j = 1; j + 1 < g.ny; ++j)
            for (int i = 1; i + 1 < g.nx; ++i) {
                const double v = sdm.at(i, j, k);
                if (!(std::abs(v) > 0.3 && std::abs(v) < 1.0)) continue;
                ++band;
                const double gx = (sdm.at(i + 1, j, k) - sdm.at(i - 1, j, k)) / (2 * g.spacing);
                const double gy = (sdm.at(i, j + 1, k) - sdm.at(i, j - 1, k)) / (2 * g.spacing);
                const double gz = (sdm.at(i, j, k + 1) - sdm.at(i, j, k - 1)) / (2 * g.spacing);
                const double norm = std::sqrt(gx * gx + gy * gy + gz * gz);
                if (norm >= 0.85 && norm <= 1.15) ++ok;
            }
    REQUIRE(band > 1000);
    CHECK(static_cast<double>(ok) / band >= 0.90);
}

TEST_CASE("sign at the centerline midpoint is negative") {
    const ShapeParams p = sdmforge::testing::default_shape();
    const TessellationSpec spec;
    const TriangleMesh m = tessellate(p, spec);
    const Vec3 mid = centerline_point(p, spec.t_max / 2, spec);
    const NearestTriangle hit = nearest_point_naive(mid, m);
    CHECK(signed_distance_from(mid, m, hit) < 0.0);
}

TEST_CASE("engines are worker-count invariant") {
    const TriangleMesh m = tessellate({2.8, 0.9, 0.1, 0.2});
    const GridSpec g = small_grid(20, 20, 24, 0.5, {-5, -5, -2});
    const Bvh bvh = build_bvh(m);

    setenv("SDMFORGE_WORKERS", "1", 1);
    const ScalarGrid a1 = sdm_bvh(m, bvh, g);
    const BinaryGrid r1 = rasterize(m, g);
    setenv("SDMFORGE_WORKERS", "2", 1);
    const ScalarGrid a2 = sdm_bvh(m, bvh, g);
    const BinaryGrid r2 = rasterize(m, g);
    unsetenv("SDMFORGE_WORKERS");

    CHECK(a1.values == a2.values);  // bit-identical
    CHECK(r1.values == r2.values);
}
