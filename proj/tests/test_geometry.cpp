#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sdmforge/bvh.hpp"
#include "sdmforge/cochlea.hpp"
#include "sdmforge/mesh.hpp"
#include "sdmforge/rng.hpp"
#include "sdmforge/triangle.hpp"

#include "helpers.hpp"

using namespace sdmforge;
using sdmforge::testing::icosphere;
using sdmforge::testing::regular_tetrahedron;
using sdmforge::testing::unit_cube_mesh;
using Catch::Approx;

namespace {

// Independent oracle: minimum distance over a dense barycentric sampling.
double dense_triangle_distance(const Vec3& p, const Triangle& t, int n = 2000) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n - i; ++j) {
            const double u = static_cast<double>(i) / n;
            const double v = static_cast<double>(j) / n;
            const Vec3 q = t.a * (1.0 - u - v) + t.b * u + t.c * v;
            best = std::min(best, distance(p, q));
        }
    return best;
}

}  // namespace

TEST_CASE("point_triangle_closest: spec examples") {
    const Triangle t{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};

    auto r1 = point_triangle_closest({0, 0, 0}, t);
    CHECK(r1.dist == Approx(0.0).margin(1e-15));
    CHECK(r1.region == ClosestRegion::vertex0);

    auto r2 = point_triangle_closest({0.25, 0.25, 2.0}, t);
    CHECK(r2.dist == Approx(2.0).margin(1e-12));
    CHECK(r2.point.x == Approx(0.25));
    CHECK(r2.point.y == Approx(0.25));
    CHECK(r2.point.z == Approx(0.0).margin(1e-15));
    CHECK(r2.region == ClosestRegion::face);

    auto r3 = point_triangle_closest({2, 2, 1}, t);
    CHECK(r3.dist == Approx(std::sqrt(5.5)).epsilon(1e-12));
    CHECK(r3.point.x == Approx(0.5));
    CHECK(r3.point.y == Approx(0.5));
    CHECK(region_is_edge(r3.region));
    CHECK(r3.region == ClosestRegion::edge1);
    // oracle agreement (sampling resolution limits the tolerance)
    CHECK(r3.dist == Approx(dense_triangle_distance({2, 2, 1}, t, 400)).margin(2e-5));
}

TEST_CASE("point_triangle_closest: degenerate triangle rejected") {
    const Triangle t{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
    CHECK_THROWS_AS(point_triangle_closest({0, 1, 0}, t), std::invalid_argument);
}

TEST_CASE("point_triangle_closest: properties on random inputs") {
    Rng rng(42);
    for (int trial = 0; trial < 300; ++trial) {
        auto rv = [&] { return Vec3{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)}; };
        const Triangle t{rv(), rv(), rv()};
        if (t.degenerate()) continue;
        const Vec3 p = rv();
        const ClosestPoint cp = point_triangle_closest(p, t);

        // distance never exceeds any vertex distance
        CHECK(cp.dist <= distance(p, t.a) + 1e-12);
        CHECK(cp.dist <= distance(p, t.b) + 1e-12);
        CHECK(cp.dist <= distance(p, t.c) + 1e-12);

        // swapping two vertices leaves the distance unchanged
        const Triangle t2{t.b, t.a, t.c};
        CHECK(point_triangle_closest(p, t2).dist == Approx(cp.dist).margin(1e-12));

        // the reported closest point really is on the triangle at that distance
        CHECK(distance(p, cp.point) == Approx(cp.dist).margin(1e-12));
    }
}

TEST_CASE("pseudonormals: unit cube corners") {
    const TriangleMesh cube = unit_cube_mesh();
    REQUIRE(cube.pseudonormals_ready);
    for (std::size_t v = 0; v < cube.vertices.size(); ++v) {
        const Vec3 expected =
            Vec3{cube.vertices[v].x * 2 - 1, cube.vertices[v].y * 2 - 1,
                 cube.vertices[v].z * 2 - 1} /
            std::sqrt(3.0);
        CHECK(distance(cube.vertex_pseudonormals[v], expected) < 1e-12);
    }
}

TEST_CASE("pseudonormals: tetrahedron vertex normals oppose the far face") {
    const TriangleMesh tet = regular_tetrahedron();
    for (int v = 0; v < 4; ++v) {
        // find the face not containing v
        for (std::size_t f = 0; f < tet.faces.size(); ++f) {
            const auto& fc = tet.faces[f];
            if (fc[0] == v || fc[1] == v || fc[2] == v) continue;
            CHECK(tet.vertex_pseudonormals[v].dot(tet.face_normals[f]) == Approx(-1.0).margin(1e-12));
        }
    }
}

TEST_CASE("pseudonormals: cochlea caches are unit and consistent") {
    const TriangleMesh m = tessellate(sdmforge::testing::default_shape());
    for (const Vec3& n : m.vertex_pseudonormals) CHECK(std::abs(n.norm() - 1.0) < 1e-9);
    for (const Vec3& n : m.edge_pseudonormals) CHECK(std::abs(n.norm() - 1.0) < 1e-9);
    for (std::size_t f = 0; f < m.faces.size(); ++f)
        for (int k = 0; k < 3; ++k)
            CHECK(m.vertex_pseudonormals[m.faces[f][k]].dot(m.face_normals[f]) > 0.0);
}

TEST_CASE("pseudonormals: open and inconsistent meshes are reported") {
    TriangleMesh open_mesh = unit_cube_mesh();
    open_mesh.faces.pop_back();
    open_mesh.pseudonormals_ready = false;
    CHECK_THROWS_WITH(open_mesh.build_pseudonormals(),
                      Catch::Matchers::ContainsSubstring("edge"));

    TriangleMesh flipped = unit_cube_mesh();
    std::swap(flipped.faces[0][0], flipped.faces[0][1]);
    flipped.pseudonormals_ready = false;
    CHECK_THROWS_WITH(flipped.build_pseudonormals(),
                      Catch::Matchers::ContainsSubstring("wound"));
}

TEST_CASE("point_in_mesh: cube basics") {
    const TriangleMesh cube = unit_cube_mesh();
    CHECK(point_in_mesh({0.5, 0.5, 0.5}, cube));
    CHECK_FALSE(point_in_mesh({2.0, 0.0, 0.0}, cube));
    CHECK_THROWS_AS(point_in_mesh({0.5, 0.5, 1.0}, cube), std::invalid_argument);
}

TEST_CASE("point_in_mesh: parity agrees with pseudonormal sign on the cochlea") {
    const TriangleMesh m = tessellate(sdmforge::testing::default_shape());
    const auto [lo, hi] = mesh_bounds(m);
    Rng rng(7);
    int checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const Vec3 p{rng.uniform(lo.x - 0.5, hi.x + 0.5), rng.uniform(lo.y - 0.5, hi.y + 0.5),
                     rng.uniform(lo.z - 0.5, hi.z + 0.5)};
        const NearestTriangle hit = nearest_point_naive(p, m);
        if (hit.dist <= 1e-6) continue;  // stay clear of the surface
        const bool inside_pn = signed_distance_from(p, m, hit) < 0.0;
        CHECK(point_in_mesh(p, m) == inside_pn);
        ++checked;
    }
    CHECK(checked > 900);
}

TEST_CASE("mesh_bounds") {
    const TriangleMesh cube = unit_cube_mesh();
    const auto [lo, hi] = mesh_bounds(cube);
    CHECK(lo == Vec3{0, 0, 0});
    CHECK(hi == Vec3{1, 1, 1});

    TriangleMesh tri;
    tri.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    tri.faces = {{0, 1, 2}};
    const auto [tlo, thi] = mesh_bounds(tri);
    CHECK(tlo == Vec3{0, 0, 0});
    CHECK(thi == Vec3{1, 1, 0});

    CHECK_THROWS_AS(mesh_bounds(TriangleMesh{}), std::invalid_argument);
}

TEST_CASE("mesh_bounds: larger basal radius encloses smaller in x-y") {
    const TriangleMesh big = tessellate({5.0, 0.6, 0.15, 0.0});
    const TriangleMesh small = tessellate({2.0, 0.6, 0.15, 0.0});
    const auto [blo, bhi] = mesh_bounds(big);
    const auto [slo, shi] = mesh_bounds(small);
    CHECK(blo.x <= slo.x);
    CHECK(blo.y <= slo.y);
    CHECK(bhi.x >= shi.x);
    CHECK(bhi.y >= shi.y);
}

TEST_CASE("bvh: structure invariants") {
    TriangleMesh one;
    one.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    one.faces = {{0, 1, 2}};
    const Bvh single = build_bvh(one);
    CHECK(single.nodes.size() == 1);
    CHECK(single.leaf(single.nodes[0]));

    const TriangleMesh m = tessellate(sdmforge::testing::default_shape());
    const Bvh bvh = build_bvh(m);
    CHECK(bvh.source_faces == m.face_count());

    // every triangle exactly once across leaves
    std::vector<int> seen(m.face_count(), 0);
    for (const BvhNode& n : bvh.nodes) {
        if (!bvh.leaf(n)) continue;
        for (int i = n.first; i < n.first + n.count; ++i) seen[bvh.tri_order[i]]++;
        CHECK(n.count <= kBvhLeafSize);
    }
    for (int c : seen) CHECK(c == 1);

    // child boxes contained in parent boxes
    for (const BvhNode& n : bvh.nodes) {
        if (bvh.leaf(n)) continue;
        for (int child : {n.left, n.right}) {
            const BvhNode& c = bvh.nodes[child];
            CHECK(c.lo.x >= n.lo.x - 1e-12);
            CHECK(c.lo.y >= n.lo.y - 1e-12);
            CHECK(c.lo.z >= n.lo.z - 1e-12);
            CHECK(c.hi.x <= n.hi.x + 1e-12);
            CHECK(c.hi.y <= n.hi.y + 1e-12);
            CHECK(c.hi.z <= n.hi.z + 1e-12);
        }
    }

    CHECK_THROWS_AS(build_bvh(TriangleMesh{}), std::invalid_argument);
}

TEST_CASE("bvh: nearest query equals naive scan including ties") {
    const TriangleMesh m = icosphere(2, 1.0);
    const Bvh bvh = build_bvh(m);
    Rng rng(11);
    int warm = -1;
    for (int trial = 0; trial < 500; ++trial) {
        const Vec3 p{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
        const NearestTriangle a = nearest_point_naive(p, m);
        const NearestTriangle b = nearest_point_bvh(p, m, bvh, warm);
        warm = b.face;
        CHECK(a.face == b.face);
        CHECK(a.dist == b.dist);  // exact: same feature, same arithmetic
        CHECK(a.region == b.region);
    }

    const TriangleMesh other = icosphere(1, 1.0);
    CHECK_THROWS_AS(nearest_point_bvh({0, 0, 0}, other, bvh), std::invalid_argument);
}
