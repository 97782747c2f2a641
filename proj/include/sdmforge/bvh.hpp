#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "sdmforge/mesh.hpp"

namespace sdmforge {

inline constexpr int kBvhLeafSize = 4;
inline constexpr int kBvhMaxDepth = 64;

struct BvhNode {
    Vec3 lo{}, hi{};
    int left = -1;   // interior: child node ids
    int right = -1;
    int first = 0;   // leaf: range into tri_order
    int count = 0;
};

// Binary AABB tree over triangle centroids, median split on the longest axis.
// Leaf triangles are stored contiguously (in tri_order order) so leaf scans
// stay cache friendly.
struct Bvh {
    std::vector<BvhNode> nodes;
    std::vector<int> tri_order;
    std::vector<Triangle> leaf_tris;  // triangle geometry in tri_order order
    std::size_t source_faces = 0;

    bool leaf(const BvhNode& n) const { return n.count > 0; }
};

namespace detail {

inline double box_distance_sq(const Vec3& p, const Vec3& lo, const Vec3& hi) {
    const double dx = std::max({lo.x - p.x, 0.0, p.x - hi.x});
    const double dy = std::max({lo.y - p.y, 0.0, p.y - hi.y});
    const double dz = std::max({lo.z - p.z, 0.0, p.z - hi.z});
    return dx * dx + dy * dy + dz * dz;
}

}  // namespace detail

inline Bvh build_bvh(const TriangleMesh& m) {
    if (m.faces.empty()) throw std::invalid_argument("build_bvh: empty mesh");
    Bvh bvh;
    bvh.source_faces = m.faces.size();
    bvh.tri_order.resize(m.faces.size());
    std::iota(bvh.tri_order.begin(), bvh.tri_order.end(), 0);

    std::vector<Vec3> centroids(m.faces.size());
    for (std::size_t f = 0; f < m.faces.size(); ++f) {
        const Triangle t = m.triangle(f);
        centroids[f] = (t.a + t.b + t.c) / 3.0;
    }

    auto tri_bounds = [&](int first, int count) {
        Vec3 lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
                std::numeric_limits<double>::max()};
        Vec3 hi = -lo;
        for (int i = first; i < first + count; ++i) {
            const Triangle t = m.triangle(bvh.tri_order[i]);
            lo = Vec3::min(lo, Vec3::min(t.a, Vec3::min(t.b, t.c)));
            hi = Vec3::max(hi, Vec3::max(t.a, Vec3::max(t.b, t.c)));
        }
        return std::pair{lo, hi};
    };

    struct Task {
        int node;
        int first;
        int count;
        int depth;
    };
    bvh.nodes.push_back({});
    std::vector<Task> stack{{0, 0, static_cast<int>(m.faces.size()), 0}};
    while (!stack.empty()) {
        const Task task = stack.back();
        stack.pop_back();
        BvhNode& node = bvh.nodes[task.node];
        std::tie(node.lo, node.hi) = tri_bounds(task.first, task.count);

        if (task.count <= kBvhLeafSize || task.depth >= kBvhMaxDepth) {
            node.first = task.first;
            node.count = task.count;
            continue;
        }

        // longest axis of the centroid bounds
        Vec3 clo = centroids[bvh.tri_order[task.first]];
        Vec3 chi = clo;
        for (int i = task.first; i < task.first + task.count; ++i) {
            clo = Vec3::min(clo, centroids[bvh.tri_order[i]]);
            chi = Vec3::max(chi, centroids[bvh.tri_order[i]]);
        }
        const Vec3 ext = chi - clo;
        int axis = 0;
        if (ext.y > ext.x) axis = 1;
        if (ext.z > ext[axis]) axis = 2;
        if (ext[axis] <= 0.0) {
            node.first = task.first;
            node.count = task.count;
            continue;
        }

        const int mid = task.first + task.count / 2;
        std::nth_element(bvh.tri_order.begin() + task.first, bvh.tri_order.begin() + mid,
                         bvh.tri_order.begin() + task.first + task.count,
                         [&](int ta, int tb) {
                             if (centroids[ta][axis] != centroids[tb][axis])
                                 return centroids[ta][axis] < centroids[tb][axis];
                             return ta < tb;
                         });

        const int li = static_cast<int>(bvh.nodes.size());
        bvh.nodes.push_back({});
        const int ri = static_cast<int>(bvh.nodes.size());
        bvh.nodes.push_back({});
        bvh.nodes[task.node].left = li;
        bvh.nodes[task.node].right = ri;
        stack.push_back({li, task.first, mid - task.first, task.depth + 1});
        stack.push_back({ri, mid, task.first + task.count - mid, task.depth + 1});
    }
    bvh.leaf_tris.reserve(m.faces.size());
    for (int f : bvh.tri_order) bvh.leaf_tris.push_back(m.triangle(f));
    return bvh;
}

// Exact nearest feature via branch-and-bound, identical to the naive scan
// including its lowest-face-index tie rule. `warm_face` (typically the
// previous voxel's winner) seeds the distance bound.
inline NearestTriangle nearest_point_bvh(const Vec3& p, const TriangleMesh& m, const Bvh& bvh,
                                         int warm_face = -1) {
    if (bvh.source_faces != m.faces.size())
        throw std::invalid_argument("nearest_point_bvh: BVH was built from a different mesh");

    NearestTriangle best;
    best.dist = std::numeric_limits<double>::infinity();
    double best_sq = std::numeric_limits<double>::infinity();
    auto consider = [&](int face, const Triangle& tri) {
        const ClosestPoint cp = point_triangle_closest(p, tri);
        if (cp.dist < best.dist || (cp.dist == best.dist && face < best.face)) {
            best = {cp.dist, face, cp.region, cp.point};
            best_sq = cp.dist * cp.dist;
        }
    };
    if (warm_face >= 0 && warm_face < static_cast<int>(m.faces.size()))
        consider(warm_face, m.triangle(warm_face));

    struct Entry {
        int node;
        double dist_sq;
    };
    Entry stack[kBvhMaxDepth + 2];
    int top = 0;
    stack[top++] = {0, detail::box_distance_sq(p, bvh.nodes[0].lo, bvh.nodes[0].hi)};
    while (top > 0) {
        const Entry e = stack[--top];
        if (e.dist_sq > best_sq) continue;
        const BvhNode& n = bvh.nodes[e.node];
        if (bvh.leaf(n)) {
            for (int i = n.first; i < n.first + n.count; ++i)
                consider(bvh.tri_order[i], bvh.leaf_tris[i]);
            continue;
        }
        const BvhNode& l = bvh.nodes[n.left];
        const BvhNode& r = bvh.nodes[n.right];
        const double dl = detail::box_distance_sq(p, l.lo, l.hi);
        const double dr = detail::box_distance_sq(p, r.lo, r.hi);
        // push farther first so the nearer child is explored next
        if (dl <= dr) {
            if (dr <= best_sq) stack[top++] = {n.right, dr};
            if (dl <= best_sq) stack[top++] = {n.left, dl};
        } else {
            if (dl <= best_sq) stack[top++] = {n.left, dl};
            if (dr <= best_sq) stack[top++] = {n.right, dr};
        }
    }
    return best;
}

}  // namespace sdmforge
