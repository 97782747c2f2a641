#pragma once

#include <stdexcept>

#include "sdmforge/vec3.hpp"

namespace sdmforge {

inline constexpr double kMinTriangleArea = 1e-12;  // mm^2

struct Triangle {
    Vec3 a, b, c;

    Vec3 raw_normal() const { return (b - a).cross(c - a); }
    double area() const { return 0.5 * raw_normal().norm(); }
    bool degenerate() const { return !(area() > kMinTriangleArea); }
};

// Which feature of the triangle carries the closest point. Edge k runs from
// vertex k to vertex (k+1)%3.
enum class ClosestRegion : int {
    vertex0 = 0,
    vertex1 = 1,
    vertex2 = 2,
    edge0 = 3,
    edge1 = 4,
    edge2 = 5,
    face = 6,
};

inline bool region_is_vertex(ClosestRegion r) { return static_cast<int>(r) < 3; }
inline bool region_is_edge(ClosestRegion r) {
    return static_cast<int>(r) >= 3 && static_cast<int>(r) < 6;
}

struct ClosestPoint {
    double dist = 0.0;
    Vec3 point{};
    ClosestRegion region = ClosestRegion::face;
};

// Closest point on a triangle via Voronoi-region classification.
inline ClosestPoint point_triangle_closest(const Vec3& p, const Triangle& t) {
    if (t.degenerate())
        throw std::invalid_argument("point_triangle_closest: degenerate triangle (area <= 1e-12 mm^2)");

    const Vec3 ab = t.b - t.a;
    const Vec3 ac = t.c - t.a;
    const Vec3 ap = p - t.a;

    const double d1 = ab.dot(ap);
    const double d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return {distance(p, t.a), t.a, ClosestRegion::vertex0};

    const Vec3 bp = p - t.b;
    const double d3 = ab.dot(bp);
    const double d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return {distance(p, t.b), t.b, ClosestRegion::vertex1};

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        const double v = d1 / (d1 - d3);
        const Vec3 q = t.a + ab * v;
        return {distance(p, q), q, ClosestRegion::edge0};
    }

    const Vec3 cp = p - t.c;
    const double d5 = ab.dot(cp);
    const double d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return {distance(p, t.c), t.c, ClosestRegion::vertex2};

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        const double w = d2 / (d2 - d6);
        const Vec3 q = t.a + ac * w;
        return {distance(p, q), q, ClosestRegion::edge2};
    }

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        const Vec3 q = t.b + (t.c - t.b) * w;
        return {distance(p, q), q, ClosestRegion::edge1};
    }

    const double denom = 1.0 / (va + vb + vc);
    const double v = vb * denom;
    const double w = vc * denom;
    const Vec3 q = t.a + ab * v + ac * w;
    return {distance(p, q), q, ClosestRegion::face};
}

}  // namespace sdmforge
