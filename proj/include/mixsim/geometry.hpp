#pragma once

#include <cmath>
#include <vector>

namespace mixsim {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    bool operator==(const Vec2&) const = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }

inline Vec2 normalized(Vec2 a) {
    double n = norm(a);
    return n > 0.0 ? Vec2{a.x / n, a.y / n} : Vec2{0.0, 0.0};
}

// 90 degrees clockwise; with y up this points to the right of the heading,
// which is where right-hand traffic puts the incoming lane.
inline Vec2 right_of(Vec2 d) { return {d.y, -d.x}; }

// Closed-segment intersection test, including collinear overlap and shared
// endpoints. Traffic conflict detection wants "do these paths touch at all",
// so every borderline case counts as a hit.
inline bool segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
    const double eps = 1e-9;
    Vec2 r = p2 - p1;
    Vec2 s = q2 - q1;
    double rxs = cross(r, s);
    double qpxr = cross(q1 - p1, r);

    if (std::abs(rxs) < eps) {
        if (std::abs(qpxr) >= eps) return false;  // parallel, not collinear
        // Collinear: overlap iff the projections onto r touch.
        double rr = dot(r, r);
        if (rr < eps) {
            // p is a point; check it lies on q.
            double ss = dot(s, s);
            if (ss < eps) return norm(p1 - q1) < eps;
            double u = dot(p1 - q1, s) / ss;
            return u >= -eps && u <= 1.0 + eps && norm(q1 + s * u - p1) < eps;
        }
        double t0 = dot(q1 - p1, r) / rr;
        double t1 = dot(q2 - p1, r) / rr;
        if (t0 > t1) std::swap(t0, t1);
        return t0 <= 1.0 + eps && t1 >= -eps;
    }
    double t = cross(q1 - p1, s) / rxs;
    double u = qpxr / rxs;
    return t >= -eps && t <= 1.0 + eps && u >= -eps && u <= 1.0 + eps;
}

inline bool polylines_intersect(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
    for (std::size_t i = 0; i + 1 < a.size(); ++i)
        for (std::size_t j = 0; j + 1 < b.size(); ++j)
            if (segments_intersect(a[i], a[i + 1], b[j], b[j + 1])) return true;
    return false;
}

inline double polyline_length(const std::vector<Vec2>& pts) {
    double len = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) len += norm(pts[i + 1] - pts[i]);
    return len;
}

// Intersection point of two infinite lines given as point+direction.
// Returns false when (near-)parallel.
inline bool line_intersection(Vec2 p, Vec2 dp, Vec2 q, Vec2 dq, Vec2& out) {
    double denom = cross(dp, dq);
    if (std::abs(denom) < 1e-9) return false;
    double t = cross(q - p, dq) / denom;
    out = p + dp * t;
    return true;
}

}  // namespace mixsim
