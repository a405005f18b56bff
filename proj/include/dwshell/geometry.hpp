#pragma once

// Planar computational geometry used by the shell projections: convex hulls,
// point/polygon distances, Hausdorff distance of convex polygons, and the
// distance from a convex polygon to the parabola arc {(u, u^2) : u <= u_max}.

#include "dwshell/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace dwshell {

/// A point in a projection plane. For x-z graphs the second coordinate holds z.
struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

/// Convex hull by Andrew's monotone chain. Returns counterclockwise vertices
/// without repetition. Points closer than rel_tol times the cloud extent are
/// merged and exactly collinear points dropped, so a cloud of one repeated
/// point yields a single vertex and a collinear cloud its two endpoints.
inline std::vector<Point2> convex_hull(std::vector<Point2> pts, double rel_tol = 1e-12) {
    if (pts.empty()) return {};
    if (pts.size() > 64) {
        // Akl-Toussaint prefilter: drop points strictly inside the polygon of
        // the eight axis/diagonal extremes.
        std::array<Point2, 8> ext;
        ext.fill(pts.front());
        const auto key = [](int k, Point2 p) {
            switch (k) {
                case 0: return p.x;
                case 1: return p.x + p.y;
                case 2: return p.y;
                case 3: return p.y - p.x;
                case 4: return -p.x;
                case 5: return -p.x - p.y;
                case 6: return -p.y;
                default: return p.x - p.y;
            }
        };
        for (const auto& p : pts)
            for (int k = 0; k < 8; ++k)
                if (key(k, p) > key(k, ext[static_cast<std::size_t>(k)])) ext[static_cast<std::size_t>(k)] = p;
        // The extremes are met in counterclockwise order (directions rotate by 45 degrees).
        const auto strictly_inside = [&](Point2 p) {
            for (std::size_t k = 0; k < 8; ++k) {
                const Point2 a = ext[k], b = ext[(k + 1) % 8];
                if (a == b) continue;
                if (cross(b - a, p - a) <= 0.0) return false;
            }
            return true;
        };
        std::size_t distinct = 0;
        for (std::size_t k = 0; k < 8; ++k) distinct += ext[k] == ext[(k + 1) % 8] ? 0 : 1;
        if (distinct >= 3) std::erase_if(pts, strictly_inside);
    }
    std::sort(pts.begin(), pts.end(), [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    double extent = 0.0;
    for (const auto& p : pts) extent = std::max({extent, std::abs(p.x), std::abs(p.y)});
    const double merge = rel_tol * extent;

    std::vector<Point2> unique;
    unique.reserve(pts.size());
    for (const auto& p : pts)
        if (unique.empty() || distance(unique.back(), p) > merge) unique.push_back(p);
    {
        // A cloud that is a single point up to roundoff.
        double spread = 0.0;
        for (const auto& p : unique) spread = std::max(spread, distance(p, unique.front()));
        if (spread <= merge) return {unique.front()};
    }

    std::vector<Point2> hull(2 * unique.size());
    std::size_t k = 0;
    for (const auto& p : unique) {
        while (k >= 2 && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = unique.size() - 1, lower = k + 1; i-- > 0;) {
        const auto& p = unique[i];
        while (k >= lower && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
        hull[k++] = p;
    }
    hull.resize(k - 1);
    return hull;
}

/// Distance from p to the closed segment [a, b], with the closest point.
inline double distance_to_segment(Point2 p, Point2 a, Point2 b, Point2* closest = nullptr) {
    const Point2 e = b - a;
    const double len2 = dot(e, e);
    double t = len2 > 0.0 ? dot(p - a, e) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const Point2 q = a + t * e;
    if (closest) *closest = q;
    return distance(p, q);
}

/// True when p lies inside the counterclockwise convex polygon, boundary
/// included up to tol (absolute distance).
inline bool contains(std::span<const Point2> poly, Point2 p, double tol = 0.0) {
    if (poly.size() < 3) return false;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point2 a = poly[i];
        const Point2 b = poly[(i + 1) % poly.size()];
        const Point2 e = b - a;
        const double len = norm(e);
        if (len == 0.0) continue;
        if (cross(e, p - a) / len < -tol) return false;
    }
    return true;
}

/// Euclidean distance from p to a convex polygon (zero inside). Polygons of one
/// or two vertices are treated as a point or a segment.
inline double distance_to_convex_polygon(std::span<const Point2> poly, Point2 p, Point2* closest = nullptr) {
    if (poly.empty()) fail_input("distance_to_convex_polygon: empty polygon");
    if (poly.size() == 1) {
        if (closest) *closest = poly[0];
        return distance(p, poly[0]);
    }
    if (contains(poly, p)) {
        if (closest) *closest = p;
        return 0.0;
    }
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = poly.size() == 2 ? 1 : poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        Point2 q;
        const double d = distance_to_segment(p, poly[i], poly[(i + 1) % poly.size()], &q);
        if (d < best) {
            best = d;
            if (closest) *closest = q;
        }
    }
    return best;
}

/// Containment in a counterclockwise convex polygon by binary search over the
/// fan from vertex 0; O(log n).
inline bool contains_fast(std::span<const Point2> poly, Point2 p) {
    const std::size_t n = poly.size();
    if (n < 3) return false;
    const Point2 o = poly[0];
    if (cross(poly[1] - o, p - o) < 0.0 || cross(poly[n - 1] - o, p - o) > 0.0) return false;
    std::size_t lo = 1, hi = n - 1;
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        (cross(poly[mid] - o, p - o) >= 0.0 ? lo : hi) = mid;
    }
    return cross(poly[hi] - poly[lo], p - poly[lo]) >= 0.0;
}

/// Bucket grid over the edges of a polygon for exact nearest-edge queries.
class EdgeIndex {
public:
    explicit EdgeIndex(std::span<const Point2> poly) : poly_(poly) {
        const std::size_t m = poly.size();
        x0_ = y0_ = std::numeric_limits<double>::infinity();
        double x1 = -x0_, y1 = -y0_;
        for (const auto& q : poly) {
            x0_ = std::min(x0_, q.x), x1 = std::max(x1, q.x);
            y0_ = std::min(y0_, q.y), y1 = std::max(y1, q.y);
        }
        n_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(m))));
        h_ = std::max({x1 - x0_, y1 - y0_, 1e-300}) / static_cast<double>(n_);
        cells_.resize(n_ * n_);
        const std::size_t edges = m < 2 ? 0 : (m == 2 ? 1 : m);
        for (std::size_t i = 0; i < edges; ++i) {
            const Point2 a = poly[i], b = poly[(i + 1) % m];
            const auto [cx0, cy0] = cell_of({std::min(a.x, b.x), std::min(a.y, b.y)});
            const auto [cx1, cy1] = cell_of({std::max(a.x, b.x), std::max(a.y, b.y)});
            for (std::size_t cx = cx0; cx <= cx1; ++cx)
                for (std::size_t cy = cy0; cy <= cy1; ++cy) cells_[cx * n_ + cy].push_back(i);
        }
    }

    /// Distance from p to the polygon boundary (or to the single vertex).
    [[nodiscard]] double boundary_distance(Point2 p) const {
        const std::size_t m = poly_.size();
        if (m == 1) return distance(p, poly_[0]);
        double best = std::numeric_limits<double>::infinity();
        const auto [px, py] = cell_of(p);
        const double outside = std::max({x0_ - p.x, p.x - (x0_ + h_ * static_cast<double>(n_)), y0_ - p.y,
                                         p.y - (y0_ + h_ * static_cast<double>(n_)), 0.0});
        for (std::size_t r = 0; r <= n_; ++r) {
            // Cells on ring r are at least (r - 1) h beyond the cell holding the clamped point.
            if (r >= 1 && best <= std::max(outside, h_ * static_cast<double>(r - 1))) break;
            const auto visit = [&](std::size_t cx, std::size_t cy) {
                for (std::size_t i : cells_[cx * n_ + cy])
                    best = std::min(best, distance_to_segment(p, poly_[i], poly_[(i + 1) % m]));
            };
            const long lo_x = static_cast<long>(px) - static_cast<long>(r), hi_x = static_cast<long>(px + r);
            const long lo_y = static_cast<long>(py) - static_cast<long>(r), hi_y = static_cast<long>(py + r);
            const long lim = static_cast<long>(n_) - 1;
            for (long cx = std::max(lo_x, 0L); cx <= std::min(hi_x, lim); ++cx)
                for (long cy = std::max(lo_y, 0L); cy <= std::min(hi_y, lim); ++cy)
                    if (cx == lo_x || cx == hi_x || cy == lo_y || cy == hi_y)
                        visit(static_cast<std::size_t>(cx), static_cast<std::size_t>(cy));
        }
        return best;
    }

private:
    [[nodiscard]] std::pair<std::size_t, std::size_t> cell_of(Point2 p) const {
        const auto clamp = [&](double v) {
            const double c = std::floor(v / h_);
            return static_cast<std::size_t>(std::clamp(c, 0.0, static_cast<double>(n_ - 1)));
        };
        return {clamp(p.x - x0_), clamp(p.y - y0_)};
    }

    std::span<const Point2> poly_;
    double x0_ = 0.0, y0_ = 0.0, h_ = 1.0;
    std::size_t n_ = 1;
    std::vector<std::vector<std::size_t>> cells_;
};

/// Hausdorff distance between two convex polygons as filled regions. For convex
/// sets the directed distance is attained at a vertex.
inline double hausdorff_convex(std::span<const Point2> a, std::span<const Point2> b) {
    const auto directed = [](std::span<const Point2> from, std::span<const Point2> to) {
        const EdgeIndex index(to);
        double h = 0.0;
        for (const auto& p : from)
            if (!contains_fast(to, p)) h = std::max(h, index.boundary_distance(p));
        return h;
    };
    if (a.empty() || b.empty()) fail_input("hausdorff_convex: empty polygon");
    return std::max(directed(a, b), directed(b, a));
}

/// Up to three real roots, stored inline (this sits in the margin hot loop).
struct CubicRoots {
    std::array<double, 3> u{};
    std::size_t n = 0;

    [[nodiscard]] const double* begin() const { return u.data(); }
    [[nodiscard]] const double* end() const { return u.data() + n; }
    [[nodiscard]] std::size_t size() const { return n; }
    [[nodiscard]] bool empty() const { return n == 0; }
};

/// Real roots of u^3 + p u + q = 0, Newton-polished.
inline CubicRoots depressed_cubic_roots(double p, double q) {
    CubicRoots roots;
    const double disc = 0.25 * q * q + p * p * p / 27.0;
    if (p == 0.0 && q == 0.0) {
        roots.u[roots.n++] = 0.0;
    } else if (disc > 0.0) {
        const double s = std::sqrt(disc);
        roots.u[roots.n++] = std::cbrt(-0.5 * q + s) + std::cbrt(-0.5 * q - s);
    } else {
        const double r = 2.0 * std::sqrt(-p / 3.0);
        const double arg = std::clamp(1.5 * q / p * std::sqrt(-3.0 / p), -1.0, 1.0);
        const double phi = std::acos(arg) / 3.0;
        for (int k = 0; k < 3; ++k) roots.u[roots.n++] = r * std::cos(phi - two_pi * k / 3.0);
    }
    for (std::size_t k = 0; k < roots.n; ++k) {
        double& u = roots.u[k];
        for (int it = 0; it < 3; ++it) {
            const double f = u * u * u + p * u + q;
            const double df = 3.0 * u * u + p;
            if (df == 0.0) break;
            u -= f / df;
        }
    }
    return roots;
}

/// Closest approach between a convex polygon and the parabola arc
/// {(u, u^2) : u <= u_max}.
struct ParabolaProximity {
    double distance = std::numeric_limits<double>::infinity();
    double u = 0.0;          // parameter of the nearest arc point
    Point2 polygon_point{};  // nearest point of the polygon
};

/// Exact minimum over the unbounded arc. The minimum of the polygon distance is
/// attained at a stationary point of some vertex distance (a cubic in u), at a
/// stationary point or zero of some edge's signed line distance (quadratics in
/// u, valid where the foot falls inside the edge), or at the arc endpoint.
inline ParabolaProximity nearest_on_parabola(std::span<const Point2> poly, double u_max) {
    if (poly.empty()) fail_input("nearest_on_parabola: empty polygon");
    ParabolaProximity best;
    const auto consider = [&](double u, double d, Point2 q) {
        if (d < best.distance) best = {d, u, q};
    };

    {
        Point2 q;
        const double d = distance_to_convex_polygon(poly, {u_max, u_max * u_max}, &q);
        consider(u_max, d, q);
    }
    for (const auto& v : poly) {
        // d/du [(u - a)^2 + (u^2 - b)^2] = 0  <=>  u^3 + (1/2 - b) u - a/2 = 0
        for (double u : depressed_cubic_roots(0.5 - v.y, -0.5 * v.x)) {
            if (!(u <= u_max)) continue;
            consider(u, distance({u, u * u}, v), v);
        }
    }
    const std::size_t n_edges = poly.size() == 1 ? 0 : (poly.size() == 2 ? 1 : poly.size());
    for (std::size_t i = 0; i < n_edges; ++i) {
        const Point2 a = poly[i];
        const Point2 b = poly[(i + 1) % poly.size()];
        const Point2 e = b - a;
        const double len = norm(e);
        if (len == 0.0) continue;
        const Point2 nrm{e.y / len, -e.x / len};
        // s(u) = nrm . ((u, u^2) - a) = ny u^2 + nx u - nrm.a
        const double c2 = nrm.y, c1 = nrm.x, c0 = -dot(nrm, a);
        std::array<double, 3> cand{};
        std::size_t nc = 0;
        if (c2 != 0.0) {
            cand[nc++] = -c1 / (2.0 * c2);
            const double disc = c1 * c1 - 4.0 * c2 * c0;
            if (disc >= 0.0) {
                const double sq = std::sqrt(disc);
                const double qq = -0.5 * (c1 + std::copysign(sq, c1));
                if (qq != 0.0) {
                    cand[nc++] = qq / c2;
                    cand[nc++] = c0 / qq;
                } else {
                    cand[nc++] = 0.0;
                }
            }
        } else if (c1 != 0.0) {
            cand[nc++] = -c0 / c1;
        }
        for (std::size_t k = 0; k < nc; ++k) {
            const double u = cand[k];
            if (!(u <= u_max)) continue;
            const Point2 q{u, u * u};
            const double s = dot(nrm, q - a);
            if (s < 0.0 && poly.size() > 2) {
                // Inner side: only a genuine boundary crossing (s == 0) counts.
                if (s < -1e-15 * (1.0 + std::abs(q.y))) continue;
            }
            const double t = dot(q - a, e) / (len * len);
            if (t < 0.0 || t > 1.0) continue;
            consider(u, std::abs(s), a + t * e);
        }
    }
    return best;
}

}  // namespace dwshell
