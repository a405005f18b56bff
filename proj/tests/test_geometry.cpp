#include "catch_amalgamated.hpp"

#include "dwshell/geometry.hpp"

#include <random>

using namespace dwshell;
using Catch::Approx;

namespace {

// Brute-force oracle: dense scan of the arc plus local polish.
double scan_parabola_distance(const std::vector<Point2>& poly, double u_max, double u_lo) {
    double best = std::numeric_limits<double>::infinity(), best_u = u_max;
    const int n = 20000;
    for (int k = 0; k <= n; ++k) {
        const double u = u_lo + (u_max - u_lo) * k / n;
        const double d = distance_to_convex_polygon(poly, {u, u * u});
        if (d < best) best = d, best_u = u;
    }
    const double h = (u_max - u_lo) / n;
    double lo = std::max(u_lo, best_u - h), hi = std::min(u_max, best_u + h);
    for (int it = 0; it < 200; ++it) {
        const double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
        if (distance_to_convex_polygon(poly, {m1, m1 * m1}) < distance_to_convex_polygon(poly, {m2, m2 * m2}))
            hi = m2;
        else
            lo = m1;
    }
    const double u = 0.5 * (lo + hi);
    return std::min(best, distance_to_convex_polygon(poly, {u, u * u}));
}

}  // namespace

TEST_CASE("convex hull orientation and degeneracies", "[geometry]") {
    const auto square = convex_hull({{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}, {0.5, 0}});
    REQUIRE(square.size() == 4);
    double area = 0;
    for (std::size_t i = 0; i < square.size(); ++i) area += cross(square[i], square[(i + 1) % square.size()]);
    CHECK(area == Approx(2.0));  // twice the area, positive => counterclockwise

    CHECK(convex_hull({{1, 1}, {1, 1}, {1, 1}}).size() == 1);
    CHECK(convex_hull({{0, 0}, {1, 1}, {2, 2}, {0.5, 0.5}}).size() == 2);
    CHECK(convex_hull({}).empty());
}

TEST_CASE("point to polygon distance", "[geometry]") {
    const std::vector<Point2> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    CHECK(distance_to_convex_polygon(sq, {0.5, 0.5}) == 0.0);
    CHECK(distance_to_convex_polygon(sq, {2, 0.5}) == Approx(1.0));
    CHECK(distance_to_convex_polygon(sq, {2, 2}) == Approx(std::sqrt(2.0)));
    const std::vector<Point2> seg{{0, 0}, {2, 0}};
    CHECK(distance_to_convex_polygon(seg, {1, 3}) == Approx(3.0));
    CHECK(hausdorff_convex(sq, std::vector<Point2>{{0, 0}, {2, 0}, {2, 1}, {0, 1}}) == Approx(1.0));
}

TEST_CASE("cubic roots", "[geometry]") {
    for (auto [p, q] : {std::pair{-3.0, 1.0}, {1.0, 2.0}, {-7.0, 6.0}, {0.0, -8.0}}) {
        const auto roots = depressed_cubic_roots(p, q);
        REQUIRE(!roots.empty());
        for (double u : roots) CHECK(std::abs(u * u * u + p * u + q) < 1e-10 * (1 + std::abs(q)));
    }
    CHECK(depressed_cubic_roots(-7.0, 6.0).size() == 3);  // roots 1, 2, -3
}

TEST_CASE("parabola distance from a single point", "[geometry]") {
    // Identity response: the arc endpoint is the minimiser.
    const auto r = nearest_on_parabola(std::vector<Point2>{{1, 1}}, -3.5);
    CHECK(r.distance == Approx(std::hypot(4.5, 11.25)).epsilon(1e-12));
    CHECK(r.u == -3.5);
}

TEST_CASE("parabola distance matches a dense scan", "[geometry][property]") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> c(-6, 6), z(0, 40);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Point2> pts;
        const double cx = c(rng), cz = z(rng);
        for (int k = 0; k < 6; ++k) pts.push_back({cx + 0.5 * c(rng), cz + 0.5 * c(rng)});
        const auto poly = convex_hull(pts);
        const double u_max = -std::abs(c(rng)) - 0.1;
        const auto fast = nearest_on_parabola(poly, u_max);
        const double slow = scan_parabola_distance(poly, u_max, -20.0);
        INFO("trial " << trial);
        CHECK(fast.distance == Approx(slow).margin(1e-7));
        // Reported points realise the distance.
        CHECK(distance(fast.polygon_point, {fast.u, fast.u * fast.u}) == Approx(fast.distance).margin(1e-9));
        CHECK(fast.u <= u_max);
    }
}

TEST_CASE("parabola crossing a polygon gives zero distance", "[geometry]") {
    const std::vector<Point2> poly{{-3, 8}, {-1, 8}, {-1, 10}, {-3, 10}};
    CHECK(nearest_on_parabola(poly, -1.0).distance == Approx(0.0).margin(1e-12));
}

TEST_CASE("indexed Hausdorff distance equals the brute-force value", "[geometry][property]") {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> g;
    const auto brute = [](const std::vector<Point2>& a, const std::vector<Point2>& b) {
        double h = 0.0;
        for (const auto& p : a) h = std::max(h, distance_to_convex_polygon(b, p));
        for (const auto& p : b) h = std::max(h, distance_to_convex_polygon(a, p));
        return h;
    };
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Point2> pa, pb;
        const int na = 3 + trial % 40, nb = 1 + (trial * 7) % 50;
        for (int k = 0; k < na; ++k) pa.push_back({g(rng), 3 * g(rng)});
        for (int k = 0; k < nb; ++k) pb.push_back({0.3 + g(rng), 0.5 + 2 * g(rng)});
        const auto a = convex_hull(pa), b = convex_hull(pb);
        CHECK(hausdorff_convex(a, b) == Approx(brute(a, b)).epsilon(1e-12).margin(1e-14));
        for (int k = 0; k < 20; ++k) {
            const Point2 p{2 * g(rng), 4 * g(rng)};
            CHECK(contains_fast(a, p) == contains(a, p));
        }
    }
}
