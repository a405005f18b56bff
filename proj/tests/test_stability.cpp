#include "catch_amalgamated.hpp"

#include "dwshell/stability.hpp"
#include "support.hpp"

#include <random>

using namespace dwshell;
using Catch::Approx;

namespace {

ReducedNetwork scalar_network(double b) { return reduce_network(RealMatrix::Constant(1, 1, b), RealVector::Ones(1)); }

LtiBlock static_block(const RealMatrix& d) {
    LtiBlock b;
    b.a = RealMatrix(0, 0);
    b.b = RealMatrix(0, 2);
    b.c = RealMatrix(2, 0);
    b.d = d;
    return b;
}

// y(s) = -k s / (s^2 + 2 zeta w0 s + w0^2) on the d channel: real and equal to
// -k / (2 zeta w0) exactly at s = j w0.
LtiBlock resonant_block(double k, double zeta, double w0) {
    LtiBlock b;
    b.a = RealMatrix(2, 2);
    b.a << 0, 1, -w0 * w0, -2 * zeta * w0;
    b.b = RealMatrix::Zero(2, 2);
    b.b(1, 0) = 1.0;
    b.c = RealMatrix::Zero(2, 2);
    b.c(0, 1) = -k;
    return b;
}

LtiBlock random_block(int n, std::mt19937_64& rng, double gain) {
    std::normal_distribution<double> g;
    LtiBlock b;
    b.a = RealMatrix::NullaryExpr(n, n, [&] { return g(rng); });
    b.a -= (spectral_abscissa(b.a) + 0.3) * RealMatrix::Identity(n, n);
    b.b = RealMatrix::NullaryExpr(n, 2, [&] { return g(rng); });
    b.c = RealMatrix::NullaryExpr(2, n, [&] { return gain * g(rng); });
    b.d = RealMatrix::NullaryExpr(2, 2, [&] { return gain * g(rng); });
    return b;
}

SweepSpec coarse(bool adaptive = false) {
    SweepSpec s;
    s.n_points = 60;
    s.adaptive = adaptive;
    return s;
}

}  // namespace

TEST_CASE("identity response against the single-line network", "[stability]") {
    const auto seg = network_shell_segment(scalar_network(3.5));
    const double expected = std::hypot(4.5, 11.25);
    const auto from_matrix = xz_margin(ComplexMatrix::Identity(2, 2), seg);
    const auto from_cloud = xz_margin(dw_shell_samples(ComplexMatrix::Identity(2, 2)), seg);
    CHECK(from_matrix.margin == Approx(expected).epsilon(1e-12));
    CHECK(from_cloud.margin == Approx(expected).epsilon(1e-12));
    CHECK(from_matrix.verdict == Verdict::separated);
    CHECK(from_matrix.nearest_curve_point.x == -3.5);
}

TEST_CASE("touching and intersecting Hermitian responses", "[stability]") {
    const auto seg = network_shell_segment(scalar_network(3.5));
    ComplexMatrix touch = ComplexMatrix::Zero(2, 2);
    touch(0, 0) = -3.5;
    touch(1, 1) = 2.0;
    const auto t = xz_margin(touch, seg);
    CHECK(t.margin == 0.0);
    CHECK(t.verdict == Verdict::inconclusive);
    CHECK(xz_margin(dw_shell_samples(touch), seg).verdict == Verdict::inconclusive);

    ComplexMatrix deep = touch;
    deep(0, 0) = -5.0;
    const double depth = std::hypot(1.5, 25.0 - 12.25);
    const auto d = xz_margin(deep, seg);
    CHECK(d.margin == Approx(-depth).epsilon(1e-12));
    CHECK(d.verdict == Verdict::intersecting);
    CHECK(xz_margin(dw_shell_samples(deep), seg).margin == Approx(-depth).epsilon(1e-9));
}

TEST_CASE("matrix margin agrees with the sampled-shell margin", "[stability][property]") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> gs(0.5, 4.0);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 2 + trial % 3;
        ComplexMatrix y = testing::random_complex(n, rng);
        y.diagonal().array() -= 1.5;
        const auto seg = network_shell_segment(scalar_network(gs(rng)));
        const auto exact = xz_margin(y, seg);
        const auto sampled = xz_margin(dw_shell_samples(y), seg);
        INFO("trial " << trial);
        if (exact.margin > 0) {
            // The sampled hull is inside the projection, so it cannot be closer.
            CHECK(sampled.margin >= exact.lower_bound - 1e-9);
            CHECK(sampled.margin - exact.margin < 1e-3 * (1 + exact.margin));
            CHECK(exact.margin - exact.lower_bound <= 1e-9 * (1 + std::hypot(seg.u_max, seg.u_max * seg.u_max)));
            CHECK(distance(exact.nearest_shell_point, exact.nearest_curve_point) == Approx(exact.margin).margin(1e-9));
            CHECK(exact.nearest_curve_point.x <= seg.u_max);
        }
        // No shell sample may be closer to the arc than the certified bound.
        for (int k = 0; k < 200; ++k) {
            const ComplexVector x = testing::random_unit(n, rng);
            const Point2 p = xz_point(y, x);
            CHECK(nearest_on_parabola(std::vector<Point2>{p}, seg.u_max).distance >= exact.lower_bound - 1e-9);
        }
    }
}

TEST_CASE("open-circuit fleet is certified", "[stability]") {
    const ReducedNetwork rn = scalar_network(2.0);
    const ConverterFleet fleet{{static_block(RealMatrix::Zero(2, 2))}};
    const auto rep = decentralized_certify(fleet, rn, coarse());
    CHECK(rep.overall == OverallVerdict::certified_stable);
    CHECK(rep.min_margin() == Approx(std::hypot(2.0, 4.0)).epsilon(1e-12));
}

TEST_CASE("single converter: centralized equals decentralized", "[stability]") {
    const ReducedNetwork rn = scalar_network(3.5);
    const ConverterFleet fleet{{bundled_gfl_model({})}};
    const auto dec = decentralized_certify(fleet, rn, coarse(true));
    const auto cen = centralized_certify(fleet, rn, coarse(true));
    REQUIRE(dec.omegas == cen.omegas);
    for (std::size_t k = 0; k < dec.omegas.size(); ++k) CHECK(dec.results[k][0].margin == cen.results[k][0].margin);
    CHECK(dec.overall == cen.overall);
}

TEST_CASE("crossing frequencies are inserted into the sweep", "[stability]") {
    const double w0 = hz_to_rad(13.37);
    // Peak real value -k/(2 zeta w0) = -5 against gSCR 3.5.
    const double zeta = 0.2, k = 5.0 * 2 * zeta * w0;
    const ConverterFleet fleet{{resonant_block(k, zeta, w0)}};
    const auto rep = decentralized_certify(fleet, scalar_network(3.5), coarse());
    REQUIRE(rep.overall == OverallVerdict::not_certified);
    REQUIRE(!rep.intersections.empty());
    CHECK(rep.intersections.front().omega == Approx(w0).epsilon(1e-9));
    CHECK(rep.critical.front().margin == Approx(-std::hypot(1.5, 12.75)).epsilon(1e-6));

    // Same block against a stronger grid: the resonance stays clear of the arc.
    const auto strong = decentralized_certify(fleet, scalar_network(6.0), coarse());
    CHECK(strong.overall == OverallVerdict::certified_stable);
}

TEST_CASE("centralized margin is dominated by the decentralized ones", "[stability][property]") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 8; ++trial) {
        const int n = 2 + trial % 2;
        const auto rn = reduce_network(testing::random_network(n, trial % 2, rng));
        ConverterFleet f;
        for (int i = 0; i < n; ++i) f.blocks.push_back(random_block(1 + (trial + i) % 4, rng, 0.7));
        const auto dec = decentralized_certify(f, rn, coarse());
        const auto cen = centralized_certify(f, rn, coarse());
        REQUIRE(dec.omegas == cen.omegas);
        for (std::size_t k = 0; k < dec.omegas.size(); ++k) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& r : dec.results[k]) best = std::min(best, r.margin);
            CHECK(cen.results[k][0].margin <= best + 1e-8);
        }
    }
}

TEST_CASE("margins are non-decreasing in gSCR", "[stability][property]") {
    std::mt19937_64 rng(4);
    const ConverterFleet fleet{{random_block(3, rng, 1.0)}};
    const auto grid = sweep_grid(coarse());
    std::vector<double> prev(grid.size(), -std::numeric_limits<double>::infinity());
    for (double b : {0.5, 1.0, 1.5, 2.5, 4.0, 8.0}) {
        const auto seg = network_shell_segment(scalar_network(b));
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const double m = xz_margin(freq_response(fleet.blocks[0], grid[k]), seg).margin;
            CHECK(m >= prev[k] - 1e-8);
            prev[k] = m;
        }
    }
}

TEST_CASE("segment test covers every network scaling tau", "[stability][property]") {
    std::mt19937_64 rng(17);
    int checked = 0;
    for (int trial = 0; trial < 30; ++trial) {
        const auto rn = reduce_network(testing::random_network(2, 1, rng));
        const auto seg = network_shell_segment(rn);
        const ComplexMatrix y = testing::random_complex(2, rng, 0.6);
        const auto r = xz_margin(y, seg);
        if (r.verdict != Verdict::separated) continue;
        ++checked;
        const auto cloud = dw_shell_samples(y);
        Eigen::SelfAdjointEigenSolver<RealMatrix> es(rn.m);
        for (double tau : {1.0, 0.5, 0.1, 0.01})
            for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j) {
                const double mu = es.eigenvalues()(j) / tau;
                // Eigen-point of -(1/tau) M (x) I2: (-mu, mu^2).
                CHECK(distance_to_convex_polygon(cloud.xz_hull, {-mu, mu * mu}) > 0.0);
            }
    }
    CHECK(checked > 5);
}

TEST_CASE("reports are deterministic", "[stability]") {
    const ConverterFleet fleet{{bundled_gfl_model({})}};
    const auto a = decentralized_certify(fleet, scalar_network(3.0), coarse(true));
    const auto b = decentralized_certify(fleet, scalar_network(3.0), coarse(true));
    REQUIRE(a.omegas == b.omegas);
    for (std::size_t k = 0; k < a.omegas.size(); ++k) {
        CHECK(a.results[k][0].margin == b.results[k][0].margin);
        CHECK(a.results[k][0].nearest_shell_point.x == b.results[k][0].nearest_shell_point.x);
    }
    for (std::size_t k = 1; k < a.critical.size(); ++k) CHECK(a.critical[k - 1].margin <= a.critical[k].margin);
}

TEST_CASE("sweep and fleet validation", "[stability]") {
    SweepSpec s;
    s.f_min_hz = 10;
    s.f_max_hz = 5;
    CHECK_THROWS_AS(sweep_grid(s), Error);
    s = {};
    s.n_points = 1;
    CHECK_THROWS_AS(sweep_grid(s), Error);
    const auto g = sweep_grid({});
    CHECK(g.size() == 401);
    CHECK(g.front() == 0.0);
    CHECK(g[1] == hz_to_rad(0.1));
    CHECK(g.back() == hz_to_rad(1000.0));
    const ConverterFleet two{{bundled_gfl_model({}), bundled_gfl_model({})}};
    CHECK_THROWS_WITH(decentralized_certify(two, scalar_network(3.0)), Catch::Matchers::ContainsSubstring("converter"));
}
