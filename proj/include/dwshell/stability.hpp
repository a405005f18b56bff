#pragma once

// DW-shell separation tests. The network's x-z graph is the parabola arc
// {(u, u^2) : u <= -gSCR}; a converter response is certified at a frequency when
// the x-z projection of its shell keeps a positive distance from that arc.
//
// Every x-z projection lies on or above z = x^2 and meets the parabola only at
// (l, l^2) for real eigenvalues l of the response, so contact with the arc can
// happen only where an eigenvalue crosses the real axis left of -gSCR. The
// sweep therefore adds those crossing frequencies to the grid explicitly.

#include "dwshell/converter.hpp"
#include "dwshell/geometry.hpp"
#include "dwshell/network.hpp"
#include "dwshell/shell.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

namespace dwshell {

enum class Verdict { separated, intersecting, inconclusive };
enum class OverallVerdict { certified_stable, not_certified, inconclusive };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::separated: return "separated";
        case Verdict::intersecting: return "intersecting";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "?";
}

inline const char* to_string(OverallVerdict v) {
    switch (v) {
        case OverallVerdict::certified_stable: return "certified_stable";
        case OverallVerdict::not_certified: return "not_certified";
        case OverallVerdict::inconclusive: return "inconclusive";
    }
    return "?";
}

inline constexpr int aggregate_index = -1;

struct MarginOptions {
    double tol_sep = 1e-6;    // |margin| <= tol_sep is inconclusive
    double tol_bound = 1e-9;  // target gap between the distance bounds, relative to 1 + |endpoint|
    double tol_touch = 1e-9;  // distance treated as contact, relative to 1 + |endpoint|
    int max_directions = 8192;
};

struct SeparationResult {
    double omega = 0.0;
    int converter = 0;  // aggregate_index for the centralized test
    double margin = 0.0;
    double lower_bound = 0.0;  // certified lower bound on the distance (the margin when touching)
    Point2 nearest_shell_point{};
    Point2 nearest_curve_point{};
    Verdict verdict = Verdict::inconclusive;
};

inline Verdict classify(double margin, double tol_sep) {
    if (margin > tol_sep) return Verdict::separated;
    if (margin < -tol_sep) return Verdict::intersecting;
    return Verdict::inconclusive;
}

namespace detail {

inline double touch_scale(double gscr) { return 1.0 + std::hypot(gscr, gscr * gscr); }

// Penetration depth of a touching configuration: how far along the arc beyond
// its endpoint the contact points reach.
inline double contact_depth(const std::vector<Point2>& contacts, double gscr) {
    const Point2 end{-gscr, gscr * gscr};
    double depth = 0.0;
    for (const auto& p : contacts)
        if (p.x <= -gscr) depth = std::max(depth, distance(p, end));
    return depth;
}

inline SeparationResult finish(ParabolaProximity near, double lower, std::vector<Point2> contacts, double gscr,
                               const MarginOptions& opt) {
    SeparationResult r;
    r.nearest_shell_point = near.polygon_point;
    r.nearest_curve_point = {near.u, near.u * near.u};
    if (near.distance <= opt.tol_touch * touch_scale(gscr)) {
        // The nearest arc point is only located to within ~sqrt(tol_touch) along a
        // tangential contact; exact contact points take precedence.
        if (contacts.empty()) contacts.push_back(r.nearest_curve_point);
        const double depth = contact_depth(contacts, gscr);
        r.margin = depth > 0.0 ? -depth : 0.0;
        r.lower_bound = r.margin;
    } else {
        r.margin = near.distance;
        r.lower_bound = std::min(lower, near.distance);
    }
    r.verdict = classify(r.margin, opt.tol_sep);
    return r;
}

}  // namespace detail

/// Margin from a sampled shell: signed distance between the cloud's x-z hull
/// and the segment's arc (the ray is not truncated).
inline SeparationResult xz_margin(const ShellCloud& cloud, const ParabolaSegment& seg, const MarginOptions& opt = {}) {
    if (cloud.xz_hull.empty()) fail_input("xz_margin: empty shell cloud");
    const double g = seg.gscr();
    const auto near = nearest_on_parabola(cloud.xz_hull, seg.u_max);
    std::vector<Point2> contacts;
    const double tol = opt.tol_touch * detail::touch_scale(g);
    for (const auto& v : cloud.xz_hull)
        if (std::abs(v.y - v.x * v.x) <= tol && v.x <= -g) contacts.push_back(v);
    return detail::finish(near, near.distance, std::move(contacts), g, opt);
}

/// Margin straight from the matrix. The x-z projection is bracketed between the
/// polygon of exact support points (inside) and the polygon of support-line
/// corners (outside); directions are refined only where the outer bound could
/// still undercut the inner distance, until the two agree to tol_bound.
inline SeparationResult xz_margin(const ComplexMatrix& y, const ParabolaSegment& seg, const MarginOptions& opt = {}) {
    require_square_finite(y, "xz_margin");
    const double g = seg.gscr();
    const double tol = opt.tol_bound * detail::touch_scale(g);
    const ComplexMatrix h = hermitian_part(y);
    const ComplexMatrix ata = y.adjoint() * y;

    constexpr int initial = 32;
    std::vector<XzSupportSample> s;
    s.reserve(256);
    for (int k = 0; k < initial; ++k) s.push_back(xz_support(y, h, ata, two_pi * k / initial));

    // Triangle bounds depend only on the two bracketing directions, so they are
    // cached across refinement rounds.
    std::map<std::pair<double, double>, double> edge_bound;
    const auto triangle_bound = [&](const XzSupportSample& a, const XzSupportSample& b) {
        const auto key = std::make_pair(a.alpha, b.alpha);
        if (const auto it = edge_bound.find(key); it != edge_bound.end()) return it->second;
        const Point2 c = support_corner(a, b);
        double lb = std::numeric_limits<double>::infinity();
        if (distance_to_segment(c, a.p, b.p) > 1e-14 * (1.0 + norm(c))) {
            const std::array<Point2, 3> tri{a.p, c, b.p};
            lb = nearest_on_parabola(convex_hull({tri.begin(), tri.end()}), seg.u_max).distance;
        }
        edge_bound.emplace(key, lb);
        return lb;
    };

    ParabolaProximity near;
    double lower = 0.0;
    for (;;) {
        std::vector<Point2> inner;
        inner.reserve(s.size());
        for (const auto& p : s) inner.push_back(p.p);
        near = nearest_on_parabola(convex_hull(std::move(inner)), seg.u_max);

        lower = near.distance;
        std::vector<std::pair<double, double>> split;  // (bound, alpha)
        for (std::size_t k = 0; k < s.size(); ++k) {
            XzSupportSample next = s[(k + 1) % s.size()];
            if (k + 1 == s.size()) next.alpha += two_pi;
            const double lb = triangle_bound(s[k], next);
            if (!std::isfinite(lb)) continue;
            lower = std::min(lower, lb);
            if (lb < near.distance - tol && next.alpha - s[k].alpha > 1e-12) split.emplace_back(lb, 0.5 * (s[k].alpha + next.alpha));
        }
        if (near.distance - lower <= tol || split.empty()) break;
        const std::size_t room = static_cast<std::size_t>(std::max(0, opt.max_directions - static_cast<int>(s.size())));
        if (room == 0) break;
        if (split.size() > room) {
            std::stable_sort(split.begin(), split.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
            split.resize(room);
        }
        for (const auto& [lb, alpha] : split) s.push_back(xz_support(y, h, ata, std::fmod(alpha, two_pi)));
        std::sort(s.begin(), s.end(), [](const auto& l, const auto& r) { return l.alpha < r.alpha; });
    }

    // Contacts with the parabola are eigen-points of real eigenvalues.
    std::vector<Point2> contacts;
    if (near.distance <= opt.tol_touch * detail::touch_scale(g)) {
        for (const Complex l : eigenvalues(y))
            if (std::abs(l.imag()) <= 1e-6 * (1.0 + std::abs(l))) contacts.push_back({l.real(), l.real() * l.real()});
    }
    return detail::finish(near, lower, std::move(contacts), g, opt);
}

struct SweepSpec {
    double f_min_hz = 0.1;
    double f_max_hz = 1000.0;
    int n_points = 400;
    bool adaptive = true;
    bool include_dc = true;
    int refine_rounds = 3;
    int refine_factor = 4;
};

inline void validate(const SweepSpec& s) {
    if (!(std::isfinite(s.f_min_hz) && s.f_min_hz > 0.0)) fail_input("sweep: f_min must be positive");
    if (!(std::isfinite(s.f_max_hz) && s.f_max_hz > s.f_min_hz)) fail_input("sweep: f_min must be below f_max");
    if (s.n_points < 2) fail_input("sweep: n_points must be >= 2");
    if (s.refine_rounds < 0 || s.refine_factor < 2) fail_input("sweep: invalid refinement settings");
}

/// Base grid in rad/s: optional DC plus n_points log-spaced frequencies.
inline std::vector<double> sweep_grid(const SweepSpec& s) {
    validate(s);
    std::vector<double> w;
    if (s.include_dc) w.push_back(0.0);
    const double l0 = std::log(s.f_min_hz), l1 = std::log(s.f_max_hz);
    for (int k = 0; k < s.n_points; ++k) w.push_back(hz_to_rad(std::exp(l0 + (l1 - l0) * k / (s.n_points - 1))));
    w[w.size() - 1] = hz_to_rad(s.f_max_hz);
    if (s.include_dc) w[1] = hz_to_rad(s.f_min_hz);
    return w;
}

struct CriticalFrequency {
    double omega = 0.0;
    int converter = 0;
    double margin = 0.0;
};

struct StabilityReport {
    std::string method;  // "decentralized" or "centralized"
    double gscr = 0.0;
    double tol_sep = 1e-6;
    std::vector<double> omegas;                         // ascending, rad/s
    std::vector<std::vector<SeparationResult>> results;  // results[k][i]: frequency k, converter i
    OverallVerdict overall = OverallVerdict::inconclusive;
    std::vector<CriticalFrequency> critical;  // ascending by margin
    std::vector<CriticalFrequency> intersections;

    [[nodiscard]] const SeparationResult& min_result() const {
        const SeparationResult* best = nullptr;
        for (const auto& row : results)
            for (const auto& r : row)
                if (!best || r.margin < best->margin) best = &r;
        if (!best) fail_input("report: empty");
        return *best;
    }
    [[nodiscard]] double min_margin() const { return min_result().margin; }
};

namespace detail {

// Frequencies in (w0, w1) where an eigenvalue of f(w) crosses the real axis
// with negative real part. Eigenvalue branches are matched between the ends
// by nearest assignment (2x2 blocks).
template <class Response>
void eigen_crossings(const Response& f, double w0, double w1, std::vector<double>& out) {
    const auto pair_up = [](std::vector<Complex> a, std::vector<Complex> b) {
        if (a.size() == 2 && b.size() == 2 &&
            std::abs(a[0] - b[1]) + std::abs(a[1] - b[0]) < std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]))
            std::swap(b[0], b[1]);
        return b;
    };
    const auto e0 = eigenvalues(f(w0));
    const auto e1 = pair_up(e0, eigenvalues(f(w1)));
    for (std::size_t k = 0; k < e0.size(); ++k) {
        const bool flips = (e0[k].imag() < 0.0 && e1[k].imag() > 0.0) || (e0[k].imag() > 0.0 && e1[k].imag() < 0.0);
        if (!flips) continue;
        if (!(e0[k].real() < 0.0 || e1[k].real() < 0.0)) continue;
        double lo = w0, hi = w1;
        Complex l_lo = e0[k];
        for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            const auto em = eigenvalues(f(mid));
            std::size_t best = 0;
            for (std::size_t j = 1; j < em.size(); ++j)
                if (std::abs(em[j] - l_lo) < std::abs(em[best] - l_lo)) best = j;
            if ((em[best].imag() < 0.0) == (l_lo.imag() < 0.0)) {
                lo = mid;
                l_lo = em[best];
            } else {
                hi = mid;
            }
        }
        const double wc = 0.5 * (lo + hi);
        if (wc > w0 && wc < w1) out.push_back(wc);
    }
}

inline void finalize(StabilityReport& rep) {
    bool all_sep = true, any_int = false;
    for (const auto& row : rep.results)
        for (const auto& r : row) {
            all_sep = all_sep && r.verdict == Verdict::separated;
            if (r.verdict == Verdict::intersecting) {
                any_int = true;
                rep.intersections.push_back({r.omega, r.converter, r.margin});
            }
        }
    rep.overall = all_sep ? OverallVerdict::certified_stable
                          : (any_int ? OverallVerdict::not_certified : OverallVerdict::inconclusive);

    // Local minima of each converter's margin along the sweep.
    const std::size_t nw = rep.results.size();
    const std::size_t nc = nw ? rep.results[0].size() : 0;
    for (std::size_t i = 0; i < nc; ++i)
        for (std::size_t k = 0; k < nw; ++k) {
            const double m = rep.results[k][i].margin;
            const bool left = k == 0 || m <= rep.results[k - 1][i].margin;
            const bool right = k + 1 == nw || m < rep.results[k + 1][i].margin;
            if (left && right) rep.critical.push_back({rep.omegas[k], rep.results[k][i].converter, m});
        }
    std::stable_sort(rep.critical.begin(), rep.critical.end(),
                     [](const auto& a, const auto& b) { return a.margin < b.margin; });
    if (rep.critical.size() > 16) rep.critical.resize(16);
}

// Shared sweep driver. `responses(w)` returns the matrices tested at w,
// `crossings(w0, w1, out)` appends crossing frequencies inside (w0, w1).
template <class Responses, class Crossings>
StabilityReport run_sweep(std::string method, int n_tests, const std::vector<int>& labels, const ReducedNetwork& rn,
                          const SweepSpec& sweep, const MarginOptions& opt, Responses&& responses,
                          Crossings&& crossings) {
    const ParabolaSegment seg = network_shell_segment(rn);
    std::map<double, std::vector<SeparationResult>> table;

    const auto evaluate = [&](std::vector<double> ws) {
        std::vector<double> fresh;
        for (double w : ws)
            if (!table.count(w)) fresh.push_back(w);
        std::sort(fresh.begin(), fresh.end());
        fresh.erase(std::unique(fresh.begin(), fresh.end()), fresh.end());
        std::vector<std::vector<SeparationResult>> rows(fresh.size());
        parallel_for(fresh.size(), [&](std::size_t k) {
            const std::vector<ComplexMatrix> ys = responses(fresh[k]);
            auto& row = rows[k];
            row.reserve(ys.size());
            for (std::size_t i = 0; i < ys.size(); ++i) {
                SeparationResult r = xz_margin(ys[i], seg, opt);
                r.omega = fresh[k];
                r.converter = labels[i];
                row.push_back(r);
            }
        });
        for (std::size_t k = 0; k < fresh.size(); ++k) table.emplace(fresh[k], std::move(rows[k]));
    };

    std::vector<double> grid = sweep_grid(sweep);
    {
        std::vector<double> extra;
        for (std::size_t k = 0; k + 1 < grid.size(); ++k) crossings(grid[k], grid[k + 1], extra);
        grid.insert(grid.end(), extra.begin(), extra.end());
    }
    evaluate(grid);

    if (sweep.adaptive) {
        for (int round = 0; round < sweep.refine_rounds; ++round) {
            std::vector<double> ws;
            for (const auto& [w, row] : table) ws.push_back(w);
            std::vector<double> extra;
            for (int i = 0; i < n_tests; ++i)
                for (std::size_t k = 0; k < ws.size(); ++k) {
                    const auto margin = [&](std::size_t j) { return table[ws[j]][static_cast<std::size_t>(i)].margin; };
                    const double m = margin(k);
                    const bool has_l = k > 0, has_r = k + 1 < ws.size();
                    const double ml = has_l ? margin(k - 1) : m, mr = has_r ? margin(k + 1) : m;
                    // Local minimum, strict on at least one side so flat stretches stay coarse.
                    if (!(m <= ml && m <= mr && (m < ml || m < mr))) continue;
                    const auto densify = [&](double a, double b) {
                        for (int q = 1; q < sweep.refine_factor; ++q) extra.push_back(a + (b - a) * q / sweep.refine_factor);
                    };
                    if (has_l) densify(ws[k - 1], ws[k]);
                    if (has_r) densify(ws[k], ws[k + 1]);
                }
            if (extra.empty()) break;
            evaluate(extra);
        }
    }

    StabilityReport rep;
    rep.method = std::move(method);
    rep.gscr = rn.gscr;
    rep.tol_sep = opt.tol_sep;
    for (auto& [w, row] : table) {
        rep.omegas.push_back(w);
        rep.results.push_back(std::move(row));
    }
    finalize(rep);
    return rep;
}

inline void require_matching(const ConverterFleet& fleet, const ReducedNetwork& rn) {
    validate(fleet);
    if (fleet.size() != rn.size())
        fail_input(fmt::format("fleet has {} converters but the network has {} converter buses", fleet.size(), rn.size()));
}

}  // namespace detail

/// Per-converter test: every block's shell against the network arc at every
/// sweep frequency. Sufficient only; "not_certified" is not a proof of
/// instability.
inline StabilityReport decentralized_certify(const ConverterFleet& fleet, const ReducedNetwork& rn,
                                             const SweepSpec& sweep = {}, const MarginOptions& opt = {}) {
    detail::require_matching(fleet, rn);
    const int n = fleet.size();
    std::vector<int> labels(static_cast<std::size_t>(n));
    std::iota(labels.begin(), labels.end(), 0);
    return detail::run_sweep(
        "decentralized", n, labels, rn, sweep, opt,
        [&](double w) {
            std::vector<ComplexMatrix> ys;
            for (const auto& b : fleet.blocks) ys.push_back(freq_response(b, w));
            return ys;
        },
        [&](double w0, double w1, std::vector<double>& out) {
            for (const auto& b : fleet.blocks)
                detail::eigen_crossings([&](double w) { return freq_response(b, w); }, w0, w1, out);
        });
}

/// Aggregate test on the full block-diagonal response.
inline StabilityReport centralized_certify(const ConverterFleet& fleet, const ReducedNetwork& rn,
                                           const SweepSpec& sweep = {}, const MarginOptions& opt = {}) {
    detail::require_matching(fleet, rn);
    return detail::run_sweep(
        "centralized", 1, {aggregate_index}, rn, sweep, opt,
        [&](double w) { return std::vector<ComplexMatrix>{aggregate_fleet(fleet, w)}; },
        [&](double w0, double w1, std::vector<double>& out) {
            // The aggregate spectrum is the union of the block spectra.
            for (const auto& b : fleet.blocks)
                detail::eigen_crossings([&](double w) { return freq_response(b, w); }, w0, w1, out);
        });
}

}  // namespace dwshell
