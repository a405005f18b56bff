#pragma once

// Numerical ranges, Davis-Wielandt shells and their x-z projections, and
// sectoriality / matrix phases.
//
// The DW shell of A is {(Re x*Ax, Im x*Ax, |Ax|^2) : |x| = 1}. Its x-z
// projection is the joint numerical range of (H, A*A) with H = (A + A*)/2, so
// it is convex and its support function in direction (cos a, sin a) is the top
// eigenvalue of cos a * H + sin a * A*A. The samplers below combine a surface
// parameterization with those exact support points.

#include "dwshell/core.hpp"
#include "dwshell/geometry.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

namespace dwshell {

struct ShellPoint {
    double x = 0.0;  // Re x*Ax
    double y = 0.0;  // Im x*Ax
    double z = 0.0;  // |Ax|^2
    ComplexVector witness;
};

enum class SamplerKind {
    automatic,  // grid for dim 2, random otherwise
    grid,       // exact two-parameter cover, dim 2 only
    random,
};

struct SamplerSpec {
    SamplerKind kind = SamplerKind::automatic;
    int t_steps = 181;
    int phi_steps = 360;
    int random_count = 20000;
    int seed_angles = 720;  // rotated-Hermitian eigenvector seeds (random sampler)
    std::uint64_t seed = 0x5d1f'0c3a'9e37'79b9ULL;
    bool xz_support = true;  // add exact support points of the x-z projection
    double xz_support_tol = 1e-9;
    int xz_support_initial = 64;
    int xz_support_cap = 0;  // 0: 16384 directions for dim 2, 1024 otherwise

    /// Sampler with roughly n samples; the grid keeps phi_steps = 2 * t_steps.
    static SamplerSpec with_samples(int n) {
        SamplerSpec s;
        if (n < 8) fail_input("sampler: at least 8 samples required");
        s.random_count = n;
        s.t_steps = std::max(3, static_cast<int>(std::lround(std::sqrt(n / 2.0))));
        s.phi_steps = 2 * s.t_steps;
        return s;
    }
};

struct ShellCloud {
    int matrix_dim = 0;
    std::vector<ShellPoint> points;
    std::vector<Point2> xz_hull;  // (x, z), counterclockwise
    std::string sampler_id;
    std::size_t sample_count = 0;
};

/// Shell point of a unit vector x (the caller guarantees |x| = 1).
inline ShellPoint shell_point(const ComplexMatrix& a, const ComplexVector& x) {
    const ComplexVector ax = a * x;
    const Complex q = x.dot(ax);  // x* A x
    return {q.real(), q.imag(), ax.squaredNorm(), x};
}

inline Point2 xz_point(const ComplexMatrix& a, const ComplexVector& x) {
    const ComplexVector ax = a * x;
    return {x.dot(ax).real(), ax.squaredNorm()};
}

/// Rotates x so its first nonzero component is real and non-negative.
inline void fix_global_phase(ComplexVector& x) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double m = std::abs(x(i));
        if (m > 0.0) {
            x *= std::conj(x(i)) / m;
            x(i) = m;
            return;
        }
    }
}

inline ComplexMatrix hermitian_part(const ComplexMatrix& a) { return 0.5 * (a + a.adjoint()); }

/// Boundary of W(A): for each angle on a uniform grid, the point x*Ax of a top
/// eigenvector x of the Hermitian part of e^{j theta} A.
inline std::vector<Complex> numerical_range_boundary(const ComplexMatrix& a, int n_angles) {
    require_square_finite(a, "numerical_range_boundary");
    if (n_angles < 8) fail_input("numerical_range_boundary: n_angles must be >= 8");
    std::vector<Complex> out(static_cast<std::size_t>(n_angles));
    parallel_for(out.size(), [&](std::size_t k) {
        const double theta = two_pi * static_cast<double>(k) / n_angles;
        const ComplexMatrix h = hermitian_part(std::polar(1.0, theta) * a);
        HermitianEigenpair top;
        try {
            top = hermitian_top(h);
        } catch (const Error& e) {
            fail_numerical(fmt::format("numerical_range_boundary: {} at theta = {}", e.what(), theta));
        }
        out[k] = top.vector.dot(a * top.vector);
    });
    return out;
}

/// One exact support sample of the x-z projection.
struct XzSupportSample {
    double alpha = 0.0;  // direction (cos alpha, sin alpha) in the (x, z) plane
    double h = 0.0;      // support value
    Point2 p;            // support point
    ComplexVector witness;
};

inline XzSupportSample xz_support(const ComplexMatrix& a, const ComplexMatrix& h, const ComplexMatrix& ata,
                                  double alpha) {
    const ComplexMatrix t = std::cos(alpha) * h + std::sin(alpha) * ata;
    HermitianEigenpair top = hermitian_top(t);
    fix_global_phase(top.vector);
    return {alpha, top.value, xz_point(a, top.vector), std::move(top.vector)};
}

/// Intersection of the support lines of two samples: the outer vertex of the
/// region where the true boundary between s0.p and s1.p can lie.
inline Point2 support_corner(const XzSupportSample& s0, const XzSupportSample& s1) {
    const double c0 = std::cos(s0.alpha), n0 = std::sin(s0.alpha);
    const double c1 = std::cos(s1.alpha), n1 = std::sin(s1.alpha);
    const double det = c0 * n1 - n0 * c1;
    if (std::abs(det) < 1e-14) return s0.p;
    return {(s0.h * n1 - n0 * s1.h) / det, (c0 * s1.h - s0.h * c1) / det};
}

/// Adaptive support polygon of the x-z projection. Starting from `initial`
/// uniform directions, each angular interval is bisected while
/// priority(s0, s1, corner) > 0, up to `cap` directions in total; when the cap
/// binds, the intervals with the highest priority are split first. Samples are
/// returned in increasing alpha over [0, 2 pi).
template <class Priority>
std::vector<XzSupportSample> xz_support_polygon(const ComplexMatrix& a, int initial, int cap, Priority&& priority) {
    const ComplexMatrix h = hermitian_part(a);
    const ComplexMatrix ata = a.adjoint() * a;
    std::vector<XzSupportSample> s(static_cast<std::size_t>(initial));
    for (int k = 0; k < initial; ++k) s[static_cast<std::size_t>(k)] = xz_support(a, h, ata, two_pi * k / initial);
    while (static_cast<int>(s.size()) < cap) {
        std::vector<std::pair<double, double>> mids;  // (priority, alpha)
        for (std::size_t k = 0; k < s.size(); ++k) {
            XzSupportSample next = s[(k + 1) % s.size()];
            if (k + 1 == s.size()) next.alpha += two_pi;
            if (next.alpha - s[k].alpha < 1e-9) continue;
            const double w = priority(s[k], next, support_corner(s[k], next));
            if (w > 0.0) mids.emplace_back(w, 0.5 * (s[k].alpha + next.alpha));
        }
        if (mids.empty()) break;
        const std::size_t room = static_cast<std::size_t>(cap) - s.size();
        if (mids.size() > room) {
            std::stable_sort(mids.begin(), mids.end(), [](const auto& l, const auto& r) { return l.first > r.first; });
            mids.resize(room);
            std::sort(mids.begin(), mids.end(), [](const auto& l, const auto& r) { return l.second < r.second; });
        }
        std::vector<XzSupportSample> fresh(mids.size());
        parallel_for(mids.size(), [&](std::size_t i) {
            fresh[i] = xz_support(a, h, ata, std::fmod(mids[i].second, two_pi));
        });
        std::vector<XzSupportSample> merged;
        merged.reserve(s.size() + fresh.size());
        std::sort(fresh.begin(), fresh.end(), [](const auto& l, const auto& r) { return l.alpha < r.alpha; });
        std::merge(std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()),
                   std::make_move_iterator(fresh.begin()), std::make_move_iterator(fresh.end()),
                   std::back_inserter(merged), [](const auto& l, const auto& r) { return l.alpha < r.alpha; });
        s = std::move(merged);
    }
    return s;
}

/// Support polygon refined until the outer corner of every interval is within
/// rel_tol * (1 + |p|) of the chord.
inline std::vector<XzSupportSample> xz_support_polygon(const ComplexMatrix& a, double rel_tol, int initial, int cap) {
    return xz_support_polygon(a, initial, cap, [&](const auto& s0, const auto& s1, Point2 corner) {
        const double gap = distance_to_segment(corner, s0.p, s1.p);
        return gap > rel_tol * (1.0 + norm(s0.p)) ? gap : 0.0;
    });
}

/// Eigenvector witnesses of A; their shell points (Re l, Im l, |l|^2) lie on
/// the paraboloid.
inline std::vector<ComplexVector> eigenvector_witnesses(const ComplexMatrix& a) {
    std::vector<ComplexVector> out;
    if (a.rows() == 1) {
        out.push_back(ComplexVector::Ones(1));
        return out;
    }
    Eigen::ComplexEigenSolver<ComplexMatrix> es(a);
    if (es.info() != Eigen::Success) fail_numerical("eigenvector_witnesses: eigensolver did not converge");
    for (Eigen::Index k = 0; k < a.rows(); ++k) {
        ComplexVector v = es.eigenvectors().col(k);
        const double n = v.norm();
        if (!(n > 0.0) || !std::isfinite(n)) continue;
        v /= n;
        fix_global_phase(v);
        out.push_back(std::move(v));
    }
    return out;
}

inline std::vector<Point2> xz_projection_hull(const std::vector<ShellPoint>& pts) {
    std::vector<Point2> xz;
    xz.reserve(pts.size());
    for (const auto& p : pts) xz.push_back({p.x, p.z});
    return convex_hull(std::move(xz));
}

/// Sampled DW shell. dim 2 uses the exact parameterization
/// x = (cos t, e^{j phi} sin t); larger dimensions use uniformly distributed
/// random unit vectors plus rotated-Hermitian eigenvector seeds. Both add
/// exact x-z support points and eigenvector witnesses.
inline ShellCloud dw_shell_samples(const ComplexMatrix& a, const SamplerSpec& spec = {}) {
    require_square_finite(a, "dw_shell_samples");
    const int n = static_cast<int>(a.rows());
    SamplerKind kind = spec.kind;
    if (kind == SamplerKind::automatic) kind = n == 2 ? SamplerKind::grid : SamplerKind::random;

    ShellCloud cloud;
    cloud.matrix_dim = n;
    std::vector<ShellPoint>& pts = cloud.points;

    if (kind == SamplerKind::grid) {
        if (n != 2) fail_input("dw_shell_samples: grid sampler requires a 2x2 matrix");
        if (spec.t_steps < 2 || spec.phi_steps < 1) fail_input("dw_shell_samples: empty sampler");
        const int nt = spec.t_steps, np = spec.phi_steps;
        // t = 0 and t = pi/2 each give a single point modulo global phase.
        const int count = 2 + (nt - 2) * np;
        ComplexMatrix x(2, count);
        x.col(0) << 1.0, 0.0;
        x.col(1) << 0.0, 1.0;
        for (int i = 1; i + 1 < nt; ++i) {
            const double t = 0.5 * pi * i / (nt - 1);
            for (int j = 0; j < np; ++j) x.col(2 + (i - 1) * np + j) << std::cos(t), std::polar(std::sin(t), two_pi * j / np);
        }
        const ComplexMatrix ax = a * x;
        pts.resize(static_cast<std::size_t>(count));
        for (int k = 0; k < count; ++k) {
            const Complex q = x.col(k).dot(ax.col(k));
            pts[static_cast<std::size_t>(k)] = {q.real(), q.imag(), ax.col(k).squaredNorm(), x.col(k)};
        }
        cloud.sampler_id = fmt::format("grid(t={},phi={})", nt, np);
    } else {
        if (spec.random_count < 1 && spec.seed_angles < 1) fail_input("dw_shell_samples: empty sampler");
        std::mt19937_64 rng(spec.seed);
        std::normal_distribution<double> gauss;
        const int count = std::max(0, spec.random_count);
        ComplexMatrix x(n, count);
        for (int k = 0; k < count; ++k) {
            for (int i = 0; i < n; ++i) x(i, k) = Complex(gauss(rng), gauss(rng));
            x.col(k) /= x.col(k).norm();
        }
        const ComplexMatrix ax = a * x;
        pts.resize(static_cast<std::size_t>(count));
        for (int k = 0; k < count; ++k) {
            ComplexVector w = x.col(k);
            fix_global_phase(w);  // leaves the shell point unchanged
            const Complex q = x.col(k).dot(ax.col(k));
            pts[static_cast<std::size_t>(k)] = {q.real(), q.imag(), ax.col(k).squaredNorm(), std::move(w)};
        }
        std::vector<ShellPoint> seeds(static_cast<std::size_t>(std::max(0, spec.seed_angles)));
        parallel_for(seeds.size(), [&](std::size_t k) {
            const double theta = two_pi * static_cast<double>(k) / spec.seed_angles;
            HermitianEigenpair top = hermitian_top(hermitian_part(std::polar(1.0, theta) * a));
            fix_global_phase(top.vector);
            seeds[k] = shell_point(a, top.vector);
        });
        pts.insert(pts.end(), std::make_move_iterator(seeds.begin()), std::make_move_iterator(seeds.end()));
        cloud.sampler_id = fmt::format("random(n={},seed={:#x},herm={})", spec.random_count, spec.seed, spec.seed_angles);
    }

    if (spec.xz_support) {
        const int cap = spec.xz_support_cap > 0 ? spec.xz_support_cap : (n == 2 ? 16384 : 1024);
        for (auto& s : xz_support_polygon(a, spec.xz_support_tol, spec.xz_support_initial, cap))
            pts.push_back(shell_point(a, s.witness));
        cloud.sampler_id += "+xz";
    }
    for (auto& v : eigenvector_witnesses(a)) pts.push_back(shell_point(a, v));
    cloud.sampler_id += "+eig";

    cloud.sample_count = pts.size();
    cloud.xz_hull = xz_projection_hull(pts);
    return cloud;
}

inline std::vector<Complex> xy_projection(const ShellCloud& cloud) {
    if (cloud.points.empty()) fail_input("xy_projection: empty cloud");
    std::vector<Complex> out;
    out.reserve(cloud.points.size());
    for (const auto& p : cloud.points) out.emplace_back(p.x, p.y);
    return out;
}

/// Supporting-ray angles of W(A) seen from the origin. The angles are reported
/// on the branch (c - pi/2, c + pi/2) where c is the direction of the widest
/// separating half-plane, so phi_min <= phi_max always holds and a sector
/// straddling the negative real axis may carry angles beyond +-pi.
struct PhaseInterval {
    bool sectorial = false;
    bool zero_matrix = false;
    std::optional<double> phi_min;
    std::optional<double> phi_max;
};

inline PhaseInterval sectoriality_and_phases(const ComplexMatrix& a) {
    require_square_finite(a, "sectoriality_and_phases");
    PhaseInterval out;
    const double scale = a.norm();
    if (scale == 0.0) {
        out.zero_matrix = true;
        return out;
    }
    // d(theta) = min Re(e^{j theta} W(A)); 0 is outside W(A) iff max d > 0.
    const auto d = [&](double theta) { return hermitian_bottom(hermitian_part(std::polar(1.0, theta) * a)).value; };
    constexpr int grid = 720;
    int best_k = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < grid; ++k) {
        const double v = d(two_pi * k / grid);
        if (v > best) best = v, best_k = k;
    }
    // d is concave where positive, so a golden-section polish is safe there.
    double lo = two_pi * (best_k - 1) / grid, hi = two_pi * (best_k + 1) / grid;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double m1 = hi - g * (hi - lo), m2 = lo + g * (hi - lo);
    double f1 = d(m1), f2 = d(m2);
    for (int it = 0; it < 80; ++it) {
        if (f1 < f2) {
            lo = m1, m1 = m2, f1 = f2, m2 = lo + g * (hi - lo), f2 = d(m2);
        } else {
            hi = m2, m2 = m1, f2 = f1, m1 = hi - g * (hi - lo), f1 = d(m1);
        }
    }
    double theta_star = 0.5 * (lo + hi);
    best = std::max(best, d(theta_star));
    if (!(best > 1e-12 * scale)) return out;
    out.sectorial = true;

    double c = std::remainder(-theta_star, two_pi);
    // Rays at angle phi: W lies clockwise of it iff lambda_max(Im-part of e^{-j phi} A) <= 0.
    const auto im_part = [&](double phi) {
        return hermitian_part(Complex(0.0, -1.0) * std::polar(1.0, -phi) * a);
    };
    const auto bisect = [](double left, double right, auto&& left_side) {
        for (int it = 0; it < 200 && right - left > 1e-15 * (1.0 + std::abs(left)); ++it) {
            const double mid = 0.5 * (left + right);
            (left_side(mid) ? left : right) = mid;
        }
        return 0.5 * (left + right);
    };
    out.phi_max = bisect(c - 0.5 * pi, c + 0.5 * pi, [&](double phi) { return hermitian_top(im_part(phi)).value > 0.0; });
    out.phi_min =
        bisect(c - 0.5 * pi, c + 0.5 * pi, [&](double phi) { return hermitian_bottom(im_part(phi)).value >= 0.0; });
    return out;
}

}  // namespace dwshell
