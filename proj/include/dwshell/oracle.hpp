#pragma once

// Ground truth for the shell tests: closed-loop eigenvalues of the converter
// fleet under static network feedback, a generalized Nyquist winding count, and
// fixed-step simulation of the closed loop.
//
// Interconnection (absorbing convention): G v + i = w, i = Y_C(s) v, with
// G = M (x) I2 and w an external current injection at the converter buses.

#include "dwshell/converter.hpp"
#include "dwshell/network.hpp"

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

#include <fmt/format.h>

namespace dwshell {

struct FleetStateSpace {
    RealMatrix a, b, c, d;  // block-diagonal stacks
    std::vector<int> state_offsets;
};

inline FleetStateSpace stack_fleet(const ConverterFleet& fleet) {
    const int n = fleet.total_order(), m = 2 * fleet.size();
    FleetStateSpace s{RealMatrix::Zero(n, n), RealMatrix::Zero(n, m), RealMatrix::Zero(m, n), RealMatrix::Zero(m, m), {}};
    int off = 0;
    for (int i = 0; i < fleet.size(); ++i) {
        const auto& b = fleet.blocks[static_cast<std::size_t>(i)];
        const int k = b.order();
        s.state_offsets.push_back(off);
        s.a.block(off, off, k, k) = b.a;
        s.b.block(off, 2 * i, k, 2) = b.b;
        s.c.block(2 * i, off, 2, k) = b.c;
        s.d.block(2 * i, 2 * i, 2, 2) = b.d;
        off += k;
    }
    return s;
}

struct ClosedLoopModel {
    RealMatrix a_cl;
    RealMatrix b_w;  // external current injection -> state derivative
    RealMatrix c_v;  // state -> bus voltage deviation (w = 0)
    std::vector<std::string> converter_names;
    std::vector<int> state_offsets;
    double gscr = 0.0;
};

inline ClosedLoopModel closed_loop_model(const ConverterFleet& fleet, const ReducedNetwork& rn) {
    validate(fleet);
    if (fleet.size() != rn.size())
        fail_input(fmt::format("fleet has {} converters but the network has {} converter buses", fleet.size(), rn.size()));
    const FleetStateSpace s = stack_fleet(fleet);
    RealMatrix g = grid_admittance(rn).real();
    // A_cl = A - B (I + G^{-1} D)^{-1} G^{-1} C = A - B (G + D)^{-1} C
    Eigen::PartialPivLU<RealMatrix> lu(g + s.d);
    const double rc = lu.rcond();
    if (!(rc > 1e-12)) fail_numerical(fmt::format("closed loop: algebraic loop is singular, I + G^-1 D not invertible (rcond {})", rc));
    ClosedLoopModel cl;
    const RealMatrix gd_inv = lu.inverse();
    cl.a_cl = s.a - s.b * gd_inv * s.c;
    cl.b_w = s.b * gd_inv;
    cl.c_v = -gd_inv * s.c;
    cl.state_offsets = s.state_offsets;
    for (const auto& b : fleet.blocks) cl.converter_names.push_back(b.name);
    cl.gscr = rn.gscr;
    return cl;
}

struct ClosedLoopSpectrum {
    std::vector<Complex> eigenvalues;  // sorted by decreasing real part
    double spectral_abscissa = -std::numeric_limits<double>::infinity();
    int unstable_count = 0;  // eigenvalues with Re > 0
};

inline ClosedLoopSpectrum spectrum_of(const RealMatrix& a) {
    ClosedLoopSpectrum out;
    if (a.rows() == 0) return out;
    Eigen::EigenSolver<RealMatrix> es(a, false);
    if (es.info() != Eigen::Success) fail_numerical("closed loop: eigensolver did not converge");
    for (Eigen::Index k = 0; k < a.rows(); ++k) out.eigenvalues.push_back(es.eigenvalues()(k));
    std::stable_sort(out.eigenvalues.begin(), out.eigenvalues.end(), [](Complex l, Complex r) {
        return l.real() != r.real() ? l.real() > r.real() : l.imag() > r.imag();
    });
    out.spectral_abscissa = out.eigenvalues.front().real();
    for (Complex l : out.eigenvalues) out.unstable_count += l.real() > 0.0 ? 1 : 0;
    return out;
}

inline ClosedLoopSpectrum closed_loop_eigs(const ConverterFleet& fleet, const ReducedNetwork& rn) {
    return spectrum_of(closed_loop_model(fleet, rn).a_cl);
}

struct GncResult {
    int encirclements = 0;      // clockwise windings of the origin
    double winding = 0.0;       // unrounded, for diagnostics
    bool indented = false;      // contour detoured around s = 0
    double radius = 0.0;        // closing semicircle radius, rad/s
    std::vector<Complex> s;     // contour samples, upper half (omega >= 0) then the arc
    std::vector<Complex> locus; // det(I + G^{-1} Y_C(s)) at those samples
};

struct GncOptions {
    double min_radius = 1e6;
    double max_step_phase = pi / 4;
    double marginal = 1e-9;
    double indentation = 1e-6;
    int base_points = 2000;
};

/// Winding count of det(I + G^{-1} Y_C(s)) along the Nyquist contour (up the
/// imaginary axis, closed by a right-half-plane semicircle). Open-loop blocks
/// are stable, so the count equals the number of closed-loop right-half-plane
/// poles. Conjugate symmetry of the real model lets the lower half be mirrored.
inline GncResult gnc_locus(const ConverterFleet& fleet, const ReducedNetwork& rn, const GncOptions& opt = {}) {
    validate(fleet);
    if (fleet.size() != rn.size())
        fail_input(fmt::format("fleet has {} converters but the network has {} converter buses", fleet.size(), rn.size()));
    const RealMatrix m_inv = rn.m.inverse();
    const auto det_f = [&](Complex s) {
        ComplexMatrix f = ComplexMatrix::Identity(2 * fleet.size(), 2 * fleet.size());
        for (int i = 0; i < fleet.size(); ++i) {
            const ComplexMatrix y = transfer(fleet.blocks[static_cast<std::size_t>(i)], s);
            for (int r = 0; r < fleet.size(); ++r)
                f.block(2 * r, 2 * i, 2, 2) += m_inv(r, i) * y;  // (M^{-1} (x) I2) Y
        }
        return f.determinant();
    };

    double max_eig = 0.0;
    for (const auto& b : fleet.blocks)
        if (b.order() > 0) {
            Eigen::EigenSolver<RealMatrix> es(b.a, false);
            max_eig = std::max(max_eig, es.eigenvalues().cwiseAbs().maxCoeff());
        }
    GncResult out;
    out.radius = std::max(opt.min_radius, 100.0 * max_eig);
    const double r_big = out.radius;

    // Upper half of the contour as parameterised pieces s(t), t in [0, 1]: the
    // imaginary axis (linear up to 1e-3 rad/s, logarithmic beyond), optionally
    // preceded by a quarter-circle indentation around s = 0, then the upper
    // quarter of the closing arc.
    std::vector<std::function<Complex(double)>> pieces;
    double w_start = 0.0;
    if (std::abs(det_f(0.0)) < opt.marginal) {
        out.indented = true;
        const double eps = opt.indentation;
        pieces.emplace_back([eps](double t) { return std::polar(eps, 0.5 * pi * t); });
        w_start = eps;
    }
    constexpr double w_knee = 1e-3;
    if (w_start < w_knee) pieces.emplace_back([=](double t) { return Complex(0.0, w_start + (w_knee - w_start) * t); });
    const double lw0 = std::log(std::max(w_start, w_knee)), lw1 = std::log(r_big);
    pieces.emplace_back([=](double t) { return Complex(0.0, std::exp(lw0 + (lw1 - lw0) * t)); });
    const std::size_t axis_end = pieces.size();
    pieces.emplace_back([=](double t) { return std::polar(r_big, 0.5 * pi * (1.0 - t)); });

    double total_upper = 0.0, total_arc = 0.0;
    for (std::size_t p = 0; p < pieces.size(); ++p) {
        const auto& curve = pieces[p];
        const bool log_piece = p + 1 == axis_end;
        const int n0 = log_piece ? opt.base_points : 32;
        struct Node {
            double t;
            Complex s, f;
        };
        std::vector<Node> stack;
        std::vector<Node> done;
        const auto node = [&](double t) {
            const Complex s = curve(t);
            const Complex f = det_f(s);
            // Near an indented zero at s = 0 the locus is small by construction;
            // only exact zeros fail within |s| <= 1e-3.
            const double floor = out.indented && std::abs(s) <= w_knee ? 0.0 : opt.marginal;
            if (!(std::abs(f) > floor) || !std::isfinite(std::abs(f)))
                fail_numerical(fmt::format("gnc: locus passes within {} of the origin at s = {}{:+}j (marginal, refine)",
                                           opt.marginal, s.real(), s.imag()));
            return Node{t, s, f};
        };
        Node prev = node(0.0);
        done.push_back(prev);
        for (int k = 1; k <= n0; ++k) {
            stack.push_back(node(static_cast<double>(k) / n0));
            while (!stack.empty()) {
                const Node next = stack.back();
                const double dphi = std::arg(next.f / prev.f);
                const double dmag = std::abs(std::log(std::abs(next.f) / std::abs(prev.f)));
                if ((std::abs(dphi) > opt.max_step_phase || dmag > std::log(2.0)) && next.t - prev.t > 1e-13) {
                    stack.push_back(node(0.5 * (prev.t + next.t)));
                    continue;
                }
                if (std::abs(dphi) > opt.max_step_phase)
                    fail_numerical("gnc: argument jump could not be resolved (marginal, refine)");
                (p < axis_end ? total_upper : total_arc) += dphi;
                prev = next;
                done.push_back(next);
                stack.pop_back();
            }
        }
        for (const auto& nd : done) {
            out.s.push_back(nd.s);
            out.locus.push_back(nd.f);
        }
    }
    // Lower half mirrors the upper half; the arc above is the upper quarter,
    // the lower quarter mirrors it as well.
    const double total = 2.0 * total_upper + 2.0 * total_arc;
    out.winding = -total / two_pi;
    out.encirclements = static_cast<int>(std::lround(out.winding));
    if (std::abs(out.winding - out.encirclements) > 0.05)
        fail_numerical(fmt::format("gnc: non-integer winding {} (marginal, refine)", out.winding));
    return out;
}

struct Trajectory {
    std::vector<double> t;
    std::vector<RealVector> x;
    std::vector<RealVector> v;  // bus voltage deviations, when available
    double dt = 0.0;            // step actually used
    int halvings = 0;
};

/// Fixed-step RK4 for dx/dt = A x. dt is halved until ||A|| dt <= 0.1; each
/// halving is reported through `halvings`. A sample is recorded every
/// `record_every` requested steps, so output spacing does not depend on halving.
inline Trajectory simulate_linear(const RealMatrix& a, const RealVector& x0, double t_end, double dt,
                                  int record_every = 1) {
    if (!(dt > 0.0) || !std::isfinite(dt)) fail_input("simulate: dt must be positive");
    if (!(t_end > dt)) fail_input("simulate: t_end must exceed dt");
    if (a.rows() != a.cols() || a.rows() != x0.size()) fail_input("simulate: dimension mismatch");
    Trajectory tr;
    const double an = a.rows() == 0 ? 0.0 : a.operatorNorm();
    while (an * dt > 0.1) {
        dt *= 0.5;
        ++tr.halvings;
    }
    tr.dt = dt;
    const auto steps = static_cast<long>(std::ceil(t_end / dt - 1e-9));
    const long stride = static_cast<long>(std::max(1, record_every)) << tr.halvings;
    RealVector x = x0;
    tr.t.push_back(0.0);
    tr.x.push_back(x);
    for (long k = 1; k <= steps; ++k) {
        const RealVector k1 = a * x;
        const RealVector k2 = a * (x + 0.5 * dt * k1);
        const RealVector k3 = a * (x + 0.5 * dt * k2);
        const RealVector k4 = a * (x + dt * k3);
        x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (k % stride == 0) {
            tr.t.push_back(static_cast<double>(k) * dt);
            tr.x.push_back(x);
        }
    }
    return tr;
}

/// Response to a step of external current injection w at the converter buses,
/// written as the decay of the deviation from the post-step equilibrium:
/// x(0) = A_cl^{-1} B_w w, then dx/dt = A_cl x.
inline Trajectory simulate_step(const ClosedLoopModel& cl, const RealVector& disturbance, double t_end, double dt,
                                int record_every = 1) {
    if (disturbance.size() != cl.b_w.cols())
        fail_input(fmt::format("simulate: disturbance needs {} entries", cl.b_w.cols()));
    Eigen::PartialPivLU<RealMatrix> lu(cl.a_cl);
    if (!(lu.rcond() > 1e-14)) fail_numerical("simulate: closed-loop A is singular; no post-step equilibrium");
    const RealVector x0 = lu.solve(cl.b_w * disturbance);
    Trajectory tr = simulate_linear(cl.a_cl, x0, t_end, dt, record_every);
    for (const auto& x : tr.x) tr.v.push_back(cl.c_v * x);
    return tr;
}

/// RMS over the last quarter of the record divided by the RMS over the second
/// quarter: > 1 for a growing oscillation, insensitive to where a cycle ends.
inline double rms_growth(const std::vector<RealVector>& samples) {
    const std::size_t n = samples.size();
    if (n < 8) fail_input("rms_growth: need at least 8 samples");
    const auto rms = [&](std::size_t lo, std::size_t hi) {
        double acc = 0.0;
        for (std::size_t k = lo; k < hi; ++k) acc += samples[k].squaredNorm();
        return std::sqrt(acc / static_cast<double>(hi - lo));
    };
    const double early = rms(n / 4, n / 2);
    return early > 0.0 ? rms(3 * n / 4, n) / early : std::numeric_limits<double>::infinity();
}

/// Frequency (Hz) of the largest peak of the Hann-windowed spectrum of uniformly
/// sampled channels, searched over [f_lo, f_hi] and refined by golden section.
inline double dominant_frequency(const std::vector<RealVector>& samples, double dt, double f_lo, double f_hi) {
    if (samples.size() < 8) fail_input("dominant_frequency: need at least 8 samples");
    const auto n = samples.size();
    const auto ch = samples.front().size();
    f_hi = std::min(f_hi, 0.5 / dt);
    if (!(f_lo > 0.0 && f_hi > f_lo)) fail_input("dominant_frequency: empty band");
    std::vector<RealVector> centred(samples);
    RealVector mean = RealVector::Zero(ch);
    for (const auto& s : samples) mean += s;
    mean /= static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double w = 0.5 * (1.0 - std::cos(two_pi * static_cast<double>(k) / static_cast<double>(n - 1)));
        centred[k] = w * (samples[k] - mean);
    }
    const auto power = [&](double f) {
        const Complex step = std::polar(1.0, -two_pi * f * dt);
        Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(ch);
        Complex ph = 1.0;
        for (std::size_t k = 0; k < n; ++k) {
            acc += ph * centred[k].cast<Complex>();
            ph *= step;
            if ((k & 1023) == 1023) ph /= std::abs(ph);
        }
        return acc.squaredNorm();
    };
    const double t_span = dt * static_cast<double>(n - 1);
    const int grid = std::max(64, static_cast<int>(std::ceil(4.0 * (f_hi - f_lo) * t_span)));
    int best = 0;
    double best_p = -1.0;
    std::vector<double> fs(static_cast<std::size_t>(grid + 1));
    for (int k = 0; k <= grid; ++k) {
        fs[static_cast<std::size_t>(k)] = f_lo + (f_hi - f_lo) * k / grid;
        const double p = power(fs[static_cast<std::size_t>(k)]);
        if (p > best_p) best_p = p, best = k;
    }
    double lo = fs[static_cast<std::size_t>(std::max(0, best - 1))], hi = fs[static_cast<std::size_t>(std::min(grid, best + 1))];
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    double pc = power(c), pd = power(d);
    for (int it = 0; it < 60; ++it) {
        if (pc > pd) {
            hi = d, d = c, pd = pc;
            c = hi - gr * (hi - lo), pc = power(c);
        } else {
            lo = c, c = d, pc = pd;
            d = lo + gr * (hi - lo), pd = power(d);
        }
    }
    return 0.5 * (lo + hi);
}

/// Dominant bus-voltage frequency (Hz) of a simulated response. A decaying
/// record is cut to eight time constants of its slowest mode and the decay is
/// undone with exp(|abscissa| t), so the slowest mode stands out from its own
/// envelope.
inline double response_frequency(const Trajectory& tr, double abscissa, double f_lo = 0.5) {
    if (tr.v.size() < 8 || tr.t.size() != tr.v.size()) fail_input("response_frequency: need at least 8 voltage samples");
    const double step = tr.t[1] - tr.t[0];
    std::size_t n = tr.v.size();
    double rate = 0.0;
    if (abscissa < 0.0) {
        n = std::clamp<std::size_t>(static_cast<std::size_t>(8.0 / -abscissa / step), 8, n);
        rate = -abscissa;
    }
    std::vector<RealVector> head;
    head.reserve(n);
    for (std::size_t k = 0; k < n; ++k) head.push_back(tr.v[k] * std::exp(rate * (tr.t[k] - tr.t[0])));
    return dominant_frequency(head, step, f_lo, 0.4 / step);
}

struct DetIdentity {
    double residual = 0.0;
    double condition = 0.0;  // 1-norm condition estimate of B
};

/// |det(A + B) - det(B) det(I + B^{-1} A)| / (|det(A + B)| + 1e-12).
inline DetIdentity det_identity_check(const ComplexMatrix& a, const ComplexMatrix& b) {
    require_square_finite(a, "det_identity_check");
    require_square_finite(b, "det_identity_check");
    if (a.rows() != b.rows()) fail_input("det_identity_check: A and B differ in size");
    Eigen::PartialPivLU<ComplexMatrix> lu(b);
    const double rc = lu.rcond();
    if (!(rc > 1e-14)) fail_numerical(fmt::format("det_identity_check: B is numerically singular (rcond {})", rc));
    const Complex lhs = (a + b).determinant();
    const ComplexMatrix inner = ComplexMatrix::Identity(a.rows(), a.cols()) + lu.solve(a);
    const Complex rhs = lu.determinant() * inner.determinant();
    return {std::abs(lhs - rhs) / (std::abs(lhs) + 1e-12), 1.0 / rc};
}

}  // namespace dwshell
