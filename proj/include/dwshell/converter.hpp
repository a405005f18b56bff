#pragma once

// Converter admittances as real state-space blocks (voltage deviations in, current
// deviations out, dq frame, per unit on the converter's own base), their
// frequency responses, fleet aggregation, and one bundled grid-following model.
//
// Sign convention: a block's output is the current the network injects into the
// converter (absorbed current), so the interconnection closes as
// (G + Y_C) v = 0. Blocks written in the converter-injection convention are
// negated on load.

#include "dwshell/core.hpp"

#include <limits>
#include <string>
#include <vector>

#include <fmt/format.h>

namespace dwshell {

enum class Convention {
    absorbing,  // output = current into the converter (default)
    injecting,  // output = current injected by the converter into the network
};

struct LtiBlock {
    std::string name;
    RealMatrix a;  // n x n
    RealMatrix b;  // n x 2
    RealMatrix c;  // 2 x n
    RealMatrix d = RealMatrix::Zero(2, 2);

    [[nodiscard]] int order() const { return static_cast<int>(a.rows()); }
};

inline double spectral_abscissa(const RealMatrix& a) {
    if (a.rows() == 0) return -std::numeric_limits<double>::infinity();
    Eigen::EigenSolver<RealMatrix> es(a, false);
    if (es.info() != Eigen::Success) fail_numerical("spectral_abscissa: eigensolver did not converge");
    return es.eigenvalues().real().maxCoeff();
}

/// Dimension, finiteness and open-loop stability checks.
inline void validate(const LtiBlock& blk) {
    const auto n = blk.a.rows();
    const std::string who = blk.name.empty() ? std::string("block") : fmt::format("block '{}'", blk.name);
    if (blk.a.cols() != n) fail_input(who + ": A must be square");
    if (blk.b.rows() != n || blk.b.cols() != 2) fail_input(fmt::format("{}: B must be {}x2", who, n));
    if (blk.c.rows() != 2 || blk.c.cols() != n) fail_input(fmt::format("{}: C must be 2x{}", who, n));
    if (blk.d.rows() != 2 || blk.d.cols() != 2) fail_input(who + ": D must be 2x2");
    if (!all_finite(blk.a) || !all_finite(blk.b) || !all_finite(blk.c) || !all_finite(blk.d))
        fail_input(who + ": non-finite entries");
    const double abscissa = spectral_abscissa(blk.a);
    if (!(abscissa < 0.0))
        fail_input(fmt::format("{}: open-loop unstable block (spectral abscissa of A is {})", who, abscissa));
}

/// Flips a block between the two sign conventions.
inline LtiBlock negated(LtiBlock blk) {
    blk.c = -blk.c;
    blk.d = -blk.d;
    return blk;
}

/// C (sI - A)^{-1} B + D at a complex frequency s.
inline ComplexMatrix transfer(const LtiBlock& blk, Complex s) {
    const auto n = blk.a.rows();
    const ComplexMatrix dd = blk.d.cast<Complex>();
    if (n == 0) return dd;
    ComplexMatrix m = -blk.a.cast<Complex>();
    m.diagonal().array() += s;
    Eigen::PartialPivLU<ComplexMatrix> lu(m);
    const double rc = lu.rcond();
    if (!(rc > 1e-14)) fail_numerical(fmt::format("transfer: (sI - A) is numerically singular at s = {}{:+}j (rcond {})", s.real(), s.imag(), rc));
    return blk.c.cast<Complex>() * lu.solve(blk.b.cast<Complex>()) + dd;
}

/// Response at s = j omega (rad/s). Negative omega is accepted and returns the
/// conjugate response.
inline ComplexMatrix freq_response(const LtiBlock& blk, double omega) {
    if (!std::isfinite(omega)) fail_input("freq_response: omega must be finite");
    return transfer(blk, Complex(0.0, omega));
}

struct ConverterFleet {
    std::vector<LtiBlock> blocks;

    [[nodiscard]] int size() const { return static_cast<int>(blocks.size()); }
    [[nodiscard]] int total_order() const {
        int n = 0;
        for (const auto& b : blocks) n += b.order();
        return n;
    }
};

inline void validate(const ConverterFleet& fleet) {
    if (fleet.blocks.empty()) fail_input("fleet: at least one converter required");
    for (const auto& b : fleet.blocks) validate(b);
}

/// Block-diagonal fleet response at complex frequency s.
inline ComplexMatrix aggregate_transfer(const ConverterFleet& fleet, Complex s) {
    const auto n = static_cast<Eigen::Index>(fleet.blocks.size());
    ComplexMatrix y = ComplexMatrix::Zero(2 * n, 2 * n);
    for (Eigen::Index i = 0; i < n; ++i) y.block<2, 2>(2 * i, 2 * i) = transfer(fleet.blocks[static_cast<std::size_t>(i)], s);
    return y;
}

inline ComplexMatrix aggregate_fleet(const ConverterFleet& fleet, double omega) {
    if (!std::isfinite(omega)) fail_input("aggregate_fleet: omega must be finite");
    return aggregate_transfer(fleet, Complex(0.0, omega));
}

/// Parameters of the bundled grid-following converter (see docs/gfl_model.md).
/// Bandwidths in rad/s; operating point per unit on the converter base.
struct GflParameters {
    double pll_bandwidth = hz_to_rad(20.0);
    double pll_damping = 0.707;
    double current_loop_bandwidth = hz_to_rad(200.0);
    double voltage_filter_bandwidth = hz_to_rad(50.0);  // 0 disables the filter
    double p = 1.0;
    double q = 0.0;
    double v = 1.0;
    bool constant_power = true;
};

/// Linearised GFL admittance: second-order SRF-PLL, first-order current loop,
/// low-pass filtered voltage feeding a constant-power current reference.
/// States: [delta, xi, i_d, i_q] plus [vf_d, vf_q] when the filter is enabled.
inline LtiBlock bundled_gfl_model(const GflParameters& p, std::string name = "gfl") {
    const auto positive = [](double x) { return std::isfinite(x) && x > 0.0; };
    if (!positive(p.pll_bandwidth) || !positive(p.current_loop_bandwidth))
        fail_input("bundled_gfl_model: bandwidths must be positive");
    if (!std::isfinite(p.voltage_filter_bandwidth) || p.voltage_filter_bandwidth < 0.0)
        fail_input("bundled_gfl_model: voltage filter bandwidth must be >= 0");
    if (!positive(p.v)) fail_input("bundled_gfl_model: V must be positive");
    if (!std::isfinite(p.p) || !std::isfinite(p.q) || !std::isfinite(p.pll_damping))
        fail_input("bundled_gfl_model: non-finite parameter");

    const double v0 = p.v;
    const double i0d = p.p / v0, i0q = -p.q / v0;
    const double kp = 2.0 * p.pll_damping * p.pll_bandwidth / v0;
    const double ki = p.pll_bandwidth * p.pll_bandwidth / v0;
    const double wcc = p.current_loop_bandwidth, wf = p.voltage_filter_bandwidth;
    const bool filtered = wf > 0.0;
    const int n = filtered ? 6 : 4;

    LtiBlock blk;
    blk.name = std::move(name);
    blk.a = RealMatrix::Zero(n, n);
    blk.b = RealMatrix::Zero(n, 2);
    blk.c = RealMatrix::Zero(2, n);
    blk.d = RealMatrix::Zero(2, 2);

    // Voltage in the PLL frame: vc = Vx x + v with Vx(1, delta) = -V.
    RealMatrix vx = RealMatrix::Zero(2, n);
    vx(1, 0) = -v0;
    const RealMatrix vv = RealMatrix::Identity(2, 2);

    blk.a.row(0) += kp * vx.row(1);
    blk.b.row(0) += kp * vv.row(1);
    blk.a(0, 1) += 1.0;
    blk.a.row(1) += ki * vx.row(1);
    blk.b.row(1) += ki * vv.row(1);

    // Voltage feeding the reference: filtered states or vc directly.
    RealMatrix rx = vx, rv = vv;
    if (filtered) {
        blk.a.middleRows(4, 2) += wf * vx;
        blk.b.middleRows(4, 2) += wf * vv;
        blk.a(4, 4) -= wf;
        blk.a(5, 5) -= wf;
        rx.setZero();
        rx(0, 4) = 1.0;
        rx(1, 5) = 1.0;
        rv.setZero();
    }
    const double cp = p.constant_power ? 1.0 : 0.0;
    RealMatrix k(2, 2);
    k << i0d, i0q, i0q, -i0d;
    k *= -cp / v0;
    blk.a.middleRows(2, 2) += wcc * k * rx;
    blk.b.middleRows(2, 2) += wcc * k * rv;
    blk.a(2, 2) -= wcc;
    blk.a(3, 3) -= wcc;

    // Injected current in the grid frame: i + j I0 delta.
    RealMatrix c_inj = RealMatrix::Zero(2, n);
    c_inj(0, 2) = 1.0;
    c_inj(1, 3) = 1.0;
    c_inj(0, 0) = -i0q;
    c_inj(1, 0) = i0d;
    blk.c = -c_inj;

    const double abscissa = spectral_abscissa(blk.a);
    if (!(abscissa < 0.0))
        fail_input(fmt::format("bundled_gfl_model: parameters give an open-loop unstable block (spectral abscissa {}; "
                               "PLL damping must be positive)",
                               abscissa));
    return blk;
}

}  // namespace dwshell
