#pragma once

// Inductive network model: grounded Laplacian, Kron reduction onto the
// converter buses, capacity normalisation, generalized short-circuit ratio and
// the network's parabola segment in the x-z plane.
//
// Bus numbering: converter buses are 0 .. n_converter_buses - 1, interior buses
// follow them. Susceptances are per unit on the common system base.

#include "dwshell/core.hpp"

#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace dwshell {

struct Line {
    int from = 0;
    int to = 0;
    double b = 0.0;
};

struct GroundTie {
    int bus = 0;
    double b = 0.0;
};

struct NetworkDescription {
    int n_converter_buses = 0;
    int n_interior_buses = 0;
    std::vector<Line> lines;
    std::vector<GroundTie> ground_ties;
    std::vector<double> capacities;  // S_i, one per converter bus

    [[nodiscard]] int n_buses() const { return n_converter_buses + n_interior_buses; }
};

inline void validate(const NetworkDescription& d) {
    if (d.n_converter_buses < 1) fail_input("network: at least one converter bus required");
    if (d.n_interior_buses < 0) fail_input("network: negative interior bus count");
    const int n = d.n_buses();
    const auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    for (std::size_t k = 0; k < d.lines.size(); ++k) {
        const auto& l = d.lines[k];
        if (l.from < 0 || l.from >= n || l.to < 0 || l.to >= n)
            fail_input(fmt::format("network: line {} references bus outside 0..{}", k, n - 1));
        if (l.from == l.to) fail_input(fmt::format("network: line {} is a self-loop at bus {}", k, l.from));
        if (!positive(l.b)) fail_input(fmt::format("network: line {} susceptance must be > 0 (got {})", k, l.b));
    }
    for (std::size_t k = 0; k < d.ground_ties.size(); ++k) {
        const auto& g = d.ground_ties[k];
        if (g.bus < 0 || g.bus >= n)
            fail_input(fmt::format("network: ground tie {} references bus outside 0..{}", k, n - 1));
        if (!positive(g.b)) fail_input(fmt::format("network: ground tie {} susceptance must be > 0 (got {})", k, g.b));
    }
    if (static_cast<int>(d.capacities.size()) != d.n_converter_buses)
        fail_input(fmt::format("network: {} capacities given for {} converter buses", d.capacities.size(),
                               d.n_converter_buses));
    for (std::size_t k = 0; k < d.capacities.size(); ++k)
        if (!positive(d.capacities[k]))
            fail_input(fmt::format("network: capacity of converter bus {} must be > 0 (got {})", k, d.capacities[k]));
}

namespace detail {

// Buses grouped by connectivity through lines; components without a ground tie
// make the Laplacian singular.
inline std::vector<std::vector<int>> ungrounded_components(const NetworkDescription& d) {
    std::vector<int> parent(static_cast<std::size_t>(d.n_buses()));
    std::iota(parent.begin(), parent.end(), 0);
    const auto find = [&](int v) {
        while (parent[static_cast<std::size_t>(v)] != v)
            v = parent[static_cast<std::size_t>(v)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
        return v;
    };
    for (const auto& l : d.lines) parent[static_cast<std::size_t>(find(l.from))] = find(l.to);
    std::vector<bool> grounded(parent.size(), false);
    for (const auto& g : d.ground_ties) grounded[static_cast<std::size_t>(find(g.bus))] = true;
    std::vector<std::vector<int>> by_root(parent.size());
    for (int v = 0; v < d.n_buses(); ++v) by_root[static_cast<std::size_t>(find(v))].push_back(v);
    std::vector<std::vector<int>> out;
    for (std::size_t r = 0; r < by_root.size(); ++r)
        if (!by_root[r].empty() && !grounded[r]) out.push_back(by_root[r]);
    return out;
}

}  // namespace detail

/// Grounded Laplacian over all buses. Throws "no infinite bus" when it is not
/// positive definite.
inline RealMatrix build_laplacian(const NetworkDescription& d) {
    validate(d);
    const int n = d.n_buses();
    RealMatrix l = RealMatrix::Zero(n, n);
    for (const auto& e : d.lines) {
        l(e.from, e.from) += e.b;
        l(e.to, e.to) += e.b;
        l(e.from, e.to) -= e.b;
        l(e.to, e.from) -= e.b;
    }
    for (const auto& g : d.ground_ties) l(g.bus, g.bus) += g.b;

    const auto floating = detail::ungrounded_components(d);
    if (!floating.empty())
        fail_input(fmt::format("network: no infinite bus reachable from buses {}", fmt::join(floating.front(), ", ")));
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(l, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) fail_numerical("network: Laplacian eigensolver did not converge");
    const double lmin = es.eigenvalues()(0), lmax = es.eigenvalues()(n - 1);
    if (!(lmin > 1e-10 * std::max(1.0, lmax)))
        fail_input(fmt::format("network: no infinite bus (grounded Laplacian is singular, min eigenvalue {})", lmin));
    return l;
}

/// Schur complement B_r = L_cc - L_ci L_ii^{-1} L_ic eliminating `interior`.
inline RealMatrix kron_reduce(const RealMatrix& l, const std::vector<int>& interior) {
    const int n = static_cast<int>(l.rows());
    if (l.cols() != n) fail_input("kron_reduce: Laplacian must be square");
    std::vector<bool> is_interior(static_cast<std::size_t>(n), false);
    for (int i : interior) {
        if (i < 0 || i >= n) fail_input(fmt::format("kron_reduce: interior bus {} out of range", i));
        if (is_interior[static_cast<std::size_t>(i)]) fail_input(fmt::format("kron_reduce: interior bus {} repeated", i));
        is_interior[static_cast<std::size_t>(i)] = true;
    }
    std::vector<int> kept;
    for (int i = 0; i < n; ++i)
        if (!is_interior[static_cast<std::size_t>(i)]) kept.push_back(i);
    if (kept.empty()) fail_input("kron_reduce: every bus is interior");
    const auto ni = static_cast<Eigen::Index>(interior.size());
    const RealMatrix lcc = l(kept, kept);
    if (ni == 0) return lcc;
    const RealMatrix lci = l(kept, interior);
    const RealMatrix lii = l(interior, interior);

    Eigen::SelfAdjointEigenSolver<RealMatrix> es(lii);
    if (es.info() != Eigen::Success) fail_numerical("kron_reduce: interior-block eigensolver did not converge");
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    if (std::abs(es.eigenvalues()(0)) <= 1e-10 * scale) {
        const RealVector v = es.eigenvectors().col(0);
        std::vector<int> offending;
        for (Eigen::Index k = 0; k < ni; ++k)
            if (std::abs(v(k)) > 1e-6) offending.push_back(interior[static_cast<std::size_t>(k)]);
        fail_numerical(fmt::format("kron_reduce: singular interior block at buses {}", fmt::join(offending, ", ")));
    }
    RealMatrix br = lcc - lci * es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
                              es.eigenvectors().transpose() * lci.transpose();
    br = 0.5 * (br + br.transpose());
    return br;
}

struct ReducedNetwork {
    RealMatrix b_r;  // Kron-reduced grounded Laplacian
    RealVector s;    // capacity ratios (diagonal of S)
    RealMatrix m;    // S^{-1/2} B_r S^{-1/2}
    double gscr = 0.0;

    [[nodiscard]] int size() const { return static_cast<int>(m.rows()); }
};

inline ReducedNetwork reduce_network(const RealMatrix& b_r, const RealVector& s) {
    if (b_r.rows() != b_r.cols() || b_r.rows() != s.size() || s.size() == 0)
        fail_input("reduce_network: B_r and S dimensions disagree");
    ReducedNetwork rn;
    rn.b_r = b_r;
    rn.s = s;
    const RealVector inv_sqrt = s.cwiseSqrt().cwiseInverse();
    rn.m = inv_sqrt.asDiagonal() * b_r * inv_sqrt.asDiagonal();
    rn.m = 0.5 * (rn.m + rn.m.transpose());
    if (rn.m.rows() == 1) {
        rn.gscr = rn.m(0, 0);
    } else {
        Eigen::SelfAdjointEigenSolver<RealMatrix> es(rn.m, Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) fail_numerical("reduce_network: eigensolver did not converge");
        rn.gscr = es.eigenvalues()(0);
    }
    if (!(rn.gscr > 0.0)) fail_input(fmt::format("reduce_network: M is not positive definite (gSCR = {})", rn.gscr));
    return rn;
}

inline ReducedNetwork reduce_network(const NetworkDescription& d) {
    const RealMatrix l = build_laplacian(d);
    std::vector<int> interior(static_cast<std::size_t>(d.n_interior_buses));
    std::iota(interior.begin(), interior.end(), d.n_converter_buses);
    const RealVector s = Eigen::Map<const RealVector>(d.capacities.data(), static_cast<Eigen::Index>(d.capacities.size()));
    return reduce_network(kron_reduce(l, interior), s);
}

/// Network admittance seen by the converters, M (x) I_2, in dq order per bus.
inline ComplexMatrix grid_admittance(const ReducedNetwork& rn) {
    const Eigen::Index n = rn.m.rows();
    ComplexMatrix g = ComplexMatrix::Zero(2 * n, 2 * n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            g(2 * i, 2 * j) = rn.m(i, j);
            g(2 * i + 1, 2 * j + 1) = rn.m(i, j);
        }
    return g;
}

/// The network's x-z graph {(u, u^2) : u <= u_max = -gSCR}; u_min only bounds
/// serialised samples, the separation test treats the ray as unbounded.
struct ParabolaSegment {
    double u_max = 0.0;
    double u_min = 0.0;

    [[nodiscard]] double gscr() const { return -u_max; }
};

inline ParabolaSegment network_shell_segment(const ReducedNetwork& rn,
                                             double x_min_cap = std::numeric_limits<double>::quiet_NaN()) {
    const double u_max = -rn.gscr;
    if (std::isnan(x_min_cap)) x_min_cap = -10.0 * rn.gscr;
    if (!(x_min_cap < u_max))
        fail_input(fmt::format("network_shell_segment: x_min_cap {} must be below -gSCR = {}", x_min_cap, u_max));
    return {u_max, x_min_cap};
}

/// Evenly spaced samples of the segment for serialisation.
inline std::vector<double> segment_samples(const ParabolaSegment& seg, int n) {
    if (n < 2) fail_input("segment_samples: n must be >= 2");
    std::vector<double> u(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) u[static_cast<std::size_t>(k)] = seg.u_max + (seg.u_min - seg.u_max) * k / (n - 1);
    u.back() = seg.u_min;
    return u;
}

}  // namespace dwshell
