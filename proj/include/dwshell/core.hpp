#pragma once

// Common vocabulary for the dwshell library: scalar/matrix aliases, the error
// type every module throws, and a small deterministic parallel_for.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <exception>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace dwshell {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

inline constexpr double hz_to_rad(double hz) noexcept { return two_pi * hz; }
inline constexpr double rad_to_hz(double omega) noexcept { return omega / two_pi; }

enum class ErrorKind {
    invalid_input,  // malformed or invariant-violating data supplied by a caller
    numerical,      // solver failure, singular system, marginal locus
    io,             // files that cannot be read or written
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail_input(const std::string& what) { throw Error(ErrorKind::invalid_input, what); }
[[noreturn]] inline void fail_numerical(const std::string& what) { throw Error(ErrorKind::numerical, what); }

template <class Derived>
[[nodiscard]] bool all_finite(const Eigen::MatrixBase<Derived>& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            if (!std::isfinite(std::abs(m(i, j)))) return false;
    return true;
}

/// Enforces the ComplexMatrix invariants: non-empty, square, finite entries.
inline void require_square_finite(const ComplexMatrix& a, std::string_view what) {
    if (a.rows() == 0 || a.rows() != a.cols())
        fail_input(std::string(what) + ": matrix must be square and non-empty (got " + std::to_string(a.rows()) +
                   "x" + std::to_string(a.cols()) + ")");
    if (!all_finite(a)) fail_input(std::string(what) + ": matrix has non-finite entries");
}

/// Worker count: DWSHELL_THREADS when set to a positive integer, otherwise the
/// hardware concurrency.
inline unsigned thread_count() {
    if (const char* env = std::getenv("DWSHELL_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

/// Runs fn(i) for i in [0, n). Each index is handled by exactly one worker, so
/// writes into per-index slots give schedule-independent output.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(thread_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

/// Top eigenpair of a Hermitian matrix. The 2x2 case is closed form because the
/// shell samplers call this tens of thousands of times per matrix.
struct HermitianEigenpair {
    double value;
    ComplexVector vector;
};

namespace detail {

inline HermitianEigenpair hermitian_extreme_2x2(const ComplexMatrix& h, bool largest) {
    const double a = h(0, 0).real();
    const double d = h(1, 1).real();
    const Complex b = 0.5 * (h(0, 1) + std::conj(h(1, 0)));
    const double half_gap = 0.5 * (a - d);
    const double radius = std::hypot(half_gap, std::abs(b));
    const double lambda = 0.5 * (a + d) + (largest ? radius : -radius);
    ComplexVector v(2);
    if (std::abs(b) <= 1e-300) {
        const bool first = largest ? (a >= d) : (a <= d);
        v << (first ? 1.0 : 0.0), (first ? 0.0 : 1.0);
        return {lambda, v};
    }
    // Two algebraically equivalent null vectors of (H - lambda I); keep the
    // better conditioned one.
    const ComplexVector v1 = (ComplexVector(2) << b, Complex(lambda - a)).finished();
    const ComplexVector v2 = (ComplexVector(2) << Complex(lambda - d), std::conj(b)).finished();
    v = v1.norm() >= v2.norm() ? v1 : v2;
    v /= v.norm();
    return {lambda, v};
}

}  // namespace detail

inline HermitianEigenpair hermitian_top(const ComplexMatrix& h) {
    if (h.rows() == 1) return {h(0, 0).real(), ComplexVector::Ones(1)};
    if (h.rows() == 2) return detail::hermitian_extreme_2x2(h, true);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
    if (es.info() != Eigen::Success) fail_numerical("Hermitian eigensolver did not converge");
    const Eigen::Index n = h.rows();
    return {es.eigenvalues()(n - 1), es.eigenvectors().col(n - 1)};
}

inline HermitianEigenpair hermitian_bottom(const ComplexMatrix& h) {
    if (h.rows() == 1) return {h(0, 0).real(), ComplexVector::Ones(1)};
    if (h.rows() == 2) return detail::hermitian_extreme_2x2(h, false);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
    if (es.info() != Eigen::Success) fail_numerical("Hermitian eigensolver did not converge");
    return {es.eigenvalues()(0), es.eigenvectors().col(0)};
}

/// Eigenvalues of a general complex matrix; 2x2 in closed form.
inline std::vector<Complex> eigenvalues(const ComplexMatrix& a) {
    if (a.rows() == 1) return {a(0, 0)};
    if (a.rows() == 2) {
        const Complex tr = a(0, 0) + a(1, 1);
        const Complex det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
        Complex disc = std::sqrt(0.25 * tr * tr - det);
        if (std::abs(0.5 * tr + disc) < std::abs(0.5 * tr - disc)) disc = -disc;
        const Complex big = 0.5 * tr + disc;
        if (std::abs(big) == 0.0) return {big, big};
        return {big, det / big};
    }
    Eigen::ComplexEigenSolver<ComplexMatrix> es(a);
    if (es.info() != Eigen::Success) fail_numerical("complex eigensolver did not converge");
    return {es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size()};
}

}  // namespace dwshell
