#pragma once

// Random instance generators shared by the unit tests and the acceptance suite.

#include "dwshell/core.hpp"
#include "dwshell/network.hpp"

#include <random>

namespace dwshell::testing {

inline ComplexMatrix random_complex(int n, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> g;
    ComplexMatrix a(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) a(i, j) = scale * Complex(g(rng), g(rng));
    return a;
}

inline ComplexMatrix random_unitary(int n, std::mt19937_64& rng) {
    Eigen::HouseholderQR<ComplexMatrix> qr(random_complex(n, rng));
    return qr.householderQ();
}

inline ComplexVector random_unit(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    ComplexVector x(n);
    for (int i = 0; i < n; ++i) x(i) = Complex(g(rng), g(rng));
    return x / x.norm();
}

/// Random grounded network: a random spanning tree over all buses, a few extra
/// lines, and one to three ground ties. Susceptances in [0.5, 5], capacities
/// in [0.5, 2].
inline NetworkDescription random_network(int n_conv, int n_int, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> b(0.5, 5.0), cap(0.5, 2.0);
    NetworkDescription d;
    d.n_converter_buses = n_conv;
    d.n_interior_buses = n_int;
    const int n = n_conv + n_int;
    for (int v = 1; v < n; ++v) {
        std::uniform_int_distribution<int> pick(0, v - 1);
        d.lines.push_back({pick(rng), v, b(rng)});
    }
    std::uniform_int_distribution<int> any(0, n - 1), extra(0, n);
    for (int k = extra(rng); k > 0; --k) {
        const int i = any(rng), j = any(rng);
        if (i != j) d.lines.push_back({i, j, b(rng)});
    }
    std::uniform_int_distribution<int> ties(1, 3);
    for (int k = ties(rng); k > 0; --k) d.ground_ties.push_back({any(rng), b(rng)});
    for (int i = 0; i < n_conv; ++i) d.capacities.push_back(cap(rng));
    return d;
}

}  // namespace dwshell::testing
