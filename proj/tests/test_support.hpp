#pragma once

#include "rkmor/system.hpp"
#include "rkmor/types.hpp"

#include <random>

namespace rkmor::testing {

/// Deterministic random stable system: dense A with entries in [-1, 1]
/// shifted left far enough that the field of values lies in the open left
/// half-plane, plus generic B and C.
inline LtiSystem random_stable_system(Index n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<Real> dist(-1.0, 1.0);
    Matrix m(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) m(i, j) = dist(rng);
    Matrix a = m;
    a.diagonal().array() -= (m.norm() + 0.5);  // shifts the field of values into C_-
    Vector b(n);
    RowVector c(n);
    for (Index i = 0; i < n; ++i) b(i) = dist(rng);
    for (Index i = 0; i < n; ++i) c(i) = dist(rng);
    return LtiSystem(a, b, c);
}

inline Matrix random_matrix(Index rows, Index cols, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<Real> dist(-1.0, 1.0);
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
    return m;
}

inline Real relative_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
    Real denom = std::max(a.norm(), 1e-300);
    return (a - b).norm() / denom;
}

}  // namespace rkmor::testing
