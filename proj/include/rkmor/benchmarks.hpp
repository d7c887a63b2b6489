#pragma once

#include "rkmor/system.hpp"
#include "rkmor/types.hpp"

#include <cmath>
#include <vector>

namespace rkmor {

/// Diagonal test system A = diag(-1, ..., -n), B = C^T = ones. Its gramians
/// are known in closed form: P_ij = Q_ij = 1 / (i + j).
inline LtiSystem make_diagonal_system(Index n) {
    Matrix a = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) a(i, i) = -static_cast<Real>(i + 1);
    return LtiSystem(a, Vector::Ones(n), RowVector::Ones(n));
}

/// 1-D diffusion on (0,1) with homogeneous Dirichlet boundary, second-order
/// finite differences on n interior nodes: A = h^{-2} tridiag(1,-2,1) with
/// h = 1/(n+1). Input and output are the L2-normalized constant function, so
/// G(0) approaches 1/12. Stored sparse.
inline LtiSystem make_diffusion_system(Index n) {
    const Real h = 1.0 / static_cast<Real>(n + 1);
    const Real scale = 1.0 / (h * h);
    std::vector<Eigen::Triplet<Real>> triplets;
    triplets.reserve(static_cast<size_t>(3 * n));
    for (Index i = 0; i < n; ++i) {
        triplets.emplace_back(static_cast<int>(i), static_cast<int>(i), -2.0 * scale);
        if (i > 0) triplets.emplace_back(static_cast<int>(i), static_cast<int>(i - 1), scale);
        if (i + 1 < n) triplets.emplace_back(static_cast<int>(i), static_cast<int>(i + 1), scale);
    }
    SparseRealMatrix a(n, n);
    a.setFromTriplets(triplets.begin(), triplets.end());
    const Real w = std::sqrt(h);
    return LtiSystem(std::move(a), Vector::Constant(n, w), RowVector::Constant(n, w));
}

enum class BenchmarkKind { Diagonal, Diffusion };

inline LtiSystem make_benchmark(BenchmarkKind kind, Index n) {
    return kind == BenchmarkKind::Diagonal ? make_diagonal_system(n) : make_diffusion_system(n);
}

}  // namespace rkmor
