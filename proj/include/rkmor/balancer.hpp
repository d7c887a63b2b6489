#pragma once

#include "rkmor/quadrature.hpp"
#include "rkmor/system.hpp"
#include "rkmor/types.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <utility>
#include <vector>

namespace rkmor {

enum class TruncationKind { FullRank, Threshold, FixedOrder };

/// How to pick the rank of the projection from the singular values of
/// Z_o^H Z_c. Only FullRank stays within the interpolation guarantees; the
/// truncating modes are provided for experiments and labeled as such in the
/// result metadata.
struct Truncation {
    TruncationKind kind = TruncationKind::FullRank;
    Real threshold = 0.0;  // Threshold mode: drop sigma_i <= threshold * sigma_1
    Index order = 0;       // FixedOrder mode

    static Truncation full_rank() { return Truncation{}; }
    static Truncation by_threshold(Real tau) { return Truncation{TruncationKind::Threshold, tau, 0}; }
    static Truncation fixed_order(Index r) { return Truncation{TruncationKind::FixedOrder, 0.0, r}; }
};

/// Relative singular-value cutoff below which a factor product counts as
/// rank deficient.
inline constexpr Real kRankTolerance = 1e-12;

/// Projection basis pair plus the reduced system it generates. W^H V = I_r
/// holds for every successful construction.
struct BalancingResult {
    ReducedSystem reduced;
    ComplexMatrix v;  // n x r
    ComplexMatrix w;  // n x r
    Vector sigma;     // leading singular values of Z_o^H Z_c, nonincreasing
    Index r = 0;

    bool within_thm1_scope = true;  // false for truncating modes
    bool realified = false;
    std::vector<Complex> shifts_c;  // generating shifts carried from the factors
    std::vector<Complex> shifts_o;
};

/// Approximate balancing from two low-rank gramian factors: compact SVD of
/// Z_o^H Z_c, then V = Z_c T Sigma^{-1/2}, W = Z_o U Sigma^{-1/2} and the
/// projected triple (W^H A V, W^H B, C V).
inline BalancingResult approximate_balance(const LtiSystem& sys, const LowRankFactor& z_c,
                                           const LowRankFactor& z_o,
                                           Truncation truncation = Truncation::full_rank()) {
    if (z_c.k() == 0 || z_o.k() == 0) throw EmptyFactor("approximate_balance: empty low-rank factor");
    if (z_c.z.rows() != sys.n() || z_o.z.rows() != sys.n())
        throw DimensionMismatch("approximate_balance: factor row count != n");

    ComplexMatrix m = z_o.z.adjoint() * z_c.z;
    Eigen::JacobiSVD<ComplexMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) <= 0.0) throw RankDeficient("approximate_balance: Z_o^H Z_c is zero");

    Index numerical_rank = 0;
    for (Index i = 0; i < sv.size(); ++i)
        if (sv(i) > kRankTolerance * sv(0)) ++numerical_rank;

    Index r = 0;
    switch (truncation.kind) {
        case TruncationKind::FullRank: {
            const Index full = std::min(z_c.k(), z_o.k());
            if (numerical_rank < full)
                throw RankDeficient("approximate_balance: rank(Z_o^H Z_c) = " +
                                    std::to_string(numerical_rank) + " < " + std::to_string(full) +
                                    " required by full-rank mode");
            r = full;
            break;
        }
        case TruncationKind::Threshold: {
            for (Index i = 0; i < sv.size(); ++i)
                if (sv(i) > truncation.threshold * sv(0)) ++r;
            r = std::min(r, numerical_rank);
            if (r == 0) throw RankDeficient("approximate_balance: threshold removed every direction");
            break;
        }
        case TruncationKind::FixedOrder: {
            r = truncation.order;
            if (r < 1) throw RankDeficient("approximate_balance: fixed order must be >= 1");
            if (r > numerical_rank)
                throw RankDeficient("approximate_balance: requested order " + std::to_string(r) +
                                    " exceeds numerical rank " + std::to_string(numerical_rank));
            break;
        }
    }

    Vector inv_sqrt = sv.head(r).cwiseSqrt().cwiseInverse();
    ComplexMatrix v = z_c.z * svd.matrixV().leftCols(r) * inv_sqrt.asDiagonal();
    ComplexMatrix w = z_o.z * svd.matrixU().leftCols(r) * inv_sqrt.asDiagonal();

    BalancingResult result;
    result.v = std::move(v);
    result.w = std::move(w);
    result.sigma = sv.head(r);
    result.r = r;
    result.within_thm1_scope = (truncation.kind == TruncationKind::FullRank);
    result.shifts_c = z_c.shifts;
    result.shifts_o = z_o.shifts;
    result.reduced.a_hat = result.w.adjoint() * sys.apply_a(result.v);
    result.reduced.b_hat = result.w.adjoint() * sys.b().cast<Complex>();
    result.reduced.c_hat = sys.c().cast<Complex>() * result.v;
    return result;
}

namespace detail {

/// Symmetric positive semidefinite square root, tolerant of small negative
/// eigenvalues of a numerically semidefinite gramian.
inline Matrix psd_sqrt(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    if (es.info() != Eigen::Success) throw Error("eigendecomposition of gramian failed");
    Vector d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

/// Classical balanced truncation from the exact dense gramians; the ground
/// truth against which the quadrature-based path is compared. Subject to the
/// Lyapunov oracle dimension cap.
inline BalancingResult exact_balanced_truncation(const LtiSystem& sys, Index r) {
    const Index n = sys.n();
    if (r < 1 || r > n) throw DimensionMismatch("exact_balanced_truncation: need 1 <= r <= n");

    Matrix p = solve_lyapunov_dense(sys, GramianKind::Controllability);
    Matrix q = solve_lyapunov_dense(sys, GramianKind::Observability);
    Matrix s = detail::psd_sqrt(p);  // P = S S^T
    Matrix rr = detail::psd_sqrt(q); // Q = R R^T

    Matrix m = rr.transpose() * s;
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) <= 0.0 || sv(r - 1) <= kRankTolerance * sv(0))
        throw RankDeficient("exact_balanced_truncation: R^T S rank below requested order");

    Vector inv_sqrt = sv.head(r).cwiseSqrt().cwiseInverse();
    Matrix v = s * svd.matrixV().leftCols(r) * inv_sqrt.asDiagonal();
    Matrix w = rr * svd.matrixU().leftCols(r) * inv_sqrt.asDiagonal();

    BalancingResult result;
    result.v = v.cast<Complex>();
    result.w = w.cast<Complex>();
    result.sigma = sv.head(r);
    result.r = r;
    result.within_thm1_scope = (r == n);
    result.reduced.a_hat = (w.transpose() * sys.apply_a(v)).cast<Complex>();
    result.reduced.b_hat = (w.transpose() * sys.b()).cast<Complex>();
    result.reduced.c_hat = (sys.c() * v).cast<Complex>();
    return result;
}

namespace detail {

inline bool shifts_conjugate_paired(const std::vector<Complex>& shifts) {
    std::vector<Complex> pool(shifts.begin(), shifts.end());
    std::vector<bool> used(pool.size(), false);
    for (size_t i = 0; i < pool.size(); ++i) {
        if (used[i]) continue;
        if (std::abs(pool[i].imag()) <= 1e-12 * std::max(1.0, std::abs(pool[i]))) continue;
        bool found = false;
        for (size_t j = i + 1; j < pool.size(); ++j) {
            if (used[j]) continue;
            if (coincide(pool[j], std::conj(pool[i]))) {
                used[i] = used[j] = true;
                found = true;
                break;
            }
        }
        if (!found) return false;
    }
    return true;
}

/// Real orthonormal basis of the conjugation-closed complex column span of m.
/// The span being closed under conjugation makes [Re m, Im m] have real rank
/// equal to the complex rank of m.
inline Matrix real_span_basis(const ComplexMatrix& m, Index expected_rank) {
    Matrix stacked(m.rows(), 2 * m.cols());
    stacked << m.real(), m.imag();
    Eigen::JacobiSVD<Matrix> svd(stacked, Eigen::ComputeThinU);
    const Vector& sv = svd.singularValues();
    Index rank = 0;
    for (Index i = 0; i < sv.size(); ++i)
        if (sv(i) > kRankTolerance * sv(0)) ++rank;
    if (rank != expected_rank)
        throw UnpairedShifts("realify: real span dimension " + std::to_string(rank) +
                             " != projection rank " + std::to_string(expected_rank));
    return svd.matrixU().leftCols(expected_rank);
}

}  // namespace detail

/// Replaces V and W by real matrices with identical column spans and rebuilds
/// the (now real) reduced system. Requires the generating shifts of both
/// factors to occur in conjugate pairs.
inline BalancingResult realify(const LtiSystem& sys, const BalancingResult& result) {
    if (!detail::shifts_conjugate_paired(result.shifts_c))
        throw UnpairedShifts("realify: controllability-side shifts are not conjugate paired");
    if (!detail::shifts_conjugate_paired(result.shifts_o))
        throw UnpairedShifts("realify: observability-side shifts are not conjugate paired");

    Matrix vq = detail::real_span_basis(result.v, result.r);
    Matrix wq = detail::real_span_basis(result.w, result.r);

    // re-biorthogonalize the real bases the same way Alg. 2 couples the factors
    Matrix m = wq.transpose() * vq;
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    if (sv(sv.size() - 1) <= kRankTolerance * sv(0))
        throw RankDeficient("realify: real bases are nearly orthogonal");
    Vector inv_sqrt = sv.cwiseSqrt().cwiseInverse();
    Matrix v = vq * svd.matrixV() * inv_sqrt.asDiagonal();
    Matrix w = wq * svd.matrixU() * inv_sqrt.asDiagonal();

    BalancingResult out;
    out.v = v.cast<Complex>();
    out.w = w.cast<Complex>();
    out.sigma = result.sigma;
    out.r = result.r;
    out.within_thm1_scope = result.within_thm1_scope;
    out.realified = true;
    out.shifts_c = result.shifts_c;
    out.shifts_o = result.shifts_o;
    out.reduced.a_hat = (w.transpose() * sys.apply_a(v)).cast<Complex>();
    out.reduced.b_hat = (w.transpose() * sys.b()).cast<Complex>();
    out.reduced.c_hat = (sys.c() * v).cast<Complex>();
    return out;
}

}  // namespace rkmor
