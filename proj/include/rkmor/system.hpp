#pragma once

#include "rkmor/matrix_market.hpp"
#include "rkmor/types.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include <memory>
#include <utility>

namespace rkmor {

/// Selects which gramian a computation targets: the controllability gramian
/// works on (A, B), the observability gramian on (A^T, C^T).
enum class GramianKind { Controllability, Observability };

inline const char* to_string(GramianKind k) {
    return k == GramianKind::Controllability ? "controllability" : "observability";
}

/// Stable continuous-time SISO system dx = Ax + Bu, y = Cx.
///
/// A may be stored dense or sparse; B and C are always dense. The object is
/// immutable after construction. Stability is not checked on construction --
/// call assert_stable() (the CLI always does before reducing).
class LtiSystem {
public:
    LtiSystem(Matrix a, Vector b, RowVector c)
        : a_dense_(std::move(a)), b_(std::move(b)), c_(std::move(c)), sparse_(false) {
        validate(a_dense_.rows(), a_dense_.cols());
    }

    LtiSystem(SparseRealMatrix a, Vector b, RowVector c)
        : a_sparse_(std::move(a)), b_(std::move(b)), c_(std::move(c)), sparse_(true) {
        a_sparse_.makeCompressed();
        validate(a_sparse_.rows(), a_sparse_.cols());
    }

    Index n() const { return b_.size(); }
    bool is_sparse() const { return sparse_; }
    const Vector& b() const { return b_; }
    const RowVector& c() const { return c_; }

    /// Dense copy of A (materializes the sparse storage).
    Matrix dense_a() const { return sparse_ ? Matrix(a_sparse_) : a_dense_; }

    const SparseRealMatrix& sparse_a() const { return a_sparse_; }

    /// A*X or A^T*X without materializing a dense A.
    ComplexMatrix apply_a(const ComplexMatrix& x, bool transposed = false) const {
        if (sparse_) {
            if (transposed) return a_sparse_.transpose() * x;
            return a_sparse_ * x;
        }
        if (transposed) return a_dense_.transpose() * x;
        return a_dense_ * x;
    }

    Matrix apply_a(const Matrix& x, bool transposed = false) const {
        if (sparse_) {
            if (transposed) return a_sparse_.transpose() * x;
            return a_sparse_ * x;
        }
        if (transposed) return a_dense_.transpose() * x;
        return a_dense_ * x;
    }

    /// max Re(lambda) over the spectrum of A; O(n^3) dense eigensolve.
    Real spectral_abscissa() const {
        Eigen::EigenSolver<Matrix> es(dense_a(), /*computeEigenvectors=*/false);
        return es.eigenvalues().real().maxCoeff();
    }

    /// Throws UnstableSystem unless all eigenvalues of A have negative real part.
    void assert_stable() const {
        Real alpha = spectral_abscissa();
        if (alpha >= 0.0)
            throw UnstableSystem("system not stable: spectral abscissa = " + std::to_string(alpha));
    }

private:
    void validate(Index rows, Index cols) const {
        if (rows != cols) throw DimensionMismatch("A must be square");
        if (b_.size() != rows) throw DimensionMismatch("B must be n x 1 with n matching A");
        if (c_.size() != rows) throw DimensionMismatch("C must be 1 x n with n matching A");
        if (rows < 1) throw DimensionMismatch("system dimension must be positive");
    }

    Matrix a_dense_;
    SparseRealMatrix a_sparse_;
    Vector b_;
    RowVector c_;
    bool sparse_;
};

/// Projected system (W^H A V, W^H B, C V); complex in general.
struct ReducedSystem {
    ComplexMatrix a_hat;
    ComplexVector b_hat;
    ComplexRowVector c_hat;

    Index r() const { return b_hat.size(); }
};

namespace detail {

/// Factorization of (A - s0*I), dense or sparse, reused across solves.
class ShiftedAFactor {
public:
    ShiftedAFactor(const LtiSystem& sys, Complex s0) : s0_(s0) {
        if (sys.is_sparse()) {
            Eigen::SparseMatrix<Complex> m = sys.sparse_a().cast<Complex>();
            Eigen::SparseMatrix<Complex> id(sys.n(), sys.n());
            id.setIdentity();
            m -= s0 * id;
            sparse_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<Complex>>>();
            sparse_->compute(m);
            if (sparse_->info() != Eigen::Success) throw SingularShift("sparse factorization", s0);
        } else {
            ComplexMatrix m = sys.dense_a().cast<Complex>();
            m.diagonal().array() -= s0;
            dense_ = std::make_unique<Eigen::FullPivLU<ComplexMatrix>>(m);
            if (!dense_->isInvertible()) throw SingularShift("transfer function", s0);
        }
    }

    explicit ShiftedAFactor(const ReducedSystem& sys, Complex s0) : s0_(s0) {
        ComplexMatrix m = sys.a_hat;
        m.diagonal().array() -= s0;
        dense_ = std::make_unique<Eigen::FullPivLU<ComplexMatrix>>(m);
        if (!dense_->isInvertible()) throw SingularShift("reduced transfer function", s0);
    }

    ComplexVector solve(const ComplexVector& rhs) const {
        if (dense_) return dense_->solve(rhs);
        return sparse_->solve(rhs);
    }

private:
    Complex s0_;
    std::unique_ptr<Eigen::FullPivLU<ComplexMatrix>> dense_;
    std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<Complex>>> sparse_;
};

}  // namespace detail

/// G(s) = C (sI - A)^{-1} B via one linear solve.
inline Complex transfer_function(const LtiSystem& sys, Complex s) {
    // (sI - A)^{-1} B = -(A - sI)^{-1} B
    detail::ShiftedAFactor f(sys, s);
    ComplexVector x = f.solve(sys.b().cast<Complex>());
    return -(sys.c().cast<Complex>() * x)(0);
}

inline Complex transfer_function(const ReducedSystem& sys, Complex s) {
    detail::ShiftedAFactor f(sys, s);
    ComplexVector x = f.solve(sys.b_hat);
    return -(sys.c_hat * x)(0);
}

/// j-th moment m_j(s0) = -C (A - s0 I)^{-(j+1)} B of the transfer function,
/// equal to (-1)^j / j! * G^(j)(s0). One factorization, j+1 back-solves.
inline Complex moment(const LtiSystem& sys, Complex s0, int j) {
    if (j < 0) throw Error("moment order must be nonnegative");
    detail::ShiftedAFactor f(sys, s0);
    ComplexVector x = f.solve(sys.b().cast<Complex>());
    for (int i = 0; i < j; ++i) x = f.solve(x);
    return -(sys.c().cast<Complex>() * x)(0);
}

inline Complex moment(const ReducedSystem& sys, Complex s0, int j) {
    if (j < 0) throw Error("moment order must be nonnegative");
    detail::ShiftedAFactor f(sys, s0);
    ComplexVector x = f.solve(sys.b_hat);
    for (int i = 0; i < j; ++i) x = f.solve(x);
    return -(sys.c_hat * x)(0);
}

/// Markov parameter m_j(infinity) = C A^{j-1} B, j >= 1; matrix-vector
/// products only.
inline Complex markov_parameter(const LtiSystem& sys, int j) {
    if (j < 1) throw Error("Markov parameter index must be >= 1");
    ComplexMatrix x = sys.b().cast<Complex>();
    for (int i = 1; i < j; ++i) x = sys.apply_a(x);
    return (sys.c().cast<Complex>() * x)(0);
}

inline Complex markov_parameter(const ReducedSystem& sys, int j) {
    if (j < 1) throw Error("Markov parameter index must be >= 1");
    ComplexVector x = sys.b_hat;
    for (int i = 1; i < j; ++i) x = sys.a_hat * x;
    return (sys.c_hat * x)(0);
}

/// Dimension cap for the Kronecker-vectorized dense Lyapunov solve.
inline constexpr Index kLyapunovOracleCap = 200;

/// Exact gramian by solving A P + P A^T + B B^T = 0 (or the observability
/// analogue) as an n^2 x n^2 linear system. Ground-truth oracle, O(n^6).
inline Matrix solve_lyapunov_dense(const LtiSystem& sys, GramianKind kind) {
    const Index n = sys.n();
    if (n > kLyapunovOracleCap) throw OracleTooLarge(n, kLyapunovOracleCap);

    Matrix a = sys.dense_a();
    if (kind == GramianKind::Observability) a.transposeInPlace();
    Matrix rhs_mat;
    if (kind == GramianKind::Controllability)
        rhs_mat = sys.b() * sys.b().transpose();
    else
        rhs_mat = sys.c().transpose() * sys.c();

    // vec(A P + P A^T) = (I (x) A + A (x) I) vec(P)
    Matrix big = Matrix::Zero(n * n, n * n);
    for (Index j = 0; j < n; ++j) {
        big.block(j * n, j * n, n, n) += a;
        for (Index i = 0; i < n; ++i) big.block(j * n, i * n, n, n).diagonal().array() += a(j, i);
    }
    Vector rhs(n * n);
    for (Index j = 0; j < n; ++j) rhs.segment(j * n, n) = -rhs_mat.col(j);

    Vector p_vec = big.partialPivLu().solve(rhs);
    Matrix p(n, n);
    for (Index j = 0; j < n; ++j) p.col(j) = p_vec.segment(j * n, n);
    return 0.5 * (p + p.transpose());
}

/// Hankel singular values sqrt(eig(P*Q)), nonincreasing. Uses the dense
/// Lyapunov oracle, so subject to its dimension cap.
inline Vector hankel_singular_values(const LtiSystem& sys) {
    Matrix p = solve_lyapunov_dense(sys, GramianKind::Controllability);
    Matrix q = solve_lyapunov_dense(sys, GramianKind::Observability);
    Eigen::EigenSolver<Matrix> es(p * q, /*computeEigenvectors=*/false);
    Vector hsv = es.eigenvalues().real().cwiseMax(0.0).cwiseSqrt();
    std::sort(hsv.data(), hsv.data() + hsv.size(), std::greater<Real>());
    return hsv;
}

/// Loads a SISO system from three Matrix Market files. A becomes sparse when
/// given in coordinate format with density <= 0.25, dense otherwise. No
/// stability check here.
inline LtiSystem load_system(const std::string& path_a, const std::string& path_b,
                             const std::string& path_c) {
    mm::MarketData da = mm::read(path_a);
    mm::MarketData db = mm::read(path_b);
    mm::MarketData dc = mm::read(path_c);

    if (da.rows != da.cols) throw DimensionMismatch(path_a + ": A must be square");
    const Index n = da.rows;
    if (db.rows != n || db.cols != 1)
        throw DimensionMismatch(path_b + ": B must be " + std::to_string(n) + " x 1 (SISO)");
    if (dc.rows != 1 || dc.cols != n)
        throw DimensionMismatch(path_c + ": C must be 1 x " + std::to_string(n) + " (SISO)");

    Vector b = mm::to_dense_real(db, path_b).col(0);
    RowVector c = mm::to_dense_real(dc, path_c).row(0);

    if (da.coordinate && da.density() <= 0.25)
        return LtiSystem(mm::to_sparse_real(da, path_a), std::move(b), std::move(c));
    return LtiSystem(mm::to_dense_real(da, path_a), std::move(b), std::move(c));
}

}  // namespace rkmor
