#pragma once

#include "rkmor/shifted_solver.hpp"
#include "rkmor/system.hpp"
#include "rkmor/tableau.hpp"
#include "rkmor/types.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <utility>
#include <vector>

namespace rkmor {

/// Tall factor Z with Z Z^H approximating a gramian. Z gains one column block
/// per quadrature step; `shifts` records the multiset of generating shifts
/// omega_j * mu_i (tableau eigenvalues scaled by step sizes), which later
/// decides whether the projection basis can be realified.
struct LowRankFactor {
    ComplexMatrix z;
    GramianKind kind = GramianKind::Controllability;
    std::vector<Complex> shifts;

    Index k() const { return z.cols(); }

    /// Z Z^H; intended for tests and desk-scale diagnostics.
    ComplexMatrix product() const { return z * z.adjoint(); }
};

/// Iteration state of the quadrature: the trajectory vector h_j and the
/// factor accumulated so far.
struct QuadratureState {
    ComplexVector h;
    LowRankFactor z;
    int step_index = 0;
};

struct QuadratureOptions {
    /// Columns with beta_tilde_i = 0 contribute nothing to Z Z^H and are
    /// dropped by default; set to true for strict per-step column counts.
    bool keep_zero_weight_columns = false;
    /// Cap on n*s for the Kronecker-vectorized stage solve.
    Index kron_cap = 2000;
    /// Factorization cache capacity of the embedded shifted solver.
    int solver_capacity = 32;
};

/// Runs the low-rank gramian quadrature for one system/side/tableau binding.
/// The Schur decomposition of Lambda^T is computed once and reused across
/// steps; the per-stage shifted solves go through a cached ShiftedSolver.
class GramianQuadrature {
public:
    GramianQuadrature(const LtiSystem& sys, GramianKind kind, ButcherTableau tableau,
                      QuadratureOptions options = {})
        : sys_(&sys),
          kind_(kind),
          tableau_(std::move(tableau)),
          options_(options),
          solver_(sys, kind, options.solver_capacity) {
        tableau_.validate();
        // Lambda^T = U T U^H with T upper triangular; the paper's S is U^H
        Eigen::ComplexSchur<ComplexMatrix> schur(tableau_.lambda.transpose());
        if (schur.info() != Eigen::Success) throw Error("Schur decomposition of Lambda^T failed");
        schur_t_ = schur.matrixT();
        schur_u_ = schur.matrixU();
        if (tableau_.is_strictly_lower_triangular()) schur_t_.diagonal().setZero();
        alpha_ = ComplexRowVector::Ones(tableau_.stages()) * schur_u_;
    }

    const ButcherTableau& tableau() const { return tableau_; }
    GramianKind kind() const { return kind_; }
    ShiftedSolver& solver() { return solver_; }

    QuadratureState initial_state() const {
        QuadratureState st;
        st.h = (kind_ == GramianKind::Controllability)
                   ? sys_->b().cast<Complex>()
                   : ComplexVector(sys_->c().transpose().cast<Complex>());
        st.z.z = ComplexMatrix::Zero(sys_->n(), 0);
        st.z.kind = kind_;
        st.step_index = 0;
        return st;
    }

    /// Stage matrix H_j solving H = [h ... h] + omega A H Lambda^T, computed
    /// through the Schur form of Lambda^T: s triangularly coupled n-dim
    /// solves with shifts omega*mu_i, then reassembly H = H' U^H.
    ComplexMatrix stage_solve_schur(const ComplexVector& h, Real omega) {
        const Index s = tableau_.stages();
        const Index n = sys_->n();
        ComplexMatrix h_prime(n, s);
        ComplexMatrix a_h_prime(n, s);  // A * columns of H', filled as they appear
        for (Index i = 0; i < s; ++i) {
            ComplexVector rhs = alpha_(i) * h;
            for (Index l = 0; l < i; ++l) rhs += (omega * schur_t_(l, i)) * a_h_prime.col(l);
            Complex shift = omega * schur_t_(i, i);
            try {
                h_prime.col(i) = solver_.solve(shift, rhs);
            } catch (const SingularShiftedOperator& e) {
                throw SingularShiftedOperator(e.shift(), static_cast<int>(i));
            }
            a_h_prime.col(i) = sys_->apply_a(ComplexMatrix(h_prime.col(i)),
                                             kind_ == GramianKind::Observability);
        }
        return h_prime * schur_u_.adjoint();
    }

    /// Same stage matrix through the vectorized ns x ns system
    /// (I - omega (Lambda (x) A)) vec(H) = 1_s (x) h; the cross-check oracle
    /// for the Schur path.
    ComplexMatrix stage_solve_kron(const ComplexVector& h, Real omega) const {
        const Index s = tableau_.stages();
        const Index n = sys_->n();
        if (n * s > options_.kron_cap) throw OracleTooLarge(n * s, options_.kron_cap);

        ComplexMatrix a = sys_->dense_a().cast<Complex>();
        if (kind_ == GramianKind::Observability) a.transposeInPlace();

        ComplexMatrix big = ComplexMatrix::Identity(n * s, n * s);
        for (Index bi = 0; bi < s; ++bi)
            for (Index bl = 0; bl < s; ++bl)
                big.block(bi * n, bl * n, n, n) -= (omega * tableau_.lambda(bi, bl)) * a;
        ComplexVector rhs(n * s);
        for (Index bi = 0; bi < s; ++bi) rhs.segment(bi * n, n) = h;

        Eigen::FullPivLU<ComplexMatrix> lu(big);
        if (!lu.isInvertible()) throw SingularShiftedOperator(Complex(omega, 0.0));
        ComplexVector x = lu.solve(rhs);
        ComplexMatrix result(n, s);
        for (Index bi = 0; bi < s; ++bi) result.col(bi) = x.segment(bi * n, n);
        return result;
    }

    /// One quadrature step: extend Z by the weighted stage columns and
    /// advance h. A per-step weight override supports embeddings whose
    /// beta_tilde varies with j.
    QuadratureState step(const QuadratureState& state, Real omega,
                         const Vector* beta_tilde_override = nullptr) {
        if (!(omega > 0.0)) throw InvalidStepSize("quadrature step size must be positive");
        const Vector& bt = beta_tilde_override ? *beta_tilde_override : tableau_.beta_tilde;
        if (bt.size() != tableau_.stages())
            throw DimensionMismatch("beta_tilde override length != stage count");
        if ((bt.array() < 0.0).any()) throw Error("beta_tilde entries must be nonnegative");

        ComplexMatrix stage = stage_solve_schur(state.h, omega);

        Index kept = 0;
        for (Index i = 0; i < bt.size(); ++i)
            if (options_.keep_zero_weight_columns || bt(i) > 0.0) ++kept;

        QuadratureState next;
        next.z.kind = kind_;
        next.z.shifts = state.z.shifts;
        next.z.z = ComplexMatrix(sys_->n(), state.z.k() + kept);
        next.z.z.leftCols(state.z.k()) = state.z.z;
        Index col = state.z.k();
        for (Index i = 0; i < bt.size(); ++i) {
            if (!options_.keep_zero_weight_columns && bt(i) == 0.0) continue;
            next.z.z.col(col++) = std::sqrt(omega * bt(i)) * stage.col(i);
        }
        for (Index i = 0; i < tableau_.stages(); ++i)
            next.z.shifts.push_back(omega * schur_t_(i, i));

        next.h = state.h + omega * sys_->apply_a(ComplexMatrix(stage * tableau_.beta),
                                                 kind_ == GramianKind::Observability);
        next.step_index = state.step_index + 1;
        return next;
    }

    /// Full run over the step list, with the unique-solvability check up
    /// front. Throws EigConditionViolated naming the offending (j, p, q).
    LowRankFactor run(const std::vector<Real>& steps) {
        assert_eig_condition(steps);
        QuadratureState state = initial_state();
        for (Real omega : steps) state = step(state, omega);
        return std::move(state.z);
    }

    void assert_eig_condition(const std::vector<Real>& steps) const {
        if (sys_->n() > kEigConditionCap) return;  // documented caveat: skipped above the cap
        ComplexVector mu = tableau_.eigenvalues();
        Eigen::EigenSolver<Matrix> es(sys_->dense_a(), /*computeEigenvectors=*/false);
        ComplexVector lam = es.eigenvalues();
        for (size_t j = 0; j < steps.size(); ++j)
            for (Index p = 0; p < mu.size(); ++p)
                for (Index q = 0; q < lam.size(); ++q) {
                    Complex prod = steps[j] * mu(p) * lam(q);
                    if (std::abs(prod - 1.0) <= 1e-12 * std::max(1.0, std::abs(prod)))
                        throw EigConditionViolated(static_cast<int>(j), static_cast<int>(p),
                                                   static_cast<int>(q));
                }
    }

private:
    const LtiSystem* sys_;
    GramianKind kind_;
    ButcherTableau tableau_;
    QuadratureOptions options_;
    ShiftedSolver solver_;
    ComplexMatrix schur_t_;      // upper triangular factor of Lambda^T
    ComplexMatrix schur_u_;      // unitary factor, S = U^H
    ComplexRowVector alpha_;     // 1^T S^{-1} = 1^T U
};

/// Approximate Cholesky factor Z with Z Z^H ~ P (controllability) or Q
/// (observability, via A^T and C^T).
inline LowRankFactor run_quadrature(const LtiSystem& sys, GramianKind kind, const ButcherTableau& t,
                                    const std::vector<Real>& steps, QuadratureOptions options = {}) {
    GramianQuadrature engine(sys, kind, t, options);
    return engine.run(steps);
}

}  // namespace rkmor
