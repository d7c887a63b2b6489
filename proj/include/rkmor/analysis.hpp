#pragma once

#include "rkmor/balancer.hpp"
#include "rkmor/quadrature.hpp"
#include "rkmor/shifted_solver.hpp"
#include "rkmor/system.hpp"
#include "rkmor/tableau.hpp"
#include "rkmor/types.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace rkmor {

// --- subspace comparison helpers ---

/// Orthonormal basis of the numerical column span (SVD, relative cutoff).
inline ComplexMatrix orthonormal_basis(const ComplexMatrix& m, Real rel_tol = 1e-12) {
    if (m.cols() == 0) return ComplexMatrix(m.rows(), 0);
    Eigen::JacobiSVD<ComplexMatrix> svd(m, Eigen::ComputeThinU);
    const Vector& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) <= 0.0) return ComplexMatrix(m.rows(), 0);
    Index rank = 0;
    for (Index i = 0; i < sv.size(); ++i)
        if (sv(i) > rel_tol * sv(0)) ++rank;
    return svd.matrixU().leftCols(rank);
}

/// Largest angle between a vector of span(sub) and span(space); ~0 means
/// span(sub) is contained in span(space). Both arguments must be orthonormal.
inline Real containment_angle(const ComplexMatrix& sub, const ComplexMatrix& space) {
    if (sub.cols() == 0) return 0.0;
    ComplexMatrix residual = sub - space * (space.adjoint() * sub);
    Eigen::JacobiSVD<ComplexMatrix> svd(residual);
    Real s = std::min(1.0, svd.singularValues()(0));
    return std::asin(s);
}

/// Largest principal angle between two subspaces given by orthonormal bases.
inline Real max_principal_angle(const ComplexMatrix& q1, const ComplexMatrix& q2) {
    return std::max(containment_angle(q1, q2), containment_angle(q2, q1));
}

// --- Thm. 1 hypothesis checks ---

enum class HypothesisStatus { Verified, Failed, Unverified };

inline const char* to_string(HypothesisStatus s) {
    switch (s) {
        case HypothesisStatus::Verified: return "verified";
        case HypothesisStatus::Failed: return "failed";
        default: return "unverified";
    }
}

/// Dimension cap for the composite observability rank test.
inline constexpr Index kObservabilityCap = 200;

/// Observability of the pair (hat-Lambda^T, 1^T), required by the span lemma
/// and Thm. 1. Checked via the rank of the observability matrix for moderate
/// composite dimensions, reported unverified above the cap.
inline HypothesisStatus composite_observability(const CompositeTableau& composite) {
    const Index dim = composite.dimension();
    if (dim > kObservabilityCap) return HypothesisStatus::Unverified;
    ComplexMatrix obs(dim, dim);
    ComplexRowVector row = ComplexRowVector::Ones(dim);
    for (Index k = 0; k < dim; ++k) {
        obs.row(k) = row;
        row = row * composite.lambda_hat_t;
    }
    Eigen::JacobiSVD<ComplexMatrix> svd(obs);
    const Vector& sv = svd.singularValues();
    Index rank = 0;
    for (Index i = 0; i < sv.size(); ++i)
        if (sv(i) > 1e-10 * sv(0)) ++rank;
    return (rank == dim) ? HypothesisStatus::Verified : HypothesisStatus::Failed;
}

inline HypothesisStatus composite_observability(const ButcherTableau& t,
                                                const std::vector<Real>& steps) {
    return composite_observability(assemble_composite(t, steps));
}

// --- interpolation verification ---

struct InterpolationEntry {
    Complex point{};
    bool at_infinity = false;
    /// Finite points: matched derivative order i, i.e. moment m_i. Infinity:
    /// Markov parameter index j = derivative_order + 1.
    int derivative_order = 0;
    Complex original_value{};
    Complex reduced_value{};
    Real relative_error = 0.0;
};

struct InterpolationReport {
    std::vector<InterpolationEntry> entries;
    Real max_relative_error = 0.0;
    Real tolerance = 0.0;
    bool passed = false;
    bool within_thm1_scope = true;
};

namespace detail {

struct MergedPoint {
    Complex location{};
    bool at_infinity = false;
    int multiplicity = 0;
};

/// Merge expansion points across sides: a location demanded by both sides
/// gets the summed derivative count (two-sided moment matching).
inline std::vector<MergedPoint> merge_across_sides(const ExpansionPointSet& points) {
    std::vector<MergedPoint> merged;
    for (const auto& p : points.points) {
        bool absorbed = false;
        for (auto& q : merged) {
            if (q.at_infinity != p.at_infinity) continue;
            if (q.at_infinity || coincide(q.location, p.location)) {
                q.multiplicity += p.multiplicity;
                absorbed = true;
                break;
            }
        }
        if (!absorbed) merged.push_back(MergedPoint{p.location, p.at_infinity, p.multiplicity});
    }
    return merged;
}

inline Real interpolation_error(Complex original, Complex reduced) {
    return std::abs(original - reduced) / std::max(1.0, std::abs(original));
}

}  // namespace detail

/// Compares moments (Markov parameters at infinity) of the original and the
/// reduced system at every predicted expansion point, up to the derivative
/// order its merged multiplicity demands.
inline InterpolationReport verify_interpolation(const LtiSystem& sys, const BalancingResult& result,
                                                const ExpansionPointSet& points, Real tol) {
    InterpolationReport report;
    report.tolerance = tol;
    report.within_thm1_scope = result.within_thm1_scope;

    for (const auto& mp : detail::merge_across_sides(points)) {
        for (int i = 0; i < mp.multiplicity; ++i) {
            InterpolationEntry e;
            e.at_infinity = mp.at_infinity;
            e.derivative_order = i;
            if (mp.at_infinity) {
                e.original_value = markov_parameter(sys, i + 1);
                e.reduced_value = markov_parameter(result.reduced, i + 1);
            } else {
                e.point = mp.location;
                e.original_value = moment(sys, mp.location, i);
                e.reduced_value = moment(result.reduced, mp.location, i);
            }
            e.relative_error = detail::interpolation_error(e.original_value, e.reduced_value);
            report.max_relative_error = std::max(report.max_relative_error, e.relative_error);
            report.entries.push_back(e);
        }
    }
    report.passed = report.max_relative_error <= tol;
    return report;
}

// --- span verification (rational Krylov structure of the factor) ---

struct SpanCheck {
    Real containment_angle = 0.0;    // span(Z) against the reference basis
    bool dimension_match = false;
    Real max_principal_angle = 0.0;  // two-sided, meaningful when dimensions match
    Index z_rank = 0;
    Index reference_dim = 0;
    HypothesisStatus observability = HypothesisStatus::Unverified;
};

namespace detail {

inline Index matrix_rank(const ComplexMatrix& m, Real tol_abs) {
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<ComplexMatrix> svd(m);
    const Vector& sv = svd.singularValues();
    Index rank = 0;
    for (Index i = 0; i < sv.size(); ++i)
        if (sv(i) > tol_abs) ++rank;
    return rank;
}

struct EigCluster {
    Complex value{};
    Index algebraic = 0;  // algebraic multiplicity
    Index largest_block = 0;
};

/// Distinct eigenvalues of the composite hat-Lambda with the size of their
/// largest Jordan block, detected by rank tests on (hat-Lambda - mu I)^k.
/// The eigenvalue multiset itself comes from the exact block structure
/// (omega_j * eigenvalues of the base tableau), not from an eigensolve of the
/// composite, which keeps defective clusters identifiable.
inline std::vector<EigCluster> composite_eig_structure(const ButcherTableau& t,
                                                       const CompositeTableau& composite) {
    std::vector<EigCluster> clusters;
    ComplexVector mu = t.eigenvalues();
    const Real zero_tol = 1e-12 * std::max(1.0, t.lambda.norm());
    for (Real omega : composite.steps) {
        for (Index i = 0; i < mu.size(); ++i) {
            Complex value = omega * mu(i);
            if (std::abs(value) <= zero_tol) value = Complex(0.0, 0.0);
            bool found = false;
            for (auto& c : clusters) {
                if ((c.value == Complex(0.0, 0.0) && value == Complex(0.0, 0.0)) ||
                    coincide(c.value, value)) {
                    ++c.algebraic;
                    found = true;
                    break;
                }
            }
            if (!found) clusters.push_back(EigCluster{value, 1, 0});
        }
    }

    ComplexMatrix lambda_hat = composite.lambda_hat();
    const Index dim = composite.dimension();
    const Real rank_tol = 1e-10 * std::max(1.0, lambda_hat.norm());
    for (auto& c : clusters) {
        ComplexMatrix shifted = lambda_hat;
        shifted.diagonal().array() -= c.value;
        const Index target = dim - c.algebraic;  // rank once the whole eigenspace chain is exhausted
        ComplexMatrix power = shifted;
        Index k = 1;
        while (k <= c.algebraic && matrix_rank(power, rank_tol) > target) {
            power = power * shifted;
            ++k;
        }
        c.largest_block = std::min(k, c.algebraic);
    }
    return clusters;
}

}  // namespace detail

/// Reference rational Krylov basis predicted by the span lemma for a run of
/// the quadrature with tableau t and the given steps: for each distinct
/// composite eigenvalue mu-hat with largest Jordan block m, the vectors
/// (I - mu-hat A)^{-i} b0 for i=1..m (powers of A times b0 when mu-hat = 0).
inline ComplexMatrix reference_krylov_basis(const LtiSystem& sys, GramianKind kind,
                                            const ButcherTableau& t, const std::vector<Real>& steps) {
    CompositeTableau composite = assemble_composite(t, steps);
    auto clusters = detail::composite_eig_structure(t, composite);

    ShiftedSolver solver(sys, kind);
    ComplexVector b0 = (kind == GramianKind::Controllability)
                           ? ComplexVector(sys.b().cast<Complex>())
                           : ComplexVector(sys.c().transpose().cast<Complex>());
    std::vector<ComplexVector> columns;
    for (const auto& c : clusters) {
        ComplexVector v = b0;
        for (Index i = 0; i < c.largest_block; ++i) {
            if (c.value == Complex(0.0, 0.0)) {
                if (i > 0) v = sys.apply_a(ComplexMatrix(v), kind == GramianKind::Observability);
            } else {
                v = solver.solve(c.value, v);
            }
            columns.push_back(v);
        }
    }
    ComplexMatrix basis(sys.n(), static_cast<Index>(columns.size()));
    for (Index i = 0; i < basis.cols(); ++i) basis.col(i) = columns[static_cast<size_t>(i)];
    return basis;
}

/// Checks that span(Z) matches the rational Krylov space predicted by the
/// span lemma. Requires strictly positive beta_tilde (otherwise dropped
/// columns shrink the span below the lemma's statement).
inline SpanCheck verify_span(const LowRankFactor& z, const LtiSystem& sys, const ButcherTableau& t,
                             const std::vector<Real>& steps) {
    if ((t.beta_tilde.array() <= 0.0).any())
        throw Error("verify_span requires strictly positive beta_tilde");

    SpanCheck check;
    check.observability = composite_observability(t, steps);

    ComplexMatrix reference = reference_krylov_basis(sys, z.kind, t, steps);
    ComplexMatrix q_ref = orthonormal_basis(reference, 1e-10);
    ComplexMatrix q_z = orthonormal_basis(z.z, 1e-10);

    check.z_rank = q_z.cols();
    check.reference_dim = q_ref.cols();
    check.dimension_match = (check.z_rank == check.reference_dim);
    check.containment_angle = containment_angle(q_z, q_ref);
    check.max_principal_angle = max_principal_angle(q_z, q_ref);
    return check;
}

// --- ADI bridge ---

/// Classical low-rank ADI iteration for the Lyapunov equation, in residual
/// form: V_i = (A + alpha_i I)^{-1} W_{i-1}, W_i = W_{i-1} - 2 Re(alpha_i)
/// V_i, factor column sqrt(-2 Re(alpha_i)) V_i. Independent of the quadrature
/// path; serves as its cross-oracle.
inline LowRankFactor adi_iteration(const LtiSystem& sys, GramianKind kind,
                                   const std::vector<Complex>& alphas) {
    for (auto a : alphas)
        if (a.real() >= 0.0)
            throw InvalidAdiParameter("ADI parameters must have negative real part");

    ShiftedSolver solver(sys, kind);
    LowRankFactor factor;
    factor.kind = kind;
    factor.z = ComplexMatrix::Zero(sys.n(), static_cast<Index>(alphas.size()));

    ComplexVector w = (kind == GramianKind::Controllability)
                          ? ComplexVector(sys.b().cast<Complex>())
                          : ComplexVector(sys.c().transpose().cast<Complex>());
    Index col = 0;
    for (Complex alpha : alphas) {
        // (A + alpha I)^{-1} = (1/alpha) (I - (-1/alpha) A)^{-1}
        Complex mu = -1.0 / alpha;
        ComplexVector v;
        try {
            v = (1.0 / alpha) * solver.solve(mu, w).col(0);
        } catch (const SingularShiftedOperator&) {
            throw SingularShift("adi_iteration", -alpha);
        }
        factor.z.col(col++) = std::sqrt(-2.0 * alpha.real()) * v;
        w -= 2.0 * alpha.real() * v;
        factor.shifts.push_back(mu);
    }
    return factor;
}

// --- BPOD bridge ---

/// Balanced-POD snapshot quadrature expressed through the standard gramian
/// quadrature: the trajectory tableau (Lambda_h, beta_h) is embedded into an
/// (s+1)-stage tableau whose extra stage reproduces h_j, and only that stage
/// receives quadrature weight delta_j / omega_j.
inline LowRankFactor bpod_embedding(const LtiSystem& sys, GramianKind kind,
                                    const ButcherTableau& t_h, const std::vector<Real>& steps,
                                    const std::vector<Real>& deltas) {
    t_h.validate();
    if (deltas.size() != steps.size())
        throw DimensionMismatch("bpod_embedding: deltas length != steps length");
    for (Real d : deltas)
        if (d < 0.0) throw Error("bpod_embedding: quadrature weights must be nonnegative");

    const Index s = t_h.stages();
    ButcherTableau embedded;
    embedded.lambda = ComplexMatrix::Zero(s + 1, s + 1);
    embedded.lambda.topLeftCorner(s, s) = t_h.lambda;
    embedded.lambda.row(s).head(s) = t_h.beta.transpose();
    embedded.beta = ComplexVector::Zero(s + 1);
    embedded.beta.head(s) = t_h.beta;
    embedded.beta_tilde = Vector::Zero(s + 1);
    embedded.gamma = Vector::Zero(s + 1);
    embedded.name = "bpod(" + (t_h.name.empty() ? std::string("custom") : t_h.name) + ")";

    GramianQuadrature engine(sys, kind, embedded);
    QuadratureState state = engine.initial_state();
    for (size_t j = 0; j < steps.size(); ++j) {
        Vector bt = Vector::Zero(s + 1);
        bt(s) = deltas[j] / steps[j];
        state = engine.step(state, steps[j], &bt);
    }
    return std::move(state.z);
}

// --- report serialization ---

inline nlohmann::json to_json(const InterpolationReport& report) {
    nlohmann::json j;
    auto entries = nlohmann::json::array();
    for (const auto& e : report.entries) {
        nlohmann::json je;
        if (e.at_infinity)
            je["point"] = "inf";
        else
            je["point"] = to_json(e.point);
        je["derivative_order"] = e.derivative_order;
        je["original_value"] = to_json(e.original_value);
        je["reduced_value"] = to_json(e.reduced_value);
        je["relative_error"] = e.relative_error;
        entries.push_back(je);
    }
    j["entries"] = entries;
    j["max_relative_error"] = report.max_relative_error;
    j["tolerance"] = report.tolerance;
    j["passed"] = report.passed;
    j["within_thm1_scope"] = report.within_thm1_scope;
    return j;
}

inline void print_table(const InterpolationReport& report, std::ostream& os) {
    char buf[256];
    os << "point                          order  |G|            |G - G_hat|/max(1,|G|)\n";
    for (const auto& e : report.entries) {
        std::string point = "inf";
        if (!e.at_infinity) {
            std::snprintf(buf, sizeof(buf), "%.6g%+.6gi", e.point.real(), e.point.imag());
            point = buf;
        }
        std::snprintf(buf, sizeof(buf), "%-30s %-6d %-14.6g %.6e\n", point.c_str(),
                      e.derivative_order, std::abs(e.original_value), e.relative_error);
        os << buf;
    }
    std::snprintf(buf, sizeof(buf), "max relative error: %.6e (tolerance %.2e) -> %s\n",
                  report.max_relative_error, report.tolerance, report.passed ? "pass" : "FAIL");
    os << buf;
    if (!report.within_thm1_scope)
        os << "note: truncated projection, outside the interpolation guarantees\n";
}

}  // namespace rkmor
