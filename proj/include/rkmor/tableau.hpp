#pragma once

#include "rkmor/system.hpp"
#include "rkmor/types.hpp"

#include <Eigen/Eigenvalues>

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace rkmor {

/// Runge-Kutta data (Lambda, beta, gamma) plus the weight vector beta_tilde
/// used to integrate the gramian ODE. beta_tilde must be real nonnegative so
/// the gramian approximant stays positive semidefinite; gamma is stored for
/// completeness but never enters the quadrature (the integrated right-hand
/// sides are autonomous).
struct ButcherTableau {
    ComplexMatrix lambda;  // s x s
    ComplexVector beta;    // s
    Vector beta_tilde;     // s, entries >= 0
    Vector gamma;          // s
    std::string name;      // optional label for diagnostics

    Index stages() const { return beta.size(); }

    void validate() const {
        const Index s = stages();
        if (s < 1) throw DimensionMismatch("tableau needs at least one stage");
        if (lambda.rows() != s || lambda.cols() != s)
            throw DimensionMismatch("tableau: lambda must be s x s");
        if (beta_tilde.size() != s || gamma.size() != s)
            throw DimensionMismatch("tableau: beta_tilde and gamma must have length s");
        if ((beta_tilde.array() < 0.0).any())
            throw Error("tableau: beta_tilde entries must be nonnegative");
    }

    /// True when Lambda is strictly lower triangular, i.e. the method is
    /// explicit and all eigenvalues are exactly zero.
    bool is_strictly_lower_triangular() const {
        for (Index i = 0; i < lambda.rows(); ++i)
            for (Index j = i; j < lambda.cols(); ++j)
                if (lambda(i, j) != Complex(0.0, 0.0)) return false;
        return true;
    }

    /// Eigenvalues of Lambda. Strictly lower-triangular tableaus return exact
    /// zeros instead of the eigensolver's defective-eigenvalue noise.
    ComplexVector eigenvalues() const {
        if (is_strictly_lower_triangular()) return ComplexVector::Zero(stages());
        Eigen::ComplexEigenSolver<ComplexMatrix> es(lambda, /*computeEigenvectors=*/false);
        return es.eigenvalues();
    }
};

enum class Method { ExplicitEuler, BackwardEuler, ImplicitMidpoint, GaussLegendre2, RadauIA2 };

/// Built-in tableaus. beta_tilde defaults to beta (real and nonnegative for
/// all built-in methods).
inline ButcherTableau builtin(Method m) {
    ButcherTableau t;
    switch (m) {
        case Method::ExplicitEuler: {
            t.lambda = ComplexMatrix::Zero(1, 1);
            t.beta = ComplexVector::Ones(1);
            t.beta_tilde = Vector::Ones(1);
            t.gamma = Vector::Zero(1);
            t.name = "explicit-euler";
            break;
        }
        case Method::BackwardEuler: {
            t.lambda = ComplexMatrix::Ones(1, 1);
            t.beta = ComplexVector::Ones(1);
            t.beta_tilde = Vector::Ones(1);
            t.gamma = Vector::Ones(1);
            t.name = "backward-euler";
            break;
        }
        case Method::ImplicitMidpoint: {
            t.lambda = ComplexMatrix::Constant(1, 1, Complex(0.5, 0.0));
            t.beta = ComplexVector::Ones(1);
            t.beta_tilde = Vector::Ones(1);
            t.gamma = Vector::Constant(1, 0.5);
            t.name = "implicit-midpoint";
            break;
        }
        case Method::GaussLegendre2: {
            const Real r3 = std::sqrt(3.0);
            t.lambda = ComplexMatrix(2, 2);
            t.lambda << Complex(0.25, 0.0), Complex(0.25 - r3 / 6.0, 0.0),
                Complex(0.25 + r3 / 6.0, 0.0), Complex(0.25, 0.0);
            t.beta = ComplexVector::Constant(2, Complex(0.5, 0.0));
            t.beta_tilde = Vector::Constant(2, 0.5);
            t.gamma = Vector(2);
            t.gamma << 0.5 - r3 / 6.0, 0.5 + r3 / 6.0;
            t.name = "gauss-legendre-2";
            break;
        }
        case Method::RadauIA2: {
            t.lambda = ComplexMatrix(2, 2);
            t.lambda << Complex(0.25, 0.0), Complex(-0.25, 0.0), Complex(0.25, 0.0),
                Complex(5.0 / 12.0, 0.0);
            t.beta = ComplexVector(2);
            t.beta << Complex(0.25, 0.0), Complex(0.75, 0.0);
            t.beta_tilde = Vector(2);
            t.beta_tilde << 0.25, 0.75;
            t.gamma = Vector(2);
            t.gamma << 0.0, 2.0 / 3.0;
            t.name = "radau-ia-2";
            break;
        }
    }
    return t;
}

inline ButcherTableau builtin(const std::string& name) {
    if (name == "explicit-euler") return builtin(Method::ExplicitEuler);
    if (name == "backward-euler") return builtin(Method::BackwardEuler);
    if (name == "implicit-midpoint") return builtin(Method::ImplicitMidpoint);
    if (name == "gauss-legendre-2" || name == "gl2") return builtin(Method::GaussLegendre2);
    if (name == "radau-ia-2" || name == "radau2") return builtin(Method::RadauIA2);
    throw UnknownTableau(name);
}

/// Lower-triangular DIRK tableau whose gramian approximation reproduces an
/// ADI iteration with parameters alpha_i = -1/mu_i. Diagonal mu_i, column l
/// filled with 2 Re(mu_l) below the diagonal, beta = beta_tilde = 2 Re(mu).
inline ButcherTableau dirk_from_adi_params(const std::vector<Complex>& mu) {
    const Index s = static_cast<Index>(mu.size());
    if (s < 1) throw InvalidAdiParameter("parameter list must not be empty");
    for (auto m : mu)
        if (m.real() <= 0.0)
            throw InvalidAdiParameter("DIRK parameters must have positive real part");

    ButcherTableau t;
    t.lambda = ComplexMatrix::Zero(s, s);
    t.beta = ComplexVector(s);
    t.beta_tilde = Vector(s);
    t.gamma = Vector::Zero(s);
    for (Index i = 0; i < s; ++i) {
        t.lambda(i, i) = mu[static_cast<size_t>(i)];
        const Real w = 2.0 * mu[static_cast<size_t>(i)].real();
        for (Index k = i + 1; k < s; ++k) t.lambda(k, i) = Complex(w, 0.0);
        t.beta(i) = Complex(w, 0.0);
        t.beta_tilde(i) = w;
    }
    t.name = "dirk-adi";
    return t;
}

/// Dimension cap above which check_eig_condition skips the dense eigensolve
/// of A and answers true (valid for Re(mu) >= 0 tableaus on stable systems).
inline constexpr Index kEigConditionCap = 500;

/// Unique solvability of the stage systems: mu_p != 1/(omega_j lambda_q) for
/// all tableau eigenvalues mu_p, system eigenvalues lambda_q and steps
/// omega_j. Above the dimension cap the check is skipped and reports true;
/// with sigma(Lambda) in the closed right half-plane and A stable the
/// condition holds automatically (Re(omega mu lambda) <= 0 < 1).
inline bool check_eig_condition(const ButcherTableau& t, const LtiSystem& sys,
                                const std::vector<Real>& steps) {
    t.validate();
    ComplexVector mu = t.eigenvalues();
    if (sys.n() > kEigConditionCap) return true;

    Eigen::EigenSolver<Matrix> es(sys.dense_a(), /*computeEigenvectors=*/false);
    ComplexVector lam = es.eigenvalues();
    for (Real omega : steps)
        for (Index p = 0; p < mu.size(); ++p)
            for (Index q = 0; q < lam.size(); ++q) {
                Complex prod = omega * mu(p) * lam(q);
                if (std::abs(prod - 1.0) <= 1e-12 * std::max(1.0, std::abs(prod))) return false;
            }
    return true;
}

/// Residual of diag(beta) conj(Lambda) + Lambda^T diag(beta) - beta beta^T.
/// Zero means the quadrature is equivalent to an ADI iteration. Only defined
/// for tableaus with beta == beta_tilde.
struct AdiCheck {
    Real residual = std::numeric_limits<Real>::infinity();
    bool applicable = false;
};

inline AdiCheck check_adi_condition(const ButcherTableau& t) {
    t.validate();
    AdiCheck result;
    for (Index i = 0; i < t.stages(); ++i) {
        if (std::abs(t.beta(i).imag()) > 0.0) return result;
        if (std::abs(t.beta(i).real() - t.beta_tilde(i)) > 1e-14 * std::max(1.0, t.beta_tilde(i)))
            return result;
    }
    ComplexMatrix d = t.beta.asDiagonal();
    ComplexMatrix m =
        d * t.lambda.conjugate() + t.lambda.transpose() * d - t.beta * t.beta.transpose();
    result.residual = m.norm();
    result.applicable = true;
    return result;
}

/// One-step equivalent of an N-step run: the Ns x Ns block upper triangular
/// matrix built from omega_j Lambda^T diagonal blocks and omega_j [beta ...
/// beta] coupling blocks, plus the stacked weight vector.
struct CompositeTableau {
    ComplexMatrix lambda_hat_t;  // the block matrix multiplying from the right, i.e. hat-Lambda^T
    Vector beta_tilde_hat;       // vec(omega_1 beta_tilde, ..., omega_N beta_tilde)
    std::vector<Real> steps;
    Index stage_count = 0;
    Index step_count = 0;

    Index dimension() const { return stage_count * step_count; }

    /// hat-Lambda itself (transpose of the stored block matrix).
    ComplexMatrix lambda_hat() const { return lambda_hat_t.transpose(); }
};

inline CompositeTableau assemble_composite(const ButcherTableau& t, const std::vector<Real>& steps) {
    t.validate();
    for (Real w : steps)
        if (!(w > 0.0)) throw InvalidStepSize("step sizes must be positive");

    const Index s = t.stages();
    const Index n_steps = static_cast<Index>(steps.size());
    CompositeTableau c;
    c.steps = steps;
    c.stage_count = s;
    c.step_count = n_steps;
    c.lambda_hat_t = ComplexMatrix::Zero(n_steps * s, n_steps * s);
    c.beta_tilde_hat = Vector::Zero(n_steps * s);

    ComplexMatrix beta_block(s, s);
    for (Index col = 0; col < s; ++col) beta_block.col(col) = t.beta;

    for (Index j = 0; j < n_steps; ++j) {
        const Real w = steps[static_cast<size_t>(j)];
        c.lambda_hat_t.block(j * s, j * s, s, s) = w * t.lambda.transpose();
        for (Index k = j + 1; k < n_steps; ++k)
            c.lambda_hat_t.block(j * s, k * s, s, s) = w * beta_block;
        c.beta_tilde_hat.segment(j * s, s) = w * t.beta_tilde;
    }
    return c;
}

enum class Side { Input, Output };

/// A single interpolation location in C u {infinity} with multiplicity.
/// Output-side points are stored already conjugated-and-inverted, i.e. as the
/// actual interpolation locations 1/conj(nu-hat).
struct ExpansionPoint {
    Complex location{};  // meaningful only when !at_infinity
    bool at_infinity = false;
    int multiplicity = 1;
    Side side = Side::Input;
};

struct ExpansionPointSet {
    std::vector<ExpansionPoint> points;

    int total_multiplicity(Side side) const {
        int sum = 0;
        for (const auto& p : points)
            if (p.side == side) sum += p.multiplicity;
        return sum;
    }
};

namespace detail {

inline void merge_point(std::vector<ExpansionPoint>& points, const ExpansionPoint& p) {
    for (auto& q : points) {
        if (q.side != p.side) continue;
        if (q.at_infinity != p.at_infinity) continue;
        if (q.at_infinity || coincide(q.location, p.location)) {
            q.multiplicity += p.multiplicity;
            return;
        }
    }
    points.push_back(p);
}

inline void predict_side(std::vector<ExpansionPoint>& out, const ButcherTableau& t,
                         const std::vector<Real>& steps, Side side) {
    ComplexVector mu = t.eigenvalues();
    // eigenvalues of a composite block-triangular hat-Lambda are the union of
    // the eigenvalues of omega_j Lambda over all steps
    const Real zero_tol = 1e-12 * std::max(1.0, t.lambda.norm());
    for (Real omega : steps) {
        for (Index i = 0; i < mu.size(); ++i) {
            Complex mu_hat = omega * mu(i);
            ExpansionPoint p;
            p.side = side;
            if (std::abs(mu_hat) <= zero_tol) {
                p.at_infinity = true;
            } else {
                Complex loc = 1.0 / mu_hat;
                if (side == Side::Output) loc = 1.0 / std::conj(mu_hat);
                p.location = loc;
            }
            merge_point(out, p);
        }
    }
}

}  // namespace detail

/// Interpolation locations predicted from the tableau eigenvalues and step
/// sizes: 1/(omega_j mu) on the input side and 1/conj(tau_j nu) on the output
/// side, with zero eigenvalues mapping to infinity. Coinciding locations on
/// the same side merge with summed multiplicity.
inline ExpansionPointSet predict_expansion_points(const ButcherTableau& t_c,
                                                  const std::vector<Real>& steps_c,
                                                  const ButcherTableau& t_o,
                                                  const std::vector<Real>& steps_o) {
    t_c.validate();
    t_o.validate();
    ExpansionPointSet set;
    detail::predict_side(set.points, t_c, steps_c, Side::Input);
    detail::predict_side(set.points, t_o, steps_o, Side::Output);
    return set;
}

// --- JSON form: {"s": int, "lambda": [[{re,im},...],...], "beta": [{re,im},...],
//     "beta_tilde": [...], "gamma": [...]} ---

inline nlohmann::json to_json(Complex z) { return {{"re", z.real()}, {"im", z.imag()}}; }

inline Complex complex_from_json(const nlohmann::json& j) {
    if (j.is_number()) return Complex(j.get<Real>(), 0.0);
    return Complex(j.at("re").get<Real>(), j.value("im", 0.0));
}

inline nlohmann::json to_json(const ButcherTableau& t) {
    nlohmann::json j;
    j["s"] = t.stages();
    auto lam = nlohmann::json::array();
    for (Index i = 0; i < t.stages(); ++i) {
        auto row = nlohmann::json::array();
        for (Index k = 0; k < t.stages(); ++k) row.push_back(to_json(t.lambda(i, k)));
        lam.push_back(row);
    }
    j["lambda"] = lam;
    auto beta = nlohmann::json::array();
    for (Index i = 0; i < t.stages(); ++i) beta.push_back(to_json(t.beta(i)));
    j["beta"] = beta;
    j["beta_tilde"] = std::vector<Real>(t.beta_tilde.data(), t.beta_tilde.data() + t.stages());
    j["gamma"] = std::vector<Real>(t.gamma.data(), t.gamma.data() + t.stages());
    if (!t.name.empty()) j["name"] = t.name;
    return j;
}

inline ButcherTableau tableau_from_json(const nlohmann::json& j) {
    ButcherTableau t;
    const Index s = j.at("s").get<Index>();
    if (s < 1) throw ParseError("tableau JSON: s must be >= 1");
    t.lambda = ComplexMatrix(s, s);
    const auto& lam = j.at("lambda");
    if (static_cast<Index>(lam.size()) != s) throw ParseError("tableau JSON: lambda row count != s");
    for (Index i = 0; i < s; ++i) {
        if (static_cast<Index>(lam[i].size()) != s)
            throw ParseError("tableau JSON: lambda column count != s");
        for (Index k = 0; k < s; ++k) t.lambda(i, k) = complex_from_json(lam[i][k]);
    }
    const auto& beta = j.at("beta");
    if (static_cast<Index>(beta.size()) != s) throw ParseError("tableau JSON: beta length != s");
    t.beta = ComplexVector(s);
    for (Index i = 0; i < s; ++i) t.beta(i) = complex_from_json(beta[i]);

    t.beta_tilde = Vector(s);
    if (j.contains("beta_tilde")) {
        const auto& bt = j.at("beta_tilde");
        if (static_cast<Index>(bt.size()) != s) throw ParseError("tableau JSON: beta_tilde length != s");
        for (Index i = 0; i < s; ++i) t.beta_tilde(i) = bt[i].get<Real>();
    } else {
        // default: beta_tilde = beta, valid only when beta is real nonnegative
        for (Index i = 0; i < s; ++i) {
            if (t.beta(i).imag() != 0.0 || t.beta(i).real() < 0.0)
                throw ParseError("tableau JSON: beta_tilde required when beta is not real nonnegative");
            t.beta_tilde(i) = t.beta(i).real();
        }
    }
    t.gamma = Vector::Zero(s);
    if (j.contains("gamma")) {
        const auto& g = j.at("gamma");
        if (static_cast<Index>(g.size()) != s) throw ParseError("tableau JSON: gamma length != s");
        for (Index i = 0; i < s; ++i) t.gamma(i) = g[i].get<Real>();
    }
    t.name = j.value("name", "");
    t.validate();
    return t;
}

/// Resolve a CLI-style tableau spec: a built-in name or a path to a JSON file.
inline ButcherTableau resolve_tableau(const std::string& spec) {
    try {
        return builtin(spec);
    } catch (const UnknownTableau&) {
    }
    std::ifstream in(spec);
    if (!in) throw UnknownTableau(spec + " (not a built-in name and not a readable file)");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(spec + ": " + e.what());
    }
    try {
        return tableau_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(spec + ": " + e.what());
    }
}

}  // namespace rkmor
