#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <complex>
#include <sstream>
#include <stdexcept>
#include <string>

namespace rkmor {

using Real             = double;
using Complex          = std::complex<double>;
using Index            = Eigen::Index;
using Matrix           = Eigen::MatrixXd;
using Vector           = Eigen::VectorXd;
using RowVector        = Eigen::RowVectorXd;
using ComplexMatrix    = Eigen::MatrixXcd;
using ComplexVector    = Eigen::VectorXcd;
using ComplexRowVector = Eigen::RowVectorXcd;
using SparseRealMatrix = Eigen::SparseMatrix<double>;

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Matrix/vector dimensions are inconsistent with an LTI SISO triple.
class DimensionMismatch : public Error {
public:
    explicit DimensionMismatch(const std::string& what) : Error(what) {}
};

/// A file could not be parsed (Matrix Market, JSON tableau, step list).
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what) : Error(what) {}
};

/// The shifted matrix (sI - A) or (A - s0 I) is singular at the requested point.
class SingularShift : public Error {
public:
    SingularShift(const std::string& context, Complex shift)
        : Error(format(context, shift)), shift_(shift) {}

    Complex shift() const { return shift_; }

private:
    static std::string format(const std::string& context, Complex s) {
        std::ostringstream os;
        os << context << ": singular shifted matrix at s = " << s.real() << (s.imag() < 0 ? " - " : " + ")
           << std::abs(s.imag()) << "i";
        return os.str();
    }
    Complex shift_;
};

/// The operator (I - shift*A) could not be factorized.
class SingularShiftedOperator : public Error {
public:
    explicit SingularShiftedOperator(Complex shift, int stage = -1)
        : Error(format(shift, stage)), shift_(shift), stage_(stage) {}

    Complex shift() const { return shift_; }
    int stage() const { return stage_; }

private:
    static std::string format(Complex s, int stage) {
        std::ostringstream os;
        os << "shifted operator (I - shift*A) numerically singular at shift = (" << s.real() << ", "
           << s.imag() << ")";
        if (stage >= 0) os << " in stage " << stage;
        return os.str();
    }
    Complex shift_;
    int stage_;
};

/// A dense ground-truth computation was requested above its dimension cap.
class OracleTooLarge : public Error {
public:
    OracleTooLarge(Index n, Index cap)
        : Error("dense oracle refused: dimension " + std::to_string(n) + " exceeds cap " +
                std::to_string(cap)) {}
};

class UnknownTableau : public Error {
public:
    explicit UnknownTableau(const std::string& name) : Error("unknown tableau: " + name) {}
};

class InvalidAdiParameter : public Error {
public:
    explicit InvalidAdiParameter(const std::string& what) : Error(what) {}
};

class InvalidStepSize : public Error {
public:
    explicit InvalidStepSize(const std::string& what) : Error(what) {}
};

/// The unique-solvability condition mu_p != 1/(omega_j lambda_q) is violated.
class EigConditionViolated : public Error {
public:
    EigConditionViolated(int step, int p, int q)
        : Error("eigenvalue condition violated at step " + std::to_string(step) + ", tableau eigenvalue " +
                std::to_string(p) + ", system eigenvalue " + std::to_string(q)),
          step_(step), p_(p), q_(q) {}

    int step() const { return step_; }
    int tableau_index() const { return p_; }
    int system_index() const { return q_; }

private:
    int step_, p_, q_;
};

class RankDeficient : public Error {
public:
    explicit RankDeficient(const std::string& what) : Error(what) {}
};

class EmptyFactor : public Error {
public:
    explicit EmptyFactor(const std::string& what) : Error(what) {}
};

/// Realification requires the generating shifts to occur in conjugate pairs.
class UnpairedShifts : public Error {
public:
    explicit UnpairedShifts(const std::string& what) : Error(what) {}
};

class UnstableSystem : public Error {
public:
    explicit UnstableSystem(const std::string& what) : Error(what) {}
};

/// Two complex values considered coincident: |p - q| <= tol * max(1, |p|).
inline bool coincide(Complex p, Complex q, Real tol = 1e-10) {
    return std::abs(p - q) <= tol * std::max(1.0, std::abs(p));
}

}  // namespace rkmor
