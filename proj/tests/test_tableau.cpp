#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "rkmor/tableau.hpp"
#include "test_support.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace rkmor;
using doctest::Approx;

TEST_CASE("built-in tableaus carry the printed entries") {
    const Real r3 = std::sqrt(3.0);

    auto gl2 = builtin(Method::GaussLegendre2);
    CHECK(gl2.lambda(0, 0).real() == Approx(0.25));
    CHECK(gl2.lambda(0, 1).real() == Approx(0.25 - r3 / 6.0));
    CHECK(gl2.lambda(1, 0).real() == Approx(0.25 + r3 / 6.0));
    CHECK(gl2.lambda(1, 1).real() == Approx(0.25));
    CHECK(gl2.beta(0).real() == Approx(0.5));
    CHECK(gl2.beta(1).real() == Approx(0.5));
    CHECK(gl2.beta_tilde(0) == Approx(0.5));

    auto radau = builtin(Method::RadauIA2);
    CHECK(radau.lambda(0, 0).real() == Approx(0.25));
    CHECK(radau.lambda(0, 1).real() == Approx(-0.25));
    CHECK(radau.lambda(1, 0).real() == Approx(0.25));
    CHECK(radau.lambda(1, 1).real() == Approx(5.0 / 12.0));
    CHECK(radau.beta(0).real() == Approx(0.25));
    CHECK(radau.beta(1).real() == Approx(0.75));

    auto euler = builtin(Method::ExplicitEuler);
    CHECK(euler.lambda(0, 0) == Complex(0.0, 0.0));
    CHECK(euler.beta(0).real() == Approx(1.0));
    CHECK(euler.is_strictly_lower_triangular());

    auto be = builtin(Method::BackwardEuler);
    CHECK(be.lambda(0, 0).real() == Approx(1.0));

    auto mid = builtin(Method::ImplicitMidpoint);
    CHECK(mid.lambda(0, 0).real() == Approx(0.5));

    CHECK_THROWS_AS(builtin("rk4"), UnknownTableau);
    CHECK(builtin("gl2").name == "gauss-legendre-2");
}

TEST_CASE("eigenvalues of the built-ins") {
    // GL2: 1/4 +- sqrt(3)/12 i, Radau IA: 1/3 +- sqrt(2)/6 i
    auto gl2 = builtin(Method::GaussLegendre2).eigenvalues();
    std::vector<Complex> gl(gl2.data(), gl2.data() + 2);
    std::sort(gl.begin(), gl.end(), [](Complex a, Complex b) { return a.imag() < b.imag(); });
    CHECK(gl[0].real() == Approx(0.25).epsilon(1e-14));
    CHECK(gl[0].imag() == Approx(-std::sqrt(3.0) / 12.0).epsilon(1e-14));
    CHECK(gl[1].imag() == Approx(std::sqrt(3.0) / 12.0).epsilon(1e-14));

    auto ra = builtin(Method::RadauIA2).eigenvalues();
    std::vector<Complex> rv(ra.data(), ra.data() + 2);
    std::sort(rv.begin(), rv.end(), [](Complex a, Complex b) { return a.imag() < b.imag(); });
    CHECK(rv[0].real() == Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(rv[0].imag() == Approx(-std::sqrt(2.0) / 6.0).epsilon(1e-14));
}

TEST_CASE("DIRK tableaus from ADI parameters") {
    auto t1 = dirk_from_adi_params({Complex(1.0, 0.0)});
    CHECK(t1.lambda(0, 0).real() == Approx(1.0));
    CHECK(t1.beta(0).real() == Approx(2.0));
    CHECK(t1.beta_tilde(0) == Approx(2.0));

    auto t2 = dirk_from_adi_params({Complex(1.0, 0.0), Complex(2.0, 0.0)});
    CHECK(t2.lambda(0, 0).real() == Approx(1.0));
    CHECK(t2.lambda(0, 1).real() == Approx(0.0));
    CHECK(t2.lambda(1, 0).real() == Approx(2.0));
    CHECK(t2.lambda(1, 1).real() == Approx(2.0));
    CHECK(t2.beta(0).real() == Approx(2.0));
    CHECK(t2.beta(1).real() == Approx(4.0));

    CHECK_THROWS_AS(dirk_from_adi_params({Complex(-1.0, 0.0)}), InvalidAdiParameter);

    SUBCASE("always ADI-equivalent, random parameters in C_+") {
        std::mt19937 rng(42);
        std::uniform_real_distribution<Real> re(0.1, 3.0), im(-2.0, 2.0);
        for (int trial = 0; trial < 20; ++trial) {
            int s = 1 + static_cast<int>(rng() % 4);
            std::vector<Complex> mu;
            for (int i = 0; i < s; ++i) mu.emplace_back(re(rng), im(rng));
            auto check = check_adi_condition(dirk_from_adi_params(mu));
            REQUIRE(check.applicable);
            CHECK(check.residual <= 1e-12);
        }
    }
}

TEST_CASE("eigenvalue condition") {
    auto be = builtin(Method::BackwardEuler);
    auto sys = testing::random_stable_system(8, 1);
    CHECK(check_eig_condition(be, sys, {0.1, 1.0, 10.0}));

    // 1 - omega*mu*lambda = 1 - 0.5*(-1)*(-2) = 0 violates the condition
    ButcherTableau bad;
    bad.lambda = ComplexMatrix::Constant(1, 1, Complex(-1.0, 0.0));
    bad.beta = ComplexVector::Ones(1);
    bad.beta_tilde = Vector::Ones(1);
    bad.gamma = Vector::Zero(1);
    LtiSystem tiny(Matrix::Constant(1, 1, -2.0), Vector::Ones(1), RowVector::Ones(1));
    CHECK_FALSE(check_eig_condition(bad, tiny, {0.5}));
    CHECK(check_eig_condition(bad, tiny, {0.4}));

    CHECK(check_eig_condition(builtin(Method::ExplicitEuler), tiny, {0.5, 1.0}));
}

TEST_CASE("ADI condition residual") {
    CHECK(check_adi_condition(builtin(Method::ImplicitMidpoint)).residual == Approx(0.0));
    CHECK(check_adi_condition(builtin(Method::GaussLegendre2)).residual == Approx(0.0).epsilon(1e-14));
    auto euler = check_adi_condition(builtin(Method::ExplicitEuler));
    CHECK(euler.applicable);
    CHECK(euler.residual == Approx(1.0));

    // beta != beta_tilde is out of scope for the ADI equivalence
    auto radau = builtin(Method::RadauIA2);
    radau.beta_tilde(0) = 0.3;
    auto check = check_adi_condition(radau);
    CHECK_FALSE(check.applicable);
    CHECK(std::isinf(check.residual));
}

TEST_CASE("composite tableau assembly") {
    auto be = builtin(Method::BackwardEuler);

    SUBCASE("single step reduces to omega*Lambda") {
        auto c = assemble_composite(be, {0.5});
        REQUIRE(c.dimension() == 1);
        CHECK(c.lambda_hat_t(0, 0).real() == Approx(0.5));
        CHECK(c.beta_tilde_hat(0) == Approx(0.5));
    }

    SUBCASE("two backward Euler steps") {
        auto c = assemble_composite(be, {1.0, 2.0});
        REQUIRE(c.dimension() == 2);
        CHECK(c.lambda_hat_t(0, 0).real() == Approx(1.0));
        CHECK(c.lambda_hat_t(0, 1).real() == Approx(1.0));  // omega_1 * beta
        CHECK(c.lambda_hat_t(1, 0).real() == Approx(0.0));
        CHECK(c.lambda_hat_t(1, 1).real() == Approx(2.0));
        CHECK(c.beta_tilde_hat(0) == Approx(1.0));
        CHECK(c.beta_tilde_hat(1) == Approx(2.0));
    }

    SUBCASE("block upper triangular for s=2, N=3") {
        auto gl2 = builtin(Method::GaussLegendre2);
        std::vector<Real> steps{0.5, 1.0, 2.0};
        auto c = assemble_composite(gl2, steps);
        REQUIRE(c.dimension() == 6);
        // zero blocks below the diagonal
        for (Index bj = 0; bj < 3; ++bj)
            for (Index bk = 0; bk < bj; ++bk)
                CHECK(c.lambda_hat_t.block(bj * 2, bk * 2, 2, 2).norm() == Approx(0.0));
        // diagonal blocks omega_j Lambda^T
        for (Index bj = 0; bj < 3; ++bj) {
            ComplexMatrix expected = steps[static_cast<size_t>(bj)] * gl2.lambda.transpose();
            CHECK((c.lambda_hat_t.block(bj * 2, bj * 2, 2, 2) - expected).norm() == Approx(0.0));
        }
        // coupling blocks omega_j [beta ... beta]
        ComplexMatrix bb(2, 2);
        bb.col(0) = gl2.beta;
        bb.col(1) = gl2.beta;
        CHECK((c.lambda_hat_t.block(0, 2, 2, 2) - 0.5 * bb).norm() == Approx(0.0));
        CHECK((c.lambda_hat_t.block(0, 4, 2, 2) - 0.5 * bb).norm() == Approx(0.0));
        CHECK((c.lambda_hat_t.block(2, 4, 2, 2) - 1.0 * bb).norm() == Approx(0.0));
    }

    SUBCASE("spectrum is the union of the scaled tableau spectra") {
        auto radau = builtin(Method::RadauIA2);
        std::vector<Real> steps{0.3, 0.7, 1.9, 4.0};
        auto c = assemble_composite(radau, steps);
        Eigen::ComplexEigenSolver<ComplexMatrix> es(c.lambda_hat());
        std::vector<Complex> got(es.eigenvalues().data(), es.eigenvalues().data() + c.dimension());
        std::vector<Complex> expected;
        auto mu = radau.eigenvalues();
        for (Real w : steps)
            for (Index i = 0; i < mu.size(); ++i) expected.push_back(w * mu(i));
        auto key = [](Complex a, Complex b) {
            if (std::abs(a.real() - b.real()) > 1e-12) return a.real() < b.real();
            return a.imag() < b.imag();
        };
        std::sort(got.begin(), got.end(), key);
        std::sort(expected.begin(), expected.end(), key);
        for (size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - expected[i]) <= 1e-10);
    }

    CHECK_THROWS_AS(assemble_composite(be, {1.0, -0.5}), InvalidStepSize);
}

TEST_CASE("expansion point prediction") {
    auto gl2 = builtin(Method::GaussLegendre2);
    auto radau = builtin(Method::RadauIA2);

    SUBCASE("GL2 input side at omega=1: 3 -+ sqrt(3) i") {
        auto set = predict_expansion_points(gl2, {1.0}, radau, {});
        std::vector<Complex> input;
        for (const auto& p : set.points)
            if (p.side == Side::Input) {
                REQUIRE_FALSE(p.at_infinity);
                input.push_back(p.location);
            }
        REQUIRE(input.size() == 2);
        std::sort(input.begin(), input.end(), [](Complex a, Complex b) { return a.imag() < b.imag(); });
        CHECK(std::abs(input[0] - Complex(3.0, -std::sqrt(3.0))) <= 1e-12);
        CHECK(std::abs(input[1] - Complex(3.0, std::sqrt(3.0))) <= 1e-12);
    }

    SUBCASE("Radau IA output side at tau=0.5: conjugation maps the pair to itself") {
        auto set = predict_expansion_points(gl2, {}, radau, {0.5});
        std::vector<Complex> output;
        for (const auto& p : set.points)
            if (p.side == Side::Output) output.push_back(p.location);
        REQUIRE(output.size() == 2);
        std::sort(output.begin(), output.end(),
                  [](Complex a, Complex b) { return a.imag() < b.imag(); });
        CHECK(std::abs(output[0] - Complex(4.0, -2.0 * std::sqrt(2.0))) <= 1e-12);
        CHECK(std::abs(output[1] - Complex(4.0, 2.0 * std::sqrt(2.0))) <= 1e-12);
    }

    SUBCASE("explicit methods interpolate only at infinity") {
        auto euler = builtin(Method::ExplicitEuler);
        auto set = predict_expansion_points(euler, {0.5, 1.0, 2.0}, euler, {1.0});
        REQUIRE(set.points.size() == 2);  // one infinity entry per side
        for (const auto& p : set.points) CHECK(p.at_infinity);
        CHECK(set.total_multiplicity(Side::Input) == 3);
        CHECK(set.total_multiplicity(Side::Output) == 1);
    }

    SUBCASE("coinciding points merge with summed multiplicity") {
        auto be = builtin(Method::BackwardEuler);
        auto set = predict_expansion_points(be, {1.0, 1.0, 2.0}, be, {});
        REQUIRE(set.points.size() == 2);
        int total = 0;
        for (const auto& p : set.points) {
            if (std::abs(p.location - Complex(1.0, 0.0)) < 1e-12) CHECK(p.multiplicity == 2);
            if (std::abs(p.location - Complex(0.5, 0.0)) < 1e-12) CHECK(p.multiplicity == 1);
            total += p.multiplicity;
        }
        CHECK(total == 3);
    }

    SUBCASE("no predicted point sits at zero; real tableaus give conjugate pairs") {
        std::mt19937 rng(5);
        std::uniform_real_distribution<Real> dist(-1.0, 1.0);
        for (int trial = 0; trial < 10; ++trial) {
            ButcherTableau t;
            Index s = 1 + static_cast<Index>(rng() % 3);
            t.lambda = ComplexMatrix::Zero(s, s);
            for (Index i = 0; i < s; ++i)
                for (Index j = 0; j < s; ++j) t.lambda(i, j) = Complex(dist(rng), 0.0);
            t.beta = ComplexVector::Ones(s);
            t.beta_tilde = Vector::Ones(s);
            t.gamma = Vector::Zero(s);
            auto set = predict_expansion_points(t, {0.5, 1.7}, t, {0.9});
            for (const auto& p : set.points) {
                if (p.at_infinity) continue;
                CHECK(std::abs(p.location) > 1e-8);
                if (std::abs(p.location.imag()) > 1e-8 * std::max(1.0, std::abs(p.location))) {
                    bool has_conjugate = false;
                    for (const auto& q : set.points)
                        if (!q.at_infinity && q.side == p.side &&
                            coincide(q.location, std::conj(p.location), 1e-8))
                            has_conjugate = true;
                    CHECK(has_conjugate);
                }
            }
        }
    }
}

TEST_CASE("tableau JSON round trip") {
    auto radau = builtin(Method::RadauIA2);
    auto j = to_json(radau);
    auto back = tableau_from_json(j);
    CHECK((back.lambda - radau.lambda).norm() == Approx(0.0));
    CHECK((back.beta - radau.beta).norm() == Approx(0.0));
    CHECK((back.beta_tilde - radau.beta_tilde).norm() == Approx(0.0));
    CHECK((back.gamma - radau.gamma).norm() == Approx(0.0));

    SUBCASE("beta_tilde defaults to beta only when real nonnegative") {
        nlohmann::json jt;
        jt["s"] = 1;
        jt["lambda"] = {{{{"re", 0.5}, {"im", 0.5}}}};
        jt["beta"] = {{{"re", -1.0}, {"im", 0.0}}};
        CHECK_THROWS_AS(tableau_from_json(jt), ParseError);
        jt["beta"] = {{{"re", 1.0}, {"im", 0.0}}};
        auto t = tableau_from_json(jt);
        CHECK(t.beta_tilde(0) == Approx(1.0));
        CHECK(t.lambda(0, 0) == Complex(0.5, 0.5));
    }

    SUBCASE("negative beta_tilde is rejected") {
        nlohmann::json jt;
        jt["s"] = 1;
        jt["lambda"] = {{{{"re", 1.0}, {"im", 0.0}}}};
        jt["beta"] = {{{"re", 1.0}, {"im", 0.0}}};
        jt["beta_tilde"] = {-0.5};
        CHECK_THROWS(tableau_from_json(jt));
    }
}
