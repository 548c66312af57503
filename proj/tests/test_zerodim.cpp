#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <sstream>

#include "pim/pade.hpp"
#include "pim/quadrature.hpp"
#include "pim/zerodim.hpp"

using namespace pim;
namespace zd = pim::zerodim;

TEST_CASE("series coefficients match the double-factorial form") {
    zd::CubicModel model{1.0, 0.0, 0.1};
    auto s = zd::series_R(model, 8);

    CHECK(s.coefficients[0] == Rational(1));
    CHECK(s.coefficients[1] == Rational(-15));          // -(5!!)
    CHECK(s.coefficients[2] == Rational(10395, 2));     // 11!!/2!
    CHECK(s.coefficients[3] == Rational(-34459425, 6)); // -(17!!)/3!

    // c1 z = -10 b^4/a^6 and c2 z^2 = 2310 b^8/a^12 as exact rationals
    CHECK(s.coefficients[1] * Rational(2, 3) == Rational(-10));
    CHECK(s.coefficients[2] * Rational(2, 3) * Rational(2, 3) == Rational(2310));

    CHECK(s.z == doctest::Approx(2.0 * 1e-4 / 3.0).epsilon(1e-14));
    CHECK(s.prefactor == 1.0);

    for (std::size_t n = 0; n + 1 < s.coefficients.size(); ++n) {
        CHECK(((n % 2 == 0) == (s.coefficients[n] > 0)));
        if (n >= 1)
            CHECK(abs(s.coefficients[n + 1] / s.coefficients[n]) >
                  abs(s.coefficients[n] / s.coefficients[n - 1]));
    }
}

TEST_CASE("series least-term bookkeeping") {
    zd::CubicModel model{1.0, 0.0, 0.1};
    auto s = zd::series_R(model, 16);
    // ratio of consecutive terms passes 1 around n ~ 8 at z = 2e-4/3
    CHECK(s.truncation_index >= 6);
    CHECK(s.truncation_index <= 10);
    CHECK(s.least_term_magnitude < 1e-6);
}

TEST_CASE("csv export carries exact numerator/denominator pairs") {
    auto s = zd::series_R({1.0, 0.0, 0.1}, 2);
    std::ostringstream os;
    zd::export_series_csv(s, os);
    CHECK(os.str() == "n,numerator,denominator\n0,1,1\n1,-15,1\n2,10395,2\n");
}

TEST_CASE("pairing operator: single pairing of j*e") {
    PairingSeries::Caps caps{2, 2, 0};
    auto f = PairingSeries::monomial(Rational(1), 1, 1, 0, caps);
    auto r = pairing_expand(f, Rational(-1, 2), 0);
    CHECK(r[0] == Rational(-1, 2));
}

TEST_CASE("pairing routes agree and reproduce the series") {
    const Rational a(1);
    auto r19 = pim::pairing_expand(zd::f19_series(a, 8), Rational(-1, 2), 8);
    auto r25 = pim::pairing_expand(zd::f25_series(a, 8), Rational(-1, 2), 8);

    REQUIRE(r19.size() == 9);
    CHECK(r19 == r25);
    CHECK(r19[0] == Rational(1));
    CHECK(r19[4] == Rational(-10));
    CHECK(r19[8] == Rational(2310));
    for (int m : {1, 2, 3, 5, 6, 7}) CHECK(r19[m] == Rational(0));
}

TEST_CASE("pairing routes at a = 2") {
    const Rational a(2);
    auto r19 = pim::pairing_expand(zd::f19_series(a, 8), Rational(-1, 2), 8);
    auto r25 = pim::pairing_expand(zd::f25_series(a, 8), Rational(-1, 2), 8);
    CHECK(r19 == r25);
    CHECK(r19[4] == Rational(-5, 32));      // -10 / 2^6
    CHECK(r19[8] == Rational(1155, 2048));  // 2310 / 2^12
}

TEST_CASE("pairing truncation overflow is rejected") {
    auto f = zd::f19_series(Rational(1), 4);
    CHECK_THROWS_AS(pim::pairing_expand(f, Rational(-1, 2), 8), std::invalid_argument);
}

TEST_CASE("amplitude closed form at a=1, b=1") {
    // sqrt(2 pi) e^{i/12} Ai(-1/4), evaluated independently at high precision
    auto A = zd::amplitude_exact({1.0, 0.0, 1.0});
    CHECK(A.real() == doctest::Approx(1.0459446668082279).epsilon(1e-12));
    CHECK(A.imag() == doctest::Approx(0.0873643816202740).epsilon(1e-12));
}

TEST_CASE("amplitude scaling identity A(a,b) = lambda A(a l^2, b l^3)") {
    // change of variables x -> lambda x in the defining integral
    for (double lambda : {0.5, 2.0, 3.0}) {
        auto lhs = zd::amplitude_exact({1.0, 0.0, 1.0});
        auto rhs =
            lambda * zd::amplitude_exact({lambda * lambda, 0.0, lambda * lambda * lambda});
        CHECK(std::abs(lhs - rhs) < 1e-10);
    }
}

TEST_CASE("amplitude closed form agrees with the damped-quadrature oracle") {
    // Richardson ladder in the damping, extrapolated to a_im -> 0
    auto quad_val = zd::amplitude_quadrature_extrapolated(1.0, 0.25, 1.6e-2, 5);
    auto exact = zd::amplitude_exact({1.0, 0.0, 0.25});
    CHECK(std::abs(quad_val - exact) < 1e-8);
}

TEST_CASE("amplitude oracle at a=1, b=1") {
    auto quad_val = zd::amplitude_quadrature_extrapolated(1.0, 1.0, 2.5e-2, 4);
    auto exact = zd::amplitude_exact({1.0, 0.0, 1.0});
    CHECK(std::abs(quad_val - exact) < 1e-6);
}

TEST_CASE("amplitude |A|^2 -> 1/a in the small-b limit of the damped integral") {
    // with the damping on, the second saddle is suppressed and the Gaussian
    // value 1/|a| survives the b -> 0 limit
    zd::CubicModel model{1.0, 1e-3, 5e-3};
    auto A = zd::amplitude_quadrature(model);
    CHECK(std::norm(A) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("amplitude rejects invalid models") {
    CHECK_THROWS_AS(zd::amplitude_exact({1.0, 0.0, -1.0}), std::invalid_argument);
    CHECK_THROWS_AS(zd::amplitude_exact({1.0, -1e-3, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(zd::amplitude_exact({1.0, 0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("thimble: Gaussian case is exact") {
    auto r = zd::probability_thimble({2.0, 0.0, 0.0});
    CHECK(std::abs(r.value * 2.0 - 1.0) < 1e-10);
    CHECK(r.saddle_x1 == 0.0);
    CHECK(std::isnan(r.saddle_x2));
}

TEST_CASE("thimble: saddle locations") {
    auto r = zd::probability_thimble({2.0, 0.0, 1.0});
    CHECK(r.saddle_x1 == 0.0);
    CHECK(r.saddle_x2 == doctest::Approx(-2.0).epsilon(1e-14));
}

TEST_CASE("thimble values against the high-precision oracle") {
    // frozen from an independent 60-digit descent-path integration
    auto r1 = zd::probability_thimble({1.0, 0.0, 0.1});
    CHECK(r1.value == doctest::Approx(0.99902160859263).epsilon(2e-10));
    auto r2 = zd::probability_thimble({1.0, 0.0, 0.05});
    CHECK(r2.value == doctest::Approx(0.99993758982284).epsilon(2e-10));
}

TEST_CASE("thimble regime guard") {
    // z = 2 b^4 / 3 > 0.1 for b = 0.75
    CHECK_THROWS_AS(zd::probability_thimble({1.0, 0.0, 0.75}), std::invalid_argument);
    CHECK_THROWS_AS(zd::probability_thimble({-1.0, 0.0, 0.1}), std::invalid_argument);
}

TEST_CASE("borel resummation: convergent series passes through") {
    zd::AsymptoticSeries s;
    s.coefficients = {Rational(1), Rational(0), Rational(0), Rational(0), Rational(0)};
    s.prefactor = 0.5;  // 1/a for a = 2
    auto r = zd::borel_resum(s, 0.3);
    CHECK(r.reliable);
    CHECK(r.value == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("borel resummation of the Euler series") {
    zd::AsymptoticSeries s;
    for (int n = 0; n <= 16; ++n) {
        Rational c = rational_factorial(n);
        if (n % 2 == 1) c = -c;
        s.coefficients.push_back(c);
    }
    s.prefactor = 1.0;
    auto r = zd::borel_resum(s, 0.1);
    CHECK(r.reliable);
    // integral_0^inf e^-t/(1 + 0.1 t) dt
    CHECK(r.value == doctest::Approx(0.91563333939788).epsilon(1e-10));
    CHECK(std::abs(r.value - 0.91563333939788) < 10 * r.error_estimate + 1e-12);
}

TEST_CASE("borel flags a Pade pole on the integration axis") {
    // non-alternating factorial growth puts the Borel singularity at t = 1/z
    zd::AsymptoticSeries s;
    for (int n = 0; n <= 10; ++n) s.coefficients.push_back(rational_factorial(n));
    auto r = zd::borel_resum(s, 0.1);
    CHECK_FALSE(r.reliable);
    CHECK(r.pole_location == doctest::Approx(10.0).epsilon(1e-6));
}

TEST_CASE("borel sum of the minimum-saddle series matches the thimble") {
    for (double b : {0.05, 0.1}) {
        zd::CubicModel model{1.0, 0.0, b};
        auto thimble = zd::probability_thimble(model);
        auto series = zd::series_R(model, 32);
        auto borel = zd::borel_resum(series, series.z);
        REQUIRE(borel.reliable);
        CHECK(std::abs(borel.value - thimble.value) < 1e-6);
    }
}

TEST_CASE("borel requires enough coefficients") {
    zd::AsymptoticSeries s;
    s.coefficients = {Rational(1), Rational(-1), Rational(2)};
    CHECK_THROWS_AS(zd::borel_resum(s, 0.1), std::invalid_argument);
}

TEST_CASE("pade approximant reproduces a rational function exactly") {
    // f(u) = 1/(1+u): coefficients (-1)^n
    std::vector<Rational> c;
    for (int n = 0; n <= 8; ++n) c.push_back(n % 2 == 0 ? Rational(1) : Rational(-1));
    auto p = pade_diagonal(c, 4);
    for (double u : {0.0, 0.3, 2.5, 17.0})
        CHECK(p.evaluate(u) == doctest::Approx(1.0 / (1.0 + u)).epsilon(1e-12));
    CHECK(p.positive_poles(100.0).empty());
}
