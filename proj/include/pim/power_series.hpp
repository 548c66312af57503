#pragma once

#include <array>
#include <map>
#include <stdexcept>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace pim {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

double to_double(const Rational& r);
Rational rational_factorial(int n);
/// (2k-1)!! style double factorial with (-1)!! = 0!! = 1.
Rational double_factorial(int n);
/// Generalized binomial coefficient alpha over k for rational alpha.
Rational binomial(const Rational& alpha, int k);

/// Truncated polynomial in the auxiliary variables (j, e) whose coefficients
/// are truncated polynomials in the coupling b, over exact rationals.
/// Terms beyond the per-variable caps are dropped by every operation, so a
/// series is always a faithful truncation of the product/exponential it names.
class PairingSeries {
public:
    struct Caps {
        int j, e, b;
    };

    explicit PairingSeries(Caps caps) : caps_(caps) {}

    static PairingSeries constant(const Rational& c, Caps caps);
    /// c * j^dj * e^de * b^db
    static PairingSeries monomial(const Rational& c, int dj, int de, int db, Caps caps);

    /// exp(P) for a series with zero constant term.
    static PairingSeries exp_of(const PairingSeries& p);
    /// (1 + P)^alpha for a series with zero constant term and rational alpha.
    static PairingSeries pow_of_one_plus(const PairingSeries& p, const Rational& alpha);

    PairingSeries operator+(const PairingSeries& o) const;
    PairingSeries operator*(const PairingSeries& o) const;
    PairingSeries scaled(const Rational& c) const;
    PairingSeries derivative_j() const;
    PairingSeries derivative_e() const;

    const Rational& coefficient(int dj, int de, int db) const;
    bool is_zero() const { return terms_.empty(); }
    Caps caps() const { return caps_; }

    /// Coefficients (in powers of b) of the j^k e^k diagonal.
    std::vector<Rational> diagonal_b_poly(int k) const;

private:
    using Key = std::array<int, 3>;  // (dj, de, db)
    Caps caps_;
    std::map<Key, Rational> terms_;

    void insert(const Key& k, const Rational& c);
    friend PairingSeries multiply(const PairingSeries&, const PairingSeries&);
};

/// Applies exp(sigma * d/dj * d/de) to F, evaluates at j = e = 0 and returns
/// the coefficients of the resulting series in b up to b^order.
/// Throws std::invalid_argument when order exceeds the stored b truncation.
std::vector<Rational> pairing_expand(const PairingSeries& f, const Rational& sigma, int order);

} // namespace pim
