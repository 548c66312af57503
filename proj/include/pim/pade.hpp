#pragma once

#include <vector>

#include "pim/power_series.hpp"

namespace pim {

/// Rational approximant P(u)/Q(u), Q(0) = 1, built from exact Taylor
/// coefficients so the linear solve never suffers from conditioning.
struct PadeApproximant {
    std::vector<double> p;  // numerator, ascending powers
    std::vector<double> q;  // denominator, ascending powers, q[0] = 1
    int order_num = 0;
    int order_den = 0;

    double evaluate(double u) const;
    /// Real positive roots of the denominator up to u_max (pole locations).
    std::vector<double> positive_poles(double u_max) const;
};

/// Diagonal [m/m] Pade of the series sum c_n u^n.  Needs 2m+1 coefficients.
/// Degenerate systems fall back to lower m (classic block structure handling).
PadeApproximant pade_diagonal(const std::vector<Rational>& c, int m);

} // namespace pim
