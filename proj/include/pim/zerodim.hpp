#pragma once

#include <complex>
#include <iosfwd>
#include <vector>

#include "pim/power_series.hpp"

namespace pim::zerodim {

/// Parameters of the cubic one-variable model: exponent a x^2/2 + b x^3/3,
/// with an optional positive imaginary part of a acting as a damping
/// regulator for the oscillatory integral.
struct CubicModel {
    double a_re = 1.0;
    double a_im = 0.0;
    double b = 1.0;

    void validate() const;
    /// Expansion variable of the minimum-saddle series, 2 b^4 / (3 a^6).
    double series_variable() const;
};

/// Full amplitude over the real line.  For a_im = 0 this is the Airy closed
/// form; for a_im > 0 it is evaluated by damped oscillatory quadrature.
std::complex<double> amplitude_exact(const CubicModel& model);

/// Damped quadrature of the defining integral (the independent oracle for the
/// closed form).  Requires a_im > 0.
std::complex<double> amplitude_quadrature(const CubicModel& model, double panel_phase = 1.0);

/// Richardson extrapolation of amplitude_quadrature to a_im -> 0 over the
/// geometric ladder a_im = eps0 / 2^k, k = 0..levels-1.
std::complex<double> amplitude_quadrature_extrapolated(double a_re, double b, double eps0,
                                                       int levels, double panel_phase = 1.0);

struct ThimbleResult {
    double value;      // |A_thimble|^2, the single-saddle probability
    double saddle_x1;  // 0
    double saddle_x2;  // -a/b (quiet NaN when b = 0)
    long steps;        // total tracer steps over both branches
};

/// Probability restricted to the x1 = 0 extremum: quadrature of the amplitude
/// along the constant-phase descent path through the saddle.
ThimbleResult probability_thimble(const CubicModel& model);

/// Alternating factorially-divergent series in the variable z with a scalar
/// prefactor.  Coefficients are exact rationals.
struct AsymptoticSeries {
    std::vector<Rational> coefficients;
    double z = 0.0;          // value of the expansion variable
    double prefactor = 1.0;  // overall scale multiplying the series
    int truncation_index = 0;
    double least_term_magnitude = 0.0;
};

/// Series of the minimum-saddle probability: c_n = (-1)^n (6n-1)!!/n!,
/// z = 2 b^4 / (3 a^6), prefactor 1/a.
AsymptoticSeries series_R(const CubicModel& model, int n_max);

struct BorelResult {
    double value = 0.0;
    double error_estimate = 0.0;
    bool reliable = true;
    double pole_location = 0.0;  // in the Laplace variable t, when !reliable
};

/// Borel transform + diagonal Pade + Laplace integral.  The transform and the
/// Pade solve are exact; only the final quadrature runs in doubles.
BorelResult borel_resum(const AsymptoticSeries& series, double z);

/// Pairing inputs for the two perturbation organizations, as truncated exact
/// series in (j, e, b).  `a` is kept rational so the comparison stays exact.
/// Both expand to the same alternating series under pairing strength -1/2.
PairingSeries f19_series(const Rational& a, int b_order);
PairingSeries f25_series(const Rational& a, int b_order);

/// Coefficients as exact numerator/denominator pairs.
void export_series_csv(const AsymptoticSeries& series, std::ostream& os);

} // namespace pim::zerodim
