#include "pim/zerodim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <gsl/gsl_sf_airy.h>

#include "pim/pade.hpp"
#include "pim/quadrature.hpp"

namespace pim::zerodim {

using std::complex;
namespace quad = pim::quad;

void CubicModel::validate() const {
    if (!(b >= 0.0)) throw std::invalid_argument("CubicModel: b must be positive");
    if (a_im < 0.0) throw std::invalid_argument("CubicModel: a_im must be non-negative");
}

double CubicModel::series_variable() const {
    return 2.0 * std::pow(b, 4) / (3.0 * std::pow(a_re, 6));
}

std::complex<double> amplitude_exact(const CubicModel& model) {
    model.validate();
    if (model.b <= 0.0) throw std::invalid_argument("amplitude_exact: b must be positive");
    if (model.a_im > 0.0) return amplitude_quadrature(model);

    // Completing the cube maps the integral onto the Airy function:
    //   A = sqrt(2 pi) b^{-1/3} exp(i a^3/(12 b^2)) Ai(-a^2 / (4 b^{4/3})).
    const double a = model.a_re;
    const double b = model.b;
    const double airy_arg = -a * a / (4.0 * std::pow(b, 4.0 / 3.0));
    const double ai = gsl_sf_airy_Ai(airy_arg, GSL_PREC_DOUBLE);
    const double phase = a * a * a / (12.0 * b * b);
    return std::sqrt(2.0 * M_PI) * std::pow(b, -1.0 / 3.0) * ai *
           complex<double>(std::cos(phase), std::sin(phase));
}

std::complex<double> amplitude_quadrature(const CubicModel& model, double panel_phase) {
    model.validate();
    if (model.a_im <= 0.0)
        throw std::invalid_argument("amplitude_quadrature: needs a damping a_im > 0");

    const double a_re = model.a_re;
    const double a_im = model.a_im;
    const double b = model.b;
    // e^{-a_im x^2 / 2} < 1e-40 beyond the cutoff
    const double x_max = std::sqrt(2.0 * 92.0 / a_im);

    auto integrand = [&](double x) -> complex<double> {
        const double phase = 0.5 * a_re * x * x + b * x * x * x / 3.0;
        const double damp = std::exp(-0.5 * a_im * x * x);
        return damp * complex<double>(std::cos(phase), std::sin(phase));
    };
    auto phase_rate = [&](double x) { return std::abs(a_re * x + b * x * x); };

    // cap panels by the Gaussian envelope scale so the slow-phase region near
    // the origin is still resolved
    const double envelope = 0.5 / std::sqrt(std::abs(a_re) + a_im);
    auto pts_pos = quad::oscillatory_breakpoints(0.0, x_max, phase_rate, panel_phase, envelope);
    std::vector<double> pts(pts_pos.size() * 2 - 1);
    for (std::size_t i = 0; i < pts_pos.size(); ++i) {
        pts[pts_pos.size() - 1 + i] = pts_pos[i];
        pts[pts_pos.size() - 1 - i] = -pts_pos[i];
    }
    auto sum = quad::integrate_panels(integrand, pts);
    return sum / std::sqrt(2.0 * M_PI);
}

std::complex<double> amplitude_quadrature_extrapolated(double a_re, double b, double eps0,
                                                       int levels, double panel_phase) {
    if (levels < 2) throw std::invalid_argument("extrapolation needs at least two levels");
    std::vector<double> eps(levels);
    std::vector<complex<double>> val(levels);
    for (int k = 0; k < levels; ++k) {
        eps[k] = eps0 / std::pow(2.0, k);
        val[k] = amplitude_quadrature({a_re, eps[k], b}, panel_phase);
    }
    // Neville extrapolation to eps = 0
    for (int j = 1; j < levels; ++j)
        for (int i = levels - 1; i >= j; --i)
            val[i] = val[i] + (val[i] - val[i - 1]) * (eps[i] / (eps[i - j] - eps[i]));
    return val[levels - 1];
}

namespace {

struct TracerState {
    complex<double> x;
    complex<double> integral;
};

// Branch of the constant-phase descent path through x1 = 0, parametrized by
// v with Im S(x(v)) = v^2.  dx/dv = -2v / W'(x), W = iS.
TracerState trace_branch(double a, double b, int sign, long& steps) {
    const complex<double> i_unit(0.0, 1.0);
    auto wprime = [&](complex<double> x) { return i_unit * (a * x + b * x * x); };

    const complex<double> beta =
        double(sign) * std::exp(i_unit * (M_PI / 4.0)) * std::sqrt(2.0 / a);
    const complex<double> c2 = -2.0 * i_unit * b / (3.0 * a * a);

    const double v0 = 1e-5;
    const double v_max = 8.5;

    TracerState s;
    s.x = beta * v0 + c2 * (v0 * v0);
    s.integral = s.x;  // the [0, v0] segment, e^{-v^2} ~ 1 there

    auto rhs = [&](double v, const complex<double>& x, complex<double>& dx, complex<double>& dI) {
        dx = -2.0 * v / wprime(x);
        dI = std::exp(-v * v) * dx;
    };

    auto rk4_step = [&](double v, double h, TracerState st) {
        complex<double> k1x, k1i, k2x, k2i, k3x, k3i, k4x, k4i;
        rhs(v, st.x, k1x, k1i);
        rhs(v + 0.5 * h, st.x + 0.5 * h * k1x, k2x, k2i);
        rhs(v + 0.5 * h, st.x + 0.5 * h * k2x, k3x, k3i);
        rhs(v + h, st.x + h * k3x, k4x, k4i);
        st.x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        st.integral += h / 6.0 * (k1i + 2.0 * k2i + 2.0 * k3i + k4i);
        return st;
    };

    const long max_steps = 4'000'000;
    double v = v0;
    double h = 1e-4;
    const double tol = 1e-14;
    while (v < v_max) {
        if (++steps > max_steps)
            throw NumericError("probability_thimble: step budget exceeded at v=" +
                               std::to_string(v) + ", |x|=" + std::to_string(std::abs(s.x)));
        h = std::min(h, v_max - v);
        TracerState full = rk4_step(v, h, s);
        TracerState half = rk4_step(v + 0.5 * h, 0.5 * h, rk4_step(v, 0.5 * h, s));
        const double err = std::abs(half.x - full.x) + std::abs(half.integral - full.integral);
        const double scale = 1.0 + std::abs(s.x);
        if (err > tol * scale && h > 1e-12) {
            h *= 0.5;
            continue;
        }
        s = half;
        v += h;
        if (err < 0.03 * tol * scale) h *= 2.0;
    }
    return s;
}

} // namespace

ThimbleResult probability_thimble(const CubicModel& model) {
    model.validate();
    const double a = model.a_re;
    const double b = model.b;
    if (!(a > 0.0)) throw std::invalid_argument("probability_thimble: requires a_re > 0");
    const double z = model.series_variable();
    if (z > 0.1 + 1e-12)
        throw std::invalid_argument("probability_thimble: outside series-controlled regime (z > 0.1)");

    long steps = 0;
    TracerState plus = trace_branch(a, b, +1, steps);
    TracerState minus = trace_branch(a, b, -1, steps);
    const complex<double> amp = (plus.integral - minus.integral) / std::sqrt(2.0 * M_PI);

    ThimbleResult out;
    out.value = std::norm(amp);
    out.saddle_x1 = 0.0;
    out.saddle_x2 = b > 0.0 ? -a / b : std::numeric_limits<double>::quiet_NaN();
    out.steps = steps;
    return out;
}

AsymptoticSeries series_R(const CubicModel& model, int n_max) {
    model.validate();
    if (n_max < 0) throw std::invalid_argument("series_R: n_max must be non-negative");
    if (!(model.a_re > 0.0)) throw std::invalid_argument("series_R: requires a_re > 0");

    AsymptoticSeries s;
    s.z = model.series_variable();
    s.prefactor = 1.0 / model.a_re;
    s.coefficients.reserve(n_max + 1);
    for (int n = 0; n <= n_max; ++n) {
        Rational c = double_factorial(6 * n - 1) / rational_factorial(n);
        if (n % 2 == 1) c = -c;
        s.coefficients.push_back(c);
    }

    double best = std::numeric_limits<double>::infinity();
    for (int n = 0; n <= n_max; ++n) {
        const double mag = std::abs(to_double(s.coefficients[n]) * std::pow(s.z, n));
        if (mag < best) {
            best = mag;
            s.truncation_index = n;
        }
    }
    s.least_term_magnitude = best;
    return s;
}

BorelResult borel_resum(const AsymptoticSeries& series, double z) {
    if (series.coefficients.size() < 4)
        throw std::invalid_argument("borel_resum: need at least 4 coefficients");
    if (z < 0.0) throw std::invalid_argument("borel_resum: z must be non-negative");

    const int n_max = static_cast<int>(series.coefficients.size()) - 1;
    std::vector<Rational> borel(series.coefficients.size());
    for (int n = 0; n <= n_max; ++n)
        borel[n] = series.coefficients[n] / rational_factorial(n);

    const int m = n_max / 2;
    const double t_upper = 60.0;

    BorelResult out;
    if (z == 0.0) {
        out.value = series.prefactor * to_double(series.coefficients[0]);
        out.error_estimate = 0.0;
        return out;
    }

    auto laplace = [&](const PadeApproximant& pade) {
        auto f = [&](double t) { return std::exp(-t) * pade.evaluate(z * t); };
        return quad::integrate(f, 0.0, t_upper, 1e-13, 1e-13);
    };

    PadeApproximant hi = pade_diagonal(borel, m);
    auto poles = hi.positive_poles(z * t_upper);
    if (!poles.empty()) {
        out.reliable = false;
        out.pole_location = poles.front() / z;
        out.value = std::numeric_limits<double>::quiet_NaN();
        out.error_estimate = std::numeric_limits<double>::infinity();
        return out;
    }

    PadeApproximant lo = pade_diagonal(borel, m - 1);
    const double value_hi = laplace(hi);
    const double value_lo = laplace(lo);
    out.value = series.prefactor * value_hi;
    out.error_estimate = std::abs(series.prefactor) * std::abs(value_hi - value_lo) +
                         std::abs(out.value) * 1e-13;
    return out;
}

PairingSeries f19_series(const Rational& a, int b_order) {
    if (a == 0) throw std::invalid_argument("f19_series: a must be nonzero");
    PairingSeries::Caps caps{(3 * b_order) / 4 + 3, (3 * b_order) / 4 + 3, b_order};
    auto p = PairingSeries::monomial(Rational(-4) / (a * a), 1, 0, 1, caps);
    auto q = PairingSeries::monomial(Rational(2) / 3, 0, 3, 1, caps);
    return PairingSeries::pow_of_one_plus(p, Rational(-1) / 2) * PairingSeries::exp_of(q);
}

PairingSeries f25_series(const Rational& a, int b_order) {
    if (a == 0) throw std::invalid_argument("f25_series: a must be nonzero");
    PairingSeries::Caps caps{(3 * b_order) / 2 + 3, (3 * b_order) / 2 + 3, b_order};
    auto cubic = PairingSeries::monomial(Rational(2) / 3, 0, 3, 1, caps);
    // The j^2 e source term written in the rotated (all-real) convention; the
    // pairing strength -1/2 then reproduces the alternating series.
    auto mixed = PairingSeries::monomial(Rational(-2) / (a * a), 2, 1, 1, caps);
    return PairingSeries::exp_of(cubic) * PairingSeries::exp_of(mixed);
}

void export_series_csv(const AsymptoticSeries& series, std::ostream& os) {
    os << "n,numerator,denominator\n";
    for (std::size_t n = 0; n < series.coefficients.size(); ++n)
        os << n << ',' << boost::multiprecision::numerator(series.coefficients[n]) << ','
           << boost::multiprecision::denominator(series.coefficients[n]) << '\n';
}

} // namespace pim::zerodim
