#pragma once

#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pim {

/// Thrown when a numerical routine cannot meet its tolerance or budget.
/// Carries the best residual achieved so callers can report diagnostics.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what, double achieved_residual = -1.0)
        : std::runtime_error(what), achieved(achieved_residual) {}
    double achieved;
};

namespace quad {

struct PanelResult {
    double value;
    double error;
};

struct PanelResultC {
    std::complex<double> value;
    double error;
};

/// Single Gauss-Kronrod 7-15 panel on [a, b].
PanelResult gk15(const std::function<double(double)>& f, double a, double b);
PanelResultC gk15c(const std::function<std::complex<double>(double)>& f, double a, double b);

/// Adaptive bisection built on gk15.  Throws NumericError with the achieved
/// error estimate when the subdivision budget is exhausted.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-12, double rel_tol = 1e-12, int max_depth = 48);

/// Composite gk15 over explicit breakpoints (for integrands whose scale of
/// variation is known in advance, e.g. oscillatory phases).
std::complex<double> integrate_panels(const std::function<std::complex<double>(double)>& f,
                                      const std::vector<double>& breakpoints,
                                      double* error_estimate = nullptr);
double integrate_panels_real(const std::function<double(double)>& f,
                             const std::vector<double>& breakpoints,
                             double* error_estimate = nullptr);

/// Breakpoints for an oscillatory integrand on [a, b]: panel ends are placed so
/// that the phase advance |phase'(x)| * width stays below max_phase per panel,
/// and no panel exceeds max_step (the scale of the non-oscillatory envelope).
std::vector<double> oscillatory_breakpoints(double a, double b,
                                            const std::function<double(double)>& phase_rate,
                                            double max_phase, double max_step = 1e30,
                                            std::size_t max_panels = 50'000'000);

/// Trapezoid rule over uniformly gridded samples.
double trapezoid(const std::vector<double>& samples, double dx);

/// Cumulative trapezoid: out[i] = integral of samples over [0, i*dx].
std::vector<double> cumulative_trapezoid(const std::vector<double>& samples, double dx);

} // namespace quad
} // namespace pim
