#pragma once

#include <complex>
#include <iosfwd>
#include <vector>

#include "pim/potential.hpp"

namespace pim::spectral {

/// Bound-state levels and grid-sampled eigenfunctions of a 1D potential on a
/// Dirichlet box.  Wavefunctions are normalized so dx * sum psi^2 = 1.
struct Spectrum {
    std::vector<double> levels;
    std::vector<std::vector<double>> wavefunctions;  // one row per level, grid samples
    double x_min = 0.0;
    double dx = 0.0;

    std::size_t grid_size() const { return wavefunctions.empty() ? 0 : wavefunctions[0].size(); }
    double grid_point(std::size_t i) const { return x_min + static_cast<double>(i) * dx; }
    double x_max() const { return grid_point(grid_size() - 1); }
    double min_gap() const;

    /// Validates ordering and normalization; throws on violation.
    void validate(double norm_tol = 1e-10) const;
};

/// Finite-difference eigensolve on [-L, L] with Dirichlet walls.
/// grid_points counts all stored samples including the wall zeros.
Spectrum solve_spectrum(const Potential1D& potential, int n_levels, int grid_points);

/// Spectral-representation amplitude sum_n psi_n(x2) psi_n(x1) / (E - E_n + i eps),
/// with linear interpolation of the stored samples.
std::complex<double> amplitude_spectral(const Spectrum& spectrum, double x1, double x2,
                                        double E, double epsilon);

/// End-point integrated probability: the Lorentzian comb sum_n 1/((E-E_n)^2 + eps^2).
double probe_R(const Spectrum& spectrum, double E, double epsilon);

struct ProbeConfig {
    double epsilon = 0.05;
    double t_max = 0.0;  // 0 means 10/epsilon
    double rel_tol = 1e-6;

    double effective_t_max() const { return t_max > 0.0 ? t_max : 10.0 / epsilon; }
    void validate() const;
};

/// Proper-time evaluation of the probe: per level, outer damped T-integral of
/// the inner oscillatory tau-integral over |tau| <= T plus the analytic tail
/// beyond t_max.  Reproduces probe_R up to quadrature error.
double proper_time_R(const Spectrum& spectrum, double E, const ProbeConfig& config);

/// Domain-relaxed variant (|tau| <= infinity, Abel-damped with rate eta).
/// As eta -> 0 this vanishes for E off the spectrum: the off-shell
/// contributions cancel, and each level's integrated weight stays pi/eps.
double proper_time_R_relaxed(const Spectrum& spectrum, double E, double epsilon, double eta);

/// | R(E) + (1/eps) Im Tr A |, the probe form of the unitarity identity.
double unitarity_residual(const Spectrum& spectrum, double E, double epsilon);

void export_levels_csv(const Spectrum& spectrum, std::ostream& os);
void export_wavefunctions_csv(const Spectrum& spectrum, std::ostream& os);

} // namespace pim::spectral
