#include "pim/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <lapacke.h>

#include "pim/quadrature.hpp"

namespace pim::spectral {

namespace quad = pim::quad;

double Spectrum::min_gap() const {
    double g = std::numeric_limits<double>::infinity();
    for (std::size_t n = 1; n < levels.size(); ++n) g = std::min(g, levels[n] - levels[n - 1]);
    return g;
}

void Spectrum::validate(double norm_tol) const {
    if (levels.size() != wavefunctions.size())
        throw std::invalid_argument("Spectrum: levels/wavefunctions size mismatch");
    for (std::size_t n = 1; n < levels.size(); ++n)
        if (!(levels[n] > levels[n - 1]))
            throw std::invalid_argument("Spectrum: levels must be strictly ascending");
    for (const auto& psi : wavefunctions) {
        double s = 0.0;
        for (double p : psi) s += p * p;
        if (std::abs(s * dx - 1.0) > norm_tol)
            throw std::invalid_argument("Spectrum: wavefunction not normalized");
    }
}

Spectrum solve_spectrum(const Potential1D& potential, int n_levels, int grid_points) {
    if (grid_points < 200) throw std::invalid_argument("solve_spectrum: need >= 200 grid points");
    if (n_levels < 1) throw std::invalid_argument("solve_spectrum: need >= 1 level");

    const double L = potential.box_halfwidth;
    const int n = grid_points - 2;  // interior nodes
    const double dx = 2.0 * L / (grid_points - 1);
    const double inv_dx2 = 1.0 / (dx * dx);

    std::vector<double> diag(n), offdiag(n - 1);
    for (int i = 0; i < n; ++i) {
        const double x = -L + (i + 1) * dx;
        diag[i] = inv_dx2 + potential.v(x);
    }
    std::fill(offdiag.begin(), offdiag.end(), -0.5 * inv_dx2);

    std::vector<double> w(n), zmat(static_cast<std::size_t>(n) * n_levels);
    std::vector<lapack_int> isuppz(2 * n_levels);
    lapack_int found = 0;
    lapack_int info = LAPACKE_dstevr(LAPACK_ROW_MAJOR, 'V', 'I', n, diag.data(), offdiag.data(),
                                     0.0, 0.0, 1, n_levels, 0.0, &found, w.data(), zmat.data(),
                                     n_levels, isuppz.data());
    if (info != 0 || found < n_levels)
        throw NumericError("solve_spectrum: eigensolver failed (info=" + std::to_string(info) + ")");

    Spectrum spec;
    spec.x_min = -L;
    spec.dx = dx;
    spec.levels.assign(w.begin(), w.begin() + n_levels);
    spec.wavefunctions.resize(n_levels);
    const double inv_sqrt_dx = 1.0 / std::sqrt(dx);
    for (int k = 0; k < n_levels; ++k) {
        auto& psi = spec.wavefunctions[k];
        psi.assign(grid_points, 0.0);
        double edge = 0.0, peak = 0.0;
        for (int i = 0; i < n; ++i) {
            psi[i + 1] = zmat[static_cast<std::size_t>(i) * n_levels + k] * inv_sqrt_dx;
            peak = std::max(peak, std::abs(psi[i + 1]));
        }
        edge = std::max(std::abs(psi[1]), std::abs(psi[grid_points - 2]));
        if (edge > 1e-8 * peak)
            throw NumericError("solve_spectrum: level " + std::to_string(k) +
                                   " leaks into the box walls; enlarge the box",
                               edge / peak);
    }
    spec.validate(1e-10);
    return spec;
}

namespace {

double interpolate(const Spectrum& spec, const std::vector<double>& psi, double x) {
    if (x < spec.x_min || x > spec.x_max())
        throw std::invalid_argument("amplitude_spectral: point outside the grid box");
    const double s = (x - spec.x_min) / spec.dx;
    const auto i = std::min(static_cast<std::size_t>(s), spec.grid_size() - 2);
    const double f = s - static_cast<double>(i);
    return (1.0 - f) * psi[i] + f * psi[i + 1];
}

} // namespace

std::complex<double> amplitude_spectral(const Spectrum& spectrum, double x1, double x2,
                                        double E, double epsilon) {
    if (epsilon <= 0.0) throw std::invalid_argument("amplitude_spectral: epsilon must be positive");
    std::complex<double> sum = 0.0;
    for (std::size_t n = 0; n < spectrum.levels.size(); ++n) {
        const double num = interpolate(spectrum, spectrum.wavefunctions[n], x2) *
                           interpolate(spectrum, spectrum.wavefunctions[n], x1);
        sum += num / std::complex<double>(E - spectrum.levels[n], epsilon);
    }
    return sum;
}

double probe_R(const Spectrum& spectrum, double E, double epsilon) {
    if (epsilon <= 0.0) throw std::invalid_argument("probe_R: epsilon must be positive");
    double sum = 0.0;
    for (double En : spectrum.levels) {
        const double d = E - En;
        sum += 1.0 / (d * d + epsilon * epsilon);
    }
    return sum;
}

void ProbeConfig::validate() const {
    if (epsilon <= 0.0) throw std::invalid_argument("ProbeConfig: epsilon must be positive");
    if (effective_t_max() < 10.0 / epsilon - 1e-9)
        throw std::invalid_argument("ProbeConfig: t_max must be at least 10/epsilon");
}

double proper_time_R(const Spectrum& spectrum, double E, const ProbeConfig& config) {
    config.validate();
    const double eps = config.epsilon;
    const double t_max = config.effective_t_max();

    double total = 0.0;
    for (double En : spectrum.levels) {
        const double delta = E - En;

        // inner oscillatory integral over |tau| <= T
        auto inner = [&](double T) {
            if (T <= 0.0) return 0.0;
            auto f = [&](double tau) { return std::cos(2.0 * delta * tau); };
            auto rate = [&](double) { return 2.0 * std::abs(delta); };
            auto pts = quad::oscillatory_breakpoints(0.0, T, rate, 1.5);
            return 2.0 * quad::integrate_panels_real(f, pts);
        };

        auto outer_f = [&](double T) { return std::exp(-2.0 * eps * T) * inner(T); };
        auto outer_rate = [&](double) { return 2.0 * std::abs(delta) + 2.0 * eps; };
        auto pts = quad::oscillatory_breakpoints(0.0, t_max, outer_rate, 1.5);
        double err = 0.0;
        double value = 2.0 * quad::integrate_panels_real(outer_f, pts, &err);

        // analytic tail for T > t_max: inner integral is 2 sin(2 delta T)/(2 delta)
        const std::complex<double> s(-2.0 * eps, 2.0 * delta);
        const std::complex<double> tail_num = -std::exp(s * t_max) / s;
        double tail;
        if (std::abs(delta) > 1e-12) {
            tail = 2.0 * std::imag(tail_num) / delta;
        } else {
            // sin(2 delta T)/delta -> 2T
            tail = 2.0 * std::exp(-2.0 * eps * t_max) * (2.0 * t_max / (2.0 * eps) +
                                                         2.0 / (4.0 * eps * eps));
        }
        const double level_value = value + tail;
        const double exact_scale = 1.0 / (delta * delta + eps * eps);
        if (err > config.rel_tol * exact_scale)
            throw NumericError("proper_time_R: quadrature tolerance not reached", err);
        total += level_value;
    }
    return total;
}

double proper_time_R_relaxed(const Spectrum& spectrum, double E, double epsilon, double eta) {
    if (epsilon <= 0.0 || eta <= 0.0)
        throw std::invalid_argument("proper_time_R_relaxed: epsilon and eta must be positive");

    // Damped T-integral evaluated to its cutoff plus exact tail.
    const double t_max = 10.0 / epsilon;
    auto damp = [&](double T) { return std::exp(-2.0 * epsilon * T); };
    double outer = quad::integrate(damp, 0.0, t_max, 1e-14, 1e-14) +
                   std::exp(-2.0 * epsilon * t_max) / (2.0 * epsilon);

    double total = 0.0;
    for (double En : spectrum.levels) {
        const double delta = E - En;
        // inner over the whole tau axis with Abel damping e^{-eta |tau|}
        const double tau_max = 40.0 / eta;
        auto f = [&](double tau) { return std::cos(2.0 * delta * tau) * std::exp(-eta * tau); };
        auto rate = [&](double) { return 2.0 * std::abs(delta) + eta; };
        auto pts = quad::oscillatory_breakpoints(0.0, tau_max, rate, 1.5);
        double inner = 2.0 * quad::integrate_panels_real(f, pts);
        const std::complex<double> s(-eta, 2.0 * delta);
        inner += 2.0 * std::real(-std::exp(s * tau_max) / s);
        total += 2.0 * outer * inner;
    }
    return total;
}

double unitarity_residual(const Spectrum& spectrum, double E, double epsilon) {
    if (epsilon <= 0.0) throw std::invalid_argument("unitarity_residual: epsilon must be positive");
    std::complex<double> trace = 0.0;
    for (std::size_t i = 0; i < spectrum.grid_size(); ++i) {
        std::complex<double> diag = 0.0;
        for (std::size_t n = 0; n < spectrum.levels.size(); ++n) {
            const double p = spectrum.wavefunctions[n][i];
            diag += p * p / std::complex<double>(E - spectrum.levels[n], epsilon);
        }
        trace += diag;
    }
    trace *= spectrum.dx;
    return std::abs(probe_R(spectrum, E, epsilon) + std::imag(trace) / epsilon);
}

void export_levels_csv(const Spectrum& spectrum, std::ostream& os) {
    os << "n,energy\n";
    char buf[64];
    for (std::size_t n = 0; n < spectrum.levels.size(); ++n) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", n, spectrum.levels[n]);
        os << buf;
    }
}

void export_wavefunctions_csv(const Spectrum& spectrum, std::ostream& os) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "# x_min=%.17g dx=%.17g levels=%zu\n", spectrum.x_min,
                  spectrum.dx, spectrum.levels.size());
    os << buf << "x";
    for (std::size_t n = 0; n < spectrum.levels.size(); ++n) os << ",psi" << n;
    os << '\n';
    for (std::size_t i = 0; i < spectrum.grid_size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", spectrum.grid_point(i));
        os << buf;
        for (const auto& psi : spectrum.wavefunctions) {
            std::snprintf(buf, sizeof buf, ",%.17g", psi[i]);
            os << buf;
        }
        os << '\n';
    }
}

} // namespace pim::spectral
