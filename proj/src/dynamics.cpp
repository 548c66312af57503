#include "pim/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <lapacke.h>

#include "pim/quadrature.hpp"

namespace pim::dynamics {

namespace quad = pim::quad;

Trajectory solve_newton(const Potential1D& potential, double x0, double p0, double T,
                        const std::function<double(double)>& source, double dt,
                        Integrator method) {
    if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("solve_newton: T, dt must be positive");
    const auto steps = static_cast<std::size_t>(std::llround(T / dt));
    if (std::abs(steps * dt - T) > 1e-9 * T)
        throw std::invalid_argument("solve_newton: T must be a multiple of dt");

    Trajectory traj;
    traj.dt = dt;
    traj.sourced = static_cast<bool>(source);
    traj.t.resize(steps + 1);
    traj.x.resize(steps + 1);
    traj.v.resize(steps + 1);
    traj.j.resize(steps + 1, 0.0);
    for (std::size_t k = 0; k <= steps; ++k) traj.t[k] = k * dt;
    if (source)
        for (std::size_t k = 0; k <= steps; ++k) traj.j[k] = source(traj.t[k]);

    auto force = [&](double x, double t) {
        return -potential.dv(x) + (source ? source(t) : 0.0);
    };

    traj.x[0] = x0;
    traj.v[0] = p0;
    const double box = potential.box_halfwidth;

    if (method == Integrator::velocity_verlet) {
        double f = force(x0, 0.0);
        for (std::size_t k = 0; k < steps; ++k) {
            const double x_new = traj.x[k] + dt * traj.v[k] + 0.5 * dt * dt * f;
            const double f_new = force(x_new, traj.t[k + 1]);
            traj.x[k + 1] = x_new;
            traj.v[k + 1] = traj.v[k] + 0.5 * dt * (f + f_new);
            f = f_new;
            if (std::abs(x_new) > box)
                throw NumericError("solve_newton: trajectory escapes the box at t=" +
                                   std::to_string(traj.t[k + 1]));
        }
    } else {
        for (std::size_t k = 0; k < steps; ++k) {
            const double t = traj.t[k];
            const double x = traj.x[k];
            const double v = traj.v[k];
            const double k1x = v, k1v = force(x, t);
            const double k2x = v + 0.5 * dt * k1v, k2v = force(x + 0.5 * dt * k1x, t + 0.5 * dt);
            const double k3x = v + 0.5 * dt * k2v, k3v = force(x + 0.5 * dt * k2x, t + 0.5 * dt);
            const double k4x = v + dt * k3v, k4v = force(x + dt * k3x, t + dt);
            traj.x[k + 1] = x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            traj.v[k + 1] = v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            if (std::abs(traj.x[k + 1]) > box)
                throw NumericError("solve_newton: trajectory escapes the box at t=" +
                                   std::to_string(traj.t[k + 1]));
        }
    }
    return traj;
}

double discrete_eom_residual(const Potential1D& potential, const Trajectory& traj) {
    double worst = 0.0;
    const double inv_dt2 = 1.0 / (traj.dt * traj.dt);
    for (std::size_t k = 1; k + 1 < traj.size(); ++k) {
        const double acc = (traj.x[k + 1] - 2.0 * traj.x[k] + traj.x[k - 1]) * inv_dt2;
        worst = std::max(worst, std::abs(acc + potential.dv(traj.x[k]) - traj.j[k]));
    }
    return worst;
}

double trajectory_energy(const Potential1D& potential, const Trajectory& traj) {
    return 0.5 * traj.v[0] * traj.v[0] + potential.v(traj.x[0]);
}

DeviationField::DeviationField(std::vector<double> samples) : e(std::move(samples)) {
    if (e.size() < 3) throw std::invalid_argument("DeviationField: need at least 3 samples");
    if (e.front() != 0.0 || e.back() != 0.0)
        throw std::invalid_argument("DeviationField: endpoint values must be exactly zero");
}

DeviationField DeviationField::sine_mode(std::size_t n, double amplitude, int harmonics) {
    std::vector<double> e(n, 0.0);
    for (std::size_t k = 1; k + 1 < n; ++k)
        e[k] = amplitude * std::sin(harmonics * M_PI * static_cast<double>(k) /
                                    static_cast<double>(n - 1));
    e.front() = e.back() = 0.0;
    return DeviationField(std::move(e));
}

namespace {

// Lagrangian samples v^2/2 - V(x).
std::vector<double> lagrangian_samples(const Potential1D& pot, const std::vector<double>& x,
                                       const std::vector<double>& v) {
    std::vector<double> L(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) L[k] = 0.5 * v[k] * v[k] - pot.v(x[k]);
    return L;
}

// Trapezoid of samples from 0 to the (possibly fractional) time `upto`.
double action_from_samples(const std::vector<double>& L, double dt, double upto) {
    if (upto <= 0.0) return 0.0;
    const double s = upto / dt;
    auto full = static_cast<std::size_t>(s);
    full = std::min(full, L.size() - 1);
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 <= full; ++k) acc += 0.5 * dt * (L[k] + L[k + 1]);
    const double frac = s - static_cast<double>(full);
    if (frac > 1e-14 && full + 1 < L.size()) {
        const double L_end = L[full] + frac * (L[full + 1] - L[full]);
        acc += 0.5 * frac * dt * (L[full] + L_end);
    }
    return acc;
}

// Second-order finite-difference derivative of gridded samples.
std::vector<double> grid_derivative(const std::vector<double>& f, double dt) {
    const std::size_t n = f.size();
    std::vector<double> d(n);
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dt);
    for (std::size_t k = 1; k + 1 < n; ++k) d[k] = (f[k + 1] - f[k - 1]) / (2.0 * dt);
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dt);
    return d;
}

} // namespace

ActionDecomposition decompose_action(const Potential1D& potential, const Trajectory& x_c,
                                     const DeviationField& dev, double tau,
                                     double residual_tol) {
    if (x_c.sourced)
        throw std::invalid_argument("decompose_action: mean path must solve the unsourced equation");
    if (dev.e.size() != x_c.size())
        throw std::invalid_argument("decompose_action: deviation grid mismatch");
    const double resid = discrete_eom_residual(potential, x_c);
    if (resid > residual_tol)
        throw std::invalid_argument("decompose_action: mean path off-shell, residual " +
                                    std::to_string(resid));
    const double T = x_c.duration();
    if (std::abs(tau) >= T)
        throw std::invalid_argument("decompose_action: |tau| must be below the duration");

    // extend the mean path beyond T by continuing the unsourced flow
    std::vector<double> x_ext = x_c.x;
    std::vector<double> v_ext = x_c.v;
    std::vector<double> e_ext = dev.e;
    if (tau > 0.0) {
        const double dt = x_c.dt;
        const auto extra = static_cast<std::size_t>(std::ceil(tau / dt)) + 1;
        double f = -potential.dv(x_ext.back());
        for (std::size_t k = 0; k < extra; ++k) {
            const double x_new = x_ext.back() + dt * v_ext.back() + 0.5 * dt * dt * f;
            const double f_new = -potential.dv(x_new);
            v_ext.push_back(v_ext.back() + 0.5 * dt * (f + f_new));
            x_ext.push_back(x_new);
            f = f_new;
        }
        e_ext.resize(x_ext.size(), 0.0);
    }

    const double dt = x_c.dt;
    auto e_dot = grid_derivative(e_ext, dt);

    std::vector<double> x_plus(x_ext.size()), v_plus(x_ext.size());
    std::vector<double> x_minus(x_ext.size()), v_minus(x_ext.size());
    for (std::size_t k = 0; k < x_ext.size(); ++k) {
        x_plus[k] = x_ext[k] + e_ext[k];
        v_plus[k] = v_ext[k] + e_dot[k];
        x_minus[k] = x_ext[k] - e_ext[k];
        v_minus[k] = v_ext[k] - e_dot[k];
    }

    const auto L_mean = lagrangian_samples(potential, x_ext, v_ext);
    const auto L_plus = lagrangian_samples(potential, x_plus, v_plus);
    const auto L_minus = lagrangian_samples(potential, x_minus, v_minus);

    const double S_mean_T = action_from_samples(L_mean, dt, T);
    const double S_mean_up = action_from_samples(L_mean, dt, T + tau);
    const double S_mean_dn = action_from_samples(L_mean, dt, T - tau);
    const double S_plus_T = action_from_samples(L_plus, dt, T);
    const double S_plus_up = action_from_samples(L_plus, dt, T + tau);
    const double S_minus_T = action_from_samples(L_minus, dt, T);
    const double S_minus_dn = action_from_samples(L_minus, dt, T - tau);

    // virtual work against the discrete equation-of-motion residual,
    // once per contour branch
    std::vector<double> work(x_c.size(), 0.0);
    const double inv_dt2 = 1.0 / (dt * dt);
    for (std::size_t k = 1; k + 1 < x_c.size(); ++k) {
        const double acc = (x_c.x[k + 1] - 2.0 * x_c.x[k] + x_c.x[k - 1]) * inv_dt2;
        work[k] = dev.e[k] * (acc + potential.dv(x_c.x[k]));
    }

    ActionDecomposition out;
    out.total = S_plus_up - S_minus_dn;
    out.energy_term = -2.0 * tau * trajectory_energy(potential, x_c);
    out.linear_e_term = -2.0 * quad::trapezoid(work, dt);
    out.remainder_h = S_mean_up + S_mean_dn - 2.0 * S_mean_T;
    out.remainder_v = S_plus_T + S_minus_T - 2.0 * S_mean_T;
    out.odd_residual = out.total - out.energy_term - out.linear_e_term;
    return out;
}

FluctuationKernel fluctuation_green(const Potential1D& potential, const Trajectory& x_c,
                                    double singular_tol) {
    if (x_c.sourced)
        throw std::invalid_argument("fluctuation_green: mean path must be unsourced");
    const auto n = x_c.size() - 2;  // interior nodes
    if (n < 3) throw std::invalid_argument("fluctuation_green: grid too coarse");
    const double dt = x_c.dt;
    const double inv_dt2 = 1.0 / (dt * dt);

    FluctuationKernel kernel;
    kernel.n = n;
    kernel.dt = dt;
    kernel.curvature.resize(n);
    for (std::size_t i = 0; i < n; ++i) kernel.curvature[i] = potential.d2v(x_c.x[i + 1]);

    // conjugate-point guard: eigenvalues of the symmetric tridiagonal operator
    {
        std::vector<double> diag(n), off(n - 1, inv_dt2), w(n);
        for (std::size_t i = 0; i < n; ++i) diag[i] = -2.0 * inv_dt2 + kernel.curvature[i];
        lapack_int found = 0;
        std::vector<lapack_int> isuppz(2 * n);
        lapack_int info = LAPACKE_dstevr(LAPACK_ROW_MAJOR, 'N', 'A', static_cast<lapack_int>(n),
                                         diag.data(), off.data(), 0.0, 0.0, 0, 0, 0.0, &found,
                                         w.data(), nullptr, 1, isuppz.data());
        if (info != 0) throw NumericError("fluctuation_green: eigensolver failed");
        double min_abs = std::abs(w[0]), max_abs = std::abs(w[0]);
        for (lapack_int i = 1; i < found; ++i) {
            min_abs = std::min(min_abs, std::abs(w[i]));
            max_abs = std::max(max_abs, std::abs(w[i]));
        }
        if (min_abs < singular_tol * max_abs)
            throw NumericError("fluctuation_green: conjugate point, smallest eigenvalue " +
                                   std::to_string(min_abs),
                               min_abs);
    }

    // Thomas factorization of (sub, diag, super) = (1, -2 + dt^2 v'', 1)/dt^2,
    // then one back-substitution per delta column.
    std::vector<double> diag(n), c_prime(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = -2.0 * inv_dt2 + kernel.curvature[i];

    kernel.g.assign(n * n, 0.0);
    // factor once
    std::vector<double> denom(n);
    c_prime[0] = inv_dt2 / diag[0];
    denom[0] = diag[0];
    for (std::size_t i = 1; i < n; ++i) {
        denom[i] = diag[i] - inv_dt2 * c_prime[i - 1];
        if (i + 1 < n) c_prime[i] = inv_dt2 / denom[i];
    }
    std::vector<double> rhs(n), sol(n);
    for (std::size_t col = 0; col < n; ++col) {
        std::fill(rhs.begin(), rhs.end(), 0.0);
        rhs[col] = 1.0 / dt;
        // forward sweep
        sol[0] = rhs[0] / denom[0];
        for (std::size_t i = 1; i < n; ++i)
            sol[i] = (rhs[i] - inv_dt2 * sol[i - 1]) / denom[i];
        // back substitution
        for (std::size_t i = n - 1; i-- > 0;) sol[i] -= c_prime[i] * sol[i + 1];
        for (std::size_t row = 0; row < n; ++row) kernel.g[row * n + col] = sol[row];
    }
    return kernel;
}

double FluctuationKernel::operator_residual() const {
    const double inv_dt2 = 1.0 / (dt * dt);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            double row = (-2.0 * inv_dt2 + curvature[i]) * g[i * n + k];
            if (i > 0) row += inv_dt2 * g[(i - 1) * n + k];
            if (i + 1 < n) row += inv_dt2 * g[(i + 1) * n + k];
            const double expected = (i == k) ? 1.0 : 0.0;
            worst = std::max(worst, std::abs(row * dt - expected));
        }
    }
    return worst;
}

std::vector<double> linear_response(const Potential1D& potential, const Trajectory& x_c,
                                    const std::vector<double>& source) {
    if (source.size() != x_c.size())
        throw std::invalid_argument("linear_response: source grid mismatch");
    auto kernel = fluctuation_green(potential, x_c);
    std::vector<double> out(x_c.size(), 0.0);
    for (std::size_t i = 0; i < kernel.n; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < kernel.n; ++k) acc += kernel(i, k) * source[k + 1];
        out[i + 1] = acc * kernel.dt;
    }
    return out;
}

namespace {

void require_single_well(const Potential1D& pot) {
    if (std::abs(pot.dv(0.0)) > 1e-12)
        throw std::invalid_argument("action-angle: potential minimum must sit at the origin");
    if (std::abs(pot.v(0.0)) > 1e-12)
        throw std::invalid_argument("action-angle: potential must vanish at its minimum");
}

// Outward turning point on the given side (sign = +1 right, -1 left).
double turning_point_side(const Potential1D& pot, double h, int sign) {
    const double L = pot.box_halfwidth;
    double lo = 0.0, hi = sign * L;
    if (pot.v(hi) <= h)
        throw std::invalid_argument("action-angle: energy shell reaches the box edge");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (pot.v(mid) < h)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Travel time between positions on the same momentum branch:
// int dx / sqrt(2 (h - v(x))).  `a` and `b` are ordinary interior points.
double travel_time_interior(const Potential1D& pot, double h, double a, double b) {
    if (a == b) return 0.0;
    auto f = [&](double x) { return 1.0 / std::sqrt(std::max(2.0 * (h - pot.v(x)), 1e-300)); };
    return quad::integrate(f, a, b, 1e-13, 1e-12);
}

// Travel time from x up to the turning point x_t (x_t > x), where the
// integrand has an inverse-square-root endpoint: substitute x = x_t - u^2.
double travel_time_to_turn(const Potential1D& pot, double h, double x, double x_t) {
    const double span = x_t - x;
    if (span <= 0.0) return 0.0;
    auto f = [&](double u) {
        const double xx = x_t - u * u;
        return 2.0 * u / std::sqrt(std::max(2.0 * (h - pot.v(xx)), 1e-300));
    };
    return quad::integrate(f, 0.0, std::sqrt(span), 1e-13, 1e-12);
}

// Symmetric helper for the left turning point (x_t < x): x = x_t + u^2.
double travel_time_from_turn_left(const Potential1D& pot, double h, double x_t, double x) {
    const double span = x - x_t;
    if (span <= 0.0) return 0.0;
    auto f = [&](double u) {
        const double xx = x_t + u * u;
        return 2.0 * u / std::sqrt(std::max(2.0 * (h - pot.v(xx)), 1e-300));
    };
    return quad::integrate(f, 0.0, std::sqrt(span), 1e-13, 1e-12);
}

struct ShellGeometry {
    double x_minus, x_plus;
    double t_plus;   // time 0 -> x_plus
    double t_minus;  // time x_minus -> 0
    double period;
};

ShellGeometry shell_geometry(const Potential1D& pot, double h) {
    ShellGeometry g;
    g.x_plus = turning_point_side(pot, h, +1);
    g.x_minus = turning_point_side(pot, h, -1);
    g.t_plus = travel_time_to_turn(pot, h, 0.0, g.x_plus);
    g.t_minus = travel_time_from_turn_left(pot, h, g.x_minus, 0.0);
    g.period = 2.0 * (g.t_plus + g.t_minus);
    return g;
}

// time from the reference crossing (x = 0, p > 0) to the point x moving right
double time_rising_right(const Potential1D& pot, double h, const ShellGeometry& g, double x) {
    // split near the turning point for endpoint regularity
    const double split = 0.85 * g.x_plus;
    if (x <= split) return travel_time_interior(pot, h, 0.0, x);
    return g.t_plus - travel_time_to_turn(pot, h, x, g.x_plus);
}

double time_falling_left(const Potential1D& pot, double h, const ShellGeometry& g, double x) {
    // time from x down to the reference 0 on the p < 0 ... measured x -> 0 side
    const double split = 0.85 * g.x_minus;  // note x_minus < 0
    if (x >= split) return travel_time_interior(pot, h, x, 0.0);
    return g.t_minus - travel_time_from_turn_left(pot, h, g.x_minus, x);
}

} // namespace

std::pair<double, double> turning_points(const Potential1D& potential, double h) {
    require_single_well(potential);
    if (!(h > 0.0)) throw std::invalid_argument("turning_points: energy must be positive");
    return {turning_point_side(potential, h, -1), turning_point_side(potential, h, +1)};
}

double orbit_period(const Potential1D& potential, double h) {
    require_single_well(potential);
    if (!(h > 0.0)) throw std::invalid_argument("orbit_period: energy must be positive");
    return shell_geometry(potential, h).period;
}

ActionAngleState to_action_angle(const Potential1D& potential, double x, double p) {
    require_single_well(potential);
    const double h = 0.5 * p * p + potential.v(x);
    if (!(h > 0.0))
        throw std::invalid_argument("to_action_angle: state sits at the potential minimum");
    const auto g = shell_geometry(potential, h);
    if (x < g.x_minus - 1e-12 || x > g.x_plus + 1e-12)
        throw std::invalid_argument("to_action_angle: x outside the classically allowed region");
    const double xc = std::clamp(x, g.x_minus, g.x_plus);

    double theta;
    if (p >= 0.0) {
        theta = xc >= 0.0 ? time_rising_right(potential, h, g, xc)
                          : g.period - time_falling_left(potential, h, g, xc);
    } else if (xc >= 0.0) {
        // descending: reference -> x_plus -> x
        theta = g.t_plus + travel_time_to_turn(potential, h, xc, g.x_plus);
    } else {
        theta = 2.0 * g.t_plus + time_falling_left(potential, h, g, xc);
    }
    ActionAngleState s;
    s.h = h;
    s.theta = theta;
    return s;
}

std::pair<double, double> from_action_angle(const Potential1D& potential, double h, double theta) {
    require_single_well(potential);
    if (!(h > 0.0)) throw std::invalid_argument("from_action_angle: energy must be positive");
    const auto g = shell_geometry(potential, h);
    double th = std::fmod(theta, g.period);
    if (th < 0.0) th += g.period;

    auto bisect = [&](double lo, double hi, auto&& fn, double target) {
        double flo = fn(lo) - target;
        for (int it = 0; it < 100; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double fm = fn(mid) - target;
            if ((fm >= 0.0) == (flo >= 0.0)) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
            if (hi - lo < 1e-15 * (1.0 + std::abs(lo))) break;
        }
        return 0.5 * (lo + hi);
    };

    double x, p;
    if (th <= g.t_plus) {
        // rising from 0 toward x_plus
        x = bisect(0.0, g.x_plus, [&](double xx) { return time_rising_right(potential, h, g, xx); },
                   th);
        p = std::sqrt(std::max(2.0 * (h - potential.v(x)), 0.0));
    } else if (th <= g.t_plus + g.t_plus + g.t_minus) {
        // descending from x_plus to x_minus
        const double since_turn = th - g.t_plus;  // in [0, t_plus + t_minus]
        auto time_down = [&](double xx) {
            // time from x_plus down to xx
            return xx >= 0.0 ? travel_time_to_turn(potential, h, xx, g.x_plus)
                             : g.t_plus + time_falling_left(potential, h, g, xx);
        };
        x = bisect(g.x_minus, g.x_plus, [&](double xx) { return -time_down(xx); }, -since_turn);
        p = -std::sqrt(std::max(2.0 * (h - potential.v(x)), 0.0));
    } else {
        // rising from x_minus back to 0
        const double remaining = g.period - th;  // time still needed to reach 0
        x = bisect(g.x_minus, 0.0, [&](double xx) { return time_falling_left(potential, h, g, xx); },
                   remaining);
        p = std::sqrt(std::max(2.0 * (h - potential.v(x)), 0.0));
    }
    return {x, p};
}

double poisson_bracket_h_theta(const Potential1D& potential, double x, double p, double step) {
    const double dx = step * (1.0 + std::abs(x));
    const double dp = step * (1.0 + std::abs(p));
    const double period = orbit_period(potential, 0.5 * p * p + potential.v(x));

    auto theta_at = [&](double xx, double pp) { return to_action_angle(potential, xx, pp).theta; };
    auto unwrap = [&](double hi, double lo) {
        double d = hi - lo;
        if (d > 0.5 * period) d -= period;
        if (d < -0.5 * period) d += period;
        return d;
    };

    const double dh_dx = potential.dv(x);
    const double dh_dp = p;
    const double dtheta_dp = unwrap(theta_at(x, p + dp), theta_at(x, p - dp)) / (2.0 * dp);
    const double dtheta_dx = unwrap(theta_at(x + dx, p), theta_at(x - dx, p)) / (2.0 * dx);
    return dh_dx * dtheta_dp - dh_dp * dtheta_dx;
}

ActionAngleHistory evolve_action_angle(double h0, double theta0, const std::vector<double>& j_h,
                                       const std::vector<double>& j_theta, double T) {
    if (j_h.size() != j_theta.size() || j_h.size() < 2)
        throw std::invalid_argument("evolve_action_angle: bad source grids");
    const std::size_t n = j_h.size();
    const double dt = T / static_cast<double>(n - 1);

    ActionAngleHistory hist;
    hist.h0 = h0;
    hist.theta0 = theta0;
    hist.t.resize(n);
    for (std::size_t k = 0; k < n; ++k) hist.t[k] = k * dt;
    auto ih = quad::cumulative_trapezoid(j_h, dt);
    auto it = quad::cumulative_trapezoid(j_theta, dt);
    hist.h.resize(n);
    hist.theta.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        hist.h[k] = h0 + ih[k];
        hist.theta[k] = theta0 + hist.t[k] + it[k];
    }
    return hist;
}

ActionAngleHistory evolve_action_angle_kernel(double h0, double theta0,
                                              const std::vector<double>& j_h,
                                              const std::vector<double>& j_theta, double T) {
    if (j_h.size() != j_theta.size() || j_h.size() < 2)
        throw std::invalid_argument("evolve_action_angle_kernel: bad source grids");
    const std::size_t n = j_h.size();
    const double dt = T / static_cast<double>(n - 1);
    RetardedKernel g{n - 1, dt};

    ActionAngleHistory hist;
    hist.h0 = h0;
    hist.theta0 = theta0;
    hist.t.resize(n);
    hist.h.resize(n);
    hist.theta.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        hist.t[i] = i * dt;
        double ah = 0.0, at = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double w = (k == 0 || k + 1 == n) ? 0.5 : 1.0;  // trapezoid ends
            ah += w * g(i, k) * j_h[k];
            at += w * g(i, k) * j_theta[k];
        }
        hist.h[i] = h0 + ah * dt;
        hist.theta[i] = theta0 + hist.t[i] + at * dt;
    }
    return hist;
}

RescaledSources rescale_sources(const Potential1D& potential, double h0, double theta0,
                                const std::vector<double>& source_samples, double T,
                                double dh_step) {
    if (source_samples.size() < 2) throw std::invalid_argument("rescale_sources: bad source grid");
    const std::size_t n = source_samples.size();
    const double dt = T / static_cast<double>(n - 1);

    // unperturbed trajectories at h0 and h0 +- dh, all started at phase theta0
    int widened = 0;
    double dh = dh_step * std::max(1.0, std::abs(h0));
    auto run = [&](double h) {
        auto [x, p] = from_action_angle(potential, h, theta0);
        return solve_newton(potential, x, p, T, nullptr, dt, Integrator::rk4);
    };
    Trajectory mid = run(h0);
    Trajectory up = run(h0 + dh);
    Trajectory dn = run(h0 - dh);

    // widen the step when the finite difference sits below roundoff
    double probe = 0.0;
    for (std::size_t k = 0; k < n; ++k) probe = std::max(probe, std::abs(up.x[k] - dn.x[k]));
    while (probe < 1e3 * 1e-16 * (1.0 + std::abs(h0)) && widened < 6) {
        dh *= 10.0;
        ++widened;
        up = run(h0 + dh);
        dn = run(h0 - dh);
        probe = 0.0;
        for (std::size_t k = 0; k < n; ++k) probe = std::max(probe, std::abs(up.x[k] - dn.x[k]));
    }

    auto dx_dtheta = grid_derivative(mid.x, dt);  // theta advances with time on the orbit

    RescaledSources out;
    out.widened_steps = widened;
    out.j_h.resize(n);
    out.j_theta.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double dxdh = (up.x[k] - dn.x[k]) / (2.0 * dh);
        out.j_h[k] = source_samples[k] * dx_dtheta[k];
        out.j_theta[k] = -source_samples[k] * dxdh;
    }
    return out;
}

ProjectionDefects retarded_projection_defects(const RetardedKernel& kernel) {
    const std::size_t n = kernel.nodes;
    const double dt2 = kernel.dt * kernel.dt;
    double idem = 0.0, ortho = 0.0;
    for (std::size_t i = 0; i <= n; ++i)
        for (std::size_t k = 0; k <= n; ++k) {
            const double gik = kernel(i, k);
            idem += (gik * gik - gik) * dt2;
            ortho += gik * kernel(k, i) * dt2;
        }
    return {idem, ortho};
}

} // namespace pim::dynamics
