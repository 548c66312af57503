#pragma once

#include <functional>
#include <vector>

#include "pim/potential.hpp"

namespace pim::dynamics {

enum class Integrator { velocity_verlet, rk4 };

/// Time-gridded classical path with velocities and the source that produced it.
struct Trajectory {
    double dt = 0.0;
    std::vector<double> t;
    std::vector<double> x;
    std::vector<double> v;
    std::vector<double> j;  // empty when unsourced
    bool sourced = false;

    std::size_t size() const { return x.size(); }
    double duration() const { return t.empty() ? 0.0 : t.back(); }
};

/// Integrates xddot = -v'(x) + j(t).  A null source solves the free equation.
/// Velocity-Verlet trajectories satisfy the discrete equation of motion
/// (x_{k+1} - 2 x_k + x_{k-1})/dt^2 + v'(x_k) - j_k = 0 exactly.
Trajectory solve_newton(const Potential1D& potential, double x0, double p0, double T,
                        const std::function<double(double)>& source, double dt,
                        Integrator method = Integrator::velocity_verlet);

/// Max interior residual of the discrete equation of motion.
double discrete_eom_residual(const Potential1D& potential, const Trajectory& traj);

/// Conserved energy of an unsourced trajectory (evaluated at t = 0).
double trajectory_energy(const Potential1D& potential, const Trajectory& traj);

/// Virtual deviation from the mean path; endpoint values are pinned to zero.
struct DeviationField {
    std::vector<double> e;

    explicit DeviationField(std::vector<double> samples);
    static DeviationField sine_mode(std::size_t n, double amplitude, int harmonics = 1);
};

/// Pieces of the closed-path action difference S_+(x+e; T+tau) - S_-(x-e; T-tau)
/// around an on-shell mean path.  energy_term and linear_e_term are the
/// extracted linear pieces; remainder_h and remainder_v are the symmetric
/// (per-branch summed) curvature remainders, quadratic in tau and e
/// respectively; odd_residual = total - energy_term - linear_e_term collects
/// the antisymmetric higher-order content, making the bookkeeping exact.
struct ActionDecomposition {
    double total = 0.0;
    double energy_term = 0.0;
    double linear_e_term = 0.0;
    double remainder_h = 0.0;
    double remainder_v = 0.0;
    double odd_residual = 0.0;
};

ActionDecomposition decompose_action(const Potential1D& potential, const Trajectory& x_c,
                                     const DeviationField& e, double tau,
                                     double residual_tol = 1e-6);

/// Green function of the fluctuation operator d^2/dt^2 + v''(x_c(t)) with
/// Dirichlet ends, on the interior nodes of the trajectory grid.
struct FluctuationKernel {
    std::size_t n = 0;  // interior nodes
    double dt = 0.0;
    std::vector<double> curvature;  // v''(x_c(t_i)), interior
    std::vector<double> g;          // row-major n x n

    double operator()(std::size_t i, std::size_t k) const { return g[i * n + k]; }
    /// max |dt * (A G) - I| over all entries, A the discrete operator.
    double operator_residual() const;
};

FluctuationKernel fluctuation_green(const Potential1D& potential, const Trajectory& x_c,
                                    double singular_tol = 1e-10);

/// First-order response delta_x(t) = integral G(t, t1) j(t1) dt1 on the full
/// grid (zero at both ends, matching the kernel's Dirichlet conditions).
std::vector<double> linear_response(const Potential1D& potential, const Trajectory& x_c,
                                    const std::vector<double>& source);

/// Energy/time canonical pair of a single-well confining potential with
/// minimum v(0) = 0.  theta is the time along the orbit measured from the
/// upward crossing of the minimum, in [0, period).
struct ActionAngleState {
    double h = 0.0;
    double theta = 0.0;
};

ActionAngleState to_action_angle(const Potential1D& potential, double x, double p);
std::pair<double, double> from_action_angle(const Potential1D& potential, double h, double theta);
double orbit_period(const Potential1D& potential, double h);
/// Turning points (x_minus, x_plus) of the energy shell.
std::pair<double, double> turning_points(const Potential1D& potential, double h);

/// Numerical Poisson bracket {h, theta} by central differences in (x, p).
double poisson_bracket_h_theta(const Potential1D& potential, double x, double p,
                               double step = 1e-5);

struct ActionAngleHistory {
    double h0 = 0.0;
    double theta0 = 0.0;
    std::vector<double> t;
    std::vector<double> h;
    std::vector<double> theta;
};

/// Trivialized sourced flow: h(t) = h0 + int j_h, theta(t) = theta0 + t + int j_theta.
ActionAngleHistory evolve_action_angle(double h0, double theta0, const std::vector<double>& j_h,
                                       const std::vector<double>& j_theta, double T);
/// Same evolution written as convolution with the retarded kernel (step
/// function with midpoint value 1/2); agrees with evolve_action_angle.
ActionAngleHistory evolve_action_angle_kernel(double h0, double theta0,
                                              const std::vector<double>& j_h,
                                              const std::vector<double>& j_theta, double T);

struct RescaledSources {
    std::vector<double> j_h;      // j * dx_c/dtheta
    std::vector<double> j_theta;  // -j * dx_c/dh
    int widened_steps = 0;        // finite-difference steps that had to be widened
};

/// Transforms a Cartesian source history into the (h, theta) sources along the
/// unperturbed trajectory started at (h0, theta0); partial derivatives of
/// x_c(h, theta) by central finite differences.
RescaledSources rescale_sources(const Potential1D& potential, double h0, double theta0,
                                const std::vector<double>& source_samples, double T,
                                double dh_step = 1e-4);

/// Retarded projection kernel Theta(t - t') with Theta(0) = 1/2 on a uniform
/// grid of n+1 nodes spanning [0, T].
struct RetardedKernel {
    std::size_t nodes = 0;
    double dt = 0.0;

    double operator()(std::size_t i, std::size_t k) const {
        if (i > k) return 1.0;
        return i == k ? 0.5 : 0.0;
    }
};

struct ProjectionDefects {
    double idempotent;   // sum (g^2 - g) dt^2
    double orthogonal;   // sum g(t-t') g(t'-t) dt^2
};

/// Discrete projection sums of Theta; both are O(dt) boundary defects.
ProjectionDefects retarded_projection_defects(const RetardedKernel& kernel);

} // namespace pim::dynamics
