#pragma once

#include <functional>
#include <iosfwd>
#include <utility>
#include <vector>

namespace pim::cylindrical {

/// Rotationally invariant 2D potential v(r) with derivative, guarded away
/// from the coordinate singularity at r = 0.
struct CentralPotential {
    std::function<double(double)> v;
    std::function<double(double)> dv;
    double r_min = 1e-6;
    double r_max = 1e6;

    static CentralPotential harmonic();          // r^2/2
    static CentralPotential quartic();           // r^4/4
    static CentralPotential harmonic_quartic();  // r^2/2 + r^4/4
};

/// (r, phi, p, l): radius, unwrapped angle, radial momentum, angular momentum.
struct PolarState {
    double r = 1.0;
    double phi = 0.0;
    double p = 0.0;
    double l = 0.0;
};

/// Which form the stored angular source takes: the plain rotation of the
/// Cartesian pair (raw), or the rescaled source that already absorbed the
/// radius factor so dl/dt = j_phi and the measure carries no r^2 weight.
enum class SourceConvention { raw, rescaled };

PolarState cart_to_polar(double x1, double x2, double v1, double v2);
/// Continuity overload: unwraps phi against a previous angle.
PolarState cart_to_polar(double x1, double x2, double v1, double v2, double prev_phi);
std::array<double, 4> polar_to_cart(const PolarState& s);

/// Rotation of a Cartesian source pair into the co-moving radial frame.
std::pair<double, double> rotate_sources(double j1, double j2, double phi);

/// Frame map of a deviation pair (e_r, e_phi) back to Cartesian components.
std::pair<double, double> deviation_to_cartesian(double e_r, double e_phi, double r, double phi);

struct PolarSources {
    std::vector<double> j_r;
    std::vector<double> j_phi;
    SourceConvention convention = SourceConvention::rescaled;
};

struct PolarHistory {
    double dt = 0.0;
    std::vector<double> t, r, phi, p, l;

    PolarState state(std::size_t k) const { return {r[k], phi[k], p[k], l[k]}; }
    std::size_t size() const { return t.size(); }
};

/// Integrates rddot - phidot^2 r + v'(r) = j_r and d/dt(phidot r^2) = j_phi
/// (rescaled convention; the raw convention keeps the radius factor,
/// d/dt(phidot r^2) = r j_phi).
PolarHistory solve_polar(const CentralPotential& potential, const PolarState& init,
                         const PolarSources& sources, double T, double dt);

/// H = p^2/2 + l^2/(2 r^2) + v(r) - j_r r - j_phi phi.
double polar_hamiltonian(const PolarState& state, const CentralPotential& potential,
                         double j_r, double j_phi);

struct JacobianWeight {
    double log_weight = 0.0;
    SourceConvention convention = SourceConvention::rescaled;
};

/// Discrete log of the radial measure factor: sum_i 2 ln r(t_i) under the raw
/// convention; identically zero under the rescaled one, where the phase-space
/// form has no residual radius weight.
JacobianWeight jacobian_log_weight(const PolarHistory& history, SourceConvention convention);

void export_history_csv(const PolarHistory& history, const CentralPotential& potential,
                        const PolarSources* sources, std::ostream& os);

} // namespace pim::cylindrical
