#include "pim/cylindrical.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "pim/quadrature.hpp"

namespace pim::cylindrical {

CentralPotential CentralPotential::harmonic() {
    return {[](double r) { return 0.5 * r * r; }, [](double r) { return r; }, 1e-6, 1e6};
}

CentralPotential CentralPotential::quartic() {
    return {[](double r) { return 0.25 * r * r * r * r; }, [](double r) { return r * r * r; },
            1e-6, 1e6};
}

CentralPotential CentralPotential::harmonic_quartic() {
    return {[](double r) { return 0.5 * r * r + 0.25 * r * r * r * r; },
            [](double r) { return r + r * r * r; }, 1e-6, 1e6};
}

PolarState cart_to_polar(double x1, double x2, double v1, double v2) {
    const double r = std::hypot(x1, x2);
    if (r == 0.0) throw std::invalid_argument("cart_to_polar: undefined at the origin");
    PolarState s;
    s.r = r;
    s.phi = std::atan2(x2, x1);
    s.p = (x1 * v1 + x2 * v2) / r;        // rdot
    s.l = x1 * v2 - x2 * v1;              // phidot r^2
    return s;
}

PolarState cart_to_polar(double x1, double x2, double v1, double v2, double prev_phi) {
    PolarState s = cart_to_polar(x1, x2, v1, v2);
    const double two_pi = 2.0 * M_PI;
    double d = s.phi - prev_phi;
    d -= two_pi * std::round(d / two_pi);
    s.phi = prev_phi + d;
    return s;
}

std::array<double, 4> polar_to_cart(const PolarState& s) {
    const double c = std::cos(s.phi), sn = std::sin(s.phi);
    const double phidot = s.l / (s.r * s.r);
    return {s.r * c, s.r * sn, s.p * c - s.r * phidot * sn, s.p * sn + s.r * phidot * c};
}

std::pair<double, double> rotate_sources(double j1, double j2, double phi) {
    const double c = std::cos(phi), s = std::sin(phi);
    return {j1 * c + j2 * s, -j1 * s + j2 * c};
}

std::pair<double, double> deviation_to_cartesian(double e_r, double e_phi, double r, double phi) {
    if (!(r > 0.0)) throw std::invalid_argument("deviation_to_cartesian: r must be positive");
    const double c = std::cos(phi), s = std::sin(phi);
    return {e_r * c - r * e_phi * s, e_r * s + r * e_phi * c};
}

PolarHistory solve_polar(const CentralPotential& potential, const PolarState& init,
                         const PolarSources& sources, double T, double dt) {
    if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("solve_polar: T, dt must be positive");
    const auto steps = static_cast<std::size_t>(std::llround(T / dt));
    if (std::abs(steps * dt - T) > 1e-9 * T)
        throw std::invalid_argument("solve_polar: T must be a multiple of dt");
    if (!(init.r > potential.r_min))
        throw std::invalid_argument("solve_polar: initial radius below the r_min guard");
    if (!sources.j_r.empty() && sources.j_r.size() != steps + 1)
        throw std::invalid_argument("solve_polar: source grid mismatch");
    if (sources.j_r.size() != sources.j_phi.size())
        throw std::invalid_argument("solve_polar: mismatched source components");

    // linear interpolation of gridded sources at RK substeps
    auto sample = [&](const std::vector<double>& f, double t) {
        if (f.empty()) return 0.0;
        const double s = t / dt;
        auto i = std::min(static_cast<std::size_t>(s), f.size() - 2);
        const double frac = s - static_cast<double>(i);
        return (1.0 - frac) * f[i] + frac * f[i + 1];
    };

    const bool raw = sources.convention == SourceConvention::raw;
    struct State {
        double r, phi, p, l;
    };
    auto rhs = [&](double t, const State& s) {
        const double jr = sample(sources.j_r, t);
        const double jp = sample(sources.j_phi, t);
        State d;
        d.r = s.p;
        d.phi = s.l / (s.r * s.r);
        d.p = s.l * s.l / (s.r * s.r * s.r) - potential.dv(s.r) + jr;
        d.l = raw ? s.r * jp : jp;
        return d;
    };

    PolarHistory hist;
    hist.dt = dt;
    hist.t.resize(steps + 1);
    hist.r.resize(steps + 1);
    hist.phi.resize(steps + 1);
    hist.p.resize(steps + 1);
    hist.l.resize(steps + 1);

    State s{init.r, init.phi, init.p, init.l};
    for (std::size_t k = 0; k <= steps; ++k) {
        hist.t[k] = k * dt;
        hist.r[k] = s.r;
        hist.phi[k] = s.phi;
        hist.p[k] = s.p;
        hist.l[k] = s.l;
        if (k == steps) break;

        const double t = hist.t[k];
        auto add = [](const State& a, double w, const State& b) {
            return State{a.r + w * b.r, a.phi + w * b.phi, a.p + w * b.p, a.l + w * b.l};
        };
        State k1 = rhs(t, s);
        State k2 = rhs(t + 0.5 * dt, add(s, 0.5 * dt, k1));
        State k3 = rhs(t + 0.5 * dt, add(s, 0.5 * dt, k2));
        State k4 = rhs(t + dt, add(s, dt, k3));
        s.r += dt / 6.0 * (k1.r + 2.0 * k2.r + 2.0 * k3.r + k4.r);
        s.phi += dt / 6.0 * (k1.phi + 2.0 * k2.phi + 2.0 * k3.phi + k4.phi);
        s.p += dt / 6.0 * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p);
        s.l += dt / 6.0 * (k1.l + 2.0 * k2.l + 2.0 * k3.l + k4.l);
        if (!(s.r > potential.r_min))
            throw NumericError("solve_polar: radius fell below the r_min guard at t=" +
                               std::to_string(hist.t[k] + dt));
    }
    return hist;
}

double polar_hamiltonian(const PolarState& state, const CentralPotential& potential,
                         double j_r, double j_phi) {
    if (!(state.r > 0.0)) throw std::invalid_argument("polar_hamiltonian: r must be positive");
    return 0.5 * state.p * state.p + state.l * state.l / (2.0 * state.r * state.r) +
           potential.v(state.r) - j_r * state.r - j_phi * state.phi;
}

JacobianWeight jacobian_log_weight(const PolarHistory& history, SourceConvention convention) {
    JacobianWeight out;
    out.convention = convention;
    if (convention == SourceConvention::rescaled) return out;  // weight absorbed, exactly zero
    double s = 0.0;
    for (double r : history.r) {
        if (!(r > 0.0)) throw std::invalid_argument("jacobian_log_weight: non-positive radius");
        s += 2.0 * std::log(r);
    }
    out.log_weight = s;
    return out;
}

void export_history_csv(const PolarHistory& history, const CentralPotential& potential,
                        const PolarSources* sources, std::ostream& os) {
    os << "t,r,phi,p,l,H";
    if (sources) os << ",j_r,j_phi";
    os << '\n';
    char buf[256];
    for (std::size_t k = 0; k < history.size(); ++k) {
        const auto s = history.state(k);
        const double jr = sources && !sources->j_r.empty() ? sources->j_r[k] : 0.0;
        const double jp = sources && !sources->j_phi.empty() ? sources->j_phi[k] : 0.0;
        const double H = polar_hamiltonian(s, potential, jr, jp);
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", history.t[k], s.r,
                      s.phi, s.p, s.l, H);
        os << buf;
        if (sources) {
            std::snprintf(buf, sizeof buf, ",%.17g,%.17g", jr, jp);
            os << buf;
        }
        os << '\n';
    }
}

} // namespace pim::cylindrical
