#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "pim/quadrature.hpp"
#include "pim/spectral.hpp"

using namespace pim;
namespace sp = pim::spectral;

namespace {

sp::Spectrum harmonic(int levels = 8, int points = 2000) {
    return sp::solve_spectrum(Potential1D::harmonic(), levels, points);
}

// hand-built spectrum for the analytic edge cases
sp::Spectrum single_level(double E0) {
    sp::Spectrum s;
    s.x_min = -5.0;
    s.dx = 0.01;
    const std::size_t n = 1001;
    std::vector<double> psi(n);
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = s.x_min + i * s.dx;
        psi[i] = std::exp(-x * x / 2.0);
        norm += psi[i] * psi[i];
    }
    norm = std::sqrt(norm * s.dx);
    for (double& p : psi) p /= norm;
    s.levels = {E0};
    s.wavefunctions = {psi};
    s.validate();
    return s;
}

} // namespace

TEST_CASE("harmonic spectrum from the finite-difference box") {
    auto s = harmonic();
    CHECK(s.levels[0] == doctest::Approx(0.5).epsilon(2e-4));
    CHECK(std::abs(s.levels[0] - 0.5) < 1e-4);
    CHECK(std::abs(s.levels[1] - 1.5) < 1e-4);
    CHECK(std::abs(s.levels[7] - 7.5) < 2e-3);
    // normalization per stored convention
    for (const auto& psi : s.wavefunctions) {
        double acc = 0.0;
        for (double p : psi) acc += p * p;
        CHECK(std::abs(acc * s.dx - 1.0) < 1e-10);
    }
}

TEST_CASE("halving the grid step reduces the ground-level error fourfold") {
    auto coarse = sp::solve_spectrum(Potential1D::harmonic(), 1, 1000);
    auto fine = sp::solve_spectrum(Potential1D::harmonic(), 1, 1999);
    const double e_coarse = std::abs(coarse.levels[0] - 0.5);
    const double e_fine = std::abs(fine.levels[0] - 0.5);
    CHECK(e_coarse / e_fine == doctest::Approx(4.0).epsilon(0.08));
}

TEST_CASE("steep walls approach the particle-in-a-box level trend") {
    Potential1D box_like{[](double x) { return 1e6 * std::pow(x / 2.0, 16); },
                         [](double x) { return 8e6 * std::pow(x / 2.0, 15) / 2.0; },
                         [](double x) { return 6e7 * std::pow(x / 2.0, 14) / 4.0; },
                         3.0};
    auto s = sp::solve_spectrum(box_like, 3, 1500);
    CHECK(s.levels[1] / s.levels[0] == doctest::Approx(4.0).epsilon(0.12));
    CHECK(s.levels[2] / s.levels[0] == doctest::Approx(9.0).epsilon(0.12));
}

TEST_CASE("boundary leakage raises an explicit error") {
    // a shallow box cannot hold the requested number of levels
    CHECK_THROWS_AS(sp::solve_spectrum(Potential1D::harmonic(1.0, 3.0), 8, 600),
                    pim::NumericError);
}

TEST_CASE("spectral amplitude: one term of the sum") {
    auto s = single_level(0.5);
    const double eps = 0.05;
    auto A = sp::amplitude_spectral(s, 0.3, -0.7, 1.1, eps);
    // rebuild from the stored samples at the same interpolation points
    auto interp = [&](double x) {
        const double u = (x - s.x_min) / s.dx;
        const auto i = static_cast<std::size_t>(u);
        const double f = u - i;
        return (1.0 - f) * s.wavefunctions[0][i] + f * s.wavefunctions[0][i + 1];
    };
    std::complex<double> direct =
        interp(-0.7) * interp(0.3) / std::complex<double>(1.1 - 0.5, eps);
    CHECK(std::abs(A - direct) < 1e-14);
}

TEST_CASE("spectral amplitude symmetry and domain guard") {
    auto s = harmonic(4, 1200);
    auto a12 = sp::amplitude_spectral(s, 0.4, -1.1, 2.0, 0.05);
    auto a21 = sp::amplitude_spectral(s, -1.1, 0.4, 2.0, 0.05);
    CHECK(std::abs(a12 - a21) < 1e-14);
    CHECK_THROWS_AS(sp::amplitude_spectral(s, 20.0, 0.0, 1.0, 0.05), std::invalid_argument);
}

TEST_CASE("diagonal amplitude near resonance is dominated by the level term") {
    auto s = single_level(0.5);
    const double eps = 1e-3;
    auto A = sp::amplitude_spectral(s, 0.2, 0.2, 0.5, eps);
    auto interp = [&](double x) {
        const double u = (x - s.x_min) / s.dx;
        const auto i = static_cast<std::size_t>(u);
        const double f = u - i;
        return (1.0 - f) * s.wavefunctions[0][i] + f * s.wavefunctions[0][i + 1];
    };
    CHECK(A.imag() == doctest::Approx(-interp(0.2) * interp(0.2) / eps).epsilon(1e-12));
}

TEST_CASE("probe R: single level at resonance") {
    auto s = single_level(1.3);
    const double eps = 0.02;
    CHECK(sp::probe_R(s, 1.3, eps) == doctest::Approx(1.0 / (eps * eps)).epsilon(1e-14));
}

TEST_CASE("probe R midway between two levels is the tail sum") {
    sp::Spectrum s = single_level(1.0);
    s.levels = {1.0, 2.0};
    s.wavefunctions.push_back(s.wavefunctions[0]);  // levels drive R; functions are irrelevant
    const double g = 1.0;
    const double eps = 1e-4;
    const double r = sp::probe_R(s, 1.5, eps);
    CHECK(r == doctest::Approx(8.0 / (g * g)).epsilon(1e-6));
}

TEST_CASE("probe R window integral counts levels") {
    auto s = harmonic();
    // margins are 100 eps; the analytic tail deficit at this eps is ~6e-3
    const double eps = 0.005;
    double acc = 0.0;
    const double dE = eps / 50.0;
    const auto steps = static_cast<std::size_t>(std::lround(3.0 / dE));
    for (std::size_t k = 0; k <= steps; ++k) {
        const double w = (k == 0 || k == steps) ? 0.5 : 1.0;
        acc += w * sp::probe_R(s, k * dE, eps);
    }
    CHECK(std::abs(acc * dE * eps / M_PI - 3.0) < 1e-2);
}

TEST_CASE("probe R depends only on levels (phase flips are invisible)") {
    auto s = harmonic(4, 1200);
    auto flipped = s;
    for (auto& psi : flipped.wavefunctions)
        for (double& p : psi) p = -p;
    CHECK(sp::probe_R(s, 1.7, 0.05) == sp::probe_R(flipped, 1.7, 0.05));
}

TEST_CASE("proper time route: single level reproduces the Lorentzian") {
    auto s = single_level(0.8);
    sp::ProbeConfig pc;
    pc.epsilon = 0.05;
    const double got = sp::proper_time_R(s, 1.1, pc);
    const double exact = 1.0 / (0.3 * 0.3 + 0.05 * 0.05);
    CHECK(got == doctest::Approx(exact).epsilon(1e-7));
}

TEST_CASE("proper time route matches the probe on the harmonic spectrum") {
    auto s = harmonic();
    sp::ProbeConfig pc;
    pc.epsilon = 0.05;
    const double pr = sp::probe_R(s, 1.0, 0.05);
    const double pt = sp::proper_time_R(s, 1.0, pc);
    CHECK(std::abs(pt - pr) / pr < 1e-3);
}

TEST_CASE("proper time truncation: doubling t_max moves the result below the tail bound") {
    auto s = single_level(0.9);
    sp::ProbeConfig a;
    a.epsilon = 0.05;
    a.t_max = 10.0 / a.epsilon;
    sp::ProbeConfig b = a;
    b.t_max = 2.0 * a.t_max;
    const double va = sp::proper_time_R(s, 1.4, a);
    const double vb = sp::proper_time_R(s, 1.4, b);
    CHECK(std::abs(vb - va) < std::exp(-2.0 * a.epsilon * a.t_max));
}

TEST_CASE("proper time config validation") {
    auto s = single_level(0.5);
    sp::ProbeConfig pc;
    pc.epsilon = 0.05;
    pc.t_max = 50.0;  // below 10/epsilon
    CHECK_THROWS_AS(sp::proper_time_R(s, 1.0, pc), std::invalid_argument);
}

TEST_CASE("relaxed tau domain cancels off-peak contributions as eta -> 0") {
    auto s = harmonic(4, 1200);
    const double E = 1.0;  // midway between levels
    const double eps = 0.05;
    const double wide = sp::proper_time_R_relaxed(s, E, eps, 0.1);
    const double narrow = sp::proper_time_R_relaxed(s, E, eps, 2e-4);
    CHECK(narrow < 0.005 * wide);  // linear suppression in eta
    CHECK(narrow < 0.01 * sp::probe_R(s, E, eps));
    // the integrated weight per level survives: at resonance the relaxed probe
    // blows up like 2/(eps eta) instead of vanishing
    const double on_peak = sp::proper_time_R_relaxed(s, 0.5, eps, 2e-4);
    CHECK(on_peak == doctest::Approx(2.0 / (eps * 2e-4)).epsilon(1e-2));
}

TEST_CASE("unitarity residual: single level is an exact identity") {
    auto s = single_level(0.5);
    CHECK(sp::unitarity_residual(s, 0.9, 0.05) < 1e-12);
}

TEST_CASE("unitarity residual on the harmonic spectrum") {
    auto s = harmonic();
    for (double E : {0.7, 2.2, 3.9}) CHECK(sp::unitarity_residual(s, E, 0.05) < 1e-10);
}

TEST_CASE("csv export round shape") {
    auto s = harmonic(2, 600);
    std::ostringstream lv, wf;
    sp::export_levels_csv(s, lv);
    sp::export_wavefunctions_csv(s, wf);
    CHECK(lv.str().substr(0, 9) == "n,energy\n");
    CHECK(wf.str().find("x,psi0,psi1") != std::string::npos);
}
