#pragma once

#include <functional>

namespace pim {

/// One-dimensional potential with first and second derivatives, defined on
/// the box [-box_halfwidth, box_halfwidth].
struct Potential1D {
    std::function<double(double)> v;
    std::function<double(double)> dv;
    std::function<double(double)> d2v;
    double box_halfwidth = 12.0;

    static Potential1D harmonic(double omega = 1.0, double box = 12.0);
    /// v = x^4/4 (quartic single well).
    static Potential1D quartic(double box = 12.0);
    /// v = x^2/2 + g x^4/4.
    static Potential1D anharmonic(double g, double box = 12.0);
};

inline Potential1D Potential1D::harmonic(double omega, double box) {
    const double w2 = omega * omega;
    return {[w2](double x) { return 0.5 * w2 * x * x; },
            [w2](double x) { return w2 * x; },
            [w2](double) { return w2; },
            box};
}

inline Potential1D Potential1D::quartic(double box) {
    return {[](double x) { return 0.25 * x * x * x * x; },
            [](double x) { return x * x * x; },
            [](double x) { return 3.0 * x * x; },
            box};
}

inline Potential1D Potential1D::anharmonic(double g, double box) {
    return {[g](double x) { return 0.5 * x * x + 0.25 * g * x * x * x * x; },
            [g](double x) { return x + g * x * x * x; },
            [g](double x) { return 1.0 + 3.0 * g * x * x; },
            box};
}

} // namespace pim
