#include "pim/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace pim::quad {

namespace {

// Kronrod-15 abscissae and weights (QUADPACK dqk15), Gauss-7 embedded.
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

constexpr double kWgk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

constexpr double kWg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

template <typename T>
void gk15_impl(const std::function<T(double)>& f, double a, double b, T& kronrod, double& err) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);

    T fv[15];
    for (int i = 0; i < 7; ++i) {
        fv[i] = f(c - h * kXgk[i]);
        fv[14 - i] = f(c + h * kXgk[i]);
    }
    fv[7] = f(c);

    T resk = kWgk[7] * fv[7];
    T resg = kWg[3] * fv[7];
    for (int i = 0; i < 7; ++i) resk += kWgk[i] * (fv[i] + fv[14 - i]);
    for (int i = 0; i < 3; ++i) {
        const int k = 2 * i + 1;  // Gauss nodes sit at odd Kronrod indices
        resg += kWg[i] * (fv[k] + fv[14 - k]);
    }

    kronrod = resk * h;
    err = std::abs(resk - resg) * std::abs(h);
}

struct Segment {
    double a, b, value, error;
    int depth;
};

} // namespace

PanelResult gk15(const std::function<double(double)>& f, double a, double b) {
    double v;
    double e;
    gk15_impl<double>(f, a, b, v, e);
    return {v, e};
}

PanelResultC gk15c(const std::function<std::complex<double>(double)>& f, double a, double b) {
    std::complex<double> v;
    double e;
    gk15_impl<std::complex<double>>(f, a, b, v, e);
    return {v, e};
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol, double rel_tol, int max_depth) {
    auto first = gk15(f, a, b);
    std::vector<Segment> stack{{a, b, first.value, first.error, 0}};
    double total = first.value;
    double total_err = first.error;

    // worst-first refinement
    for (int iter = 0; iter < 1'000'000; ++iter) {
        const double tol = std::max(abs_tol, rel_tol * std::abs(total));
        if (total_err <= tol) return total;

        auto worst = std::max_element(stack.begin(), stack.end(),
                                      [](const Segment& s, const Segment& t) { return s.error < t.error; });
        if (worst->depth >= max_depth)
            throw NumericError("adaptive quadrature: subdivision depth exhausted", total_err);

        Segment seg = *worst;
        stack.erase(worst);
        const double m = 0.5 * (seg.a + seg.b);
        auto left = gk15(f, seg.a, m);
        auto right = gk15(f, m, seg.b);
        total += left.value + right.value - seg.value;
        total_err += left.error + right.error - seg.error;
        stack.push_back({seg.a, m, left.value, left.error, seg.depth + 1});
        stack.push_back({m, seg.b, right.value, right.error, seg.depth + 1});
    }
    throw NumericError("adaptive quadrature: iteration budget exhausted", total_err);
}

std::complex<double> integrate_panels(const std::function<std::complex<double>(double)>& f,
                                      const std::vector<double>& breakpoints,
                                      double* error_estimate) {
    std::complex<double> sum = 0.0;
    std::complex<double> comp = 0.0;  // Kahan compensation
    double err = 0.0;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        auto r = gk15c(f, breakpoints[i], breakpoints[i + 1]);
        std::complex<double> y = r.value - comp;
        std::complex<double> t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        err += r.error;
    }
    if (error_estimate) *error_estimate = err;
    return sum;
}

double integrate_panels_real(const std::function<double(double)>& f,
                             const std::vector<double>& breakpoints,
                             double* error_estimate) {
    double sum = 0.0, comp = 0.0, err = 0.0;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        auto r = gk15(f, breakpoints[i], breakpoints[i + 1]);
        double y = r.value - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        err += r.error;
    }
    if (error_estimate) *error_estimate = err;
    return sum;
}

std::vector<double> oscillatory_breakpoints(double a, double b,
                                            const std::function<double(double)>& phase_rate,
                                            double max_phase, double max_step,
                                            std::size_t max_panels) {
    std::vector<double> pts{a};
    double x = a;
    while (x < b) {
        const double rate = std::max(std::abs(phase_rate(x)), 1e-12);
        const double step = std::min({max_phase / rate, max_step, b - a});
        x = std::min(x + step, b);
        pts.push_back(x);
        if (pts.size() > max_panels)
            throw NumericError("oscillatory_breakpoints: panel budget exceeded");
    }
    return pts;
}

double trapezoid(const std::vector<double>& samples, double dx) {
    if (samples.size() < 2) return 0.0;
    double s = 0.5 * (samples.front() + samples.back());
    for (std::size_t i = 1; i + 1 < samples.size(); ++i) s += samples[i];
    return s * dx;
}

std::vector<double> cumulative_trapezoid(const std::vector<double>& samples, double dx) {
    std::vector<double> out(samples.size(), 0.0);
    for (std::size_t i = 1; i < samples.size(); ++i)
        out[i] = out[i - 1] + 0.5 * dx * (samples[i - 1] + samples[i]);
    return out;
}

} // namespace pim::quad
