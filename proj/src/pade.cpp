#include "pim/pade.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include <lapacke.h>

namespace pim {

namespace {

// Exact Gaussian elimination; returns false when the system is singular.
bool solve_exact(std::vector<std::vector<Rational>>& a, std::vector<Rational>& rhs,
                 std::vector<Rational>& x) {
    const int n = static_cast<int>(rhs.size());
    for (int col = 0; col < n; ++col) {
        int pivot = -1;
        for (int r = col; r < n; ++r)
            if (a[r][col] != 0) {
                pivot = r;
                break;
            }
        if (pivot < 0) return false;
        std::swap(a[col], a[pivot]);
        std::swap(rhs[col], rhs[pivot]);
        for (int r = col + 1; r < n; ++r) {
            if (a[r][col] == 0) continue;
            Rational factor = a[r][col] / a[col][col];
            for (int c = col; c < n; ++c) a[r][c] -= factor * a[col][c];
            rhs[r] -= factor * rhs[col];
        }
    }
    x.assign(n, Rational(0));
    for (int r = n - 1; r >= 0; --r) {
        Rational s = rhs[r];
        for (int c = r + 1; c < n; ++c) s -= a[r][c] * x[c];
        x[r] = s / a[r][r];
    }
    return true;
}

bool try_pade(const std::vector<Rational>& c, int m, PadeApproximant& out) {
    // Denominator: sum_{j=1..m} c[m+i-j] q_j = -c[m+i],  i = 1..m
    std::vector<std::vector<Rational>> a(m, std::vector<Rational>(m, Rational(0)));
    std::vector<Rational> rhs(m, Rational(0));
    for (int i = 1; i <= m; ++i) {
        for (int j = 1; j <= m; ++j) {
            const int idx = m + i - j;
            if (idx >= 0) a[i - 1][j - 1] = c[idx];
        }
        rhs[i - 1] = -c[m + i];
    }
    std::vector<Rational> q_tail;
    if (m > 0 && !solve_exact(a, rhs, q_tail)) return false;

    std::vector<Rational> q_exact(m + 1, Rational(0));
    q_exact[0] = 1;
    for (int j = 1; j <= m; ++j) q_exact[j] = q_tail[j - 1];

    std::vector<Rational> p_exact(m + 1, Rational(0));
    for (int i = 0; i <= m; ++i) {
        Rational s = 0;
        for (int j = 0; j <= std::min(i, m); ++j) s += c[i - j] * q_exact[j];
        p_exact[i] = s;
    }

    out.order_num = m;
    out.order_den = m;
    out.p.resize(m + 1);
    out.q.resize(m + 1);
    for (int i = 0; i <= m; ++i) {
        out.p[i] = to_double(p_exact[i]);
        out.q[i] = to_double(q_exact[i]);
        if (!std::isfinite(out.p[i]) || !std::isfinite(out.q[i])) return false;
    }
    return true;
}

} // namespace

PadeApproximant pade_diagonal(const std::vector<Rational>& c, int m) {
    if (static_cast<int>(c.size()) < 2 * m + 1)
        throw std::invalid_argument("pade_diagonal: need 2m+1 coefficients");
    PadeApproximant out;
    for (int mm = m; mm >= 0; --mm)
        if (try_pade(c, mm, out)) return out;
    throw std::invalid_argument("pade_diagonal: no approximant exists");
}

double PadeApproximant::evaluate(double u) const {
    double num = 0.0, den = 0.0;
    for (int i = static_cast<int>(p.size()) - 1; i >= 0; --i) num = num * u + p[i];
    for (int i = static_cast<int>(q.size()) - 1; i >= 0; --i) den = den * u + q[i];
    return num / den;
}

std::vector<double> PadeApproximant::positive_poles(double u_max) const {
    // roots of q via the companion matrix
    int deg = static_cast<int>(q.size()) - 1;
    while (deg > 0 && q[deg] == 0.0) --deg;
    if (deg < 1) return {};

    std::vector<double> a(deg * deg, 0.0);
    for (int i = 1; i < deg; ++i) a[i * deg + (i - 1)] = 1.0;
    for (int i = 0; i < deg; ++i) a[i * deg + (deg - 1)] = -q[i] / q[deg];

    std::vector<double> wr(deg), wi(deg);
    std::vector<double> vl(static_cast<std::size_t>(deg) * deg), vr(vl.size());
    int info = LAPACKE_dgeev(LAPACK_ROW_MAJOR, 'N', 'N', deg, a.data(), deg,
                             wr.data(), wi.data(), vl.data(), deg, vr.data(), deg);
    if (info != 0) throw std::runtime_error("positive_poles: dgeev failed");

    std::vector<double> poles;
    for (int i = 0; i < deg; ++i) {
        const double scale = std::abs(wr[i]) + std::abs(wi[i]);
        if (wr[i] > 0.0 && wr[i] <= u_max && std::abs(wi[i]) <= 1e-9 * std::max(1.0, scale))
            poles.push_back(wr[i]);
    }
    std::sort(poles.begin(), poles.end());
    return poles;
}

} // namespace pim
