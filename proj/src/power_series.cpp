#include "pim/power_series.hpp"

namespace pim {

double to_double(const Rational& r) { return r.convert_to<double>(); }

Rational rational_factorial(int n) {
    BigInt r = 1;
    for (int k = 2; k <= n; ++k) r *= k;
    return Rational(r);
}

Rational double_factorial(int n) {
    if (n <= 0) return Rational(1);
    BigInt r = 1;
    for (int k = n; k > 1; k -= 2) r *= k;
    return Rational(r);
}

Rational binomial(const Rational& alpha, int k) {
    Rational num = 1;
    for (int i = 0; i < k; ++i) num *= (alpha - i);
    return num / rational_factorial(k);
}

void PairingSeries::insert(const Key& k, const Rational& c) {
    if (c == 0) return;
    if (k[0] > caps_.j || k[1] > caps_.e || k[2] > caps_.b) return;
    auto it = terms_.find(k);
    if (it == terms_.end()) {
        terms_.emplace(k, c);
    } else {
        it->second += c;
        if (it->second == 0) terms_.erase(it);
    }
}

PairingSeries PairingSeries::constant(const Rational& c, Caps caps) {
    PairingSeries s(caps);
    s.insert({0, 0, 0}, c);
    return s;
}

PairingSeries PairingSeries::monomial(const Rational& c, int dj, int de, int db, Caps caps) {
    PairingSeries s(caps);
    s.insert({dj, de, db}, c);
    return s;
}

PairingSeries PairingSeries::operator+(const PairingSeries& o) const {
    PairingSeries s(caps_);
    s.terms_ = terms_;
    for (const auto& [k, c] : o.terms_) s.insert(k, c);
    return s;
}

PairingSeries PairingSeries::operator*(const PairingSeries& o) const {
    PairingSeries s(caps_);
    for (const auto& [ka, ca] : terms_)
        for (const auto& [kb, cb] : o.terms_)
            s.insert({ka[0] + kb[0], ka[1] + kb[1], ka[2] + kb[2]}, ca * cb);
    return s;
}

PairingSeries PairingSeries::scaled(const Rational& c) const {
    PairingSeries s(caps_);
    if (c == 0) return s;
    for (const auto& [k, v] : terms_) s.terms_.emplace(k, v * c);
    return s;
}

PairingSeries PairingSeries::derivative_j() const {
    PairingSeries s(caps_);
    for (const auto& [k, v] : terms_)
        if (k[0] > 0) s.insert({k[0] - 1, k[1], k[2]}, v * k[0]);
    return s;
}

PairingSeries PairingSeries::derivative_e() const {
    PairingSeries s(caps_);
    for (const auto& [k, v] : terms_)
        if (k[1] > 0) s.insert({k[0], k[1] - 1, k[2]}, v * k[1]);
    return s;
}

const Rational& PairingSeries::coefficient(int dj, int de, int db) const {
    static const Rational zero(0);
    auto it = terms_.find({dj, de, db});
    return it == terms_.end() ? zero : it->second;
}

namespace {

void require_no_constant(const PairingSeries& p, const char* who) {
    if (p.coefficient(0, 0, 0) != 0)
        throw std::invalid_argument(std::string(who) + ": series must have zero constant term");
}

// Powers of p terminate under the caps because every term of our inputs
// carries at least one power of some variable.
int power_bound(const PairingSeries::Caps& c) { return c.j + c.e + c.b + 1; }

} // namespace

PairingSeries PairingSeries::exp_of(const PairingSeries& p) {
    require_no_constant(p, "exp_of");
    PairingSeries sum = PairingSeries::constant(1, p.caps());
    PairingSeries pk = PairingSeries::constant(1, p.caps());
    for (int k = 1; k <= power_bound(p.caps()); ++k) {
        pk = pk * p;
        if (pk.is_zero()) break;
        sum = sum + pk.scaled(Rational(1) / rational_factorial(k));
    }
    return sum;
}

PairingSeries PairingSeries::pow_of_one_plus(const PairingSeries& p, const Rational& alpha) {
    require_no_constant(p, "pow_of_one_plus");
    PairingSeries sum = PairingSeries::constant(1, p.caps());
    PairingSeries pk = PairingSeries::constant(1, p.caps());
    for (int k = 1; k <= power_bound(p.caps()); ++k) {
        pk = pk * p;
        if (pk.is_zero()) break;
        sum = sum + pk.scaled(binomial(alpha, k));
    }
    return sum;
}

std::vector<Rational> PairingSeries::diagonal_b_poly(int k) const {
    std::vector<Rational> out(caps_.b + 1, Rational(0));
    for (const auto& [key, v] : terms_)
        if (key[0] == k && key[1] == k) out[key[2]] += v;
    return out;
}

std::vector<Rational> pairing_expand(const PairingSeries& f, const Rational& sigma, int order) {
    const auto caps = f.caps();
    if (order > caps.b)
        throw std::invalid_argument("pairing_expand: requested order exceeds stored b truncation");

    std::vector<Rational> out(order + 1, Rational(0));
    const int k_max = std::min(caps.j, caps.e);
    Rational sigma_k = 1;      // sigma^k
    Rational k_factorial = 1;  // k!
    for (int k = 0; k <= k_max; ++k) {
        if (k > 0) {
            sigma_k *= sigma;
            k_factorial *= k;
        }
        // sigma^k / k! * d_j^k d_e^k (j^k e^k) = sigma^k * k!
        const Rational weight = sigma_k * k_factorial;
        auto poly = f.diagonal_b_poly(k);
        for (int m = 0; m <= order; ++m) out[m] += weight * poly[m];
    }
    return out;
}

} // namespace pim
