#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "egarnier/errors.hpp"

namespace egarnier {

template <typename T>
using cplx = std::complex<T>;

/// Nomes, symmetry parameter and the numerical policy shared by every evaluation.
///
/// Both nomes must lie strictly inside the unit disc, and no nontrivial
/// product p^a q^b may equal 1 within the truncation window: such a
/// resonance collapses the zero/pole lattices the library relies on.
template <typename T = double>
struct elliptic_base {
    cplx<T> p;      ///< theta nome
    cplx<T> q;      ///< shift base
    cplx<T> eta;    ///< symmetry parameter of the z -> eta/(qz) involution
    T eps;          ///< relative tolerance target
    int max_terms;  ///< truncation cap for products/series

    elliptic_base(cplx<T> p_, cplx<T> q_, cplx<T> eta_, T eps_ = default_eps(), int max_terms_ = 0)
        : p(p_), q(q_), eta(eta_), eps(eps_), max_terms(max_terms_) {
        if (max_terms == 0) max_terms = suggested_terms(p, q, eps);
        validate();
    }

    static T default_eps() { return T(100) * std::numeric_limits<T>::epsilon(); }

    static int suggested_terms(cplx<T> p_, cplx<T> q_, T eps_) {
        const T m = std::max(std::abs(p_), std::abs(q_));
        const int n = static_cast<int>(std::ceil(std::log(eps_ * T(0.01)) / std::log(m)));
        return std::max(n + 8, 16);
    }

    void validate() const {
        const T ap = std::abs(p), aq = std::abs(q);
        if (!(ap > T(0) && ap < T(1))) throw error("elliptic_base: |p| must lie in (0,1)");
        if (!(aq > T(0) && aq < T(1))) throw error("elliptic_base: |q| must lie in (0,1)");
        if (std::abs(eta) == T(0)) throw error("elliptic_base: eta must be nonzero");
        if (!(eps > std::numeric_limits<T>::epsilon())) throw error("elliptic_base: eps must exceed machine epsilon");
        const int need = static_cast<int>(std::ceil(std::log(eps) / std::log(std::max(ap, aq))));
        if (max_terms < need) throw error("elliptic_base: max_terms too small for requested eps");
        check_nonresonant();
    }

    // p^a q^b = 1 requires a*ln|p| + b*ln|q| = 0 with matching phase; scan the window.
    void check_nonresonant() const {
        const T lp = std::log(std::abs(p)), lq = std::log(std::abs(q));
        const T app = std::arg(p), aqq = std::arg(q);
        const int w = std::min(max_terms, 40);
        for (int a = -w; a <= w; ++a) {
            for (int b = -w; b <= w; ++b) {
                if (a == 0 && b == 0) continue;
                if (std::abs(a * lp + b * lq) > T(1e-9) * (std::abs(a * lp) + std::abs(b * lq))) continue;
                T ang = a * app + b * aqq;
                const T twopi = T(2) * pi();
                ang -= twopi * std::round(ang / twopi);
                if (std::abs(ang) < T(1e-9))
                    throw error("elliptic_base: resonant nomes, p^a q^b = 1 within the truncation window");
            }
        }
    }

    static constexpr T pi() { return T(3.14159265358979323846264338327950288L); }
};

/// Complex value stored as unit * exp(lg).  Keeps theta products with
/// thousands of decades of dynamic range inside ordinary arithmetic.
/// A zero is represented by unit == 0 (lg is then meaningless).
template <typename T>
struct scaled {
    cplx<T> unit{};  // modulus 1 unless the value is zero
    T lg{};          // natural-log magnitude

    scaled() = default;
    scaled(cplx<T> u, T l) : unit(u), lg(l) { renorm(); }

    static scaled one() { return scaled(cplx<T>(1), T(0)); }
    static scaled zero() { return scaled(); }

    static scaled from(cplx<T> v) {
        const T a = std::abs(v);
        if (a == T(0)) return zero();
        return scaled(v / a, std::log(a));
    }

    bool is_zero() const { return unit == cplx<T>(0); }

    void renorm() {
        const T a = std::abs(unit);
        if (a == T(0)) { lg = T(0); return; }
        lg += std::log(a);
        unit /= a;
    }

    /// Materialize; overflows to inf/0 outside double range.
    cplx<T> value() const { return is_zero() ? cplx<T>(0) : unit * std::exp(lg); }

    T log_abs() const { return is_zero() ? -std::numeric_limits<T>::infinity() : lg; }

    friend scaled operator*(const scaled& a, const scaled& b) {
        if (a.is_zero() || b.is_zero()) return zero();
        return scaled(a.unit * b.unit, a.lg + b.lg);
    }
    friend scaled operator*(const scaled& a, cplx<T> c) { return a * from(c); }
    friend scaled operator*(cplx<T> c, const scaled& a) { return a * from(c); }
    friend scaled operator/(const scaled& a, const scaled& b) {
        if (b.is_zero()) throw error("scaled: division by zero");
        if (a.is_zero()) return zero();
        return scaled(a.unit / b.unit, a.lg - b.lg);
    }
    friend scaled operator/(const scaled& a, cplx<T> c) { return a / from(c); }
    friend scaled operator-(const scaled& a) { return a.is_zero() ? a : scaled(-a.unit, a.lg); }

    scaled& operator*=(const scaled& b) { *this = *this * b; return *this; }
    scaled& operator/=(const scaled& b) { *this = *this / b; return *this; }

    /// Integer power of a complex number, kept in log form.
    static scaled pow_int(cplx<T> base, long long n) {
        if (n == 0) return one();
        const T a = std::abs(base);
        if (a == T(0)) throw error("scaled::pow_int: zero base");
        const T ang = std::arg(base);
        return scaled(std::polar(T(1), T(n) * ang), T(n) * std::log(a));
    }
};

/// Sum of scaled terms: factor out the max magnitude, compensated-add the rest.
template <typename T>
scaled<T> scaled_sum(const std::vector<scaled<T>>& terms) {
    T m = -std::numeric_limits<T>::infinity();
    for (const auto& t : terms)
        if (!t.is_zero()) m = std::max(m, t.lg);
    if (m == -std::numeric_limits<T>::infinity()) return scaled<T>::zero();
    cplx<T> acc(0), comp(0);
    for (const auto& t : terms) {
        if (t.is_zero()) continue;
        const cplx<T> v = t.unit * std::exp(t.lg - m);
        const cplx<T> y = v - comp;
        const cplx<T> s = acc + y;
        comp = (s - acc) - y;
        acc = s;
    }
    return scaled<T>(acc, m);
}

template <typename T>
scaled<T> operator+(const scaled<T>& a, const scaled<T>& b) {
    return scaled_sum<T>({a, b});
}
template <typename T>
scaled<T> operator-(const scaled<T>& a, const scaled<T>& b) {
    return scaled_sum<T>({a, -b});
}

/// Deterministic uniform generator; the seed is part of every serialized state.
template <typename T = double>
class rng64 {
public:
    explicit rng64(std::uint64_t seed) : eng_(seed) {}

    T uniform() {  // [0,1)
        return T(eng_() >> 11) * T(0x1p-53);
    }
    T uniform(T a, T b) { return a + (b - a) * uniform(); }

    cplx<T> unit_circle() {
        const T ang = uniform(T(0), T(2) * elliptic_base<T>::pi());
        return std::polar(T(1), ang);
    }

    /// Point in the annulus r in [rmin, rmax], uniform in log radius and angle.
    cplx<T> annulus(T rmin, T rmax) {
        const T lr = uniform(std::log(rmin), std::log(rmax));
        return std::polar(std::exp(lr), uniform(T(0), T(2) * elliptic_base<T>::pi()));
    }

    std::uint64_t raw() { return eng_(); }

private:
    std::mt19937_64 eng_;
};

/// Distance of z from x modulo the multiplicative lattice p^Z, relative to |x|.
/// Reduces z/x to the fundamental annulus and measures the gap to 1.
template <typename T>
T lattice_distance(cplx<T> z, cplx<T> x, cplx<T> p) {
    if (std::abs(x) == T(0) || std::abs(z) == T(0))
        return std::abs(z - x);
    const cplx<T> r = z / x;
    const T lam = -std::log(std::abs(p));
    const long long k = std::llround(std::log(std::abs(r)) / lam);
    // w = r * p^k lies in the fundamental annulus; compare with 1.
    const cplx<T> w = r * scaled<T>::pow_int(p, k).value();
    return std::abs(w - cplx<T>(1));
}

} // namespace egarnier
