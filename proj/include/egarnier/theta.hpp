#pragma once

#include <cmath>
#include <complex>
#include <initializer_list>
#include <vector>

#include "egarnier/numeric.hpp"

namespace egarnier {

/// q-Pochhammer (z;q)_inf = prod_{k>=0} (1 - q^k z), in scaled form.
///
/// Factors are multiplied until |q^k z| drops below eps/100; for |z| >> 1 the
/// leading factors are large, which is why the accumulator is log-scaled.
template <typename T>
scaled<T> pochhammer_inf_s(cplx<T> z, cplx<T> q, T eps, int max_terms) {
    if (!(std::abs(q) < T(1))) throw error("pochhammer_inf: |q| must be < 1");
    scaled<T> acc = scaled<T>::one();
    cplx<T> zk = z;
    const T cut = eps * T(0.01);
    for (int k = 0;; ++k) {
        if (std::abs(zk) < cut) break;
        if (k >= 8 * max_terms) throw error("pochhammer_inf: truncation cap exceeded");
        acc *= scaled<T>::from(cplx<T>(1) - zk);
        if (acc.is_zero()) return acc;  // exact zero of the product
        zk *= q;
    }
    return acc;
}

template <typename T>
cplx<T> pochhammer_inf(cplx<T> z, cplx<T> q, T eps = elliptic_base<T>::default_eps(),
                       int max_terms = 512) {
    return pochhammer_inf_s(z, q, eps, max_terms).value();
}

/// (z;q)_k for integer k: finite product for k >= 0, reciprocal finite
/// product for k < 0.  Signals a pole when a reciprocal factor vanishes.
template <typename T>
cplx<T> pochhammer_k(cplx<T> z, cplx<T> q, long long k) {
    if (!(std::abs(q) < T(1))) throw error("pochhammer_k: |q| must be < 1");
    cplx<T> acc(1);
    if (k >= 0) {
        cplx<T> zj = z;
        for (long long j = 0; j < k; ++j) {
            acc *= cplx<T>(1) - zj;
            zj *= q;
        }
        return acc;
    }
    // (z;q)_{-n} = 1 / prod_{i=1..n} (1 - z q^{-i})
    cplx<T> zi = z;
    for (long long i = 1; i <= -k; ++i) {
        zi /= q;
        const cplx<T> f = cplx<T>(1) - zi;
        if (std::abs(f) < T(1e3) * std::numeric_limits<T>::epsilon() * (T(1) + std::abs(zi)))
            throw pole_in_formula("pochhammer_k: z lies on the zero lattice q^{-i}");
        acc *= f;
    }
    return cplx<T>(1) / acc;
}

/// Multiplicative theta function theta_p(z) = (z;p)_inf (p/z;p)_inf.
///
/// The argument is first reduced to the fundamental annulus via
///   theta(z) = (-1)^k p^{k(k-1)/2} z^k theta(p^k z),
/// so arbitrarily large or small |z| cost a handful of extra multiplies and
/// stay fully accurate.  Result is log-scaled.
template <typename T>
scaled<T> theta_s(cplx<T> z, cplx<T> p, T eps = elliptic_base<T>::default_eps(),
                  int max_terms = 512) {
    if (std::abs(z) == T(0)) throw error("theta: z = 0 is an essential singularity");
    if (!(std::abs(p) > T(0) && std::abs(p) < T(1))) throw error("theta: |p| must lie in (0,1)");

    const T lam = -std::log(std::abs(p));
    const long long k = std::llround(std::log(std::abs(z)) / lam);

    scaled<T> pref = scaled<T>::one();
    cplx<T> w = z;
    if (k != 0) {
        pref = scaled<T>::pow_int(p, k * (k - 1) / 2) * scaled<T>::pow_int(z, k);
        if (k % 2 != 0) pref = -pref;
        w = std::polar(std::exp(std::log(std::abs(z)) + T(k) * std::log(std::abs(p))),
                       std::arg(z) + T(k) * std::arg(p));
    }

    // w sits in [sqrt|p|, 1/sqrt|p|]; both products converge immediately.
    scaled<T> prod = scaled<T>::one();
    cplx<T> a = w, b = p / w;
    const T cut = eps * T(0.01);
    for (int j = 0; j < 8 * max_terms; ++j) {
        if (std::abs(a) < cut && std::abs(b) < cut) {
            return pref * prod;
        }
        prod *= scaled<T>::from((cplx<T>(1) - a) * (cplx<T>(1) - b));
        if (prod.is_zero()) return prod;
        a *= p;
        b *= p;
    }
    throw error("theta: truncation cap exceeded");
}

template <typename T>
cplx<T> theta(cplx<T> z, cplx<T> p, T eps = elliptic_base<T>::default_eps(),
              int max_terms = 512) {
    return theta_s(z, p, eps, max_terms).value();
}

/// Product theta_p(z_1) ... theta_p(z_n).
template <typename T>
scaled<T> theta_multi_s(std::initializer_list<cplx<T>> zs, cplx<T> p,
                        T eps = elliptic_base<T>::default_eps(), int max_terms = 512) {
    scaled<T> acc = scaled<T>::one();
    for (const auto& z : zs) acc *= theta_s(z, p, eps, max_terms);
    return acc;
}

template <typename T>
cplx<T> theta_multi(std::initializer_list<cplx<T>> zs, cplx<T> p,
                    T eps = elliptic_base<T>::default_eps(), int max_terms = 512) {
    return theta_multi_s(zs, p, eps, max_terms).value();
}

/// Jacobi triple product series
///   theta_p(z) = (p;p)_inf^{-1} sum_n (-1)^n p^{n(n-1)/2} z^n,
/// summed symmetrically with a two-term lookahead stop.  Serves as the
/// independent oracle for the product form; no argument reduction on purpose.
template <typename T>
scaled<T> theta_series_s(cplx<T> z, cplx<T> p, T eps = elliptic_base<T>::default_eps(),
                         int max_terms = 512) {
    if (std::abs(z) == T(0)) throw error("theta_series: z = 0");
    std::vector<scaled<T>> terms;
    terms.reserve(64);

    const auto term = [&](long long n) {
        scaled<T> t = scaled<T>::pow_int(p, n * (n - 1) / 2);
        if (n != 0) t *= scaled<T>::pow_int(z, n);
        if (n % 2 != 0) t = -t;
        return t;
    };

    terms.push_back(term(0));
    T peak = terms[0].lg;
    const T lcut = std::log(eps * T(0.01));

    bool go_pos = true, go_neg = true;
    for (long long n = 1; (go_pos || go_neg) && n <= 12 * max_terms; ++n) {
        if (go_pos) {
            const scaled<T> t0 = term(n), t1 = term(n + 1);
            terms.push_back(t0);
            peak = std::max(peak, t0.lg);
            if (t0.lg - peak < lcut && t1.lg - peak < lcut) go_pos = false;
        }
        if (go_neg) {
            const scaled<T> t0 = term(-n), t1 = term(-n - 1);
            terms.push_back(t0);
            peak = std::max(peak, t0.lg);
            if (t0.lg - peak < lcut && t1.lg - peak < lcut) go_neg = false;
        }
    }
    if (go_pos || go_neg) throw error("theta_series: truncation cap exceeded");

    return scaled_sum(terms) / pochhammer_inf_s(p, p, eps, max_terms);
}

template <typename T>
cplx<T> theta_series(cplx<T> z, cplx<T> p, T eps = elliptic_base<T>::default_eps(),
                     int max_terms = 512) {
    return theta_series_s(z, p, eps, max_terms).value();
}

/// Elliptic Gamma function
///   Gamma_{p,q}(z) = prod_{i,j>=0} (1 - p^{i+1} q^{j+1} / z) / (1 - p^i q^j z),
/// evaluated row by row as a ratio of q-Pochhammer symbols.  Signals a pole
/// when a denominator factor vanishes to tolerance.
template <typename T>
scaled<T> elliptic_gamma_s(cplx<T> z, cplx<T> p, cplx<T> q,
                           T eps = elliptic_base<T>::default_eps(), int max_terms = 512) {
    if (std::abs(z) == T(0)) throw error("elliptic_gamma: z = 0");
    if (!(std::abs(p) < T(1)) || !(std::abs(q) < T(1)))
        throw error("elliptic_gamma: |p|, |q| must be < 1");

    const T pole_tol = T(1e3) * std::numeric_limits<T>::epsilon();
    scaled<T> acc = scaled<T>::one();
    cplx<T> pi_num = p * q / z;  // p^{i+1} q / z at i = 0
    cplx<T> pi_den = z;          // p^i z at i = 0
    const T cut = eps * T(0.01) * (T(1) - std::abs(p));
    for (int i = 0; i < 8 * max_terms; ++i) {
        if (std::abs(pi_num) < cut && std::abs(pi_den) < cut)
            return acc;
        // pole guard along the denominator row
        cplx<T> d = pi_den;
        for (int j = 0; j < max_terms && std::abs(d) > T(0.5); ++j) {
            if (std::abs(cplx<T>(1) - d) < pole_tol * (T(1) + std::abs(d)))
                throw pole_in_formula("elliptic_gamma: z on the pole lattice p^{-i} q^{-j}");
            d *= q;
        }
        acc *= pochhammer_inf_s(pi_num, q, eps, max_terms) /
               pochhammer_inf_s(pi_den, q, eps, max_terms);
        pi_num *= p;
        pi_den *= p;
    }
    throw error("elliptic_gamma: truncation cap exceeded");
}

template <typename T>
cplx<T> elliptic_gamma(cplx<T> z, cplx<T> p, cplx<T> q,
                       T eps = elliptic_base<T>::default_eps(), int max_terms = 512) {
    return elliptic_gamma_s(z, p, q, eps, max_terms).value();
}

} // namespace egarnier
