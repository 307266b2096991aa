#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "egarnier/numeric.hpp"
#include "egarnier/projective.hpp"
#include "egarnier/theta.hpp"

namespace egarnier {

/// Full parameter set of the 2x2 theta linear system with 2m+6 singular
/// points: kernels pin the first 2m+3 points, the images at the last three
/// are frozen to (1,1), (0,1), (1,0) by construction.
template <typename T = double>
struct garnier_state {
    elliptic_base<T> base;
    int m = 1;
    std::vector<cplx<T>> u;          // 2m+6 singular points
    std::vector<proj_point<T>> ker;  // kernels at u_0 .. u_{2m+2}
    cplx<T> L;                       // L^2 = prod u_j, branch recorded
    cplx<T> v;                       // right-normalization point
    cplx<T> w;                       // left-normalization point
    std::uint64_t seed = 0;          // provenance of v, w sampling

    int n_points() const { return 2 * m + 6; }
    int n_kernels() const { return 2 * m + 3; }
};

/// Multiplier constant: every entry satisfies f(pz) = mc * z^{-(m+3)} f(z).
/// The sign (-1)^{m+1} comes from counting the m+3 theta factors per entry.
template <typename T>
cplx<T> multiplier_constant(const garnier_state<T>& s) {
    return (s.m % 2 == 1) ? s.L : -s.L;
}

template <typename T>
void validate_state(const garnier_state<T>& s, T dist_floor = T(1e-6)) {
    if (s.m < 1) throw error("garnier_state: m must be >= 1");
    if (static_cast<int>(s.u.size()) != s.n_points()) throw error("garnier_state: wrong u count");
    if (static_cast<int>(s.ker.size()) != s.n_kernels()) throw error("garnier_state: wrong kernel count");
    cplx<T> prod(1);
    for (const auto& ui : s.u) {
        if (std::abs(ui) == T(0)) throw colliding_parameters("garnier_state: u_i = 0");
        prod *= ui;
    }
    if (std::abs(s.L * s.L - prod) > T(1e-9) * std::abs(prod))
        throw error("garnier_state: L^2 != prod(u)");
    for (int i = 0; i < s.n_points(); ++i)
        for (int j = i + 1; j < s.n_points(); ++j)
            if (lattice_distance(s.u[i], s.u[j], s.base.p) < dist_floor)
                throw colliding_parameters("garnier_state: u_i ~ u_j mod p^Z");
}

namespace detail {

template <typename T>
void combinations(int n, int k, std::vector<std::vector<int>>& out) {
    std::vector<int> c(k);
    for (int i = 0; i < k; ++i) c[i] = i;
    while (true) {
        out.push_back(c);
        int i = k - 1;
        while (i >= 0 && c[i] == n - k + i) --i;
        if (i < 0) break;
        ++c[i];
        for (int j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
    }
}

template <typename T>
std::vector<int> complement(const std::vector<int>& s, int n) {
    std::vector<int> out;
    out.reserve(n - s.size());
    std::size_t pos = 0;
    for (int i = 0; i < n; ++i) {
        if (pos < s.size() && s[pos] == i) { ++pos; continue; }
        out.push_back(i);
    }
    return out;
}

} // namespace detail

/// Evaluator for B(z).  Precomputes every z-independent subset product once;
/// at(z) then costs one theta per summand plus the cached per-point thetas.
template <typename T = double>
class b_builder {
public:
    explicit b_builder(garnier_state<T> s) : s_(std::move(s)) {
        validate_state(s_);
        precompute();
    }

    const garnier_state<T>& state() const { return s_; }

    scaled_mat2<T> at(cplx<T> z) const {
        if (std::abs(z) == T(0)) throw error("build_B: z = 0");
        const int n = s_.n_kernels();
        const auto& b = s_.base;

        std::vector<scaled<T>> tz(n);
        for (int i = 0; i < n; ++i)
            tz[i] = theta_s(z / s_.u[i], b.p, b.eps, b.max_terms);
        const scaled<T> pre4 = theta_s(z / s_.u[n + 1], b.p, b.eps, b.max_terms) / den4_;
        const scaled<T> pre5 = theta_s(z / s_.u[n + 2], b.p, b.eps, b.max_terms) / den5_;

        const auto entry = [&](const std::vector<term_pre>& terms, const scaled<T>& pre) {
            std::vector<scaled<T>> vals;
            vals.reserve(terms.size());
            for (const auto& t : terms) {
                if (t.coeff.is_zero()) continue;
                scaled<T> v = t.coeff * theta_s(t.zarg * z, b.p, b.eps, b.max_terms);
                for (int i : t.zidx) v *= tz[i];
                vals.push_back(v);
            }
            return pre * scaled_sum(vals);
        };

        const scaled<T> e11 = entry(t11_, pre4);
        const scaled<T> e12 = entry(t12_, pre4);
        const scaled<T> e21 = entry(t21_, pre5);
        const scaled<T> e22 = entry(t22_, pre5);

        T m = -std::numeric_limits<T>::infinity();
        for (const auto* e : {&e11, &e12, &e21, &e22})
            if (!e->is_zero()) m = std::max(m, e->lg);
        if (m == -std::numeric_limits<T>::infinity()) throw error("build_B: zero matrix");
        const auto mat_entry = [&](const scaled<T>& e) {
            return e.is_zero() ? cplx<T>(0) : e.unit * std::exp(e.lg - m);
        };
        return scaled_mat2<T>({mat_entry(e11), mat_entry(e12), mat_entry(e21), mat_entry(e22)}, m);
    }

    /// Kernel at u_k: stored for k <= 2m+2, read off B(u_k) otherwise.
    proj_point<T> kernel_at(int k, T tol = T(1e-6)) const {
        if (k < 0 || k >= s_.n_points()) throw index_error("kernel_at");
        if (k < s_.n_kernels()) return s_.ker[k];
        return kernel_of(at(s_.u[k]), tol);
    }

    /// First column of B(u_k) as a projective point (the image direction);
    /// falls back to the second column when the first is small enough to
    /// cost digits.  Columns of a rank-1 matrix are proportional, so the
    /// choice only affects conditioning.
    proj_point<T> column_at(int k) const {
        const scaled_mat2<T> bm = at(s_.u[k]);
        const T c1 = std::max(std::abs(bm.unit.a11), std::abs(bm.unit.a21));
        const T c2 = std::max(std::abs(bm.unit.a12), std::abs(bm.unit.a22));
        if (c1 < T(1e-12) && c2 < T(1e-12)) throw both_columns_vanish();
        if (c1 >= T(0.1) * c2) return proj_point<T>(bm.unit.a11, bm.unit.a21);
        return proj_point<T>(bm.unit.a12, bm.unit.a22);
    }

private:
    struct term_pre {
        scaled<T> coeff;
        cplx<T> zarg;
        std::vector<int> zidx;
    };

    void precompute() {
        const int n = s_.n_kernels();
        const auto& b = s_.base;
        const cplx<T> u4 = s_.u[n + 1], u5 = s_.u[n + 2];

        den4_ = theta_s(s_.u[n] / u4, b.p, b.eps, b.max_terms);
        den5_ = theta_s(s_.u[n] / u5, b.p, b.eps, b.max_terms);

        // pair grid G[i][j] = u_j * theta_p(u_i/u_j)
        std::vector<std::vector<scaled<T>>> grid(n, std::vector<scaled<T>>(n));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j)
                    grid[i][j] = scaled<T>::from(s_.u[j]) *
                                 theta_s(s_.u[i] / s_.u[j], b.p, b.eps, b.max_terms);

        std::vector<std::vector<int>> small, large;
        detail::combinations<T>(n, s_.m + 1, small);
        detail::combinations<T>(n, s_.m + 2, large);

        const auto subset_products = [&](const std::vector<int>& S, const std::vector<int>& Sc) {
            scaled<T> xS = scaled<T>::one(), ySc = scaled<T>::one();
            scaled<T> uS = scaled<T>::one(), uSc = scaled<T>::one();
            for (int i : S) {
                xS *= scaled<T>::from(s_.ker[i].x);
                uS *= scaled<T>::from(s_.u[i]);
            }
            for (int j : Sc) {
                ySc *= scaled<T>::from(s_.ker[j].y);
                uSc *= scaled<T>::from(s_.u[j]);
            }
            scaled<T> pg = scaled<T>::one();
            for (int i : S)
                for (int j : Sc) pg *= grid[i][j];
            return std::tuple{xS, ySc, uS, uSc, pg};
        };

        const cplx<T> sign = (s_.m % 2 == 0) ? cplx<T>(1) : cplx<T>(-1);

        for (const auto& S : small) {
            const auto Sc = detail::complement<T>(S, n);
            const auto [xS, ySc, uS, uSc, pg] = subset_products(S, Sc);
            const scaled<T> xy = xS * ySc;
            if (!xy.is_zero()) {
                const cplx<T> uSv = uS.value(), uScv = uSc.value();
                // diagonal-type rows: coefficient x_S y_Sc / (u_Sc u_r) * theta(u_Sc u_r / L) / PG
                t11_.push_back({xy / (uSc * scaled<T>::from(u4)) *
                                    theta_s(uScv * u4 / s_.L, b.p, b.eps, b.max_terms) / pg,
                                uSv * u4 / s_.L, S});
                t21_.push_back({xy / (uSc * scaled<T>::from(u5)) *
                                    theta_s(uScv * u5 / s_.L, b.p, b.eps, b.max_terms) / pg,
                                uSv * u5 / s_.L, S});
            }
        }
        for (const auto& S : large) {
            const auto Sc = detail::complement<T>(S, n);
            const auto [xS, ySc, uS, uSc, pg] = subset_products(S, Sc);
            const scaled<T> xy = xS * ySc;
            if (!xy.is_zero()) {
                const cplx<T> uSv = uS.value(), uScv = uSc.value();
                t12_.push_back({sign * xy / (uS * scaled<T>::from(u4)) *
                                    theta_s(uSv * u4 / s_.L, b.p, b.eps, b.max_terms) / pg,
                                uScv * u4 / s_.L, Sc});
                t22_.push_back({sign * xy / (uS * scaled<T>::from(u5)) *
                                    theta_s(uSv * u5 / s_.L, b.p, b.eps, b.max_terms) / pg,
                                uScv * u5 / s_.L, Sc});
            }
        }
    }

    garnier_state<T> s_;
    scaled<T> den4_, den5_;
    std::vector<term_pre> t11_, t12_, t21_, t22_;
};

/// One-shot convenience; heavy callers construct a b_builder once.
template <typename T>
scaled_mat2<T> build_B(const garnier_state<T>& s, cplx<T> z) {
    return b_builder<T>(s).at(z);
}

/// A(z) = B(eta/(qz))^{-1} B(z).
template <typename T>
mat2<T> build_A(const b_builder<T>& b, cplx<T> z, T sing_tol = T(1e-10)) {
    const auto& st = b.state();
    const cplx<T> zr = st.base.eta / (st.base.q * z);
    const scaled_mat2<T> br = b.at(zr);
    if (std::abs(br.unit.det()) < sing_tol)
        throw singular_at_point("build_A: B(eta/(qz)) is singular");
    const scaled_mat2<T> a = br.inverse() * b.at(z);
    return a.unit * cplx<T>(std::exp(a.lg));
}

template <typename T>
mat2<T> build_A(const garnier_state<T>& s, cplx<T> z) {
    return build_A(b_builder<T>(s), z);
}

/// Relative gap between two log-scaled matrices at a common scale.
template <typename T>
T mat_rel_diff(const scaled_mat2<T>& a, const scaled_mat2<T>& b) {
    if (a.is_zero() && b.is_zero()) return T(0);
    if (a.is_zero() || b.is_zero()) return T(1);
    const T m = std::max(a.lg, b.lg);
    const mat2<T> ma = a.unit * cplx<T>(std::exp(a.lg - m));
    const mat2<T> mb = b.unit * cplx<T>(std::exp(b.lg - m));
    return (ma - mb).norm() / std::max({ma.norm(), mb.norm(), std::numeric_limits<T>::min()});
}

/// det(B(z)) / (C prod_k theta(z/u_k)) should be flat in z.
template <typename T>
struct det_profile_result {
    cplx<T> C;
    T max_residual;
};

template <typename T>
det_profile_result<T> det_profile(const garnier_state<T>& s, const std::vector<cplx<T>>& samples) {
    if (samples.empty()) throw error("det_profile: no samples");
    b_builder<T> b(s);
    const auto& eb = s.base;
    scaled<T> c0;
    T worst = T(0);
    bool first = true;
    for (const auto& z : samples) {
        scaled<T> denom = scaled<T>::one();
        for (const auto& ui : s.u) denom *= theta_s(z / ui, eb.p, eb.eps, eb.max_terms);
        const scaled<T> c = b.at(z).det_s() / denom;
        if (first) {
            c0 = c;
            first = false;
        } else {
            worst = std::max(worst, std::abs((c / c0).value() - cplx<T>(1)));
        }
    }
    return {c0.value(), worst};
}

struct check_result {
    std::string name;
    double residual;
    double tolerance;
    bool pass;
};

struct verify_report {
    std::vector<check_result> checks;

    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
    double max_residual() const {
        double m = 0;
        for (const auto& c : checks) m = std::max(m, c.residual);
        return m;
    }
};

/// Structural self-check: determinant zeros, kernels, the three frozen
/// images, the p-shift multiplier law, and the A(z)A(eta/qz) = I symmetry.
/// Reports residuals, never throws on a math failure.
template <typename T>
verify_report verify_state(const garnier_state<T>& s, T tol = T(1e-8)) {
    verify_report rep;
    const auto push = [&](const std::string& name, T res, T tl) {
        rep.checks.push_back({name, static_cast<double>(res), static_cast<double>(tl),
                              res <= tl});
    };

    b_builder<T> b(s);
    const int n = s.n_kernels();
    const auto& eb = s.base;

    for (int k = 0; k < s.n_points(); ++k) {
        const scaled_mat2<T> bm = b.at(s.u[k]);
        push("det_zero[u" + std::to_string(k) + "]", std::abs(bm.unit.det()), tol);
    }
    for (int k = 0; k < n; ++k) {
        const scaled_mat2<T> bm = b.at(s.u[k]);
        const auto mv = bm.unit.apply(s.ker[k]);
        push("kernel[u" + std::to_string(k) + "]",
             std::max(std::abs(mv[0]), std::abs(mv[1])), tol);
    }
    const proj_point<T> targets[3] = {proj_point<T>(cplx<T>(1), cplx<T>(1)),
                                      proj_point<T>(cplx<T>(0), cplx<T>(1)),
                                      proj_point<T>(cplx<T>(1), cplx<T>(0))};
    for (int t = 0; t < 3; ++t) {
        const int k = n + t;
        const scaled_mat2<T> bm = b.at(s.u[k]);
        const T c1 = std::max(std::abs(bm.unit.a11), std::abs(bm.unit.a21));
        const T c2 = std::max(std::abs(bm.unit.a12), std::abs(bm.unit.a22));
        const proj_point<T> img = c1 >= c2 ? proj_point<T>(bm.unit.a11, bm.unit.a21)
                                           : proj_point<T>(bm.unit.a12, bm.unit.a22);
        push("image[u" + std::to_string(k) + "]", proj_dist(img, targets[t]), tol);
    }

    // multiplier law and symmetry at generic z, sampled away from the
    // singular lattice: at ill-conditioned points these identities only
    // measure cancellation, not correctness.
    const cplx<T> mc = multiplier_constant(s);
    rng64<T> gen(0x5eedu);
    const auto sample_z = [&]() {
        cplx<T> best = gen.annulus(T(0.8), T(1.6));
        T best_d = T(0);
        for (int tries = 0; tries < 64; ++tries) {
            const cplx<T> z = gen.annulus(T(0.8), T(1.6));
            T d = std::numeric_limits<T>::infinity();
            for (const auto& uk : s.u) {
                d = std::min(d, lattice_distance(z, uk, eb.p));
                d = std::min(d, lattice_distance(eb.eta / (eb.q * z), uk, eb.p));
                d = std::min(d, lattice_distance(eb.p * z, uk, eb.p));
            }
            if (d > best_d) { best_d = d; best = z; }
            if (best_d > T(0.15)) break;
        }
        return best;
    };
    for (int t = 0; t < 3; ++t) {
        const cplx<T> z = sample_z();
        const scaled_mat2<T> bz = b.at(z);
        scaled_mat2<T> bp = b.at(eb.p * z);
        const scaled<T> fac = scaled<T>::pow_int(z, s.m + 3) / scaled<T>::from(mc);
        bp = bp * fac;
        push("multiplier[" + std::to_string(t) + "]", mat_rel_diff(bp, bz), tol);
    }

    // A(z) A(eta/qz) = I
    for (int t = 0; t < 2; ++t) {
        const cplx<T> z = sample_z();
        try {
            const mat2<T> a1 = build_A(b, z);
            const mat2<T> a2 = build_A(b, eb.eta / (eb.q * z));
            push("asym[" + std::to_string(t) + "]",
                 (a1 * a2 - mat2<T>::identity()).norm(), tol);
        } catch (const singular_at_point&) {
            push("asym[" + std::to_string(t) + "]", T(1), tol);
        }
    }
    return rep;
}

/// Adjacent-transposition action s_i: swap u_i and u_{i+1}.  Kernel blocks
/// swap with their points; crossing the kernel/image boundary (i = 2m+2)
/// replaces the kernel by the one B carries at the old u_{2m+3}.
template <typename T>
garnier_state<T> sym_action(const garnier_state<T>& s, int i) {
    if (i < 0 || i > 2 * s.m + 4) throw index_error("sym_action: generator index");
    garnier_state<T> out = s;
    const int n = s.n_kernels();
    if (i <= 2 * s.m + 1) {
        std::swap(out.ker[i], out.ker[i + 1]);
    } else if (i == n - 1) {  // i = 2m+2
        b_builder<T> b(s);
        out.ker[n - 1] = kernel_of(b.at(s.u[n]), T(1e-6));
    }
    std::swap(out.u[i], out.u[i + 1]);
    return out;
}

/// Sample a normalization point on the unit circle, away from every
/// u_i, eta/u_i and eta/(q u_i) modulo p^Z.
template <typename T>
cplx<T> sample_normalization_point(const std::vector<cplx<T>>& u, const elliptic_base<T>& b,
                                   rng64<T>& gen, T margin = T(1e-3)) {
    std::vector<cplx<T>> forbidden;
    for (const auto& ui : u) {
        forbidden.push_back(ui);
        forbidden.push_back(b.eta / ui);
        forbidden.push_back(b.eta / (b.q * ui));
    }
    for (int tries = 0; tries < 4096; ++tries) {
        const cplx<T> c = gen.unit_circle();
        bool ok = true;
        for (const auto& f : forbidden)
            if (lattice_distance(c, f, b.p) < margin) { ok = false; break; }
        if (ok) return c;
    }
    throw error("sample_normalization_point: rejection sampling failed");
}

/// Reference configuration used across the test and acceptance suites:
/// m = 1, real nomes, eight points fanned around the unit circle.
template <typename T = double>
garnier_state<T> make_fixture1(std::uint64_t seed = 1) {
    const elliptic_base<T> base(cplx<T>(0.30), cplx<T>(0.17), cplx<T>(0.90));
    garnier_state<T> s{base, 1, {}, {}, cplx<T>(0), cplx<T>(0), cplx<T>(0), seed};
    const T twopi = T(2) * elliptic_base<T>::pi();
    cplx<T> prod(1);
    for (int k = 0; k < 8; ++k) {
        const cplx<T> uk = T(1.1) * std::polar(T(1), twopi * T(k) / T(8)) * (T(1) + T(0.03) * T(k));
        s.u.push_back(uk);
        prod *= uk;
    }
    for (int k = 0; k < 5; ++k)
        s.ker.emplace_back(cplx<T>(1), cplx<T>(T(0.4), T(0.1) * T(k)));
    s.L = std::sqrt(prod);
    rng64<T> gen(seed);
    s.v = sample_normalization_point(s.u, base, gen);
    s.w = sample_normalization_point(s.u, base, gen);
    validate_state(s);
    return s;
}

/// Random well-separated state for property tests; fully determined by seed.
template <typename T = double>
garnier_state<T> random_state(int m, std::uint64_t seed,
                              cplx<T> p = cplx<T>(0.30), cplx<T> q = cplx<T>(0.17),
                              cplx<T> eta = cplx<T>(0.90)) {
    const elliptic_base<T> base(p, q, eta);
    garnier_state<T> s{base, m, {}, {}, cplx<T>(0), cplx<T>(0), cplx<T>(0), seed};
    rng64<T> gen(seed);
    const int np = 2 * m + 6;
    cplx<T> prod(1);
    for (int k = 0; k < np; ++k) {
        for (int tries = 0;; ++tries) {
            if (tries > 2048) throw error("random_state: sampling failed");
            const cplx<T> cand = gen.annulus(T(0.9), T(1.5));
            bool ok = true;
            for (const auto& uj : s.u)
                if (lattice_distance(cand, uj, p) < T(5e-2)) { ok = false; break; }
            if (ok) { s.u.push_back(cand); prod *= cand; break; }
        }
    }
    for (int k = 0; k < 2 * m + 3; ++k) {
        for (int tries = 0;; ++tries) {
            if (tries > 2048) throw error("random_state: kernel sampling failed");
            const proj_point<T> cand(cplx<T>(1), cplx<T>(gen.uniform(T(-1.2), T(1.2)),
                                                         gen.uniform(T(-1.2), T(1.2))));
            bool ok = true;
            for (const auto& kj : s.ker)
                if (proj_dist(cand, kj) < T(5e-2)) { ok = false; break; }
            if (ok) { s.ker.push_back(cand); break; }
        }
    }
    s.L = std::sqrt(prod);
    s.v = sample_normalization_point(s.u, base, gen);
    s.w = sample_normalization_point(s.u, base, gen);
    validate_state(s);
    return s;
}

} // namespace egarnier
