#pragma once

#include <string>
#include <vector>

#include "egarnier/garnier.hpp"

namespace egarnier {

namespace detail {

/// theta_p(z/u, eta/(z u)) — the building block of the right deformation
/// matrix; invariant under z -> eta/z as a function, not just projectively.
template <typename T>
scaled<T> phi_r(cplx<T> z, cplx<T> u, const elliptic_base<T>& b) {
    return theta_s(z / u, b.p, b.eps, b.max_terms) *
           theta_s(b.eta / (z * u), b.p, b.eps, b.max_terms);
}

/// theta_p(z/u, eta/(q z u)) — its left counterpart, invariant under
/// z -> eta/(qz).
template <typename T>
scaled<T> phi_l(cplx<T> z, cplx<T> u, const elliptic_base<T>& b) {
    return theta_s(z / u, b.p, b.eps, b.max_terms) *
           theta_s(b.eta / (b.q * z * u), b.p, b.eps, b.max_terms);
}

} // namespace detail

/// Right deformation matrix R_r(z) for the pair (u_i, u_j):
/// det vanishes at u_i, u_j; images at those points fall into the kernels
/// of B; R_r(v) = I; R_r(z) = R_r(eta/z) exactly.
template <typename T>
scaled_mat2<T> r_right(const b_builder<T>& b, int i, int j, cplx<T> z) {
    const auto& s = b.state();
    if (i == j || i < 0 || j < 0 || i >= s.n_points() || j >= s.n_points())
        throw index_error("r_right: bad pivot pair");
    const proj_point<T> ki = b.kernel_at(i), kj = b.kernel_at(j);
    const cplx<T> kappa = kj.x * ki.y - ki.x * kj.y;
    if (std::abs(kappa) < T(1e-10)) throw proportional_kernels();

    const auto& eb = s.base;
    const scaled<T> ri = detail::phi_r(z, s.u[i], eb) / detail::phi_r(s.v, s.u[i], eb);
    const scaled<T> rj = detail::phi_r(z, s.u[j], eb) / detail::phi_r(s.v, s.u[j], eb);

    const scaled<T> xjyi = scaled<T>::from(kj.x * ki.y), xiyj = scaled<T>::from(ki.x * kj.y);
    const scaled<T> xixj = scaled<T>::from(ki.x * kj.x), yiyj = scaled<T>::from(ki.y * kj.y);

    const scaled<T> e11 = xjyi * ri - xiyj * rj;
    const scaled<T> e12 = xixj * (rj - ri);
    const scaled<T> e21 = yiyj * (ri - rj);
    const scaled<T> e22 = xjyi * rj - xiyj * ri;

    T m = -std::numeric_limits<T>::infinity();
    for (const auto* e : {&e11, &e12, &e21, &e22})
        if (!e->is_zero()) m = std::max(m, e->lg);
    const auto ent = [&](const scaled<T>& e) {
        return e.is_zero() ? cplx<T>(0) : e.unit * std::exp(e.lg - m);
    };
    scaled_mat2<T> out({ent(e11), ent(e12), ent(e21), ent(e22)}, m);
    return out * scaled<T>::from(cplx<T>(1) / kappa);
}

template <typename T>
scaled_mat2<T> r_right(const garnier_state<T>& s, int i, int j, cplx<T> z) {
    return r_right(b_builder<T>(s), i, j, z);
}

/// Left deformation matrix R_l(z): kernels at u_i, u_j land in the images
/// of B; R_l(w) = I; R_l(z) = R_l(eta/(qz)) exactly.
///
/// Every entry is homogeneous in the image vectors of B(u_i), B(u_j), so we
/// feed in the normalized column directions rather than raw first columns —
/// a frame state has B(u_k) e_1 = 0 exactly and the raw form would 0/0.
template <typename T>
scaled_mat2<T> r_left(const b_builder<T>& b, int i, int j, cplx<T> z) {
    const auto& s = b.state();
    if (i == j || i < 0 || j < 0 || i >= s.n_points() || j >= s.n_points())
        throw index_error("r_left: bad pivot pair");
    const auto& eb = s.base;

    const proj_point<T> bi = b.column_at(i), bj = b.column_at(j);
    const cplx<T> den = bi.x * bj.y - bi.y * bj.x;
    if (std::abs(den) < T(1e-10)) throw degenerate_images();

    const scaled<T> pi = detail::phi_l(z, s.u[i], eb) / detail::phi_l(s.w, s.u[i], eb);
    const scaled<T> pj = detail::phi_l(z, s.u[j], eb) / detail::phi_l(s.w, s.u[j], eb);

    const scaled<T> c11 = scaled<T>::from(bi.x * bj.y) * pi - scaled<T>::from(bi.y * bj.x) * pj;
    const scaled<T> c12 = scaled<T>::from(bi.x * bj.x) * (pj - pi);
    const scaled<T> c21 = scaled<T>::from(bi.y * bj.y) * (pi - pj);
    const scaled<T> c22 = scaled<T>::from(bi.x * bj.y) * pj - scaled<T>::from(bi.y * bj.x) * pi;

    T m = -std::numeric_limits<T>::infinity();
    for (const auto* e : {&c11, &c12, &c21, &c22})
        if (!e->is_zero()) m = std::max(m, e->lg);
    const auto ent = [&](const scaled<T>& e) {
        return e.is_zero() ? cplx<T>(0) : e.unit * std::exp(e.lg - m);
    };
    scaled_mat2<T> out({ent(c11), ent(c12), ent(c21), ent(c22)}, m);
    return out * scaled<T>::from(cplx<T>(1) / den);
}

template <typename T>
scaled_mat2<T> r_left(const garnier_state<T>& s, int i, int j, cplx<T> z) {
    return r_left(b_builder<T>(s), i, j, z);
}

namespace detail {

/// Resample v/w if a transported singular point collided with them.
template <typename T>
void refresh_normalization_points(garnier_state<T>& s) {
    const T margin = T(1e-3);
    bool bad = false;
    for (const auto& ui : s.u) {
        for (const cplx<T> c : {s.v, s.w}) {
            if (lattice_distance(c, ui, s.base.p) < margin ||
                lattice_distance(c, s.base.eta / ui, s.base.p) < margin ||
                lattice_distance(c, s.base.eta / (s.base.q * ui), s.base.p) < margin)
                bad = true;
        }
    }
    if (!bad) return;
    rng64<T> gen(s.seed + 0x9e3779b97f4a7c15ull);
    s.seed += 1;
    s.v = sample_normalization_point(s.u, s.base, gen);
    s.w = sample_normalization_point(s.u, s.base, gen);
}

} // namespace detail

/// Right-induced involution: u_i, u_j -> eta/u_i, eta/u_j, kernels at the
/// pivots swap, every other kernel moves by the closed-form pullback
/// through R_r (ker_new = R_r(u_k)^{-1} ker_old, spelled out in thetas).
template <typename T>
garnier_state<T> apply_F(const garnier_state<T>& s, int i, int j) {
    b_builder<T> b(s);
    if (i == j) throw index_error("apply_F: i = j");
    const proj_point<T> ki = b.kernel_at(i), kj = b.kernel_at(j);
    if (proj_dist(ki, kj) < T(1e-10)) throw proportional_kernels();

    const auto& eb = s.base;
    const cplx<T> ui = s.u[i], uj = s.u[j];

    garnier_state<T> out = s;
    out.u[i] = eb.eta / ui;
    out.u[j] = eb.eta / uj;
    out.L = s.L * eb.eta / (ui * uj);

    for (int k = 0; k < s.n_kernels(); ++k) {
        if (k == i || k == j) continue;
        const proj_point<T>& kk = s.ker[k];
        const scaled<T> ti = theta_multi_s<T>(
            {ui / s.u[k], s.v / uj, eb.eta / (ui * s.u[k]), eb.eta / (uj * s.v)},
            eb.p, eb.eps, eb.max_terms);
        const scaled<T> tj = theta_multi_s<T>(
            {uj / s.u[k], s.v / ui, eb.eta / (uj * s.u[k]), eb.eta / (ui * s.v)},
            eb.p, eb.eps, eb.max_terms);
        const cplx<T> cri = kj.y * kk.x - kj.x * kk.y;  // (y_j x_k - x_j y_k)
        const cplx<T> crj = ki.x * kk.y - ki.y * kk.x;  // (x_i y_k - y_i x_k)
        const scaled<T> wi = scaled<T>::from(uj * cri) * ti;
        const scaled<T> wj = scaled<T>::from(ui * crj) * tj;
        const scaled<T> nx = scaled<T>::from(ki.x) * wi + scaled<T>::from(kj.x) * wj;
        const scaled<T> ny = scaled<T>::from(ki.y) * wi + scaled<T>::from(kj.y) * wj;
        out.ker[k] = proj_from_scaled(nx, ny);
    }
    if (i < s.n_kernels()) out.ker[i] = kj;
    if (j < s.n_kernels()) out.ker[j] = ki;

    detail::refresh_normalization_points(out);
    return out;
}

/// Left-induced involution: u_i, u_j -> eta/(q u_i), eta/(q u_j); kernels
/// away from the pivots are untouched, the pivot kernels solve
/// B(eta/(q u)) k_new = first column of B(u).
template <typename T>
garnier_state<T> apply_E(const garnier_state<T>& s, int i, int j) {
    b_builder<T> b(s);
    if (i == j) throw index_error("apply_E: i = j");
    const auto& eb = s.base;

    garnier_state<T> out = s;
    out.u[i] = eb.eta / (eb.q * s.u[i]);
    out.u[j] = eb.eta / (eb.q * s.u[j]);
    out.L = s.L * eb.eta / (eb.q * s.u[i] * s.u[j]);

    const auto pivot_kernel = [&](int k) {
        const proj_point<T> col = b.column_at(k);
        const scaled_mat2<T> br = b.at(eb.eta / (eb.q * s.u[k]));
        // k_new ~ adj(B(eta/(q u_k))) * image direction of B(u_k)
        const auto r = br.unit.adjugate().apply(col);
        if (std::abs(r[0]) == T(0) && std::abs(r[1]) == T(0))
            throw both_columns_vanish("apply_E: pivot kernel solve degenerated");
        return proj_point<T>(r[0], r[1]);
    };
    if (i < s.n_kernels()) out.ker[i] = pivot_kernel(i);
    if (j < s.n_kernels()) out.ker[j] = pivot_kernel(j);

    detail::refresh_normalization_points(out);
    return out;
}

/// Translation T_{i,j} = F_{i,j} after E_{i,j}; the parameter slots are set
/// to q u_i, q u_j exactly rather than through the round trip.
template <typename T>
garnier_state<T> apply_T(const garnier_state<T>& s, int i, int j) {
    garnier_state<T> out = apply_F(apply_E(s, i, j), i, j);
    out.u[i] = s.base.q * s.u[i];
    out.u[j] = s.base.q * s.u[j];
    out.L = s.base.q * s.L;
    return out;
}

/// eta-shifting involution iota: u_k -> eta/u_k for every k, eta -> q eta,
/// kernels become the column directions of B at the old points,
/// v and w trade places (w picks up a factor q).
template <typename T>
garnier_state<T> apply_iota(const garnier_state<T>& s) {
    b_builder<T> b(s);
    garnier_state<T> out = s;
    const cplx<T> eta = s.base.eta;
    for (int k = 0; k < s.n_points(); ++k) out.u[k] = eta / s.u[k];
    for (int k = 0; k < s.n_kernels(); ++k) out.ker[k] = b.column_at(k);
    out.base.eta = s.base.q * eta;
    scaled<T> Lp = scaled<T>::pow_int(eta, s.m + 3) / scaled<T>::from(s.L);
    out.L = Lp.value();
    out.v = s.w;
    out.w = s.base.q * s.v;
    detail::refresh_normalization_points(out);
    return out;
}

/// Max relative wobble of G(z) over the samples, after normalizing each
/// G(z) by a fixed reference entry: certifies that G is a constant matrix.
template <typename T>
T matrix_constancy(const std::vector<scaled_mat2<T>>& gs) {
    if (gs.size() < 2) return T(0);
    // reference entry: largest of the first sample
    const mat2<T>& g0 = gs[0].unit;
    int r = 1, c = 1;
    T best = std::abs(g0.a11);
    if (std::abs(g0.a12) > best) { best = std::abs(g0.a12); r = 1; c = 2; }
    if (std::abs(g0.a21) > best) { best = std::abs(g0.a21); r = 2; c = 1; }
    if (std::abs(g0.a22) > best) { best = std::abs(g0.a22); r = 2; c = 2; }
    const auto pick = [&](const mat2<T>& m) {
        return r == 1 ? (c == 1 ? m.a11 : m.a12) : (c == 1 ? m.a21 : m.a22);
    };
    const auto normalized = [&](const scaled_mat2<T>& g) {
        const cplx<T> ref = pick(g.unit);
        if (std::abs(ref) == T(0)) throw error("matrix_constancy: reference entry vanished");
        return g.unit * (cplx<T>(1) / ref);
    };
    const mat2<T> base = normalized(gs[0]);
    T worst = T(0);
    for (std::size_t t = 1; t < gs.size(); ++t) {
        const mat2<T> gt = normalized(gs[t]);
        worst = std::max(worst, (gt - base).norm() / base.norm());
    }
    return worst;
}

/// Gauge certificate for F: G(z) = B_new(z) [z B_old(z) R_r(z) / lambda(z)]^{-1}
/// must be z-independent (lambda = theta(z/u_i, z/u_j); the extra z keeps the
/// candidate in the same multiplier class as B_new).
template <typename T>
T certify_F(const garnier_state<T>& before, const garnier_state<T>& after, int i, int j,
            const std::vector<cplx<T>>& zs) {
    b_builder<T> bo(before), bn(after);
    const auto& eb = before.base;
    std::vector<scaled_mat2<T>> gs;
    for (const auto& z : zs) {
        const scaled<T> lam = theta_multi_s<T>({z / before.u[i], z / before.u[j]},
                                               eb.p, eb.eps, eb.max_terms);
        scaled_mat2<T> cand = bo.at(z) * r_right(bo, i, j, z);
        cand = cand * (scaled<T>::from(z) / lam);
        gs.push_back(bn.at(z) * cand.inverse());
    }
    return matrix_constancy(gs);
}

/// Gauge certificate for E: G(z) = B_new(z) [z R_l(z) B_old(z) / lambda(z)]^{-1}.
template <typename T>
T certify_E(const garnier_state<T>& before, const garnier_state<T>& after, int i, int j,
            const std::vector<cplx<T>>& zs) {
    b_builder<T> bo(before), bn(after);
    const auto& eb = before.base;
    std::vector<scaled_mat2<T>> gs;
    for (const auto& z : zs) {
        const scaled<T> lam = theta_multi_s<T>({z / before.u[i], z / before.u[j]},
                                               eb.p, eb.eps, eb.max_terms);
        scaled_mat2<T> cand = r_left(bo, i, j, z) * bo.at(z);
        cand = cand * (scaled<T>::from(z) / lam);
        gs.push_back(bn.at(z) * cand.inverse());
    }
    return matrix_constancy(gs);
}

/// Gauge certificate for iota: G(z) = B_new(z) [z^{m+3} adj B_old(eta/z)]^{-1}.
template <typename T>
T certify_iota(const garnier_state<T>& before, const garnier_state<T>& after,
               const std::vector<cplx<T>>& zs) {
    b_builder<T> bo(before), bn(after);
    const cplx<T> eta = before.base.eta;
    std::vector<scaled_mat2<T>> gs;
    for (const auto& z : zs) {
        const scaled_mat2<T> bz = bo.at(eta / z);
        scaled_mat2<T> cand(bz.unit.adjugate(), bz.lg);
        cand = cand * scaled<T>::pow_int(z, before.m + 3);
        gs.push_back(bn.at(z) * cand.inverse());
    }
    return matrix_constancy(gs);
}

/// Gauge certificate for a symmetric-group move: B_new(z) = G B_old(z).
template <typename T>
T certify_sym(const garnier_state<T>& before, const garnier_state<T>& after,
              const std::vector<cplx<T>>& zs) {
    b_builder<T> bo(before), bn(after);
    std::vector<scaled_mat2<T>> gs;
    for (const auto& z : zs) gs.push_back(bn.at(z) * bo.at(z).inverse());
    return matrix_constancy(gs);
}

/// Projective equality of two states: same u, eta, and kernels up to scale.
template <typename T>
T state_distance(const garnier_state<T>& a, const garnier_state<T>& b) {
    if (a.m != b.m) return T(1);
    T worst = T(0);
    for (int k = 0; k < a.n_points(); ++k) {
        const T scale = std::max({std::abs(a.u[k]), std::abs(b.u[k]), T(1e-30)});
        worst = std::max(worst, std::abs(a.u[k] - b.u[k]) / scale);
    }
    worst = std::max(worst, std::abs(a.base.eta - b.base.eta) / std::abs(a.base.eta));
    for (int k = 0; k < a.n_kernels(); ++k)
        worst = std::max(worst, proj_dist(a.ker[k], b.ker[k]));
    return worst;
}

/// One record of a deformation trajectory.
struct orbit_record {
    int step = 0;
    std::string kind;   // "E", "F", "T", "s", "iota"
    int i = -1, j = -1;
    double verify_residual = 0;
    double gauge_residual = 0;
};

/// Apply a parsed deformation word, verifying each stop.
template <typename T>
std::vector<orbit_record> run_program(garnier_state<T>& s,
                                      const std::vector<orbit_record>& program,
                                      T tol = T(1e-7), int gauge_samples = 5) {
    std::vector<orbit_record> log;
    rng64<T> gen(s.seed ^ 0xabcdefull);
    int n = 0;
    for (const auto& op : program) {
        std::vector<cplx<T>> zs;
        for (int t = 0; t < gauge_samples; ++t) zs.push_back(gen.annulus(T(0.8), T(1.5)));
        garnier_state<T> next = s;
        T gauge = T(0);
        if (op.kind == "E") {
            next = apply_E(s, op.i, op.j);
            gauge = certify_E(s, next, op.i, op.j, zs);
        } else if (op.kind == "F") {
            next = apply_F(s, op.i, op.j);
            gauge = certify_F(s, next, op.i, op.j, zs);
        } else if (op.kind == "T") {
            const garnier_state<T> mid = apply_E(s, op.i, op.j);
            next = apply_T(s, op.i, op.j);
            gauge = std::max(certify_E(s, mid, op.i, op.j, zs),
                             certify_F(mid, next, op.i, op.j, zs));
        } else if (op.kind == "s") {
            next = sym_action(s, op.i);
            gauge = certify_sym(s, next, zs);
        } else if (op.kind == "iota") {
            next = apply_iota(s);
            gauge = certify_iota(s, next, zs);
        } else {
            throw error("run_program: unknown op '" + op.kind + "'");
        }
        orbit_record rec = op;
        rec.step = ++n;
        rec.gauge_residual = static_cast<double>(gauge);
        rec.verify_residual = verify_state(next, tol).max_residual();
        log.push_back(rec);
        s = std::move(next);
    }
    return log;
}

} // namespace egarnier
