#pragma once

#include <array>
#include <cmath>
#include <complex>

#include "egarnier/numeric.hpp"

namespace egarnier {

/// Point of P^1 in homogeneous coordinates.  Stored with the larger-modulus
/// coordinate normalized to exactly 1, so proportional inputs produce
/// identical representatives.
template <typename T>
struct proj_point {
    cplx<T> x{1}, y{0};

    proj_point() = default;
    proj_point(cplx<T> x_, cplx<T> y_) : x(x_), y(y_) {
        if (x == cplx<T>(0) && y == cplx<T>(0))
            throw error("proj_point: (0,0) is not a point of P^1");
        if (std::abs(x) >= std::abs(y)) {
            y /= x;
            x = cplx<T>(1);
        } else {
            x /= y;
            y = cplx<T>(1);
        }
    }

    static proj_point from_affine(cplx<T> f) { return proj_point(cplx<T>(1), f); }
    static proj_point infinity() { return proj_point(cplx<T>(0), cplx<T>(1)); }

    bool is_infinite() const { return x == cplx<T>(0); }
    /// Affine coordinate y/x; inf for the point at infinity.
    cplx<T> affine() const {
        if (is_infinite()) return cplx<T>(std::numeric_limits<T>::infinity(), T(0));
        return y / x;
    }
};

/// Scale-free separation |ax by - ay bx| / max(|ax by|, |ay bx|, 1).
template <typename T>
T proj_dist(const proj_point<T>& a, const proj_point<T>& b) {
    const cplx<T> c1 = a.x * b.y, c2 = a.y * b.x;
    const T scale = std::max({std::abs(c1), std::abs(c2), T(1)});
    return std::abs(c1 - c2) / scale;
}

template <typename T>
bool proj_eq(const proj_point<T>& a, const proj_point<T>& b, T tol) {
    return proj_dist(a, b) <= tol;
}

/// 2x2 complex matrix with value semantics.
template <typename T>
struct mat2 {
    cplx<T> a11{}, a12{}, a21{}, a22{};

    static mat2 identity() { return {cplx<T>(1), cplx<T>(0), cplx<T>(0), cplx<T>(1)}; }

    cplx<T> det() const { return a11 * a22 - a12 * a21; }
    mat2 adjugate() const { return {a22, -a12, -a21, a11}; }

    /// Max-abs entry norm.
    T norm() const {
        return std::max({std::abs(a11), std::abs(a12), std::abs(a21), std::abs(a22)});
    }

    mat2 inverse() const {
        const cplx<T> d = det();
        if (std::abs(d) == T(0)) throw singular_at_point("mat2: singular matrix inversion");
        mat2 a = adjugate();
        return {a.a11 / d, a.a12 / d, a.a21 / d, a.a22 / d};
    }

    friend mat2 operator*(const mat2& a, const mat2& b) {
        return {a.a11 * b.a11 + a.a12 * b.a21, a.a11 * b.a12 + a.a12 * b.a22,
                a.a21 * b.a11 + a.a22 * b.a21, a.a21 * b.a12 + a.a22 * b.a22};
    }
    friend mat2 operator*(const mat2& a, cplx<T> c) {
        return {a.a11 * c, a.a12 * c, a.a21 * c, a.a22 * c};
    }
    friend mat2 operator-(const mat2& a, const mat2& b) {
        return {a.a11 - b.a11, a.a12 - b.a12, a.a21 - b.a21, a.a22 - b.a22};
    }

    std::array<cplx<T>, 2> apply(cplx<T> vx, cplx<T> vy) const {
        return {a11 * vx + a12 * vy, a21 * vx + a22 * vy};
    }
    std::array<cplx<T>, 2> apply(const proj_point<T>& v) const { return apply(v.x, v.y); }
};

/// Matrix carried as unit * exp(lg): `unit` has max-abs entry 1.
template <typename T>
struct scaled_mat2 {
    mat2<T> unit{};
    T lg{};

    scaled_mat2() = default;
    scaled_mat2(const mat2<T>& m, T l) : unit(m), lg(l) { renorm(); }

    void renorm() {
        const T n = unit.norm();
        if (n == T(0)) { lg = T(0); return; }
        lg += std::log(n);
        const cplx<T> s = cplx<T>(T(1) / n);
        unit = unit * s;
    }

    bool is_zero() const { return unit.norm() == T(0); }
    scaled<T> det_s() const { return scaled<T>::from(unit.det()) * scaled<T>(cplx<T>(1), T(2) * lg); }
    cplx<T> value_entry(int r, int c) const {
        const cplx<T> e = r == 1 ? (c == 1 ? unit.a11 : unit.a12) : (c == 1 ? unit.a21 : unit.a22);
        return e * std::exp(lg);
    }

    friend scaled_mat2 operator*(const scaled_mat2& a, const scaled_mat2& b) {
        return scaled_mat2(a.unit * b.unit, a.lg + b.lg);
    }
    friend scaled_mat2 operator*(const scaled_mat2& a, const scaled<T>& s) {
        if (s.is_zero()) return scaled_mat2(mat2<T>{}, T(0));
        return scaled_mat2(a.unit * s.unit, a.lg + s.lg);
    }

    scaled_mat2 inverse() const {
        const cplx<T> d = unit.det();
        if (std::abs(d) == T(0)) throw singular_at_point("scaled_mat2: singular");
        mat2<T> a = unit.adjugate();
        const scaled<T> ds = scaled<T>::from(d);
        return scaled_mat2(a * (cplx<T>(1) / ds.unit), -lg - ds.lg);
    }
};

/// Kernel direction of a rank-1 (to tolerance) matrix, read off the
/// larger-norm row: that row wins the conditioning battle near rank 1.
template <typename T>
proj_point<T> kernel_of(const mat2<T>& m, T tol) {
    const T n = m.norm();
    if (n == T(0)) throw zero_matrix();
    if (std::abs(m.det()) > tol * n * n)
        throw not_singular("kernel_of: determinant exceeds rank-1 tolerance");
    const T r1 = std::max(std::abs(m.a11), std::abs(m.a12));
    const T r2 = std::max(std::abs(m.a21), std::abs(m.a22));
    if (r1 >= r2) return proj_point<T>(m.a12, -m.a11);
    return proj_point<T>(m.a22, -m.a21);
}

/// Image direction of a rank-1 matrix: the larger-norm column.
template <typename T>
proj_point<T> image_of(const mat2<T>& m, T tol) {
    const T n = m.norm();
    if (n == T(0)) throw zero_matrix();
    if (std::abs(m.det()) > tol * n * n)
        throw not_singular("image_of: determinant exceeds rank-1 tolerance");
    const T c1 = std::max(std::abs(m.a11), std::abs(m.a21));
    const T c2 = std::max(std::abs(m.a12), std::abs(m.a22));
    if (c1 >= c2) return proj_point<T>(m.a11, m.a21);
    return proj_point<T>(m.a12, m.a22);
}

template <typename T>
proj_point<T> kernel_of(const scaled_mat2<T>& m, T tol) { return kernel_of(m.unit, tol); }
template <typename T>
proj_point<T> image_of(const scaled_mat2<T>& m, T tol) { return image_of(m.unit, tol); }

/// Frame matrix sending (1:0), (0:1), (1:1) to p_i, p_j, p_k respectively.
template <typename T>
mat2<T> n_ijk(const proj_point<T>& pi, const proj_point<T>& pj, const proj_point<T>& pk,
              T tol = T(1e-12)) {
    if (proj_eq(pi, pj, tol) || proj_eq(pi, pk, tol) || proj_eq(pj, pk, tol))
        throw degenerate_triple();
    const cplx<T> c1 = pj.x * pk.y - pk.x * pj.y;
    const cplx<T> c2 = pk.x * pi.y - pi.x * pk.y;
    return {pi.x * c1, pj.x * c2,
            pi.y * c1, pj.y * c2};
}

/// Point from a pair of log-scaled homogeneous coordinates.
template <typename T>
proj_point<T> proj_from_scaled(const scaled<T>& sx, const scaled<T>& sy) {
    if (sx.is_zero() && sy.is_zero())
        throw error("proj_from_scaled: both coordinates vanish");
    if (sx.is_zero()) return proj_point<T>::infinity();
    if (sy.is_zero()) return proj_point<T>(cplx<T>(1), cplx<T>(0));
    const T m = std::max(sx.lg, sy.lg);
    return proj_point<T>(sx.unit * std::exp(sx.lg - m), sy.unit * std::exp(sy.lg - m));
}

} // namespace egarnier
