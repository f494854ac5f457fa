#pragma once

// Fixed-size dense kernels for 3x3 matrices and their 9x9 vectorized
// operators. Everything is templated on the scalar type; `double` aliases
// are provided at the bottom for the rest of the library.
//
// vec() is column stacking throughout: vec(M)[i + 3 j] == M(i, j), which is
// also Eigen's default storage order.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "liegdt/errors.hpp"

namespace liegdt::linalg {

template <typename Scalar>
using Mat3T = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using Vec3T = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat9T = Eigen::Matrix<Scalar, 9, 9>;
template <typename Scalar>
using Vec9T = Eigen::Matrix<Scalar, 9, 1>;

/// Largest 1-norm accepted by mat_exp. exp of anything larger is not
/// representable in a useful way for this library's geometry.
inline constexpr double kMaxExpNorm = 512.0;

/// Sweep cap for the one-sided Jacobi SVD.
inline constexpr int kMaxJacobiSweeps = 60;

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* where) {
    if (!m.allFinite()) {
        throw DomainError(std::string(where) + ": non-finite matrix entry");
    }
}

template <typename Scalar>
Vec9T<Scalar> vec(const Mat3T<Scalar>& m) {
    return Eigen::Map<const Vec9T<Scalar>>(m.data());
}

template <typename Scalar>
Mat3T<Scalar> unvec(const Vec9T<Scalar>& v) {
    return Eigen::Map<const Mat3T<Scalar>>(v.data());
}

/// Skew matrix [w]x with [w]x y = w x y.
template <typename Scalar>
Mat3T<Scalar> hat(const Vec3T<Scalar>& w) {
    Mat3T<Scalar> k;
    k << Scalar(0), -w.z(), w.y(),
         w.z(), Scalar(0), -w.x(),
         -w.y(), w.x(), Scalar(0);
    return k;
}

/// Inverse of hat() applied to the skew part (K(2,1), K(0,2), K(1,0)).
template <typename Scalar>
Vec3T<Scalar> vee(const Mat3T<Scalar>& k) {
    return Vec3T<Scalar>(k(2, 1), k(0, 2), k(1, 0));
}

// ---------------------------------------------------------------------------
// SVD
// ---------------------------------------------------------------------------

template <typename Scalar>
struct Svd3T {
    Mat3T<Scalar> u;
    Vec3T<Scalar> sigma;  // descending, non-negative
    Mat3T<Scalar> v;
};

namespace detail {

template <typename Scalar>
constexpr Scalar jacobi_tolerance() {
    return std::max<Scalar>(Scalar(1e-14), Scalar(8) * std::numeric_limits<Scalar>::epsilon());
}

// Make column j of q a unit vector orthogonal to columns [0, j).
template <typename Scalar>
void complete_orthonormal_column(Mat3T<Scalar>& q, int j) {
    int best = 0;
    Scalar best_residual = Scalar(-1);
    for (int k = 0; k < 3; ++k) {
        Vec3T<Scalar> e = Vec3T<Scalar>::Unit(k);
        for (int i = 0; i < j; ++i) e -= q.col(i).dot(e) * q.col(i);
        if (e.norm() > best_residual) {
            best_residual = e.norm();
            best = k;
        }
    }
    Vec3T<Scalar> e = Vec3T<Scalar>::Unit(best);
    for (int pass = 0; pass < 2; ++pass) {
        for (int i = 0; i < j; ++i) e -= q.col(i).dot(e) * q.col(i);
    }
    q.col(j) = e.normalized();
}

}  // namespace detail

/// One-sided (Hestenes) Jacobi SVD with cyclic sweep order (0,1), (0,2), (1,2).
/// A pair is rotated while |<a_p, a_q>| > 1e-14 * |a_p| |a_q|.
template <typename Scalar>
Svd3T<Scalar> svd3(const Mat3T<Scalar>& m) {
    require_finite(m, "svd3");
    const Scalar tol = detail::jacobi_tolerance<Scalar>();

    Mat3T<Scalar> a = m;
    Mat3T<Scalar> v = Mat3T<Scalar>::Identity();
    for (int sweep = 0;; ++sweep) {
        if (sweep == kMaxJacobiSweeps) {
            throw std::logic_error("svd3: Jacobi iteration did not converge");
        }
        bool rotated = false;
        for (int p = 0; p < 2; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                const Scalar alpha = a.col(p).squaredNorm();
                const Scalar beta = a.col(q).squaredNorm();
                const Scalar gamma = a.col(p).dot(a.col(q));
                if (gamma == Scalar(0) || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const Scalar zeta = (beta - alpha) / (Scalar(2) * gamma);
                const Scalar t = (zeta >= Scalar(0) ? Scalar(1) : Scalar(-1)) /
                                 (std::abs(zeta) + std::hypot(Scalar(1), zeta));
                const Scalar c = Scalar(1) / std::hypot(Scalar(1), t);
                const Scalar s = c * t;
                for (int i = 0; i < 3; ++i) {
                    const Scalar ap = a(i, p);
                    a(i, p) = c * ap - s * a(i, q);
                    a(i, q) = s * ap + c * a(i, q);
                    const Scalar vp = v(i, p);
                    v(i, p) = c * vp - s * v(i, q);
                    v(i, q) = s * vp + c * v(i, q);
                }
            }
        }
        if (!rotated) break;
    }

    std::array<Scalar, 3> norms{a.col(0).norm(), a.col(1).norm(), a.col(2).norm()};
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](int i, int j) { return norms[i] > norms[j]; });

    Svd3T<Scalar> out;
    const Scalar floor = norms[order[0]] * std::numeric_limits<Scalar>::epsilon();
    for (int k = 0; k < 3; ++k) {
        const int src = order[k];
        out.sigma(k) = norms[src];
        out.v.col(k) = v.col(src);
        if (norms[src] > floor && norms[src] > Scalar(0)) {
            out.u.col(k) = a.col(src) / norms[src];
        } else {
            detail::complete_orthonormal_column(out.u, k);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Matrix exponential
// ---------------------------------------------------------------------------

/// exp(m) by scaling and squaring with the degree-13 Pade approximant.
/// Throws RangeError when the 1-norm exceeds kMaxExpNorm.
template <typename Derived>
typename Derived::PlainObject mat_exp(const Eigen::MatrixBase<Derived>& m_in) {
    using Plain = typename Derived::PlainObject;
    using Scalar = typename Derived::Scalar;
    static_assert(Derived::RowsAtCompileTime == Derived::ColsAtCompileTime &&
                      Derived::RowsAtCompileTime != Eigen::Dynamic,
                  "mat_exp expects a fixed-size square matrix");

    const Plain m = m_in;
    require_finite(m, "mat_exp");
    if (m.isZero(Scalar(0))) return Plain::Identity();

    const Scalar norm1 = m.cwiseAbs().colwise().sum().maxCoeff();
    if (norm1 > Scalar(kMaxExpNorm)) {
        throw RangeError("mat_exp: 1-norm " + std::to_string(double(norm1)) +
                         " exceeds bound " + std::to_string(kMaxExpNorm));
    }

    constexpr Scalar theta13 = Scalar(5.371920351148152);
    static constexpr std::array<Scalar, 14> b{
        Scalar(64764752532480000.0), Scalar(32382376266240000.0), Scalar(7771770303897600.0),
        Scalar(1187353796428800.0),  Scalar(129060195264000.0),   Scalar(10559470521600.0),
        Scalar(670442572800.0),      Scalar(33522128640.0),       Scalar(1323241920.0),
        Scalar(40840800.0),          Scalar(960960.0),            Scalar(16380.0),
        Scalar(182.0),               Scalar(1.0)};

    int squarings = 0;
    if (norm1 > theta13) {
        squarings = std::max(0, int(std::ceil(std::log2(norm1 / theta13))));
    }
    const Plain a = m / std::ldexp(Scalar(1), squarings);
    const Plain ident = Plain::Identity();
    const Plain a2 = a * a;
    const Plain a4 = a2 * a2;
    const Plain a6 = a4 * a2;

    const Plain u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 +
                          b[3] * a2 + b[1] * ident;
    const Plain u = a * u_inner;
    const Plain v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 +
                    b[2] * a2 + b[0] * ident;

    Plain r = (v - u).partialPivLu().solve(v + u);
    for (int k = 0; k < squarings; ++k) r = (r * r).eval();
    return r;
}

/// Frechet derivative L(a, e) of exp at a in direction e, read off the
/// upper-right block of exp([[a, e], [0, a]]).
template <typename Scalar>
Mat3T<Scalar> dexp_frechet(const Mat3T<Scalar>& a, const Mat3T<Scalar>& e) {
    require_finite(a, "dexp_frechet");
    require_finite(e, "dexp_frechet");
    if (a.isZero(Scalar(0))) return e;
    Eigen::Matrix<Scalar, 6, 6> block = Eigen::Matrix<Scalar, 6, 6>::Zero();
    block.template topLeftCorner<3, 3>() = a;
    block.template topRightCorner<3, 3>() = e;
    block.template bottomRightCorner<3, 3>() = a;
    return mat_exp(block).template topRightCorner<3, 3>();
}

/// 9x9 matrix of e -> L(a, e) acting on column-stacked vectors.
template <typename Scalar>
Mat9T<Scalar> dexp_jacobian(const Mat3T<Scalar>& a) {
    Mat9T<Scalar> j;
    for (int k = 0; k < 9; ++k) {
        const Mat3T<Scalar> e = unvec<Scalar>(Vec9T<Scalar>::Unit(k));
        j.col(k) = vec<Scalar>(dexp_frechet<Scalar>(a, e));
    }
    return j;
}

/// Permutation K with K vec(M) = vec(M^T).
template <typename Scalar = double>
Mat9T<Scalar> commutation_matrix() {
    Mat9T<Scalar> k = Mat9T<Scalar>::Zero();
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) k(r + 3 * c, c + 3 * r) = Scalar(1);
    }
    return k;
}

/// Kronecker product; (a (x) b) vec(M) = vec(b M a^T).
template <typename Scalar>
Mat9T<Scalar> kron(const Mat3T<Scalar>& a, const Mat3T<Scalar>& b) {
    Mat9T<Scalar> k;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) k.template block<3, 3>(3 * i, 3 * j) = a(i, j) * b;
    }
    return k;
}

// ---------------------------------------------------------------------------
// Rotation logarithm
// ---------------------------------------------------------------------------

/// Principal logarithm of a rotation, returned as a skew matrix theta [axis]x
/// with theta in [0, pi]. Rejects inputs farther than 1e-8 from SO(3).
template <typename Scalar>
Mat3T<Scalar> rot_log(const Mat3T<Scalar>& p) {
    require_finite(p, "rot_log");
    const Scalar tol = Scalar(1e-8);
    if ((p.transpose() * p - Mat3T<Scalar>::Identity()).norm() > tol ||
        std::abs(p.determinant() - Scalar(1)) > tol) {
        throw DomainError("rot_log: matrix is not a rotation");
    }

    const Mat3T<Scalar> anti = (p - p.transpose()) / Scalar(2);  // sin(theta) [axis]x
    const Vec3T<Scalar> w = vee<Scalar>(anti);
    const Scalar sin_theta = w.norm();
    const Scalar cos_theta = std::clamp((p.trace() - Scalar(1)) / Scalar(2), Scalar(-1), Scalar(1));
    const Scalar theta = std::atan2(sin_theta, cos_theta);

    if (theta < Scalar(1e-4)) {
        const Scalar t2 = theta * theta;
        return (Scalar(1) + t2 / Scalar(6) + Scalar(7) * t2 * t2 / Scalar(360)) * anti;
    }
    if (theta > std::numbers::pi_v<Scalar> - Scalar(1e-4)) {
        // Symmetric part is cos(theta) I + (1 - cos(theta)) a a^T.
        const Mat3T<Scalar> sym = (p + p.transpose()) / Scalar(2);
        const Mat3T<Scalar> outer =
            (sym - cos_theta * Mat3T<Scalar>::Identity()) / (Scalar(1) - cos_theta);
        int k = 0;
        outer.diagonal().maxCoeff(&k);
        Vec3T<Scalar> axis = outer.col(k) / std::sqrt(std::max(outer(k, k), Scalar(0)));
        axis.normalize();
        if (axis.dot(w) < Scalar(0)) axis = -axis;
        return theta * hat<Scalar>(axis);
    }
    return (theta / sin_theta) * anti;
}

using Mat3 = Mat3T<double>;
using Vec3 = Vec3T<double>;
using Mat9 = Mat9T<double>;
using Vec9 = Vec9T<double>;
using Svd3 = Svd3T<double>;

}  // namespace liegdt::linalg
