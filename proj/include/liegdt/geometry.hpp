#pragma once

// Geometry of the homography group PG(2) under a left-invariant metric:
// Riemannian exponential/logarithm at the identity, geodesics, projection
// onto the rotation subgroup SO(3) and the losses built from them.
//
// Loss and gradient functions take plain matrices so that callers (and
// finite-difference checks) can evaluate them off the unit-determinant
// surface; the Homography overloads are the normal entry points.

#include "liegdt/linalg.hpp"

namespace liegdt {

using linalg::Mat3;
using linalg::Mat9;
using linalg::Vec3;
using linalg::Vec9;

/// A 3x3 matrix with unit determinant.
class Homography {
public:
    Homography() : m_(Mat3::Identity()) {}

    /// Validates det(m) == 1 within `tol` without rescaling.
    static Homography from_unit_det(const Mat3& m, double tol = 1e-9);

    static Homography identity() { return Homography(); }

    const Mat3& matrix() const noexcept { return m_; }
    Homography inverse() const;

    Homography operator*(const Homography& rhs) const { return Homography(m_ * rhs.m_); }

private:
    explicit Homography(const Mat3& m) : m_(m) {}
    friend Homography normalize_unit_det(const Mat3& m);

    Mat3 m_;
};

/// Trace-free 3x3 matrix: an element of the Lie algebra of PG(2).
class TangentVector {
public:
    TangentVector() : m_(Mat3::Zero()) {}

    /// Rejects matrices whose trace exceeds 1e-10 in magnitude.
    static TangentVector from_matrix(const Mat3& m);
    /// Removes the trace component.
    static TangentVector project(const Mat3& m);

    const Mat3& matrix() const noexcept { return m_; }

    TangentVector operator*(double s) const { return TangentVector(m_ * s); }

private:
    explicit TangentVector(const Mat3& m) : m_(m) {}
    Mat3 m_;
};

/// Orthogonal matrix with determinant +1.
class Rotation3 {
public:
    Rotation3() : m_(Mat3::Identity()) {}

    /// Validates m^T m == I and det(m) == 1 within `tol`.
    static Rotation3 from_matrix(const Mat3& m, double tol = 1e-9);

    const Mat3& matrix() const noexcept { return m_; }

private:
    explicit Rotation3(const Mat3& m) : m_(m) {}
    friend Rotation3 project_so3(const Mat3& m);

    Mat3 m_;
};

/// Weighting of the surrogate loss theta^angle_power + lambda * |R_pi|^2.
struct SurrogateOptions {
    double lambda = 1.0;
    int angle_power = 1;
};

struct GdtResult {
    double theta = 0.0;        // rotation angle of the SO(3) projection, [0, pi]
    double residual_sq = 0.0;  // squared Frobenius norm of the projection residual
    double loss = 0.0;
    Mat3 grad_that = Mat3::Zero();
    /// Set when the angle term sat inside the clamp band (its gradient is
    /// dropped) or when the projection derivative was replaced by finite
    /// differences.
    bool near_singular_gradient = false;
};

struct SurrogateGradient {
    Mat3 grad = Mat3::Zero();
    bool near_singular = false;
};

struct MseResult {
    double value = 0.0;
    Mat3 grad = Mat3::Zero();
};

/// Outcome of the Riemannian-logarithm solve.
struct LogSolve {
    Mat3 r = Mat3::Zero();
    int iterations = 0;
    double residual = 0.0;  // ||Exp_I(r) - g||_F
};

inline constexpr double kSingularDetTol = 1e-9;
inline constexpr double kLogTolerance = 1e-13;
inline constexpr int kLogMaxIterations = 50;
/// Angle-term gradient is dropped when |(tr P - 1) / 2| > 1 - kAngleClamp.
inline constexpr double kAngleClamp = 1e-7;
/// Bound on the reciprocal condition number of the Exp_I Jacobian.
inline constexpr double kMinJacobianRcond = 1e-10;

/// m / cbrt(det m), using the real cube root so negative determinants work.
Homography normalize_unit_det(const Mat3& m);

/// exp(r^T) exp(r - r^T). Defined for any r; det = exp(tr r).
Mat3 riem_exp_identity(const Mat3& r);
Homography riem_exp_identity(const TangentVector& r);

/// Jacobian of vec(Exp_I(r)) with respect to vec(r):
/// (exp(r^T - r) (x) I) dexp(r^T) K + (I (x) exp(r^T)) dexp(r - r^T) (I - K).
Mat9 riem_exp_jacobian(const Mat3& r);
inline Mat9 riem_exp_jacobian(const TangentVector& r) { return riem_exp_jacobian(r.matrix()); }

/// Initial guess for the log solve: log of the nearest rotation, or zero if
/// the projection is degenerate.
Mat3 log_warm_start(const Mat3& g);

/// Damped Gauss-Newton inversion of riem_exp_identity on all of gl(3).
/// Throws NoConvergence when ||Exp_I(r) - g||_F > tol after max_iter steps.
LogSolve riem_log_solve(const Mat3& g, const Mat3& r0, double tol = kLogTolerance,
                        int max_iter = kLogMaxIterations);

TangentVector riem_log_identity(const Homography& g, const TangentVector& r0,
                                double tol = kLogTolerance, int max_iter = kLogMaxIterations);
/// Same, warm-started from log_warm_start(g).
TangentVector riem_log_identity(const Homography& g);

/// Exact geodesic loss with its gradient and solver diagnostics.
struct ExactGdtResult {
    double loss = 0.0;
    Mat3 r = Mat3::Zero();  // Log_I(t^-1 that)
    Mat3 grad_that = Mat3::Zero();
    int iterations = 0;
    double solve_residual = 0.0;
};

/// Loss, Log_I and gradient in one pass; throws NoConvergence, IllConditioned.
ExactGdtResult gdt_exact(const Mat3& t, const Mat3& that);

/// 1/2 |Log_I(t^-1 that)|_F^2.
double gdt_loss_exact(const Mat3& t, const Mat3& that);
inline double gdt_loss_exact(const Homography& t, const Homography& that) {
    return gdt_loss_exact(t.matrix(), that.matrix());
}

/// Gradient of gdt_loss_exact with respect to the entries of `that`.
Mat3 gdt_exact_grad(const Mat3& t, const Mat3& that);
inline Mat3 gdt_exact_grad(const Homography& t, const Homography& that) {
    return gdt_exact_grad(t.matrix(), that.matrix());
}

/// Nearest rotation in Frobenius norm, U diag(1, 1, det(U V^T)) V^T.
/// Throws DegenerateProjection when sigma_2 + det(U V^T) sigma_3 <= 0
/// (relative to sigma_1), where the nearest rotation is not unique.
Rotation3 project_so3(const Mat3& m);

/// arccos((tr p - 1) / 2) with the argument clamped to [-1, 1].
double rotation_angle(const Rotation3& p);

GdtResult surrogate_loss(const Mat3& t, const Mat3& that, const SurrogateOptions& opts = {});
inline GdtResult surrogate_loss(const Homography& t, const Homography& that,
                                const SurrogateOptions& opts = {}) {
    return surrogate_loss(t.matrix(), that.matrix(), opts);
}

SurrogateGradient surrogate_loss_grad(const Mat3& t, const Mat3& that,
                                      const SurrogateOptions& opts = {});

/// 1/2 |that - t|_F^2 and its gradient that - t.
MseResult mse_loss(const Mat3& t, const Mat3& that);
inline MseResult mse_loss(const Homography& t, const Homography& that) {
    return mse_loss(t.matrix(), that.matrix());
}

/// gamma(s) = base Exp_I(s velocity), the geodesic from base to a target.
class GeodesicCurve {
public:
    GeodesicCurve(const Homography& base, const TangentVector& velocity)
        : base_(base), velocity_(velocity) {}

    /// Solves velocity = Log_I(t^-1 that).
    static GeodesicCurve between(const Homography& t, const Homography& that,
                                 double tol = kLogTolerance, int max_iter = kLogMaxIterations);

    const Homography& base() const noexcept { return base_; }
    const TangentVector& velocity() const noexcept { return velocity_; }

    Homography point_at(double s) const;

private:
    Homography base_;
    TangentVector velocity_;
};

inline Homography geodesic_point(const GeodesicCurve& curve, double s) { return curve.point_at(s); }

/// Adjoint of the normalize_unit_det derivative: maps dL/dN to dL/dm for
/// N = m / cbrt(det m).
Mat3 normalize_unit_det_pullback(const Mat3& m, const Mat3& grad_normalized);

}  // namespace liegdt
