#include "liegdt/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace liegdt {

namespace {

Mat3 checked_inverse(const Mat3& t, const char* where) {
    linalg::require_finite(t, where);
    const double det = t.determinant();
    if (std::abs(det) < kSingularDetTol) {
        throw SingularMatrix(std::string(where) + ": |det| below 1e-9");
    }
    return t.inverse();
}

// Nearest rotation together with the pieces its derivative needs.
struct Projection {
    Mat3 p;
    Mat3 v;
    Vec3 s;  // singular values of the special polar factor (sigma1, sigma2, d sigma3)
};

Projection project_with_parts(const Mat3& m) {
    const linalg::Svd3 svd = linalg::svd3(m);
    const double d = (svd.u.determinant() * svd.v.determinant()) < 0.0 ? -1.0 : 1.0;
    const double margin = svd.sigma(1) + d * svd.sigma(2);
    if (!(svd.sigma(0) > 0.0) || margin <= 1e-12 * svd.sigma(0)) {
        throw DegenerateProjection("project_so3: nearest rotation is not unique");
    }
    Projection out;
    out.p = svd.u * Vec3(1.0, 1.0, d).asDiagonal() * svd.v.transpose();
    out.v = svd.v;
    out.s = Vec3(svd.sigma(0), svd.sigma(1), d * svd.sigma(2));
    return out;
}

double angle_from_trace(double trace) {
    return std::acos(std::clamp((trace - 1.0) / 2.0, -1.0, 1.0));
}

double surrogate_value(const Mat3& m, const SurrogateOptions& opts, double* theta_out = nullptr,
                       double* residual_out = nullptr) {
    const Projection proj = project_with_parts(m);
    const double theta = angle_from_trace(proj.p.trace());
    const double residual_sq = (m - proj.p).squaredNorm();
    if (theta_out) *theta_out = theta;
    if (residual_out) *residual_out = residual_sq;
    const double angle_term = opts.angle_power == 2 ? theta * theta : theta;
    return angle_term + opts.lambda * residual_sq;
}

void validate(const SurrogateOptions& opts) {
    if (opts.angle_power != 1 && opts.angle_power != 2) {
        throw DomainError("surrogate_loss: angle_power must be 1 or 2");
    }
    if (!std::isfinite(opts.lambda) || opts.lambda < 0.0) {
        throw DomainError("surrogate_loss: lambda must be finite and non-negative");
    }
}

// d tr(P) / dM for the special polar factor P of M = P S.
Mat3 trace_projection_gradient(const Projection& proj) {
    const Mat3 b = proj.v.transpose() * proj.p.transpose() * proj.v;
    Mat3 scaled = Mat3::Zero();
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            if (i != j) scaled(i, j) = b(i, j) / (proj.s(i) + proj.s(j));
        }
    }
    const Mat3 c = proj.v * scaled * proj.v.transpose();
    return proj.p * (c - c.transpose());
}

SurrogateGradient surrogate_gradient_in_m(const Mat3& m, const Mat3& t_inv, const Mat3& that,
                                          const SurrogateOptions& opts) {
    const Projection proj = project_with_parts(m);
    SurrogateGradient out;

    const double min_pair = std::min({proj.s(0) + proj.s(1), proj.s(0) + proj.s(2),
                                      proj.s(1) + proj.s(2)});
    if (min_pair < 1e-8 * proj.s(0)) {
        // Polar-factor derivative blows up; central differences on that.
        const double h = 1e-6 * std::max(1.0, that.cwiseAbs().maxCoeff());
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                Mat3 plus = that;
                Mat3 minus = that;
                plus(i, j) += h;
                minus(i, j) -= h;
                out.grad(i, j) = (surrogate_value(t_inv * plus, opts) -
                                  surrogate_value(t_inv * minus, opts)) / (2.0 * h);
            }
        }
        out.near_singular = true;
        return out;
    }
    const double x = (proj.p.trace() - 1.0) / 2.0;
    double coeff = 0.0;  // d(angle term) / d tr(P)
    if (opts.angle_power == 1) {
        if (std::abs(x) > 1.0 - kAngleClamp) {
            out.near_singular = true;
        } else {
            coeff = -1.0 / (2.0 * std::sqrt(1.0 - x * x));
        }
    } else {
        if (x < -1.0 + kAngleClamp) {
            out.near_singular = true;
        } else if (x > 1.0 - kAngleClamp) {
            const double theta = std::acos(std::min(x, 1.0));
            coeff = -(1.0 + theta * theta / 6.0);
        } else {
            const double theta = std::acos(x);
            coeff = -theta / std::sqrt(1.0 - x * x);
        }
    }

    Mat3 grad_m = 2.0 * opts.lambda * (m - proj.p);
    if (coeff != 0.0) grad_m += coeff * trace_projection_gradient(proj);
    out.grad = t_inv.transpose() * grad_m;
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

Homography Homography::from_unit_det(const Mat3& m, double tol) {
    linalg::require_finite(m, "Homography");
    if (std::abs(m.determinant() - 1.0) > tol) {
        throw DomainError("Homography: determinant is not 1");
    }
    return Homography(m);
}

Homography Homography::inverse() const { return Homography(m_.inverse()); }

TangentVector TangentVector::from_matrix(const Mat3& m) {
    linalg::require_finite(m, "TangentVector");
    if (std::abs(m.trace()) > 1e-10) throw DomainError("TangentVector: trace is not zero");
    return TangentVector(m);
}

TangentVector TangentVector::project(const Mat3& m) {
    linalg::require_finite(m, "TangentVector");
    return TangentVector(m - (m.trace() / 3.0) * Mat3::Identity());
}

Rotation3 Rotation3::from_matrix(const Mat3& m, double tol) {
    linalg::require_finite(m, "Rotation3");
    if ((m.transpose() * m - Mat3::Identity()).norm() > tol ||
        std::abs(m.determinant() - 1.0) > tol) {
        throw DomainError("Rotation3: matrix is not a rotation");
    }
    return Rotation3(m);
}

// ---------------------------------------------------------------------------
// Exponential and logarithm
// ---------------------------------------------------------------------------

Homography normalize_unit_det(const Mat3& m) {
    linalg::require_finite(m, "normalize_unit_det");
    const double det = m.determinant();
    if (std::abs(det) < kSingularDetTol) {
        throw SingularMatrix("normalize_unit_det: |det| below 1e-9");
    }
    return Homography(m / std::cbrt(det));
}

Mat3 riem_exp_identity(const Mat3& r) {
    linalg::require_finite(r, "riem_exp_identity");
    const Mat3 rt = r.transpose();
    return linalg::mat_exp(rt) * linalg::mat_exp(Mat3(r - rt));
}

Homography riem_exp_identity(const TangentVector& r) {
    return Homography::from_unit_det(riem_exp_identity(r.matrix()));
}

Mat9 riem_exp_jacobian(const Mat3& r) {
    static const Mat9 k = linalg::commutation_matrix<double>();
    const Mat3 ident = Mat3::Identity();
    const Mat3 rt = r.transpose();
    const Mat3 skew = r - rt;
    return linalg::kron<double>(linalg::mat_exp(Mat3(-skew)), ident) *
               linalg::dexp_jacobian<double>(rt) * k +
           linalg::kron<double>(ident, linalg::mat_exp(rt)) * linalg::dexp_jacobian<double>(skew) *
               (Mat9::Identity() - k);
}

Mat3 log_warm_start(const Mat3& g) {
    try {
        return linalg::rot_log(project_so3(g).matrix());
    } catch (const DegenerateProjection&) {
        return Mat3::Zero();
    }
}

LogSolve riem_log_solve(const Mat3& g, const Mat3& r0, double tol, int max_iter) {
    linalg::require_finite(g, "riem_log_solve");
    linalg::require_finite(r0, "riem_log_solve");

    auto residual_of = [&](const Mat3& r, Vec9& f) {
        try {
            f = linalg::vec<double>(Mat3(riem_exp_identity(r) - g));
            return f.norm();
        } catch (const RangeError&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    LogSolve out;
    out.r = r0;
    Vec9 f;
    out.residual = residual_of(out.r, f);
    if (!std::isfinite(out.residual)) {
        throw NoConvergence("riem_log_solve: initial guess out of range", 0, out.residual);
    }

    for (out.iterations = 0; out.iterations < max_iter; ++out.iterations) {
        if (out.residual <= tol) return out;

        const Mat9 jac = riem_exp_jacobian(out.r);
        Vec9 step = jac.partialPivLu().solve(-f);
        const Mat9 normal = jac.transpose() * jac;
        const Vec9 rhs = -jac.transpose() * f;
        double mu = 1e-6 * normal.diagonal().maxCoeff();

        bool accepted = false;
        for (int attempt = 0; attempt < 40; ++attempt) {
            if (step.allFinite()) {
                const Mat3 candidate = out.r + linalg::unvec<double>(step);
                Vec9 f_candidate;
                const double res = residual_of(candidate, f_candidate);
                if (res < out.residual) {
                    out.r = candidate;
                    out.residual = res;
                    f = f_candidate;
                    accepted = true;
                    break;
                }
            }
            step = (normal + mu * Mat9::Identity()).ldlt().solve(rhs);
            mu *= 10.0;
        }
        if (!accepted) break;
    }
    if (out.residual <= tol) return out;
    throw NoConvergence("riem_log_solve: residual " + std::to_string(out.residual) +
                            " above tolerance",
                        out.iterations, out.residual);
}

TangentVector riem_log_identity(const Homography& g, const TangentVector& r0, double tol,
                                int max_iter) {
    const LogSolve solve = riem_log_solve(g.matrix(), r0.matrix(), tol, max_iter);
    return TangentVector::project(solve.r);
}

TangentVector riem_log_identity(const Homography& g) {
    return riem_log_identity(g, TangentVector::project(log_warm_start(g.matrix())));
}

// ---------------------------------------------------------------------------
// Exact geodesic loss
// ---------------------------------------------------------------------------

ExactGdtResult gdt_exact(const Mat3& t, const Mat3& that) {
    const Mat3 t_inv = checked_inverse(t, "gdt_exact");
    linalg::require_finite(that, "gdt_exact");
    const Mat3 m = t_inv * that;
    const LogSolve solve = riem_log_solve(m, log_warm_start(m));

    ExactGdtResult out;
    out.r = solve.r;
    out.iterations = solve.iterations;
    out.solve_residual = solve.residual;
    out.loss = 0.5 * solve.r.squaredNorm();

    // vec(grad)^T = vec(R)^T J^-1 (I (x) t^-1)
    const Mat9 jac_t = riem_exp_jacobian(solve.r).transpose();
    const Eigen::PartialPivLU<Mat9> lu(jac_t);
    if (!(lu.rcond() >= kMinJacobianRcond)) {
        throw IllConditioned("gdt_exact: Exp_I Jacobian condition bound exceeded");
    }
    const Vec9 y = lu.solve(linalg::vec<double>(solve.r));
    out.grad_that = t_inv.transpose() * linalg::unvec<double>(y);
    return out;
}

double gdt_loss_exact(const Mat3& t, const Mat3& that) {
    const Mat3 m = checked_inverse(t, "gdt_loss_exact") * that;
    linalg::require_finite(that, "gdt_loss_exact");
    return 0.5 * riem_log_solve(m, log_warm_start(m)).r.squaredNorm();
}

Mat3 gdt_exact_grad(const Mat3& t, const Mat3& that) { return gdt_exact(t, that).grad_that; }

// ---------------------------------------------------------------------------
// SO(3) projection and surrogate loss
// ---------------------------------------------------------------------------

Rotation3 project_so3(const Mat3& m) {
    linalg::require_finite(m, "project_so3");
    return Rotation3(project_with_parts(m).p);
}

double rotation_angle(const Rotation3& p) { return angle_from_trace(p.matrix().trace()); }

GdtResult surrogate_loss(const Mat3& t, const Mat3& that, const SurrogateOptions& opts) {
    validate(opts);
    const Mat3 t_inv = checked_inverse(t, "surrogate_loss");
    linalg::require_finite(that, "surrogate_loss");
    const Mat3 m = t_inv * that;

    GdtResult out;
    out.loss = surrogate_value(m, opts, &out.theta, &out.residual_sq);
    const SurrogateGradient grad = surrogate_gradient_in_m(m, t_inv, that, opts);
    out.grad_that = grad.grad;
    out.near_singular_gradient = grad.near_singular;
    return out;
}

SurrogateGradient surrogate_loss_grad(const Mat3& t, const Mat3& that,
                                      const SurrogateOptions& opts) {
    validate(opts);
    const Mat3 t_inv = checked_inverse(t, "surrogate_loss_grad");
    linalg::require_finite(that, "surrogate_loss_grad");
    return surrogate_gradient_in_m(t_inv * that, t_inv, that, opts);
}

MseResult mse_loss(const Mat3& t, const Mat3& that) {
    linalg::require_finite(t, "mse_loss");
    linalg::require_finite(that, "mse_loss");
    MseResult out;
    out.grad = that - t;
    out.value = 0.5 * out.grad.squaredNorm();
    return out;
}

// ---------------------------------------------------------------------------
// Geodesics
// ---------------------------------------------------------------------------

GeodesicCurve GeodesicCurve::between(const Homography& t, const Homography& that, double tol,
                                     int max_iter) {
    const Homography rel = t.inverse() * that;
    const Mat3 r0 = log_warm_start(rel.matrix());
    const LogSolve solve = riem_log_solve(rel.matrix(), r0, tol, max_iter);
    return GeodesicCurve(t, TangentVector::project(solve.r));
}

Homography GeodesicCurve::point_at(double s) const {
    return base_ * riem_exp_identity(velocity_ * s);
}

Mat3 normalize_unit_det_pullback(const Mat3& m, const Mat3& grad_normalized) {
    const double det = m.determinant();
    if (std::abs(det) < kSingularDetTol) {
        throw SingularMatrix("normalize_unit_det: |det| below 1e-9");
    }
    const double c = std::cbrt(det);
    const double inner = (grad_normalized.array() * m.array()).sum();
    return (grad_normalized - (inner / 3.0) * m.inverse().transpose()) / c;
}

}  // namespace liegdt
