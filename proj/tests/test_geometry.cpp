#include <doctest.h>

#include <numbers>

#include <unsupported/Eigen/MatrixFunctions>

#include "liegdt/geometry.hpp"
#include "support.hpp"

using namespace liegdt;
using test::Draw;
using test::numeric_gradient;
using test::rel_err;
using test::rot_z;

namespace {

Mat3 random_unit_det(Draw& draw, double radius) {
    // Independent of riem_exp_identity: exp of a trace-free matrix.
    return draw.trace_free(radius).exp();
}

/// t^-1 that = Q S with rotation angle of Q in [lo, hi] and S SPD, det 1.
std::pair<Mat3, Mat3> polar_pair(Draw& draw, double lo, double hi) {
    const Mat3 t = random_unit_det(draw, 0.5);
    const Mat3 q = draw.rotation(lo, hi);
    const Mat3 s = draw.symmetric_trace_free(0.3).exp();
    return {t, t * q * s};
}

}  // namespace

TEST_CASE("normalize_unit_det") {
    CHECK((normalize_unit_det(Mat3::Identity() * 2.0).matrix() - Mat3::Identity()).norm() < 1e-15);

    Draw draw(1);
    const Mat3 m = random_unit_det(draw, 1.0);
    CHECK((normalize_unit_det(m).matrix() - m).norm() < 1e-14);

    const Mat3 flip = Vec3(-1.0, 1.0, 1.0).asDiagonal();
    const Mat3 n = normalize_unit_det(flip).matrix();
    CHECK((n - Mat3(Vec3(1.0, -1.0, -1.0).asDiagonal())).norm() < 1e-15);
    CHECK(std::abs(n.determinant() - 1.0) < 1e-12);

    CHECK_THROWS_AS(normalize_unit_det(Mat3::Zero()), SingularMatrix);
    Mat3 rank2 = Mat3::Identity();
    rank2(2, 2) = 0.0;
    CHECK_THROWS_AS(normalize_unit_det(rank2), SingularMatrix);
}

TEST_CASE("value types validate their invariants") {
    CHECK_THROWS_AS(Homography::from_unit_det(Mat3::Identity() * 1.01), DomainError);
    CHECK_NOTHROW(Homography::from_unit_det(rot_z(0.2)));
    CHECK_THROWS_AS(TangentVector::from_matrix(Mat3::Identity()), DomainError);
    CHECK(std::abs(TangentVector::project(Mat3::Identity() * 3.0 + test::k_z()).matrix().trace()) < 1e-15);
    CHECK_THROWS_AS(Rotation3::from_matrix(Mat3::Identity() * 1.1), DomainError);
    CHECK_THROWS_AS(Rotation3::from_matrix(Mat3(Vec3(1.0, 1.0, -1.0).asDiagonal())), DomainError);

    Draw draw(2);
    const Mat3 a = random_unit_det(draw, 1.0);
    const Homography h = Homography::from_unit_det(a);
    CHECK(((h * h.inverse()).matrix() - Mat3::Identity()).norm() < 1e-12);
}

TEST_CASE("riem_exp_identity closed forms") {
    CHECK(riem_exp_identity(Mat3::Zero()) == Mat3::Identity());

    Draw draw(3);
    for (int i = 0; i < 50; ++i) {
        const Mat3 sym = draw.symmetric_trace_free(1.5);
        CHECK((riem_exp_identity(sym) - sym.exp()).norm() <= 1e-12 * sym.exp().norm());
    }
}

TEST_CASE("skew reduction: Exp_I(R) = exp(R) for skew R") {
    Draw draw(4);
    for (int i = 0; i < 200; ++i) {
        const Mat3 r = draw.skew(2.0);
        CHECK((riem_exp_identity(r) - r.exp()).norm() <= 1e-12);
    }
}

TEST_CASE("Exp_I of trace-free matrices has unit determinant") {
    Draw draw(5);
    for (int i = 0; i < 200; ++i) {
        const Mat3 r = draw.trace_free(2.0);
        CHECK(std::abs(riem_exp_identity(r).determinant() - 1.0) <= 1e-10);
        CHECK_NOTHROW(riem_exp_identity(TangentVector::from_matrix(r)));
    }
}

TEST_CASE("riem_exp_jacobian") {
    CHECK((riem_exp_jacobian(Mat3::Zero()) - Mat9::Identity()).norm() < 1e-15);

    Draw draw(6);
    for (int i = 0; i < 150; ++i) {
        Mat3 r = draw.trace_free(1.0);
        Mat3 e = draw.gaussian();
        if (i % 3 == 1) {  // symmetric point, skew direction
            r = draw.symmetric_trace_free(1.0);
            e = draw.skew(1.0);
        }
        const double h = 1e-6;
        const Mat3 fd = (riem_exp_identity(Mat3(r + h * e)) - riem_exp_identity(Mat3(r - h * e))) / (2.0 * h);
        const Mat3 lin = linalg::unvec<double>(riem_exp_jacobian(r) * linalg::vec(e));
        CHECK((lin - fd).norm() <= 1e-6);
    }
}

TEST_CASE("riem_log_identity") {
    CHECK(riem_log_identity(Homography::identity(), TangentVector()).matrix().norm() == 0.0);

    const Homography rz = Homography::from_unit_det(rot_z(0.4));
    CHECK((riem_log_identity(rz).matrix() - 0.4 * test::k_z()).norm() < 1e-12);

    Draw draw(7);
    for (int i = 0; i < 200; ++i) {
        const Mat3 r0 = draw.trace_free(0.5);
        const Homography g = riem_exp_identity(TangentVector::from_matrix(r0));
        const Mat3 cold = riem_log_identity(g, TangentVector()).matrix();
        const Mat3 warm = riem_log_identity(g).matrix();
        CHECK((riem_exp_identity(cold) - g.matrix()).norm() <= 1e-10);
        CHECK((cold - r0).norm() <= 1e-8);
        CHECK((warm - r0).norm() <= 1e-8);
    }
}

TEST_CASE("riem_log_solve reports failure") {
    Draw draw(8);
    const Mat3 g = riem_exp_identity(draw.trace_free(0.5));
    CHECK_THROWS_AS(riem_log_solve(g, Mat3::Zero(), 1e-13, 0), NoConvergence);
    try {
        riem_log_solve(g, Mat3::Zero(), 1e-13, 0);
    } catch (const NoConvergence& e) {
        CHECK(e.code() == std::string("no_convergence"));
        CHECK(e.residual() > 0.0);
    }
}

TEST_CASE("gdt_loss_exact") {
    Draw draw(9);
    const Mat3 t = random_unit_det(draw, 0.5);
    CHECK(gdt_loss_exact(t, t) == doctest::Approx(0.0).epsilon(1e-20));
    CHECK(gdt_exact_grad(t, t).norm() < 1e-12);

    CHECK(gdt_loss_exact(Mat3::Identity(), rot_z(0.3)) == doctest::Approx(0.09).epsilon(1e-12));

    for (int i = 0; i < 20; ++i) {
        const Mat3 r0 = draw.trace_free(0.5);
        const Mat3 that = t * riem_exp_identity(r0);
        CHECK(gdt_loss_exact(t, that) == doctest::Approx(0.5 * r0.squaredNorm()).epsilon(1e-9));
        const ExactGdtResult full = gdt_exact(t, that);
        CHECK(full.solve_residual <= kLogTolerance);
        CHECK(full.iterations >= 1);
    }
}

TEST_CASE("gdt_exact_grad matches central differences") {
    Draw draw(10);
    const auto loss_at = [](const Mat3& t) { return [t](const Mat3& x) { return gdt_loss_exact(t, x); }; };

    const Mat3 pure = rot_z(0.3);
    const Mat3 g_pure = gdt_exact_grad(Mat3::Identity(), pure);
    CHECK((g_pure - numeric_gradient(loss_at(Mat3::Identity()), pure, 1e-6)).norm() <= 1e-6);

    for (int i = 0; i < 120; ++i) {
        const Mat3 t = random_unit_det(draw, 0.5);
        const Mat3 that = t * riem_exp_identity(draw.trace_free(0.5));
        CHECK(rel_err(gdt_exact_grad(t, that), numeric_gradient(loss_at(t), that, 1e-5)) <= 1e-5);
    }
}

TEST_CASE("project_so3") {
    Draw draw(11);
    const Mat3 q = draw.rotation(0.0, 3.0);
    CHECK((project_so3(q).matrix() - q).norm() < 1e-12);
    CHECK((project_so3(Vec3(2.0, 0.5, 1.0).asDiagonal()).matrix() - Mat3::Identity()).norm() < 1e-14);

    const Mat3 m = rot_z(0.3) * Vec3(1.1, 1.0 / 1.1, 1.0).asDiagonal();
    CHECK((project_so3(m).matrix() - rot_z(0.3)).norm() < 1e-13);

    // Reflection-dominated input: the closed form flips the smallest direction.
    const Mat3 refl = Vec3(3.0, 2.0, -1.0).asDiagonal();
    CHECK((project_so3(refl).matrix() - Mat3(Vec3(1.0, 1.0, 1.0).asDiagonal())).norm() < 1e-14);

    CHECK_THROWS_AS(project_so3(Mat3(Vec3(1.0, 1.0, -1.0).asDiagonal())), DegenerateProjection);
    CHECK_THROWS_AS(project_so3(Mat3::Zero()), DegenerateProjection);
}

TEST_CASE("project_so3 equals the Newton polar factor for positive determinants") {
    Draw draw(12);
    for (int i = 0; i < 300; ++i) {
        Mat3 m = draw.gaussian();
        if (m.determinant() < 0.0) m.col(0) = -m.col(0);
        if (std::abs(m.determinant()) < 1e-3) continue;
        CHECK((project_so3(m).matrix() - test::newton_polar(m)).norm() <= 1e-10);
    }
}

TEST_CASE("projection optimality, small Monte-Carlo") {
    Draw draw(13);
    for (int i = 0; i < 20; ++i) {
        const Mat3 m = draw.gaussian() * 1.5;
        const double best = (m - project_so3(m).matrix()).norm();
        for (int k = 0; k < 200; ++k) {
            CHECK(best <= (m - draw.rotation(0.0, std::numbers::pi)).norm() + 1e-9);
        }
    }
}

TEST_CASE("rotation_angle") {
    CHECK(rotation_angle(Rotation3()) == 0.0);
    CHECK(rotation_angle(Rotation3::from_matrix(rot_z(std::numbers::pi / 2))) ==
          doctest::Approx(std::numbers::pi / 2).epsilon(1e-15));
    CHECK(rotation_angle(Rotation3::from_matrix(Vec3(1.0, -1.0, -1.0).asDiagonal())) ==
          doctest::Approx(std::numbers::pi).epsilon(1e-15));
}

TEST_CASE("Rodrigues consistency") {
    Draw draw(14);
    for (int i = 0; i < 1000; ++i) {
        const Rotation3 p = Rotation3::from_matrix(draw.rotation(0.0, std::numbers::pi - 1e-3));
        const double theta = rotation_angle(p);
        CHECK(std::abs(0.5 * linalg::rot_log(p.matrix()).squaredNorm() - theta * theta) <= 1e-9);
    }
}

TEST_CASE("surrogate_loss values") {
    Draw draw(15);
    const Mat3 t = random_unit_det(draw, 0.7);
    const GdtResult same = surrogate_loss(t, t, {3.0, 1});
    CHECK(same.theta == doctest::Approx(0.0).epsilon(1e-7));
    CHECK(same.residual_sq < 1e-24);
    CHECK(same.grad_that.norm() < 1e-10);

    const Mat3 s = Vec3(1.1, 1.0 / 1.1, 1.0).asDiagonal();
    const GdtResult r = surrogate_loss(Mat3::Identity(), Mat3(rot_z(0.3) * s));
    const double residual = (s - Mat3::Identity()).squaredNorm();
    CHECK(r.theta == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(r.residual_sq == doctest::Approx(residual).epsilon(1e-12));
    CHECK(r.loss == doctest::Approx(0.3 + residual).epsilon(1e-12));

    const GdtResult squared = surrogate_loss(Mat3::Identity(), Mat3(rot_z(0.3) * s), {0.5, 2});
    CHECK(squared.loss == doctest::Approx(0.09 + 0.5 * residual).epsilon(1e-12));

    CHECK_THROWS_AS(surrogate_loss(Mat3::Identity(), Mat3::Identity(), {-1.0, 1}), DomainError);
    CHECK_THROWS_AS(surrogate_loss(Mat3::Identity(), Mat3::Identity(), {1.0, 3}), DomainError);
    CHECK_THROWS_AS(surrogate_loss(Mat3::Zero(), Mat3::Identity()), SingularMatrix);
}

TEST_CASE("surrogate loss is nonnegative and zero only at T-hat = T") {
    Draw draw(16);
    for (int i = 0; i < 200; ++i) {
        const auto [t, that] = polar_pair(draw, 0.0, 3.0);
        const GdtResult r = surrogate_loss(t, that);
        CHECK(r.loss >= 0.0);
        CHECK(r.theta >= 0.0);
        CHECK(r.theta <= std::numbers::pi);
        CHECK(r.residual_sq >= 0.0);
        if ((that - t).norm() > 1e-6) CHECK(r.loss > 0.0);
    }
}

TEST_CASE("exact and surrogate losses on pure rotations") {
    Draw draw(17);
    for (int i = 0; i < 100; ++i) {
        const Mat3 t = random_unit_det(draw, 0.5);
        const Mat3 q = draw.rotation(0.05, 2.5);
        const double theta = Eigen::AngleAxisd(q).angle();
        const GdtResult s = surrogate_loss(t, Mat3(t * q));
        CHECK(s.residual_sq <= 1e-12);
        CHECK(s.theta == doctest::Approx(theta).epsilon(1e-9));
        CHECK(s.theta == doctest::Approx(rotation_angle(Rotation3::from_matrix(q))).epsilon(1e-9));
        CHECK(gdt_loss_exact(t, Mat3(t * q)) == doctest::Approx(theta * theta).epsilon(1e-8));
    }
}

TEST_CASE("left invariance") {
    Draw draw(18);
    for (int i = 0; i < 200; ++i) {
        const auto [t, that] = polar_pair(draw, 0.1, 2.5);
        const Mat3 g = random_unit_det(draw, 0.8);
        const double a = surrogate_loss(t, that).loss;
        const double b = surrogate_loss(Mat3(g * t), Mat3(g * that)).loss;
        CHECK(std::abs(a - b) <= 1e-10);
    }
}

TEST_CASE("surrogate_loss_grad matches central differences") {
    Draw draw(19);
    for (int power = 1; power <= 2; ++power) {
        for (int i = 0; i < 120; ++i) {
            const auto [t, that] = polar_pair(draw, 0.1, 2.5);
            const SurrogateOptions opts{draw.uniform(0.0, 2.0), power};
            const SurrogateGradient g = surrogate_loss_grad(t, that, opts);
            const Mat3 fd = numeric_gradient(
                [&, t = t](const Mat3& x) { return surrogate_loss(t, x, opts).loss; }, that, 1e-6);
            CHECK(rel_err(g.grad, fd) <= 1e-5);
            CHECK_FALSE(g.near_singular);
            CHECK((surrogate_loss(t, that, opts).grad_that - g.grad).norm() == 0.0);
        }
    }
}

TEST_CASE("surrogate gradient in the pure-residual case") {
    // t^-1 that SPD: P = I, theta = 0 sits in the clamp band, so only the
    // residual term contributes.
    Draw draw(20);
    for (int i = 0; i < 30; ++i) {
        const Mat3 t = random_unit_det(draw, 0.5);
        const Mat3 that = t * draw.symmetric_trace_free(0.4).exp();
        const SurrogateGradient g = surrogate_loss_grad(t, that);
        const Mat3 fd = numeric_gradient(
            [&](const Mat3& x) { return surrogate_loss(t, x).residual_sq; }, that, 1e-6);
        CHECK(g.near_singular);
        CHECK(rel_err(g.grad, fd) <= 1e-5);
    }
}

TEST_CASE("surrogate gradient near a half turn is flagged") {
    const Mat3 half = rot_z(std::numbers::pi);
    const GdtResult r = surrogate_loss(Mat3::Identity(), half);
    CHECK(r.theta == doctest::Approx(std::numbers::pi));
    CHECK(r.near_singular_gradient);
    CHECK(r.grad_that.allFinite());
}

TEST_CASE("mse_loss") {
    Draw draw(21);
    const Mat3 t = draw.gaussian();
    CHECK(mse_loss(t, t).value == 0.0);
    CHECK(mse_loss(t, t).grad.norm() == 0.0);

    Mat3 e = Mat3::Zero();
    e(0, 1) = 1.0;
    const MseResult r = mse_loss(Mat3::Identity(), Mat3(Mat3::Identity() + e));
    CHECK(r.value == 0.5);
    CHECK(r.grad == e);

    for (int i = 0; i < 100; ++i) {
        const Mat3 a = draw.gaussian();
        const Mat3 b = draw.gaussian();
        const Mat3 fd = numeric_gradient([&](const Mat3& x) { return mse_loss(a, x).value; }, b, 1e-6);
        CHECK(rel_err(mse_loss(a, b).grad, fd) <= 1e-5);
    }
}

TEST_CASE("geodesic_point") {
    const Homography i = Homography::identity();
    const auto rz = [](double a) { return Homography::from_unit_det(rot_z(a)); };
    const GeodesicCurve c = GeodesicCurve::between(i, rz(0.6));
    CHECK((geodesic_point(c, 0.5).matrix() - rot_z(0.3)).norm() < 1e-12);

    Draw draw(22);
    for (int k = 0; k < 50; ++k) {
        const Homography t = normalize_unit_det(random_unit_det(draw, 0.8));
        const Homography that = t * riem_exp_identity(TangentVector::from_matrix(draw.trace_free(0.5)));
        const GeodesicCurve curve = GeodesicCurve::between(t, that);
        CHECK((geodesic_point(curve, 0.0).matrix() - t.matrix()).norm() == 0.0);
        CHECK((geodesic_point(curve, 1.0).matrix() - that.matrix()).norm() <= 1e-8);
        CHECK(std::abs(geodesic_point(curve, 0.37).matrix().determinant() - 1.0) <= 1e-10);
    }
}

TEST_CASE("normalize_unit_det_pullback matches central differences") {
    Draw draw(23);
    for (int i = 0; i < 100; ++i) {
        Mat3 m = draw.gaussian();
        if (std::abs(m.determinant()) < 0.1) continue;
        const Mat3 w = draw.gaussian();  // f(N) = <w, N>
        const Mat3 fd = numeric_gradient(
            [&](const Mat3& x) { return (w.array() * normalize_unit_det(x).matrix().array()).sum(); }, m, 1e-6);
        CHECK(rel_err(normalize_unit_det_pullback(m, w), fd) <= 1e-6);
    }
}
