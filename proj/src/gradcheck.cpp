#include "liegdt/gradcheck.hpp"

#include <cmath>
#include <functional>
#include <limits>

namespace liegdt::check {

namespace {

Mat3 central_difference(const std::function<double(const Mat3&)>& f, const Mat3& at, double h) {
    Mat3 g;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            Mat3 plus = at;
            Mat3 minus = at;
            plus(i, j) += h;
            minus(i, j) -= h;
            g(i, j) = (f(plus) - f(minus)) / (2.0 * h);
        }
    }
    return g;
}

Vec3 random_unit(sampling::Rng& rng) {
    for (;;) {
        const Vec3 v(rng.normal(), rng.normal(), rng.normal());
        if (v.norm() > 1e-6) return v.normalized();
    }
}

double check_case(GradMode mode, sampling::Rng& rng) {
    switch (mode) {
        case GradMode::surrogate: {
            const Pair p = surrogate_pair(rng);
            const Mat3 t = p.t.matrix();
            const Mat3 analytic = surrogate_loss_grad(t, p.that.matrix()).grad;
            const Mat3 numeric = central_difference(
                [&](const Mat3& x) { return surrogate_loss(t, x).loss; }, p.that.matrix(), 1e-6);
            return relative_error(analytic, numeric);
        }
        case GradMode::exact: {
            const Pair p = near_identity_pair(rng);
            const Mat3 t = p.t.matrix();
            const Mat3 analytic = gdt_exact_grad(t, p.that.matrix());
            const Mat3 numeric = central_difference(
                [&](const Mat3& x) { return gdt_loss_exact(t, x); }, p.that.matrix(), 1e-5);
            return relative_error(analytic, numeric);
        }
        case GradMode::mse: {
            const Mat3 t = random_homography(rng, 1.0).matrix();
            const Mat3 that = random_homography(rng, 1.0).matrix();
            const Mat3 analytic = mse_loss(t, that).grad;
            const Mat3 numeric = central_difference(
                [&](const Mat3& x) { return mse_loss(t, x).value; }, that, 1e-6);
            return relative_error(analytic, numeric);
        }
        case GradMode::head: {
            const int size = 32;
            const Homography t =
                sampling::params_to_homography(sampling::sample_params(rng), size, size);
            Mat3 raw;
            do {
                raw = t.matrix() * random_rotation(rng, 0.1, 1.0) *
                      linalg::mat_exp(random_symmetric_trace_free(rng, 0.3));
            } while (std::abs(raw(2, 2)) < 0.2);
            raw /= raw(2, 2);
            aet::Raw8 raw8{};
            for (int k = 0; k < 8; ++k) raw8[k] = raw(k / 3, k % 3);

            aet::TrainConfig config;
            config.loss_kind = rng.uniform() < 0.5 ? aet::LossKind::gdt_surrogate : aet::LossKind::mse;
            const aet::HeadResult head = loss_head_grad(t, raw8, config);
            Mat3 analytic = Mat3::Zero();
            Mat3 numeric = Mat3::Zero();
            const double h = 1e-6;
            for (int k = 0; k < 8; ++k) {
                aet::Raw8 plus = raw8;
                aet::Raw8 minus = raw8;
                plus[k] += h;
                minus[k] -= h;
                analytic(k / 3, k % 3) = head.grad_raw8[k];
                numeric(k / 3, k % 3) =
                    (loss_head_grad(t, plus, config).loss - loss_head_grad(t, minus, config).loss) / (2.0 * h);
            }
            return relative_error(analytic, numeric);
        }
    }
    return 0.0;
}

}  // namespace

Mat3 rotation_about(const Vec3& axis, double angle) {
    const Mat3 k = linalg::hat<double>(axis.normalized());
    return Mat3::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * k * k;
}

Mat3 random_rotation(sampling::Rng& rng, double min_angle, double max_angle) {
    const Vec3 axis = random_unit(rng);
    return rotation_about(axis, rng.uniform(min_angle, max_angle));
}

Mat3 random_trace_free(sampling::Rng& rng, double max_norm) {
    Mat3 m;
    for (int k = 0; k < 9; ++k) m(k / 3, k % 3) = rng.normal();
    m -= (m.trace() / 3.0) * Mat3::Identity();
    const double norm = (1.0 - rng.uniform()) * max_norm;
    return m * (norm / m.norm());
}

Mat3 random_symmetric_trace_free(sampling::Rng& rng, double max_norm) {
    Mat3 m;
    for (int k = 0; k < 9; ++k) m(k / 3, k % 3) = rng.normal();
    m = 0.5 * (m + m.transpose()).eval();
    m -= (m.trace() / 3.0) * Mat3::Identity();
    const double norm = (1.0 - rng.uniform()) * max_norm;
    return m * (norm / m.norm());
}

Homography random_homography(sampling::Rng& rng, double radius) {
    return normalize_unit_det(riem_exp_identity(random_trace_free(rng, radius)));
}

Pair surrogate_pair(sampling::Rng& rng) {
    const Homography t = random_homography(rng, 0.5);
    const Mat3 q = random_rotation(rng, 0.1, 2.5);
    const Mat3 s = linalg::mat_exp(random_symmetric_trace_free(rng, 0.3));
    return {t, normalize_unit_det(t.matrix() * q * s)};
}

Pair near_identity_pair(sampling::Rng& rng) {
    const Homography t = random_homography(rng, 0.5);
    const Mat3 step = riem_exp_identity(random_trace_free(rng, 0.5));
    return {t, normalize_unit_det(t.matrix() * step)};
}

double relative_error(const Mat3& analytic, const Mat3& numeric) {
    return (analytic - numeric).norm() / std::max(numeric.norm(), 1e-3);
}

GradMode grad_mode_from_string(const std::string& name) {
    if (name == "surrogate") return GradMode::surrogate;
    if (name == "exact") return GradMode::exact;
    if (name == "mse") return GradMode::mse;
    if (name == "head") return GradMode::head;
    throw DomainError("unknown gradcheck mode '" + name + "'");
}

const char* to_string(GradMode mode) {
    switch (mode) {
        case GradMode::surrogate: return "surrogate";
        case GradMode::exact: return "exact";
        case GradMode::mse: return "mse";
        case GradMode::head: return "head";
    }
    return "unknown";
}

double default_tolerance(GradMode mode) { return mode == GradMode::head ? 1e-4 : 1e-5; }

GradcheckReport run_gradcheck(GradMode mode, std::uint64_t seed, int count) {
    if (count < 1) throw DomainError("run_gradcheck: count must be >= 1");
    GradcheckReport report;
    report.mode = mode;
    report.seed = seed;
    report.count = count;
    report.tolerance = default_tolerance(mode);
    const sampling::Rng base(seed, 0x6772616463686bULL);
    for (int i = 0; i < count; ++i) {
        sampling::Rng rng = base.derive(static_cast<std::uint64_t>(i));
        double err = check_case(mode, rng);
        if (std::isnan(err)) err = std::numeric_limits<double>::infinity();
        if (report.worst_case < 0 || err > report.max_rel_err) {
            report.max_rel_err = err;
            report.worst_case = i;
        }
    }
    report.passed = report.max_rel_err < report.tolerance;
    return report;
}

}  // namespace liegdt::check
