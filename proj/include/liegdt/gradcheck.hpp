#pragma once

// Seeded random matrices and the finite-difference harness behind
// `liegdt gradcheck`.

#include <cstdint>
#include <string>

#include "liegdt/geometry.hpp"
#include "liegdt/sampler.hpp"
#include "liegdt/train.hpp"

namespace liegdt::check {

/// Rodrigues closed form I + sin(a) K + (1 - cos(a)) K^2 for a unit axis.
Mat3 rotation_about(const Vec3& axis, double angle);

/// Uniformly distributed axis, angle uniform in [min_angle, max_angle].
Mat3 random_rotation(sampling::Rng& rng, double min_angle, double max_angle);

/// Gaussian entries with the trace removed, rescaled to a Frobenius norm
/// uniform in (0, max_norm].
Mat3 random_trace_free(sampling::Rng& rng, double max_norm);

/// Trace-free symmetric matrix with Frobenius norm uniform in (0, max_norm].
Mat3 random_symmetric_trace_free(sampling::Rng& rng, double max_norm);

/// Exp_I of a random tangent vector of norm at most `radius`.
Homography random_homography(sampling::Rng& rng, double radius);

struct Pair {
    Homography t;
    Homography that;
};

/// t^-1 that = Q S with Q a rotation of angle in [0.1, 2.5] and S symmetric
/// positive definite with unit determinant.
Pair surrogate_pair(sampling::Rng& rng);
/// that = t Exp_I(R) with |R|_F <= 0.5.
Pair near_identity_pair(sampling::Rng& rng);

/// |analytic - numeric|_F / max(|numeric|_F, 1e-3): relative error with an
/// absolute floor of 1e-3 * tolerance.
double relative_error(const Mat3& analytic, const Mat3& numeric);

enum class GradMode { surrogate, exact, mse, head };

GradMode grad_mode_from_string(const std::string& name);
const char* to_string(GradMode mode);

/// 1e-5 for the loss kernels, 1e-4 for the end-to-end loss head.
double default_tolerance(GradMode mode);

struct GradcheckReport {
    GradMode mode = GradMode::surrogate;
    std::uint64_t seed = 0;
    int count = 0;
    double tolerance = 0.0;
    double max_rel_err = 0.0;
    int worst_case = -1;
    bool passed = true;
};

/// Central differences on `count` seeded cases (step 1e-6; 1e-5 for the
/// exact loss, whose value carries the log-solver error).
GradcheckReport run_gradcheck(GradMode mode, std::uint64_t seed, int count);

}  // namespace liegdt::check
