#pragma once

// Single evaluation path behind both `liegdt loss` and the C interface,
// so the two agree bit for bit. Both inputs are unit-determinant
// normalized first; gradients are with respect to the normalized estimate.

#include <string>
#include <vector>

#include "liegdt/geometry.hpp"

namespace liegdt {

enum class LossMode { surrogate = 0, exact = 1, mse = 2 };

const char* to_string(LossMode mode);
LossMode loss_mode_from_string(const std::string& name);

enum class LossStatus { ok = 0, singular = 1, no_convergence = 2, near_singular_gradient = 3 };

const char* to_string(LossStatus status);

struct LossRequest {
    Mat3 t = Mat3::Identity();
    Mat3 that = Mat3::Identity();
    double lambda = 1.0;
    int angle_power = 1;
    LossMode mode = LossMode::surrogate;
};

struct LossResponse {
    LossStatus status = LossStatus::ok;
    double loss = 0.0;
    Mat3 grad = Mat3::Zero();
    double theta = 0.0;        // surrogate mode only, NaN otherwise
    double residual_sq = 0.0;  // surrogate mode only, NaN otherwise
    int iterations = 0;        // exact mode: log-solver iterations
    double solve_residual = 0.0;
    /// Library error code when status is not ok / near_singular_gradient
    /// ("singular_matrix", "degenerate_projection", ...).
    std::string error_code;
    std::string message;

    bool has_value() const noexcept {
        return status == LossStatus::ok || status == LossStatus::near_singular_gradient;
    }
};

/// Never throws for domain failures; they are reported through `status`.
LossResponse evaluate_loss(const LossRequest& request);

std::vector<LossResponse> evaluate_loss_batch(const std::vector<LossRequest>& requests);

}  // namespace liegdt
