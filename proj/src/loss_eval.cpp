#include "liegdt/loss_eval.hpp"

#include <limits>

namespace liegdt {

const char* to_string(LossMode mode) {
    switch (mode) {
        case LossMode::surrogate: return "surrogate";
        case LossMode::exact: return "exact";
        case LossMode::mse: return "mse";
    }
    return "unknown";
}

LossMode loss_mode_from_string(const std::string& name) {
    if (name == "surrogate") return LossMode::surrogate;
    if (name == "exact") return LossMode::exact;
    if (name == "mse") return LossMode::mse;
    throw DomainError("unknown loss mode '" + name + "'");
}

const char* to_string(LossStatus status) {
    switch (status) {
        case LossStatus::ok: return "ok";
        case LossStatus::singular: return "singular";
        case LossStatus::no_convergence: return "no_convergence";
        case LossStatus::near_singular_gradient: return "near_singular_gradient";
    }
    return "unknown";
}

LossResponse evaluate_loss(const LossRequest& request) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    LossResponse out;
    out.theta = nan;
    out.residual_sq = nan;

    auto fail = [&](LossStatus status, const Error& e) {
        out.status = status;
        out.loss = nan;
        out.grad.setConstant(nan);
        out.error_code = e.code();
        out.message = e.what();
    };

    try {
        const Homography t = normalize_unit_det(request.t);
        const Homography that = normalize_unit_det(request.that);
        switch (request.mode) {
            case LossMode::surrogate: {
                const GdtResult r = surrogate_loss(t, that, {request.lambda, request.angle_power});
                out.loss = r.loss;
                out.grad = r.grad_that;
                out.theta = r.theta;
                out.residual_sq = r.residual_sq;
                if (r.near_singular_gradient) out.status = LossStatus::near_singular_gradient;
                break;
            }
            case LossMode::exact: {
                const ExactGdtResult r = gdt_exact(t.matrix(), that.matrix());
                out.loss = r.loss;
                out.grad = r.grad_that;
                out.iterations = r.iterations;
                out.solve_residual = r.solve_residual;
                break;
            }
            case LossMode::mse: {
                const MseResult r = mse_loss(t, that);
                out.loss = r.value;
                out.grad = r.grad;
                break;
            }
        }
    } catch (const NoConvergence& e) {
        fail(LossStatus::no_convergence, e);
        out.iterations = e.iterations();
        out.solve_residual = e.residual();
    } catch (const Error& e) {
        // singular_matrix, degenerate_projection, ill_conditioned, domain_error, range_error
        fail(LossStatus::singular, e);
    }
    return out;
}

std::vector<LossResponse> evaluate_loss_batch(const std::vector<LossRequest>& requests) {
    std::vector<LossResponse> out;
    out.reserve(requests.size());
    for (const LossRequest& r : requests) out.push_back(evaluate_loss(r));
    return out;
}

}  // namespace liegdt
