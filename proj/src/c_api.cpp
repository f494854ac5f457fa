#include "liegdt/c_api.h"

#include <limits>

#include "liegdt/loss_eval.hpp"

namespace {

liegdt::Mat3 load_row_major(const double* p) {
    liegdt::Mat3 m;
    for (int k = 0; k < 9; ++k) m(k / 3, k % 3) = p[k];
    return m;
}

}  // namespace

extern "C" int liegdt_eval_loss_batch(size_t count, const double* t, const double* that,
                                      const double* lambda, const int* angle_power,
                                      const int* mode, int fixed_last, double* loss_out,
                                      double* grad_out, double* theta_out,
                                      double* residual_sq_out, int* status_out) {
    if (count == 0) return 0;
    if (!t || !that || !lambda || !angle_power || !mode || !loss_out || !grad_out || !status_out) {
        return -1;
    }
    for (size_t i = 0; i < count; ++i) {
        liegdt::LossResponse r;
        if (mode[i] < 0 || mode[i] > 2) {
            r.status = liegdt::LossStatus::singular;
            r.loss = std::numeric_limits<double>::quiet_NaN();
            r.grad.setConstant(r.loss);
            r.theta = r.residual_sq = r.loss;
        } else {
            liegdt::LossRequest req;
            req.t = load_row_major(t + 9 * i);
            req.that = load_row_major(that + 9 * i);
            req.lambda = lambda[i];
            req.angle_power = angle_power[i];
            req.mode = static_cast<liegdt::LossMode>(mode[i]);
            r = liegdt::evaluate_loss(req);
        }
        loss_out[i] = r.loss;
        for (int k = 0; k < 9; ++k) grad_out[9 * i + k] = r.grad(k / 3, k % 3);
        if (fixed_last && r.has_value()) grad_out[9 * i + 8] = 0.0;
        if (theta_out) theta_out[i] = r.theta;
        if (residual_sq_out) residual_sq_out[i] = r.residual_sq;
        status_out[i] = static_cast<int>(r.status);
    }
    return 0;
}

extern "C" int liegdt_eval_loss(const double* t, const double* that, double lambda,
                                int angle_power, int mode, int fixed_last, double* loss_out,
                                double* grad_out) {
    int status = -1;
    if (liegdt_eval_loss_batch(1, t, that, &lambda, &angle_power, &mode, fixed_last, loss_out,
                               grad_out, nullptr, nullptr, &status) != 0) {
        return -1;
    }
    return status;
}
