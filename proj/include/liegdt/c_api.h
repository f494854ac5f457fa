#ifndef LIEGDT_C_API_H
#define LIEGDT_C_API_H

/*
 * Flat C interface to the loss kernels, for foreign-language bindings.
 *
 * Matrices are 9 contiguous doubles in row-major order. Batch arguments are
 * arrays of `count` elements (9 * count for matrices). Results are written
 * into caller-owned buffers; nothing is retained after the call returns.
 * Values are identical to `liegdt loss` for the same inputs.
 */

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

enum liegdt_mode {
    LIEGDT_MODE_SURROGATE = 0,
    LIEGDT_MODE_EXACT = 1,
    LIEGDT_MODE_MSE = 2
};

enum liegdt_status {
    LIEGDT_STATUS_OK = 0,
    LIEGDT_STATUS_SINGULAR = 1,
    LIEGDT_STATUS_NO_CONVERGENCE = 2,
    LIEGDT_STATUS_NEAR_SINGULAR_GRADIENT = 3
};

/*
 * Evaluates `count` independent requests. A failing element only sets its
 * own status (loss and gradient become NaN); the batch always completes.
 * When `fixed_last` is non-zero the ninth gradient entry is reported as 0,
 * matching a decoder whose last matrix element is the constant 1.
 * theta_out / residual_sq_out may be NULL; they are NaN outside surrogate mode.
 * Returns 0, or -1 if a required pointer is NULL.
 */
int liegdt_eval_loss_batch(size_t count,
                           const double* t,
                           const double* that,
                           const double* lambda,
                           const int* angle_power,
                           const int* mode,
                           int fixed_last,
                           double* loss_out,
                           double* grad_out,
                           double* theta_out,
                           double* residual_sq_out,
                           int* status_out);

/* Single-request convenience wrapper; returns the status code, or -1. */
int liegdt_eval_loss(const double* t,
                     const double* that,
                     double lambda,
                     int angle_power,
                     int mode,
                     int fixed_last,
                     double* loss_out,
                     double* grad_out);

#ifdef __cplusplus
}
#endif

#endif /* LIEGDT_C_API_H */
