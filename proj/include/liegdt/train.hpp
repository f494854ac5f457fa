#pragma once

// Desk-scale self-training of a Siamese encoder and transformation decoder.
// The encoder is two dense ReLU layers shared by both branches; the decoder
// is one dense layer from the concatenated features to 8 outputs, which
// fill a 3x3 matrix row-major with the last entry fixed to one.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "liegdt/geometry.hpp"
#include "liegdt/sampler.hpp"

namespace liegdt::aet {

enum class LossKind { gdt_surrogate, mse };

const char* to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);

struct TrainConfig {
    int batch = 32;
    int steps = 2000;
    double learning_rate = 1e-3;  // 1e-5 in the full-scale setting; raised for the tiny model
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    double weight_decay = 5e-4;
    double lambda = 1.0;
    LossKind loss_kind = LossKind::gdt_surrogate;
    int angle_power = 1;
    int image_size = 32;
    std::uint64_t seed = 1;
    int hidden1 = 64;
    int hidden2 = 32;
    int eval_pairs = 512;
    /// Per-sample cap on |dL/d raw8|_2 before backprop; 0 disables. Outputs
    /// close to a singular matrix otherwise produce rare gradients 10^3 times
    /// the typical size.
    double head_grad_clip = 2.0;

    /// Throws DomainError on out-of-range fields.
    void validate() const;
    SurrogateOptions surrogate_options() const { return {lambda, angle_power}; }
};

struct DenseLayer {
    Eigen::MatrixXd w;  // out x in
    Eigen::VectorXd b;
};

/// Also used to hold gradients and Adam moments (same shapes).
struct ModelWeights {
    DenseLayer enc1;
    DenseLayer enc2;
    DenseLayer dec;

    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero encoder biases,
    /// decoder bias set to the identity pattern (1, 0, 0, 0, 1, 0, 0, 0).
    static ModelWeights initialize(int input, int hidden1, int hidden2, sampling::Rng& rng);
    static ModelWeights zeros(int input, int hidden1, int hidden2);
    ModelWeights zeros_like() const;

    int input_size() const { return static_cast<int>(enc1.w.cols()); }
    bool all_finite() const;
    /// FNV-1a over the raw bytes of every tensor, as 16 hex digits.
    std::string digest() const;
};

using Raw8 = std::array<double, 8>;

struct BranchCache {
    Eigen::VectorXd input;
    Eigen::VectorXd pre1, act1;
    Eigen::VectorXd pre2, act2;
};

struct ForwardCache {
    BranchCache original;
    BranchCache transformed;
    Eigen::VectorXd features;  // [E(x); E(t(x))]
};

struct ForwardResult {
    Raw8 raw8{};
    ForwardCache cache;
};

/// Flattens an image into the encoder input (pixels shifted by -0.5).
Eigen::VectorXd image_to_input(const sampling::GrayImage& img);

ForwardResult forward(const ModelWeights& weights, const sampling::GrayImage& x,
                      const sampling::GrayImage& tx);

/// Gradients of raw8 . grad_raw8 with respect to every weight.
ModelWeights backward(const ModelWeights& weights, const ForwardCache& cache,
                      std::span<const double, 8> grad_raw8);

/// Row-major fill with the ninth entry 1, then unit-determinant normalization.
Homography decoder_output_to_homography(std::span<const double, 8> raw8);

struct HeadResult {
    double loss = 0.0;
    Raw8 grad_raw8{};
    double theta = 0.0;  // rotation angle of project_so3(t^-1 that)
    bool near_singular_gradient = false;
};

/// Loss on the normalized decoder output and its gradient with respect to
/// the 8 raw outputs, through the normalization.
HeadResult loss_head_grad(const Homography& t, std::span<const double, 8> raw8,
                          const TrainConfig& config);

struct AdamState {
    ModelWeights first;
    ModelWeights second;
    long step = 0;

    static AdamState for_weights(const ModelWeights& w) { return {w.zeros_like(), w.zeros_like(), 0}; }
};

/// Adam on the gradient plus decoupled weight decay on the weight matrices.
void adam_update(ModelWeights& weights, AdamState& state, const ModelWeights& grad,
                 const TrainConfig& config);

/// One synthetic training pair.
struct Sample {
    sampling::GrayImage x;
    sampling::GrayImage tx;
    Homography t;
};

/// Deterministic sample `index` of the stream keyed by (seed, stream).
Sample make_sample(std::uint64_t seed, std::uint64_t stream, std::uint64_t index, int image_size);

/// Mean rotation angle of project_so3(T^-1 T_hat) over the samples; samples
/// whose prediction is singular or degenerate are left out.
double mean_angle_error(const ModelWeights& weights, const std::vector<Sample>& samples);

/// Held-out pairs, disjoint from the training streams for the same seed.
std::vector<Sample> eval_stream(const TrainConfig& config);

class TrainingDiverged : public Error {
public:
    explicit TrainingDiverged(const std::string& what) : Error("training_diverged", what) {}
};

struct TrainReport {
    std::vector<double> loss;         // per-step minibatch mean
    std::vector<double> angle_error;  // per-step minibatch mean theta
    long skipped_samples = 0;
    double wall_clock_seconds = 0.0;
    double eval_angle_error_initial = 0.0;
    double eval_angle_error_final = 0.0;
    std::string weights_digest;
    ModelWeights weights;
};

TrainReport train(const TrainConfig& config);

/// Mean of the first / last `window` entries (window clipped to the length).
double head_mean(const std::vector<double>& series, std::size_t window);
double tail_mean(const std::vector<double>& series, std::size_t window);

}  // namespace liegdt::aet
