#include "liegdt/train.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>

namespace liegdt::aet {

namespace {

Raw8 clip_norm(Raw8 g, double max_norm) {
    if (max_norm <= 0.0) return g;
    double sq = 0.0;
    for (double v : g) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm > max_norm) {
        for (double& v : g) v *= max_norm / norm;
    }
    return g;
}

constexpr std::uint64_t kEvalStream = ~0ULL;

void init_uniform(Eigen::MatrixXd& w, sampling::Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-bound, bound);
    }
}

BranchCache encode(const ModelWeights& m, Eigen::VectorXd input) {
    BranchCache c;
    c.input = std::move(input);
    c.pre1 = m.enc1.w * c.input + m.enc1.b;
    c.act1 = c.pre1.cwiseMax(0.0);
    c.pre2 = m.enc2.w * c.act1 + m.enc2.b;
    c.act2 = c.pre2.cwiseMax(0.0);
    return c;
}

void backprop_branch(const ModelWeights& m, const BranchCache& c, const Eigen::VectorXd& grad_act2,
                     ModelWeights& g) {
    const Eigen::VectorXd g_pre2 = grad_act2.cwiseProduct((c.pre2.array() > 0.0).cast<double>().matrix());
    g.enc2.w.noalias() += g_pre2 * c.act1.transpose();
    g.enc2.b += g_pre2;
    const Eigen::VectorXd g_act1 = m.enc2.w.transpose() * g_pre2;
    const Eigen::VectorXd g_pre1 = g_act1.cwiseProduct((c.pre1.array() > 0.0).cast<double>().matrix());
    g.enc1.w.noalias() += g_pre1 * c.input.transpose();
    g.enc1.b += g_pre1;
}

template <typename Fn>
void for_each_tensor(const ModelWeights& m, Fn&& fn) {
    for (const DenseLayer* layer : {&m.enc1, &m.enc2, &m.dec}) {
        fn(layer->w);
        fn(layer->b);
    }
}

void accumulate(ModelWeights& into, const ModelWeights& g, double scale) {
    into.enc1.w += scale * g.enc1.w;
    into.enc1.b += scale * g.enc1.b;
    into.enc2.w += scale * g.enc2.w;
    into.enc2.b += scale * g.enc2.b;
    into.dec.w += scale * g.dec.w;
    into.dec.b += scale * g.dec.b;
}

Raw8 to_raw8(const Eigen::VectorXd& v) {
    Raw8 out{};
    for (int k = 0; k < 8; ++k) out[k] = v(k);
    return out;
}

}  // namespace

const char* to_string(LossKind kind) {
    return kind == LossKind::mse ? "mse" : "gdt_surrogate";
}

LossKind loss_kind_from_string(const std::string& name) {
    if (name == "gdt_surrogate" || name == "surrogate") return LossKind::gdt_surrogate;
    if (name == "mse") return LossKind::mse;
    throw DomainError("unknown loss kind '" + name + "'");
}

void TrainConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw DomainError(std::string("TrainConfig: ") + what);
    };
    require(batch >= 1, "batch must be >= 1");
    require(steps >= 0, "steps must be >= 0");
    require(learning_rate > 0.0 && std::isfinite(learning_rate), "learning_rate must be > 0");
    require(beta1 > 0.0 && beta1 < 1.0, "beta1 must be in (0, 1)");
    require(beta2 > 0.0 && beta2 < 1.0, "beta2 must be in (0, 1)");
    require(adam_epsilon > 0.0, "adam_epsilon must be > 0");
    require(weight_decay >= 0.0 && std::isfinite(weight_decay), "weight_decay must be >= 0");
    require(lambda >= 0.0 && std::isfinite(lambda), "lambda must be >= 0");
    require(angle_power == 1 || angle_power == 2, "angle_power must be 1 or 2");
    require(image_size >= 8, "image_size must be >= 8");
    require(hidden1 >= 1 && hidden2 >= 1, "hidden widths must be >= 1");
    require(eval_pairs >= 1, "eval_pairs must be >= 1");
    require(head_grad_clip >= 0.0, "head_grad_clip must be >= 0");
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

ModelWeights ModelWeights::zeros(int input, int hidden1, int hidden2) {
    ModelWeights m;
    m.enc1 = {Eigen::MatrixXd::Zero(hidden1, input), Eigen::VectorXd::Zero(hidden1)};
    m.enc2 = {Eigen::MatrixXd::Zero(hidden2, hidden1), Eigen::VectorXd::Zero(hidden2)};
    m.dec = {Eigen::MatrixXd::Zero(8, 2 * hidden2), Eigen::VectorXd::Zero(8)};
    return m;
}

ModelWeights ModelWeights::initialize(int input, int hidden1, int hidden2, sampling::Rng& rng) {
    ModelWeights m = zeros(input, hidden1, hidden2);
    init_uniform(m.enc1.w, rng);
    init_uniform(m.enc2.w, rng);
    init_uniform(m.dec.w, rng);
    m.dec.b << 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0;
    return m;
}

ModelWeights ModelWeights::zeros_like() const {
    return zeros(static_cast<int>(enc1.w.cols()), static_cast<int>(enc1.w.rows()),
                 static_cast<int>(enc2.w.rows()));
}

bool ModelWeights::all_finite() const {
    bool ok = true;
    for_each_tensor(*this, [&](const auto& t) { ok = ok && t.allFinite(); });
    return ok;
}

std::string ModelWeights::digest() const {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for_each_tensor(*this, [&](const auto& t) {
        const auto* bytes = reinterpret_cast<const unsigned char*>(t.data());
        const std::size_t n = static_cast<std::size_t>(t.size()) * sizeof(double);
        for (std::size_t i = 0; i < n; ++i) {
            hash ^= bytes[i];
            hash *= 0x100000001b3ULL;
        }
    });
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

Eigen::VectorXd image_to_input(const sampling::GrayImage& img) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(img.pixels.size()));
    for (std::size_t i = 0; i < img.pixels.size(); ++i) v(static_cast<Eigen::Index>(i)) = img.pixels[i] - 0.5;
    return v;
}

ForwardResult forward(const ModelWeights& weights, const sampling::GrayImage& x,
                      const sampling::GrayImage& tx) {
    if (static_cast<int>(x.pixels.size()) != weights.input_size() ||
        static_cast<int>(tx.pixels.size()) != weights.input_size()) {
        throw DomainError("forward: image size does not match the encoder input");
    }
    ForwardResult out;
    out.cache.original = encode(weights, image_to_input(x));
    out.cache.transformed = encode(weights, image_to_input(tx));
    const Eigen::Index h2 = out.cache.original.act2.size();
    out.cache.features.resize(2 * h2);
    out.cache.features << out.cache.original.act2, out.cache.transformed.act2;
    out.raw8 = to_raw8(weights.dec.w * out.cache.features + weights.dec.b);
    return out;
}

ModelWeights backward(const ModelWeights& weights, const ForwardCache& cache,
                      std::span<const double, 8> grad_raw8) {
    ModelWeights g = weights.zeros_like();
    const Eigen::Map<const Eigen::Matrix<double, 8, 1>> gout(grad_raw8.data());
    g.dec.w.noalias() = gout * cache.features.transpose();
    g.dec.b = gout;
    const Eigen::VectorXd g_features = weights.dec.w.transpose() * gout;
    const Eigen::Index h2 = cache.original.act2.size();
    backprop_branch(weights, cache.original, g_features.head(h2), g);
    backprop_branch(weights, cache.transformed, g_features.tail(h2), g);
    return g;
}

// ---------------------------------------------------------------------------
// Loss head
// ---------------------------------------------------------------------------

namespace {

Mat3 raw8_to_matrix(std::span<const double, 8> raw8) {
    Mat3 m;
    m << raw8[0], raw8[1], raw8[2],
         raw8[3], raw8[4], raw8[5],
         raw8[6], raw8[7], 1.0;
    return m;
}

}  // namespace

Homography decoder_output_to_homography(std::span<const double, 8> raw8) {
    return normalize_unit_det(raw8_to_matrix(raw8));
}

HeadResult loss_head_grad(const Homography& t, std::span<const double, 8> raw8,
                          const TrainConfig& config) {
    const Mat3 raw = raw8_to_matrix(raw8);
    const Homography that = normalize_unit_det(raw);

    HeadResult out;
    Mat3 grad_normalized;
    if (config.loss_kind == LossKind::mse) {
        const MseResult mse = mse_loss(t, that);
        out.loss = mse.value;
        grad_normalized = mse.grad;
        try {
            out.theta = rotation_angle(project_so3(t.inverse().matrix() * that.matrix()));
        } catch (const DegenerateProjection&) {
            out.theta = std::numbers::pi;
        }
    } else {
        const GdtResult r = surrogate_loss(t, that, config.surrogate_options());
        out.loss = r.loss;
        grad_normalized = r.grad_that;
        out.theta = r.theta;
        out.near_singular_gradient = r.near_singular_gradient;
    }

    const Mat3 grad_raw = normalize_unit_det_pullback(raw, grad_normalized);
    for (int k = 0; k < 8; ++k) out.grad_raw8[k] = grad_raw(k / 3, k % 3);
    return out;
}

void adam_update(ModelWeights& weights, AdamState& state, const ModelWeights& grad,
                 const TrainConfig& config) {
    ++state.step;
    const double b1 = config.beta1;
    const double b2 = config.beta2;
    const double correction1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double correction2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    const double lr = config.learning_rate;

    auto update = [&](auto& w, auto& m, auto& v, const auto& g, bool decay) {
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g.cwiseAbs2();
        const auto m_hat = m.array() / correction1;
        const auto v_hat = v.array() / correction2;
        w.array() -= lr * (m_hat / (v_hat.sqrt() + config.adam_epsilon));
        if (decay) w *= 1.0 - lr * config.weight_decay;
    };
    update(weights.enc1.w, state.first.enc1.w, state.second.enc1.w, grad.enc1.w, true);
    update(weights.enc1.b, state.first.enc1.b, state.second.enc1.b, grad.enc1.b, false);
    update(weights.enc2.w, state.first.enc2.w, state.second.enc2.w, grad.enc2.w, true);
    update(weights.enc2.b, state.first.enc2.b, state.second.enc2.b, grad.enc2.b, false);
    update(weights.dec.w, state.first.dec.w, state.second.dec.w, grad.dec.w, true);
    update(weights.dec.b, state.first.dec.b, state.second.dec.b, grad.dec.b, false);
}

// ---------------------------------------------------------------------------
// Data and training loop
// ---------------------------------------------------------------------------

Sample make_sample(std::uint64_t seed, std::uint64_t stream, std::uint64_t index, int image_size) {
    sampling::Rng rng = sampling::Rng(seed, stream).derive(index);
    Sample s;
    s.x = sampling::make_synthetic_image(rng, image_size, image_size);
    for (;;) {
        try {
            s.t = sampling::params_to_homography(sampling::sample_params(rng), image_size, image_size);
            break;
        } catch (const SingularMatrix&) {
            spdlog::debug("make_sample: degenerate corner sample, redrawing");
        }
    }
    s.tx = sampling::warp_image(s.x, s.t);
    return s;
}

std::vector<Sample> eval_stream(const TrainConfig& config) {
    std::vector<Sample> out;
    out.reserve(static_cast<std::size_t>(config.eval_pairs));
    for (int i = 0; i < config.eval_pairs; ++i) {
        out.push_back(make_sample(config.seed, kEvalStream, static_cast<std::uint64_t>(i), config.image_size));
    }
    return out;
}

double mean_angle_error(const ModelWeights& weights, const std::vector<Sample>& samples) {
    double total = 0.0;
    long counted = 0;
    for (const Sample& s : samples) {
        const ForwardResult f = forward(weights, s.x, s.tx);
        try {
            const Homography that = decoder_output_to_homography(f.raw8);
            total += rotation_angle(project_so3(s.t.inverse().matrix() * that.matrix()));
            ++counted;
        } catch (const SingularMatrix&) {
        } catch (const DegenerateProjection&) {
        }
    }
    return counted > 0 ? total / static_cast<double>(counted) : std::numbers::pi;
}

TrainReport train(const TrainConfig& config) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    const int input = config.image_size * config.image_size;

    sampling::Rng init_rng(config.seed, 0);
    TrainReport report;
    report.weights = ModelWeights::initialize(input, config.hidden1, config.hidden2, init_rng);
    ModelWeights& weights = report.weights;
    AdamState adam = AdamState::for_weights(weights);

    const std::vector<Sample> eval = eval_stream(config);
    report.eval_angle_error_initial = mean_angle_error(weights, eval);
    report.loss.reserve(static_cast<std::size_t>(config.steps));
    report.angle_error.reserve(static_cast<std::size_t>(config.steps));

    for (int step = 0; step < config.steps; ++step) {
        const auto stream = static_cast<std::uint64_t>(step) + 1;
        ModelWeights grad = weights.zeros_like();
        double loss_sum = 0.0;
        double angle_sum = 0.0;
        int used = 0;
        std::vector<std::pair<ForwardResult, Raw8>> kept;
        kept.reserve(static_cast<std::size_t>(config.batch));

        for (int i = 0; i < config.batch; ++i) {
            const Sample s = make_sample(config.seed, stream, static_cast<std::uint64_t>(i), config.image_size);
            ForwardResult f = forward(weights, s.x, s.tx);
            try {
                const HeadResult head = loss_head_grad(s.t, f.raw8, config);
                loss_sum += head.loss;
                angle_sum += head.theta;
                ++used;
                kept.emplace_back(std::move(f), clip_norm(head.grad_raw8, config.head_grad_clip));
            } catch (const SingularMatrix& e) {
                ++report.skipped_samples;
                spdlog::debug("step {} sample {}: skipped ({})", step, i, e.what());
            } catch (const DegenerateProjection& e) {
                ++report.skipped_samples;
                spdlog::debug("step {} sample {}: skipped ({})", step, i, e.what());
            }
        }

        if (used == 0) {
            throw TrainingDiverged("step " + std::to_string(step) + ": no usable samples in the minibatch");
        }

        for (const auto& [f, g] : kept) accumulate(grad, backward(weights, f.cache, g), 1.0 / used);
        const double mean_loss = loss_sum / used;
        if (!std::isfinite(mean_loss) || !grad.all_finite()) {
            throw TrainingDiverged("step " + std::to_string(step) + ": non-finite loss or gradient (loss " +
                                   std::to_string(mean_loss) + ")");
        }
        adam_update(weights, adam, grad, config);
        if (!weights.all_finite()) {
            throw TrainingDiverged("step " + std::to_string(step) + ": non-finite weights after update");
        }

        report.loss.push_back(mean_loss);
        report.angle_error.push_back(angle_sum / used);
        if ((step + 1) % 100 == 0) {
            spdlog::info("step {:5d}  loss {:.6f}  angle {:.4f}", step + 1, mean_loss, angle_sum / used);
        }
    }

    report.eval_angle_error_final = mean_angle_error(weights, eval);
    report.weights_digest = weights.digest();
    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

double head_mean(const std::vector<double>& series, std::size_t window) {
    const std::size_t n = std::min(window, series.size());
    if (n == 0) return 0.0;
    return std::accumulate(series.begin(), series.begin() + static_cast<std::ptrdiff_t>(n), 0.0) / n;
}

double tail_mean(const std::vector<double>& series, std::size_t window) {
    const std::size_t n = std::min(window, series.size());
    if (n == 0) return 0.0;
    return std::accumulate(series.end() - static_cast<std::ptrdiff_t>(n), series.end(), 0.0) / n;
}

}  // namespace liegdt::aet
