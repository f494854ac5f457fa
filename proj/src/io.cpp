#include "liegdt/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace liegdt::io {

linalg::Mat3 matrix_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 9) {
        throw ParseError("matrix literal must be a JSON array of 9 numbers");
    }
    linalg::Mat3 m;
    for (int k = 0; k < 9; ++k) {
        const auto& v = j[static_cast<std::size_t>(k)];
        if (!v.is_number()) throw ParseError("matrix literal entry " + std::to_string(k) + " is not a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ParseError("matrix literal entry " + std::to_string(k) + " is not finite");
        m(k / 3, k % 3) = x;
    }
    return m;
}

nlohmann::json matrix_to_json(const linalg::Mat3& m) {
    nlohmann::json j = nlohmann::json::array();
    for (int k = 0; k < 9; ++k) j.push_back(m(k / 3, k % 3));
    return j;
}

linalg::Mat3 read_matrix_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return matrix_from_json(j);
}

nlohmann::json params_to_json(const sampling::TransformParams& p) {
    nlohmann::json offsets = nlohmann::json::array();
    for (const auto& c : p.corner_offsets) offsets.push_back({c[0], c[1]});
    return {{"corner_offsets", offsets}, {"scale", p.scale}, {"rotation_quarter", p.rotation_quarter}};
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string report_csv(const aet::TrainReport& report) {
    std::ostringstream out;
    out << "step,loss,angle_error\n";
    for (std::size_t i = 0; i < report.loss.size(); ++i) {
        out << i << ',' << format_double(report.loss[i]) << ',' << format_double(report.angle_error[i]) << '\n';
    }
    return out.str();
}

nlohmann::json report_summary(const aet::TrainConfig& config, const aet::TrainReport& report) {
    return {
        {"loss_kind", aet::to_string(config.loss_kind)},
        {"seed", config.seed},
        {"steps", config.steps},
        {"batch", config.batch},
        {"image_size", config.image_size},
        {"learning_rate", config.learning_rate},
        {"weight_decay", config.weight_decay},
        {"lambda", config.lambda},
        {"angle_power", config.angle_power},
        {"head_grad_clip", config.head_grad_clip},
        {"initial_loss_smoothed", aet::head_mean(report.loss, 100)},
        {"final_loss_smoothed", aet::tail_mean(report.loss, 100)},
        {"eval_pairs", config.eval_pairs},
        {"eval_angle_error_initial", report.eval_angle_error_initial},
        {"eval_angle_error_final", report.eval_angle_error_final},
        {"skipped_samples", report.skipped_samples},
        {"weights_digest", report.weights_digest},
    };
}

}  // namespace liegdt::io
