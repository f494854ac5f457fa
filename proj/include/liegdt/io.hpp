#pragma once

// JSON and CSV encodings shared by the CLI, the bridge and the tests.
//
// Matrix literal: a JSON array of 9 finite numbers in row-major order,
// e.g. [1, 0, 0, 0, 1, 0, 0, 0, 1].

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "liegdt/linalg.hpp"
#include "liegdt/sampler.hpp"
#include "liegdt/train.hpp"

namespace liegdt::io {

/// Malformed input files (usage errors, not domain errors).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

linalg::Mat3 matrix_from_json(const nlohmann::json& j);
nlohmann::json matrix_to_json(const linalg::Mat3& m);
linalg::Mat3 read_matrix_file(const std::filesystem::path& path);

nlohmann::json params_to_json(const sampling::TransformParams& p);

/// "step,loss,angle_error" rows, %.17g.
std::string report_csv(const aet::TrainReport& report);

/// Summary without wall-clock time, so it is reproducible byte for byte.
nlohmann::json report_summary(const aet::TrainConfig& config, const aet::TrainReport& report);

std::string format_double(double v);

}  // namespace liegdt::io
