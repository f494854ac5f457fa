// liegdt: loss evaluation, gradient checks, sampling, geodesics, training
// and the surrogate-vs-MSE desk benchmark.
//
// Exit codes: 0 success, 1 domain error (error JSON on stdout), 2 usage or
// input-format error. Machine output goes to stdout, logs to stderr; set
// LIE_GDT_LOG to trace|debug|info|warn|error|off (default warn).

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "liegdt/errors.hpp"
#include "liegdt/geometry.hpp"
#include "liegdt/gradcheck.hpp"
#include "liegdt/io.hpp"
#include "liegdt/loss_eval.hpp"
#include "liegdt/sampler.hpp"
#include "liegdt/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

void setup_logging() {
    auto logger = spdlog::stderr_color_st("liegdt");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("LIE_GDT_LOG")) {
        spdlog::set_level(spdlog::level::from_str(env));
    }
}

json error_json(const std::string& code, const std::string& message) {
    return {{"error", code}, {"message", message}};
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

struct LossArgs {
    std::string t_file;
    std::string that_file;
    double lambda = 1.0;
    int angle_power = 1;
    std::string mode = "surrogate";
};

int run_loss(const LossArgs& a) {
    liegdt::LossRequest req;
    req.t = liegdt::io::read_matrix_file(a.t_file);
    req.that = liegdt::io::read_matrix_file(a.that_file);
    req.lambda = a.lambda;
    req.angle_power = a.angle_power;
    req.mode = liegdt::loss_mode_from_string(a.mode);

    const liegdt::LossResponse r = liegdt::evaluate_loss(req);
    if (!r.has_value()) {
        json err = error_json(r.error_code, r.message);
        err["status"] = liegdt::to_string(r.status);
        std::cout << err.dump(2) << '\n';
        return kExitDomain;
    }
    json out = {
        {"mode", liegdt::to_string(req.mode)},
        {"status", liegdt::to_string(r.status)},
        {"loss", r.loss},
        {"lambda", req.lambda},
        {"angle_power", req.angle_power},
        {"gradient", liegdt::io::matrix_to_json(r.grad)},
        {"near_singular_gradient", r.status == liegdt::LossStatus::near_singular_gradient},
    };
    if (req.mode == liegdt::LossMode::surrogate) {
        out["theta"] = r.theta;
        out["residual_sq"] = r.residual_sq;
    }
    if (req.mode == liegdt::LossMode::exact) {
        out["iterations"] = r.iterations;
        out["solve_residual"] = r.solve_residual;
    }
    std::cout << out.dump(2) << '\n';
    return kExitOk;
}

struct GradcheckArgs {
    std::uint64_t seed = 0;
    int count = 100;
    std::string mode = "surrogate";
};

int run_gradcheck(const GradcheckArgs& a) {
    const auto mode = liegdt::check::grad_mode_from_string(a.mode);
    const auto r = liegdt::check::run_gradcheck(mode, a.seed, a.count);
    const json out = {
        {"mode", liegdt::check::to_string(r.mode)},
        {"seed", r.seed},
        {"count", r.count},
        {"max_rel_err", r.max_rel_err},
        {"tolerance", r.tolerance},
        {"worst_case", r.worst_case},
        {"passed", r.passed},
    };
    std::cout << out.dump(2) << '\n';
    return r.passed ? kExitOk : kExitDomain;
}

struct SampleArgs {
    std::uint64_t seed = 0;
    int count = 1;
    int size = 32;
    std::string out;
};

int run_sample(const SampleArgs& a) {
    namespace s = liegdt::sampling;
    if (!a.out.empty()) fs::create_directories(a.out);
    json all = json::array();
    for (int i = 0; i < a.count; ++i) {
        s::Rng rng = s::Rng(a.seed, 0x73616d706c65ULL).derive(static_cast<std::uint64_t>(i));
        const s::TransformParams p = s::sample_params(rng);
        const liegdt::Homography h = s::params_to_homography(p, a.size, a.size);
        json entry = {
            {"index", i},
            {"params", liegdt::io::params_to_json(p)},
            {"homography", liegdt::io::matrix_to_json(h.matrix())},
        };
        if (!a.out.empty()) {
            const s::GrayImage img = s::make_synthetic_image(rng, a.size, a.size);
            const std::string stem = "sample_" + std::to_string(i);
            s::write_pgm(fs::path(a.out) / (stem + "_x.pgm"), img);
            s::write_pgm(fs::path(a.out) / (stem + "_tx.pgm"), s::warp_image(img, h));
            write_text(fs::path(a.out) / (stem + ".json"), entry.dump(2) + "\n");
        }
        all.push_back(std::move(entry));
    }
    std::cout << all.dump(2) << '\n';
    return kExitOk;
}

struct GeodesicArgs {
    std::string t_file;
    std::string that_file;
    int points = 11;
};

int run_geodesic(const GeodesicArgs& a) {
    const auto t = liegdt::normalize_unit_det(liegdt::io::read_matrix_file(a.t_file));
    const auto that = liegdt::normalize_unit_det(liegdt::io::read_matrix_file(a.that_file));
    const auto curve = liegdt::GeodesicCurve::between(t, that);
    std::string csv = "s,m00,m01,m02,m10,m11,m12,m20,m21,m22\n";
    for (int k = 0; k < a.points; ++k) {
        const double s = static_cast<double>(k) / (a.points - 1);
        const liegdt::Mat3 m = liegdt::geodesic_point(curve, s).matrix();
        csv += liegdt::io::format_double(s);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) csv += "," + liegdt::io::format_double(m(i, j));
        }
        csv += '\n';
    }
    std::cout << csv;
    return kExitOk;
}

void add_train_options(CLI::App* cmd, liegdt::aet::TrainConfig& c, std::string& loss) {
    cmd->add_option("--steps", c.steps, "Optimizer steps")->capture_default_str()->check(CLI::NonNegativeNumber);
    cmd->add_option("--batch", c.batch, "Pairs per minibatch")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--lr", c.learning_rate, "Adam learning rate")->capture_default_str();
    cmd->add_option("--weight-decay", c.weight_decay, "Decoupled weight decay")->capture_default_str();
    cmd->add_option("--lambda", c.lambda, "Residual weight of the surrogate loss")->capture_default_str();
    cmd->add_option("--angle-power", c.angle_power, "Angle term theta^p, p in {1, 2}")
        ->capture_default_str()
        ->check(CLI::IsMember({1, 2}));
    cmd->add_option("--size", c.image_size, "Image side in pixels")->capture_default_str();
    cmd->add_option("--eval-pairs", c.eval_pairs, "Held-out evaluation pairs")->capture_default_str();
    cmd->add_option("--hidden1", c.hidden1, "First encoder width")->capture_default_str();
    cmd->add_option("--hidden2", c.hidden2, "Second encoder width")->capture_default_str();
    cmd->add_option("--head-grad-clip", c.head_grad_clip, "Per-sample cap on the loss-head gradient norm, 0 = off")
        ->capture_default_str();
    cmd->add_option("--loss", loss, "gdt_surrogate or mse")
        ->capture_default_str()
        ->check(CLI::IsMember({"gdt_surrogate", "mse"}));
}

int run_train(liegdt::aet::TrainConfig config, const std::string& loss, const std::string& out) {
    config.loss_kind = liegdt::aet::loss_kind_from_string(loss);
    config.validate();
    const auto report = liegdt::aet::train(config);
    const json summary = liegdt::io::report_summary(config, report);
    spdlog::info("train finished in {:.1f} s", report.wall_clock_seconds);
    if (!out.empty()) {
        fs::create_directories(out);
        write_text(fs::path(out) / "train.csv", liegdt::io::report_csv(report));
        write_text(fs::path(out) / "summary.json", summary.dump(2) + "\n");
    }
    std::cout << summary.dump(2) << '\n';
    return kExitOk;
}

int run_bench(liegdt::aet::TrainConfig config, const std::string& out) {
    config.validate();
    fs::create_directories(out);
    json arms = json::object();
    for (const auto kind : {liegdt::aet::LossKind::gdt_surrogate, liegdt::aet::LossKind::mse}) {
        config.loss_kind = kind;
        const auto report = liegdt::aet::train(config);
        const std::string name = liegdt::aet::to_string(kind);
        write_text(fs::path(out) / (name + ".csv"), liegdt::io::report_csv(report));
        arms[name] = liegdt::io::report_summary(config, report);
    }
    const json comparison = {
        {"seed", config.seed},
        {"steps", config.steps},
        {"batch", config.batch},
        {"eval_pairs", config.eval_pairs},
        {"arms", arms},
        {"final_eval_angle_error",
         {{"gdt_surrogate", arms["gdt_surrogate"]["eval_angle_error_final"]},
          {"mse", arms["mse"]["eval_angle_error_final"]}}},
    };
    write_text(fs::path(out) / "comparison.json", comparison.dump(2) + "\n");
    std::cout << comparison.dump(2) << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();

    CLI::App app{"Geodesic losses on the homography group"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "liegdt 0.1.0");
    // Config files are read by the root app; keys live under a [train] or
    // [bench] section. fallthrough() lets --config follow the subcommand.
    app.set_config("--config", "", "TOML/INI file; keys under [train] or [bench] match the flags");
    app.fallthrough();

    LossArgs loss_args;
    auto* loss = app.add_subcommand("loss", "Evaluate a loss and its gradient for one pair");
    loss->add_option("--t", loss_args.t_file, "Ground-truth matrix (JSON, 9 numbers row-major)")
        ->required()
        ->check(CLI::ExistingFile);
    loss->add_option("--that", loss_args.that_file, "Estimated matrix (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    loss->add_option("--lambda", loss_args.lambda, "Residual weight")->capture_default_str();
    loss->add_option("--angle-power", loss_args.angle_power, "Angle term theta^p")
        ->capture_default_str()
        ->check(CLI::IsMember({1, 2}));
    loss->add_option("--mode", loss_args.mode, "surrogate, exact or mse")
        ->capture_default_str()
        ->check(CLI::IsMember({"surrogate", "exact", "mse"}));

    GradcheckArgs gc_args;
    auto* gradcheck = app.add_subcommand("gradcheck", "Compare analytic gradients with central differences");
    gradcheck->add_option("--seed", gc_args.seed, "Random seed")->required();
    gradcheck->add_option("--count", gc_args.count, "Number of cases")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    gradcheck->add_option("--mode", gc_args.mode, "surrogate, exact, mse or head")
        ->capture_default_str()
        ->check(CLI::IsMember({"surrogate", "exact", "mse", "head"}));

    SampleArgs sample_args;
    auto* sample = app.add_subcommand("sample", "Draw random warps (and images with --out)");
    sample->add_option("--seed", sample_args.seed, "Random seed")->required();
    sample->add_option("--count", sample_args.count, "Number of samples")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sample->add_option("--size", sample_args.size, "Image side in pixels")
        ->capture_default_str()
        ->check(CLI::Range(8, 4096));
    sample->add_option("--out", sample_args.out, "Directory for PGM images and JSON sidecars");

    GeodesicArgs geo_args;
    auto* geodesic = app.add_subcommand("geodesic", "Tabulate the geodesic from T to T-hat as CSV");
    geodesic->add_option("--t", geo_args.t_file, "Start matrix (JSON)")->required()->check(CLI::ExistingFile);
    geodesic->add_option("--that", geo_args.that_file, "End matrix (JSON)")->required()->check(CLI::ExistingFile);
    geodesic->add_option("--points", geo_args.points, "Samples of s in [0, 1], endpoints included")
        ->capture_default_str()
        ->check(CLI::Range(2, 100000));

    liegdt::aet::TrainConfig train_config;
    std::string train_loss = "gdt_surrogate";
    std::string train_out;
    auto* train = app.add_subcommand("train", "Self-supervised training on synthetic warps");
    train->add_option("--seed", train_config.seed, "Random seed")->required();
    add_train_options(train, train_config, train_loss);
    train->add_option("--out", train_out, "Directory for train.csv and summary.json");

    liegdt::aet::TrainConfig bench_config;
    std::string bench_loss_unused = "gdt_surrogate";
    std::string bench_out;
    auto* bench = app.add_subcommand("bench", "Train one model per loss on identical seeds");
    bench->add_option("--seed", bench_config.seed, "Random seed")->required();
    add_train_options(bench, bench_config, bench_loss_unused);
    bench->remove_option(bench->get_option("--loss"));
    bench->add_option("--out", bench_out, "Directory for the paired reports")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*loss) return run_loss(loss_args);
        if (*gradcheck) return run_gradcheck(gc_args);
        if (*sample) return run_sample(sample_args);
        if (*geodesic) return run_geodesic(geo_args);
        if (*train) return run_train(train_config, train_loss, train_out);
        if (*bench) return run_bench(bench_config, bench_out);
    } catch (const liegdt::io::ParseError& e) {
        std::cerr << "liegdt: " << e.what() << '\n';
        return kExitUsage;
    } catch (const liegdt::Error& e) {
        std::cout << error_json(e.code(), e.what()).dump(2) << '\n';
        return kExitDomain;
    } catch (const std::exception& e) {
        std::cout << error_json("runtime_error", e.what()).dump(2) << '\n';
        return kExitDomain;
    }
    return kExitUsage;
}
