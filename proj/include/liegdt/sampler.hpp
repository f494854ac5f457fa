#pragma once

// Homography sampling and image warping for the desk-scale trainer.
//
// Homographies act on homogeneous image coordinates whose origin is the
// image center and whose unit is half the larger pixel extent, so the
// corners of a square image sit at (+-1, +-1). Pixel centers are at
// integer indices.

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

#include "liegdt/geometry.hpp"

namespace liegdt::sampling {

/// Counter-based generator: output i (i = 1, 2, ...) is
/// splitmix64_mix(key + i * 0x9E3779B97F4A7C15) with
/// key = splitmix64_mix(seed ^ splitmix64_mix(stream)).
/// Doubles take the top 53 bits.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }
    std::uint64_t counter() const noexcept { return counter_; }

    std::uint64_t next_u64() noexcept;
    result_type operator()() noexcept { return next_u64(); }
    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    /// Uniform in [0, 1).
    double uniform() noexcept;
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [lo, hi], floor(uniform() * (hi - lo + 1)).
    int uniform_int(int lo, int hi) noexcept;
    /// Standard normal (Box-Muller, one draw per pair of uniforms).
    double normal() noexcept;

    /// Independent stream keyed by (seed, index), used for per-sample draws.
    Rng derive(std::uint64_t index) const;

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

struct TransformParams {
    /// (dx, dy) per corner, fractions of width / height, each in [-0.125, 0.125].
    /// Corner order: top-left, top-right, bottom-right, bottom-left.
    std::array<std::array<double, 2>, 4> corner_offsets{};
    double scale = 1.0;        // [0.8, 1.2]
    int rotation_quarter = 0;  // multiples of 90 degrees, {0, 1, 2, 3}
};

inline constexpr double kMaxCornerOffset = 0.125;
inline constexpr double kMinScale = 0.8;
inline constexpr double kMaxScale = 1.2;

/// Single-channel raster, row-major, values in [0, 1].
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;

    GrayImage() = default;
    GrayImage(int w, int h, double fill = 0.0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

    double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/// Draw order: 8 corner offsets (corner-major, x then y), scale, quarter turn.
TransformParams sample_params(Rng& rng);

/// Map from pixel coordinates to the centered frame used by homographies.
struct ImageFrame {
    double cx;
    double cy;
    double unit;

    static ImageFrame of(int width, int height);
    Vec3 to_frame(double px, double py) const { return Vec3((px - cx) / unit, (py - cy) / unit, 1.0); }
};

/// Corners of the image in the centered frame, in TransformParams order.
std::array<Vec3, 4> frame_corners(int width, int height);

/// Homography through the four source corners after scale, quarter turn and
/// corner offsets: H = H_dlt * H_rot * H_scale, unit-determinant normalized.
Homography params_to_homography(const TransformParams& p, int width, int height);

/// Where params_to_homography sends each source corner (frame coordinates).
std::array<Vec3, 4> target_corners(const TransformParams& p, int width, int height);

/// Homography mapping src[k] to dst[k] (frame coordinates), h33 = 1.
/// Throws SingularMatrix for degenerate configurations.
Mat3 homography_from_correspondences(const std::array<Vec3, 4>& src,
                                     const std::array<Vec3, 4>& dst);

/// Output pixel p samples the input at h^-1 p, bilinear, zero outside.
GrayImage warp_image(const GrayImage& img, const Homography& h);

/// 3-6 faint Gaussian blobs plus one bright, near-horizontal bar in the
/// upper band (a canonical "up"), rescaled to [0, 1].
GrayImage make_synthetic_image(Rng& rng, int width, int height);

/// Binary 8-bit PGM (P5).
void write_pgm(const std::filesystem::path& path, const GrayImage& img);

}  // namespace liegdt::sampling
