#include "liegdt/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace liegdt::sampling {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Exact quarter-turn cos/sin.
constexpr std::array<std::array<double, 2>, 4> kQuarterTurns{{{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}}};

Mat3 similarity_part(const TransformParams& p) {
    const auto [c, s] = kQuarterTurns.at(static_cast<std::size_t>(p.rotation_quarter));
    Mat3 rot;
    rot << c, -s, 0.0,
           s, c, 0.0,
           0.0, 0.0, 1.0;
    const Mat3 scale = Vec3(p.scale, p.scale, 1.0).asDiagonal();
    return rot * scale;
}

// Coordinates within 1e-9 of a pixel center are snapped to it, so warps that
// permute pixels (identity, quarter turns) reproduce them exactly.
double snap(double v) {
    const double r = std::round(v);
    return std::abs(v - r) < 1e-9 ? r : v;
}

double bilinear(const GrayImage& img, double x_in, double y_in) {
    const double x = snap(x_in);
    const double y = snap(y_in);
    const double fx0 = std::floor(x);
    const double fy0 = std::floor(y);
    if (fx0 < -1.0 || fy0 < -1.0 || fx0 > img.width || fy0 > img.height) return 0.0;
    const int x0 = static_cast<int>(fx0);
    const int y0 = static_cast<int>(fy0);
    const double ax = x - fx0;
    const double ay = y - fy0;
    auto sample = [&](int xi, int yi) {
        if (xi < 0 || yi < 0 || xi >= img.width || yi >= img.height) return 0.0;
        return img.at(xi, yi);
    };
    return (1.0 - ay) * ((1.0 - ax) * sample(x0, y0) + ax * sample(x0 + 1, y0)) +
           ay * ((1.0 - ax) * sample(x0, y0 + 1) + ax * sample(x0 + 1, y0 + 1));
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), key_(mix64(seed ^ mix64(stream))) {}

std::uint64_t Rng::next_u64() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

double Rng::uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

int Rng::uniform_int(int lo, int hi) noexcept {
    const double span = static_cast<double>(hi) - static_cast<double>(lo) + 1.0;
    return lo + static_cast<int>(std::floor(uniform() * span));
}

double Rng::normal() noexcept {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Rng Rng::derive(std::uint64_t index) const { return Rng(seed_, mix64(stream_ + 1) ^ index); }

TransformParams sample_params(Rng& rng) {
    TransformParams p;
    for (auto& corner : p.corner_offsets) {
        corner[0] = rng.uniform(-kMaxCornerOffset, kMaxCornerOffset);
        corner[1] = rng.uniform(-kMaxCornerOffset, kMaxCornerOffset);
    }
    p.scale = rng.uniform(kMinScale, kMaxScale);
    p.rotation_quarter = rng.uniform_int(0, 3);
    return p;
}

ImageFrame ImageFrame::of(int width, int height) {
    return ImageFrame{(width - 1) / 2.0, (height - 1) / 2.0, (std::max(width, height) - 1) / 2.0};
}

std::array<Vec3, 4> frame_corners(int width, int height) {
    const ImageFrame f = ImageFrame::of(width, height);
    const double x1 = width - 1.0;
    const double y1 = height - 1.0;
    return {f.to_frame(0.0, 0.0), f.to_frame(x1, 0.0), f.to_frame(x1, y1), f.to_frame(0.0, y1)};
}

std::array<Vec3, 4> target_corners(const TransformParams& p, int width, int height) {
    const ImageFrame f = ImageFrame::of(width, height);
    const Mat3 affine = similarity_part(p);
    const auto src = frame_corners(width, height);
    std::array<Vec3, 4> dst;
    for (std::size_t k = 0; k < 4; ++k) {
        dst[k] = affine * src[k];
        dst[k].x() += p.corner_offsets[k][0] * width / f.unit;
        dst[k].y() += p.corner_offsets[k][1] * height / f.unit;
    }
    return dst;
}

Mat3 homography_from_correspondences(const std::array<Vec3, 4>& src,
                                     const std::array<Vec3, 4>& dst) {
    Eigen::Matrix<double, 8, 8> a;
    Eigen::Matrix<double, 8, 1> b;
    for (int k = 0; k < 4; ++k) {
        const double x = src[k].x() / src[k].z();
        const double y = src[k].y() / src[k].z();
        const double u = dst[k].x() / dst[k].z();
        const double v = dst[k].y() / dst[k].z();
        a.row(2 * k) << x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y;
        a.row(2 * k + 1) << 0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y;
        b(2 * k) = u;
        b(2 * k + 1) = v;
    }
    Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(a);
    lu.setThreshold(1e-10);
    if (!lu.isInvertible()) {
        throw SingularMatrix("homography_from_correspondences: degenerate corners");
    }
    const Eigen::Matrix<double, 8, 1> h = lu.solve(b);
    Mat3 out;
    out << h(0), h(1), h(2),
           h(3), h(4), h(5),
           h(6), h(7), 1.0;
    return out;
}

Homography params_to_homography(const TransformParams& p, int width, int height) {
    if (width < 2 || height < 2) throw DomainError("params_to_homography: image too small");
    if (p.rotation_quarter < 0 || p.rotation_quarter > 3) {
        throw DomainError("params_to_homography: rotation_quarter outside {0..3}");
    }
    const Mat3 affine = similarity_part(p);
    std::array<Vec3, 4> mid = frame_corners(width, height);
    for (auto& c : mid) c = affine * c;
    const Mat3 dlt = homography_from_correspondences(mid, target_corners(p, width, height));
    return normalize_unit_det(dlt * affine);
}

GrayImage warp_image(const GrayImage& img, const Homography& h) {
    const ImageFrame f = ImageFrame::of(img.width, img.height);
    const Mat3 inv = h.matrix().inverse();
    GrayImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const Vec3 q = inv * f.to_frame(x, y);
            if (std::abs(q.z()) < 1e-12) continue;
            const double sx = q.x() / q.z() * f.unit + f.cx;
            const double sy = q.y() / q.z() * f.unit + f.cy;
            out.at(x, y) = bilinear(img, sx, sy);
        }
    }
    return out;
}

GrayImage make_synthetic_image(Rng& rng, int width, int height) {
    if (width < 8 || height < 8) throw DomainError("make_synthetic_image: need at least 8x8");
    const double size = std::min(width, height);
    GrayImage img(width, height);

    const int blobs = rng.uniform_int(3, 6);
    for (int b = 0; b < blobs; ++b) {
        const double cx = rng.uniform(0.15, 0.85) * (width - 1);
        const double cy = rng.uniform(0.15, 0.85) * (height - 1);
        const double sigma = rng.uniform(0.06, 0.18) * size;
        const double amp = rng.uniform(0.2, 0.6);
        const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                img.at(x, y) += amp * std::exp(-d2 * inv2s2);
            }
        }
    }

    // Bar: a segment with a Gaussian cross-section. It is kept near
    // horizontal in the upper band so every image has an "up", otherwise a
    // quarter turn of the content cannot be told from the warped copy alone.
    const double bx = rng.uniform(0.35, 0.65) * (width - 1);
    const double by = rng.uniform(0.15, 0.3) * (height - 1);
    const double angle = rng.uniform(-std::numbers::pi / 8.0, std::numbers::pi / 8.0);
    const double half_len = rng.uniform(0.2, 0.3) * size;
    const double half_width = rng.uniform(0.03, 0.06) * size;
    const double amp = rng.uniform(0.8, 1.0);
    const double dx = std::cos(angle);
    const double dy = std::sin(angle);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double along = std::clamp((x - bx) * dx + (y - by) * dy, -half_len, half_len);
            const double px = bx + along * dx - x;
            const double py = by + along * dy - y;
            img.at(x, y) += amp * std::exp(-(px * px + py * py) / (2.0 * half_width * half_width));
        }
    }

    const auto [lo_it, hi_it] = std::minmax_element(img.pixels.begin(), img.pixels.end());
    const double lo = *lo_it;
    const double range = *hi_it - lo;
    for (double& v : img.pixels) v = range > 0.0 ? (v - lo) / range : 0.0;
    return img;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_pgm: cannot open " + path.string());
    out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
    for (double v : img.pixels) {
        const auto byte = static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
        out.put(static_cast<char>(byte));
    }
}

}  // namespace liegdt::sampling
