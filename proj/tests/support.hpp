#pragma once

// Random inputs for the tests. Deliberately built on std::mt19937_64 rather
// than the library's own generator, so oracles and code under test do not
// share a sampling path.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>

#include <Eigen/Dense>

namespace liegdt::test {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

class Draw {
public:
    explicit Draw(std::uint64_t seed) : gen_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen_); }

    Mat3 gaussian() {
        Mat3 m;
        for (int k = 0; k < 9; ++k) m(k / 3, k % 3) = normal();
        return m;
    }

    Vec3 unit_vector() {
        Vec3 v;
        do {
            v = Vec3(normal(), normal(), normal());
        } while (v.norm() < 1e-6);
        return v.normalized();
    }

    /// Rotation from Eigen's own axis-angle type.
    Mat3 rotation(double min_angle, double max_angle) {
        return Eigen::AngleAxisd(uniform(min_angle, max_angle), unit_vector()).toRotationMatrix();
    }

    Mat3 scaled(const Mat3& m, double max_norm) { return m * (uniform(0.0, max_norm) / m.norm()); }

    Mat3 trace_free(double max_norm) {
        Mat3 m = gaussian();
        m -= (m.trace() / 3.0) * Mat3::Identity();
        return scaled(m, max_norm);
    }

    Mat3 skew(double max_norm) {
        const Mat3 g = gaussian();
        return scaled(g - g.transpose(), max_norm);
    }

    Mat3 symmetric_trace_free(double max_norm) {
        Mat3 g = gaussian();
        g = (g + g.transpose()).eval();
        g -= (g.trace() / 3.0) * Mat3::Identity();
        return scaled(g, max_norm);
    }

    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
};

inline Mat3 rot_z(double a) {
    Mat3 r;
    r << std::cos(a), -std::sin(a), 0.0,
         std::sin(a), std::cos(a), 0.0,
         0.0, 0.0, 1.0;
    return r;
}

inline Mat3 k_z() {
    Mat3 k;
    k << 0.0, -1.0, 0.0,
         1.0, 0.0, 0.0,
         0.0, 0.0, 0.0;
    return k;
}

/// Central differences of a scalar function of a 3x3 matrix.
inline Mat3 numeric_gradient(const std::function<double(const Mat3&)>& f, const Mat3& at, double h) {
    Mat3 g;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            Mat3 p = at;
            Mat3 m = at;
            p(i, j) += h;
            m(i, j) -= h;
            g(i, j) = (f(p) - f(m)) / (2.0 * h);
        }
    }
    return g;
}

inline double rel_err(const Mat3& a, const Mat3& n) { return (a - n).norm() / std::max(n.norm(), 1e-3); }

/// Orthogonal polar factor by the scaled Newton iteration X <- (X + X^-T) / 2.
inline Mat3 newton_polar(const Mat3& m) {
    Mat3 x = m;
    for (int it = 0; it < 100; ++it) {
        const Mat3 next = 0.5 * (x + x.inverse().transpose());
        if ((next - x).norm() < 1e-15) return next;
        x = next;
    }
    return x;
}

}  // namespace liegdt::test
