#pragma once

// Reference computations used to check the library. Each one follows a
// different route than the code it checks.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "palpation/geometry.hpp"
#include "palpation/mesh.hpp"

namespace palpation::oracle {

inline double point_segment_distance(const Vec3& q, const Vec3& a, const Vec3& b) {
    const Vec3 ab = b - a;
    const double t = std::clamp((q - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    return (q - (a + t * ab)).norm();
}

/// Distance from q to the closed triangle: perpendicular foot if it lands
/// inside (barycentric test via a 2x2 solve), otherwise the nearest edge.
inline double point_triangle_distance(const Vec3& q, const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 e0 = b - a;
    const Vec3 e1 = c - a;
    Eigen::Matrix2d gram;
    gram << e0.dot(e0), e0.dot(e1), e0.dot(e1), e1.dot(e1);
    const Eigen::Vector2d rhs(e0.dot(q - a), e1.dot(q - a));
    const Eigen::Vector2d uv = gram.fullPivLu().solve(rhs);
    if (uv(0) >= 0.0 && uv(1) >= 0.0 && uv(0) + uv(1) <= 1.0)
        return (q - (a + uv(0) * e0 + uv(1) * e1)).norm();
    return std::min({point_segment_distance(q, a, b), point_segment_distance(q, b, c),
                     point_segment_distance(q, c, a)});
}

inline double mesh_distance(const TriMesh& mesh, const Vec3& q) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < mesh.face_count(); ++f)
        best = std::min(best, point_triangle_distance(q, mesh.corner(f, 0), mesh.corner(f, 1), mesh.corner(f, 2)));
    return best;
}

/// E[max(Y - best, 0)] for Y ~ N(mu, sigma^2) by composite Simpson over
/// [best, mu + 12 sigma].
inline double expected_improvement_quadrature(double mu, double sigma, double best, int intervals = 20000) {
    const double lo = best;
    const double hi = std::max(best, mu) + 12.0 * sigma;
    if (hi <= lo)
        return 0.0;
    const double h = (hi - lo) / intervals;
    const auto f = [&](double y) {
        const double z = (y - mu) / sigma;
        return (y - best) * std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
    };
    double s = f(lo) + f(hi);
    for (int i = 1; i < intervals; ++i)
        s += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

/// Slope of y on x from the normal equations of the design matrix [1 x].
inline double regression_slope(std::span<const double> x, std::span<const double> y) {
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd a(n, 2);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, 0) = 1.0;
        a(i, 1) = x[i];
        b(i) = y[i];
    }
    const Eigen::Vector2d coef = (a.transpose() * a).ldlt().solve(a.transpose() * b);
    return coef(1);
}

/// Standard error of the slope for the same regression.
inline double regression_slope_se(std::span<const double> x, std::span<const double> y) {
    const double slope = regression_slope(x, y);
    const auto n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    const double intercept = my - slope * mx;
    double sse = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - intercept - slope * x[i];
        sse += r * r;
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return std::sqrt(sse / (n - 2.0) / sxx);
}

/// Bumpy height-field mesh with `cols` x `rows` cells (2 faces each), random
/// vertex heights.
inline TriMesh bumpy_mesh(int cols, int rows, std::uint64_t seed, double cell = 2.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> h(-1.5, 1.5);
    std::vector<Vec3> v;
    for (int j = 0; j <= rows; ++j)
        for (int i = 0; i <= cols; ++i)
            v.emplace_back(i * cell, j * cell, h(rng));
    std::vector<Face> f;
    const auto id = [cols](int i, int j) { return static_cast<std::uint32_t>(j * (cols + 1) + i); };
    for (int j = 0; j < rows; ++j)
        for (int i = 0; i < cols; ++i) {
            f.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            f.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    return TriMesh(std::move(v), std::move(f));
}

}  // namespace palpation::oracle
