#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "palpation/errors.hpp"
#include "palpation/geometry.hpp"
#include "test_support.hpp"

using namespace palpation;
using palpation::testing::apply_all;
using palpation::testing::random_points;
using palpation::testing::random_transform;

namespace {

// Elementary rotations written out by hand, independent of Eigen::AngleAxis.
Mat3 rot_x(double deg) {
    const double a = deg * std::numbers::pi / 180.0;
    Mat3 r;
    r << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
    return r;
}
Mat3 rot_y(double deg) {
    const double a = deg * std::numbers::pi / 180.0;
    Mat3 r;
    r << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
    return r;
}
Mat3 rot_z(double deg) {
    const double a = deg * std::numbers::pi / 180.0;
    Mat3 r;
    r << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
    return r;
}

double sum_sq_residual(const RigidTransform& t, const std::vector<Vec3>& src, const std::vector<Vec3>& dst) {
    double s = 0.0;
    for (std::size_t i = 0; i < src.size(); ++i)
        s += (dst[i] - t.apply(src[i])).squaredNorm();
    return s;
}

}  // namespace

TEST_CASE("make_transform: identity and quarter turn") {
    const RigidTransform id = make_transform(0, 0, 0, 0, 0, 0);
    CHECK(max_abs_difference(id, RigidTransform::identity()) == 0.0);

    const RigidTransform qz = make_transform(0, 0, 0, 0, 0, 90);
    const Vec3 p = qz.apply(Vec3(1, 0, 0));
    CHECK(std::abs(p.x()) < 1e-15);
    CHECK(p.y() == doctest::Approx(1.0));
    CHECK(std::abs(p.z()) < 1e-15);
}

TEST_CASE("make_transform: registration test pose matches composed elementary rotations") {
    const RigidTransform t = make_transform(5, 10, -15, 11.46, -11.46, 5.73);
    const Mat3 oracle = rot_z(5.73) * rot_y(-11.46) * rot_x(11.46);
    CHECK((t.rotation() - oracle).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((t.rotation().transpose() * t.rotation() - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(std::abs(t.rotation().determinant() - 1.0) < 1e-9);
    CHECK(t.translation() == Vec3(5, 10, -15));

    const PoseParams p = t.params();
    CHECK(p.rx_deg == doctest::Approx(11.46).epsilon(1e-12));
    CHECK(p.ry_deg == doctest::Approx(-11.46).epsilon(1e-12));
    CHECK(p.rz_deg == doctest::Approx(5.73).epsilon(1e-12));
}

TEST_CASE("make_transform rejects non-finite angles") {
    CHECK_THROWS_AS(make_transform(0, 0, 0, std::numeric_limits<double>::quiet_NaN(), 0, 0), InvalidInput);
    CHECK_THROWS_AS(make_transform(0, 0, 0, 0, std::numeric_limits<double>::infinity(), 0), InvalidInput);
}

TEST_CASE("RigidTransform rejects improper rotations") {
    Mat3 mirror = Mat3::Identity();
    mirror(2, 2) = -1.0;
    CHECK_THROWS_AS(RigidTransform(mirror, Vec3::Zero()), InvalidInput);
    CHECK_THROWS_AS(RigidTransform(2.0 * Mat3::Identity(), Vec3::Zero()), InvalidInput);
}

TEST_CASE("property: T * T^-1 is the identity") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 500; ++i) {
        const RigidTransform t = random_transform(rng);
        CHECK(max_abs_difference(t * t.inverse(), RigidTransform::identity()) < 1e-9);
        CHECK(max_abs_difference(t.inverse() * t, RigidTransform::identity()) < 1e-9);
    }
}

TEST_CASE("property: params round trip away from gimbal lock") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> ang(-170.0, 170.0);
    std::uniform_real_distribution<double> pitch(-85.0, 85.0);
    for (int i = 0; i < 200; ++i) {
        const PoseParams in{1.0, -2.0, 3.0, ang(rng), pitch(rng), ang(rng)};
        const PoseParams out = make_transform(in).params();
        CHECK(out.rx_deg == doctest::Approx(in.rx_deg).epsilon(1e-9));
        CHECK(out.ry_deg == doctest::Approx(in.ry_deg).epsilon(1e-9));
        CHECK(out.rz_deg == doctest::Approx(in.rz_deg).epsilon(1e-9));
    }
}

TEST_CASE("rigid_fit_svd: identity for identical point sets") {
    const std::vector<Vec3> pts{{0, 0, 0}, {1, 0, 0}, {0, 2, 0}, {0.5, 0.3, 1.7}};
    const RigidTransform t = rigid_fit_svd(pts, pts);
    CHECK(max_abs_difference(t, RigidTransform::identity()) < 1e-12);
}

TEST_CASE("rigid_fit_svd: recovers a 90 degree z rotation with translation") {
    const std::vector<Vec3> src{{0, 0, 0}, {1, 0, 0}, {0, 2, 0}, {0.5, 0.3, 1.7}, {-1, 1, 2}};
    const RigidTransform truth = make_transform(1, 2, 3, 0, 0, 90);
    const RigidTransform fit = rigid_fit_svd(src, apply_all(truth, src));
    CHECK(max_abs_difference(fit, truth) < 1e-9);
}

TEST_CASE("rigid_fit_svd: no random rigid transform beats the fit on noisy pairs") {
    std::mt19937_64 rng(21);
    const auto src = random_points(rng, 12, 10.0);
    const RigidTransform truth = make_transform(2, -1, 4, 10, -5, 20);
    auto dst = apply_all(truth, src);
    std::normal_distribution<double> noise(0.0, 0.5);
    for (Vec3& p : dst)
        p += Vec3(noise(rng), noise(rng), noise(rng));

    const double fitted = sum_sq_residual(rigid_fit_svd(src, dst), src, dst);
    // random search concentrated around the truth so that it is competitive
    std::uniform_real_distribution<double> dt(-1.0, 1.0);
    std::uniform_real_distribution<double> da(-3.0, 3.0);
    double best_random = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 10000; ++i) {
        const RigidTransform cand = make_transform(2 + dt(rng), -1 + dt(rng), 4 + dt(rng), 10 + da(rng),
                                                   -5 + da(rng), 20 + da(rng));
        best_random = std::min(best_random, sum_sq_residual(cand, src, dst));
    }
    CHECK(fitted <= best_random);
}

TEST_CASE("property: exact recovery from noise-free non-collinear points") {
    std::mt19937_64 rng(31);
    for (int i = 0; i < 100; ++i) {
        const RigidTransform truth = random_transform(rng);
        const auto src = random_points(rng, 3 + i % 8);
        const RigidTransform fit = rigid_fit_svd(src, apply_all(truth, src));
        CHECK(max_abs_difference(fit, truth) < 1e-9);
        CHECK(std::abs(fit.rotation().determinant() - 1.0) < 1e-9);
    }
}

TEST_CASE("property: mirrored targets still give a proper rotation") {
    std::mt19937_64 rng(41);
    for (int i = 0; i < 100; ++i) {
        const auto src = random_points(rng, 6);
        std::vector<Vec3> mirrored;
        for (const Vec3& p : src)
            mirrored.emplace_back(-p.x(), p.y(), p.z());
        const RigidTransform fit = rigid_fit_svd(src, mirrored);
        CHECK(std::abs(fit.rotation().determinant() - 1.0) < 1e-9);
    }
}

TEST_CASE("rigid_fit_svd input errors") {
    const std::vector<Vec3> three{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    const std::vector<Vec3> two{{0, 0, 0}, {1, 0, 0}};
    CHECK_THROWS_AS(rigid_fit_svd(three, two), InvalidInput);
    CHECK_THROWS_AS(rigid_fit_svd(two, two), InvalidInput);
    const std::vector<Vec3> line{{0, 0, 0}, {1, 1, 1}, {2, 2, 2}, {-3, -3, -3}};
    CHECK_THROWS_AS(rigid_fit_svd(line, line), DegenerateGeometry);
}

TEST_CASE("rms_error") {
    std::mt19937_64 rng(51);
    const auto pts = random_points(rng, 25);
    const RigidTransform truth = make_transform(5, 10, -15, 11.46, -11.46, 5.73);
    CHECK(rms_error(truth, truth, pts) == 0.0);

    const RigidTransform shifted(truth.rotation(), truth.translation() + Vec3(0, 0, 1));
    CHECK(rms_error(shifted, truth, pts) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(rms_error(truth, truth, std::vector<Vec3>{}), InvalidInput);
}
