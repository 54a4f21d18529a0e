#include "palpation/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "palpation/errors.hpp"

namespace palpation {

namespace {

constexpr double kOrthonormalTol = 1e-9;

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

}  // namespace

RigidTransform::RigidTransform() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}

RigidTransform::RigidTransform(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
    if (!rotation.allFinite() || !translation.allFinite())
        throw InvalidInput("rigid transform has non-finite entries");
    const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
    const double det = rotation.determinant();
    if (ortho > kOrthonormalTol || std::abs(det - 1.0) > kOrthonormalTol)
        throw InvalidInput("rotation is not a proper orthonormal matrix (|RtR-I|=" +
                           std::to_string(ortho) + ", det=" + std::to_string(det) + ")");
}

RigidTransform RigidTransform::inverse() const {
    const Mat3 rt = rotation_.transpose();
    return RigidTransform(rt, -(rt * translation_));
}

RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
    return RigidTransform(a.rotation_ * b.rotation_, a.rotation_ * b.translation_ + a.translation_);
}

PoseParams RigidTransform::params() const {
    const Mat3& r = rotation_;
    PoseParams p;
    p.tx = translation_.x();
    p.ty = translation_.y();
    p.tz = translation_.z();
    // R = Rz Ry Rx  =>  r20 = -sin(ry), r21 = cos(ry) sin(rx), r22 = cos(ry) cos(rx),
    //                   r10 = sin(rz) cos(ry), r00 = cos(rz) cos(ry)
    const double sy = std::clamp(-r(2, 0), -1.0, 1.0);
    p.ry_deg = rad2deg(std::asin(sy));
    if (std::abs(sy) < 1.0 - 1e-12) {
        p.rx_deg = rad2deg(std::atan2(r(2, 1), r(2, 2)));
        p.rz_deg = rad2deg(std::atan2(r(1, 0), r(0, 0)));
    } else {
        // gimbal lock: only rz - rx (or rz + rx) is observable, pin rx to 0
        p.rx_deg = 0.0;
        p.rz_deg = rad2deg(std::atan2(-r(0, 1), r(1, 1)));
    }
    return p;
}

RigidTransform make_transform(double tx, double ty, double tz,
                              double rx_deg, double ry_deg, double rz_deg) {
    if (!std::isfinite(rx_deg) || !std::isfinite(ry_deg) || !std::isfinite(rz_deg))
        throw InvalidInput("make_transform: angles must be finite");
    const Mat3 r = (Eigen::AngleAxisd(deg2rad(rz_deg), Vec3::UnitZ()) *
                    Eigen::AngleAxisd(deg2rad(ry_deg), Vec3::UnitY()) *
                    Eigen::AngleAxisd(deg2rad(rx_deg), Vec3::UnitX()))
                       .toRotationMatrix();
    return RigidTransform(r, Vec3(tx, ty, tz));
}

RigidTransform make_transform(const PoseParams& p) {
    return make_transform(p.tx, p.ty, p.tz, p.rx_deg, p.ry_deg, p.rz_deg);
}

RigidTransform rigid_fit_svd(std::span<const Vec3> source, std::span<const Vec3> target) {
    if (source.size() != target.size())
        throw InvalidInput("rigid_fit_svd: source and target sizes differ");
    if (source.size() < 3)
        throw InvalidInput("rigid_fit_svd: need at least 3 point pairs");

    const auto n = static_cast<double>(source.size());
    Vec3 src_mean = Vec3::Zero();
    Vec3 dst_mean = Vec3::Zero();
    for (std::size_t i = 0; i < source.size(); ++i) {
        src_mean += source[i];
        dst_mean += target[i];
    }
    src_mean /= n;
    dst_mean /= n;

    Mat3 cross = Mat3::Zero();
    Mat3 scatter = Mat3::Zero();
    for (std::size_t i = 0; i < source.size(); ++i) {
        const Vec3 a = source[i] - src_mean;
        cross += a * (target[i] - dst_mean).transpose();
        scatter += a * a.transpose();
    }

    // Collinear sources leave a one-dimensional scatter: rotation about that line
    // is unobservable.
    Eigen::JacobiSVD<Mat3> scatter_svd(scatter);
    const Vec3 spread = scatter_svd.singularValues();
    if (spread(0) <= 0.0 || spread(1) <= 1e-12 * spread(0))
        throw DegenerateGeometry("rigid_fit_svd: source points are collinear or coincident");

    Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Mat3& u = svd.matrixU();
    Mat3 v = svd.matrixV();
    Mat3 rot = v * u.transpose();
    if (rot.determinant() < 0.0) {
        // singular values are sorted descending; flip the weakest direction
        v.col(2) *= -1.0;
        rot = v * u.transpose();
    }
    // Strip rounding so the orthonormality check in RigidTransform holds tightly.
    Eigen::JacobiSVD<Mat3> polish(rot, Eigen::ComputeFullU | Eigen::ComputeFullV);
    rot = polish.matrixU() * polish.matrixV().transpose();

    return RigidTransform(rot, dst_mean - rot * src_mean);
}

double rms_error(const RigidTransform& estimated, const RigidTransform& truth,
                 std::span<const Vec3> points) {
    if (points.empty())
        throw InvalidInput("rms_error: empty point list");
    double sum = 0.0;
    for (const Vec3& p : points)
        sum += (estimated.apply(p) - truth.apply(p)).squaredNorm();
    return std::sqrt(sum / static_cast<double>(points.size()));
}

double max_abs_difference(const RigidTransform& a, const RigidTransform& b) {
    return std::max((a.rotation() - b.rotation()).cwiseAbs().maxCoeff(),
                    (a.translation() - b.translation()).cwiseAbs().maxCoeff());
}

}  // namespace palpation
