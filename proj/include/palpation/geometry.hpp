#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace palpation {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rotation angles (degrees) and translation (mm) of a rigid transform, in the
/// extrinsic X-Y-Z convention used by make_transform: R = Rz * Ry * Rx.
struct PoseParams {
    double tx = 0.0, ty = 0.0, tz = 0.0;
    double rx_deg = 0.0, ry_deg = 0.0, rz_deg = 0.0;
};

/// Proper rigid motion p -> R p + t. The rotation is checked to be orthonormal
/// with determinant +1 on construction.
class RigidTransform {
public:
    RigidTransform();
    RigidTransform(const Mat3& rotation, const Vec3& translation);

    static RigidTransform identity() { return RigidTransform(); }

    const Mat3& rotation() const { return rotation_; }
    const Vec3& translation() const { return translation_; }

    Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
    Vec3 rotate(const Vec3& v) const { return rotation_ * v; }

    RigidTransform inverse() const;

    /// (a * b).apply(p) == a.apply(b.apply(p))
    friend RigidTransform operator*(const RigidTransform& a, const RigidTransform& b);

    PoseParams params() const;

private:
    Mat3 rotation_;
    Vec3 translation_;
};

/// Builds R = Rz(rz) * Ry(ry) * Rx(rx), angles in degrees, translation in mm.
RigidTransform make_transform(double tx, double ty, double tz,
                              double rx_deg, double ry_deg, double rz_deg);
RigidTransform make_transform(const PoseParams& p);

/// Least-squares rigid fit (Arun / Kabsch): the transform T minimising
/// sum ||target_i - T source_i||^2. A reflection in the SVD solution is repaired
/// by flipping the singular vector of the smallest singular value.
///
/// Throws InvalidInput on size mismatch or fewer than 3 pairs and
/// DegenerateGeometry when the source points are collinear.
RigidTransform rigid_fit_svd(std::span<const Vec3> source, std::span<const Vec3> target);

/// sqrt(mean ||T_est p - T_true p||^2) over the points.
double rms_error(const RigidTransform& estimated, const RigidTransform& truth,
                 std::span<const Vec3> points);

/// Largest |a_ij - b_ij| over the rotation and translation entries.
double max_abs_difference(const RigidTransform& a, const RigidTransform& b);

}  // namespace palpation
