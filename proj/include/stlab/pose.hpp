#pragma once

#include "stlab/common.hpp"
#include "stlab/so3.hpp"

namespace stlab {

/// 3-D rotation stored as a unit quaternion.
struct Rot3 {
  Quat q;

  Rot3() : q(Quat::Identity()) {}
  explicit Rot3(const Quat& q_in) : q(q_in.normalized()) {}

  static Rot3 identity() { return Rot3(); }
  static Rot3 exp(const Vec3& w) { return Rot3(so3::exp(w)); }
  static Rot3 from_matrix(const Mat3& m) { return Rot3(Quat(m)); }
  static Rot3 rot_z(double yaw) { return exp(Vec3(0.0, 0.0, yaw)); }

  Vec3 log() const { return so3::log(q); }
  Mat3 matrix() const { return q.toRotationMatrix(); }
  double angle() const { return log().norm(); }

  Rot3 operator*(const Rot3& other) const { return Rot3(q * other.q); }
  Vec3 operator*(const Vec3& v) const { return q * v; }
  Rot3 inverse() const { return Rot3(q.conjugate()); }
};

/// Rigid transform (R, p) acting as x -> R x + p.
///
/// Tangent vectors are ordered (translation, rotation) and applied on the
/// right: boxplus(d) = (R * Exp(d_rot), p + R * d_trans).
struct Pose3 {
  Rot3 R;
  Vec3 p;

  Pose3() : R(), p(Vec3::Zero()) {}
  Pose3(const Rot3& R_in, const Vec3& p_in) : R(R_in), p(p_in) {}

  static Pose3 identity() { return Pose3(); }

  Pose3 operator*(const Pose3& other) const {
    return Pose3(R * other.R, p + R * other.p);
  }
  Vec3 operator*(const Vec3& x) const { return R * x + p; }

  Pose3 inverse() const {
    const Rot3 ri = R.inverse();
    return Pose3(ri, -(ri * p));
  }

  Pose3 boxplus(const Vec6& d) const {
    return Pose3(R * Rot3::exp(d.tail<3>()), p + R * d.head<3>());
  }
};

/// Tangent d such that base.boxplus(d) == target.
Vec6 local_coordinates(const Pose3& base, const Pose3& target);

/// Lift a planar pose (x, y, yaw) into a rigid transform in the z = 0 plane.
Pose3 planar_lift(const Vec3& xyt);

/// For Z = X * Y: maps a right tangent of X into the right tangent of Z.
/// (A right tangent of Y passes through composition unchanged.)
Mat6 tangent_through_right(const Pose3& y);

/// For W = X^-1: maps a right tangent of X into the right tangent of W.
Mat6 tangent_of_inverse(const Pose3& x);

/// Jacobians of body_velocity with respect to its differentiable inputs,
/// all in right-tangent coordinates.
struct BodyVelocityJac {
  Mat3 d_pose_rot;                 // wrt rotation tangent of T_wi
  Mat3 d_vel;                      // wrt world velocity
  Mat3 d_bias;                     // wrt gyro bias
  Eigen::Matrix<double, 3, 6> d_ext;  // wrt extrinsics tangent
};

/// Planar body velocity (v_x, v_y, omega_z) recovered from the sensor pose
/// T_wi, the world velocity of the sensor point, a bias-corrected rate
/// sample, and the body-to-sensor mounting transform T_oi (sensor frame
/// expressed in the body frame).
Vec3 body_velocity(const Pose3& T_wi, const Vec3& v_w, const Vec3& gyro,
                   const Vec3& b_g, const Pose3& T_oi,
                   BodyVelocityJac* jac = nullptr);

struct RelativeBodyPoseJac {
  Mat6 d_ext0;
  Mat6 d_pose0;
  Mat6 d_posen;
  Mat6 d_extn;
};

/// Relative body pose between two instants given sensor poses and the
/// mounting transforms: T_oi_0 * T_wi_0^-1 * T_wi_n * T_oi_n^-1.
Pose3 relative_body_pose(const Pose3& T_oi_0, const Pose3& T_wi_0,
                         const Pose3& T_wi_n, const Pose3& T_oi_n,
                         RelativeBodyPoseJac* jac = nullptr);

struct ProjectPlanarJac {
  Eigen::Matrix<double, 3, 6> d_pose;
};

/// Projects a rigid transform to the plane as (x, y, z-component of the
/// rotation log). Throws NearPiRotation when the rotation angle is within
/// kYawExtractionMargin of pi.
Vec3 project_planar(const Pose3& T, ProjectPlanarJac* jac = nullptr);

struct PlaneResidualJac {
  Eigen::Matrix<double, 3, 6> d_pose;
  Eigen::Matrix<double, 3, 6> d_ext;
};

/// Deviation of the body frame from horizontal planar motion: the x/y
/// components of the world-frame body z-axis, and the height error of the
/// body position against the plane at offset d below the world origin.
Vec3 plane_residual(const Pose3& T_wi, const Pose3& T_oi, double d,
                    PlaneResidualJac* jac = nullptr);

/// Expected mounting geometry used as a soft prior on the extrinsics.
struct MountingPriors {
  Vec3 yaw_axis = Vec3(1.0, 0.0, 0.0);  // sensor axis whose body-frame y must stay 0
  double lateral_offset = 0.0;          // expected sensor y in the body frame
  double longitudinal_offset = 0.0;     // expected sensor x minus wheelbase_front
  double wheelbase_front = 0.0;         // distance body origin to front axle
};

struct GeometryResidualJac {
  Eigen::Matrix<double, 6, 6> d_pose;
  Eigen::Matrix<double, 6, 6> d_ext;
};

/// Stacks plane_residual with soft mounting priors: yaw alignment of the
/// extrinsics rotation and lateral/longitudinal mounting offsets.
Vec6 geometry_residual(const Pose3& T_wi, const Pose3& T_oi, double d,
                       const MountingPriors& priors,
                       GeometryResidualJac* jac = nullptr);

}  // namespace stlab
