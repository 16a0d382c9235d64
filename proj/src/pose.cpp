#include "stlab/pose.hpp"

#include <cmath>

#include "stlab/errors.hpp"

namespace stlab {

Vec6 local_coordinates(const Pose3& base, const Pose3& target) {
  const Rot3 ri = base.R.inverse();
  Vec6 d;
  d.head<3>() = ri * (target.p - base.p);
  d.tail<3>() = (ri * target.R).log();
  return d;
}

Pose3 planar_lift(const Vec3& xyt) {
  return Pose3(Rot3::rot_z(xyt.z()), Vec3(xyt.x(), xyt.y(), 0.0));
}

Mat6 tangent_through_right(const Pose3& y) {
  const Mat3 rt = y.R.matrix().transpose();
  Mat6 m = Mat6::Zero();
  m.topLeftCorner<3, 3>() = rt;
  m.topRightCorner<3, 3>() = -rt * so3::hat(y.p);
  m.bottomRightCorner<3, 3>() = rt;
  return m;
}

Mat6 tangent_of_inverse(const Pose3& x) {
  const Mat3 r = x.R.matrix();
  Mat6 m = Mat6::Zero();
  m.topLeftCorner<3, 3>() = -r;
  m.topRightCorner<3, 3>() = -so3::hat(x.p) * r;
  m.bottomRightCorner<3, 3>() = -r;
  return m;
}

Vec3 body_velocity(const Pose3& T_wi, const Vec3& v_w, const Vec3& gyro,
                   const Vec3& b_g, const Pose3& T_oi, BodyVelocityJac* jac) {
  const Mat3 c = T_oi.R.matrix();
  const Mat3 rt = T_wi.R.matrix().transpose();
  const Vec3& t = T_oi.p;

  const Vec3 rate = gyro - b_g;
  const Vec3 omega_body = c * rate;
  const Vec3 v_local = rt * v_w;
  const Vec3 u = c * v_local + t.cross(omega_body);

  if (jac != nullptr) {
    // Rows 0..1 are the planar components of u, row 2 is omega_body.z.
    const Mat3 hat_t = so3::hat(t);
    Mat3 du_pose_rot = c * so3::hat(v_local);
    Mat3 du_vel = c * rt;
    Mat3 du_bias = -hat_t * c;
    Eigen::Matrix<double, 3, 6> du_ext;
    du_ext.leftCols<3>() = -so3::hat(omega_body) * c;
    du_ext.rightCols<3>() = -c * so3::hat(v_local) - hat_t * c * so3::hat(rate);

    jac->d_pose_rot.setZero();
    jac->d_vel.setZero();
    jac->d_bias.setZero();
    jac->d_ext.setZero();
    jac->d_pose_rot.topRows<2>() = du_pose_rot.topRows<2>();
    jac->d_vel.topRows<2>() = du_vel.topRows<2>();
    jac->d_bias.topRows<2>() = du_bias.topRows<2>();
    jac->d_ext.topRows<2>() = du_ext.topRows<2>();

    jac->d_bias.row(2) = -c.row(2);
    jac->d_ext.block<1, 3>(2, 3) = -c.row(2) * so3::hat(rate);
  }

  return Vec3(u.x(), u.y(), omega_body.z());
}

Pose3 relative_body_pose(const Pose3& T_oi_0, const Pose3& T_wi_0,
                         const Pose3& T_wi_n, const Pose3& T_oi_n,
                         RelativeBodyPoseJac* jac) {
  const Pose3 b_inv = T_wi_0.inverse();
  const Pose3 d_inv = T_oi_n.inverse();
  const Pose3 cd = T_wi_n * d_inv;
  const Pose3 bcd = b_inv * cd;
  const Pose3 rel = T_oi_0 * bcd;

  if (jac != nullptr) {
    jac->d_ext0 = tangent_through_right(bcd);
    jac->d_pose0 = tangent_through_right(cd) * tangent_of_inverse(T_wi_0);
    jac->d_posen = tangent_through_right(d_inv);
    jac->d_extn = tangent_of_inverse(T_oi_n);
  }
  return rel;
}

Vec3 project_planar(const Pose3& T, ProjectPlanarJac* jac) {
  const Vec3 w = T.R.log();
  if (w.norm() >= M_PI - kYawExtractionMargin) {
    throw NearPiRotation("rotation angle too close to pi for yaw extraction");
  }
  if (jac != nullptr) {
    jac->d_pose.setZero();
    jac->d_pose.topLeftCorner<2, 3>() = T.R.matrix().topRows<2>();
    jac->d_pose.block<1, 3>(2, 3) = so3::right_jacobian_inv(w).row(2);
  }
  return Vec3(T.p.x(), T.p.y(), w.z());
}

Vec3 plane_residual(const Pose3& T_wi, const Pose3& T_oi, double d,
                    PlaneResidualJac* jac) {
  const Mat3 r = T_wi.R.matrix();
  const Mat3 c = T_oi.R.matrix();
  const Mat3 q = r * c.transpose();
  const Vec3& t = T_oi.p;

  const Vec3 up = q.col(2);  // q * e3
  const double height = d + T_wi.p.z() - (q * t).z();

  if (jac != nullptr) {
    const Mat3 e3_hat = so3::hat(Vec3::UnitZ());
    const Mat3 da_dphi = -q * e3_hat * c;
    const Mat3 q_hat_t_c = q * so3::hat(t) * c;

    jac->d_pose.setZero();
    jac->d_pose.block<2, 3>(0, 3) = da_dphi.topRows<2>();
    jac->d_pose.block<1, 3>(2, 0) = r.row(2);
    jac->d_pose.block<1, 3>(2, 3) = q_hat_t_c.row(2);

    jac->d_ext.setZero();
    jac->d_ext.block<2, 3>(0, 3) = (q * e3_hat * c).topRows<2>();
    jac->d_ext.block<1, 3>(2, 0) = -(q * c).row(2);
    jac->d_ext.block<1, 3>(2, 3) = -q_hat_t_c.row(2);
  }

  return Vec3(up.x(), up.y(), height);
}

Vec6 geometry_residual(const Pose3& T_wi, const Pose3& T_oi, double d,
                       const MountingPriors& priors, GeometryResidualJac* jac) {
  PlaneResidualJac plane_jac;
  const Vec3 plane =
      plane_residual(T_wi, T_oi, d, jac != nullptr ? &plane_jac : nullptr);

  const Mat3 c = T_oi.R.matrix();
  Vec6 r;
  r.head<3>() = plane;
  r(3) = (c * priors.yaw_axis).y();
  r(4) = T_oi.p.y() - priors.lateral_offset;
  r(5) = T_oi.p.x() - priors.wheelbase_front - priors.longitudinal_offset;

  if (jac != nullptr) {
    jac->d_pose.setZero();
    jac->d_ext.setZero();
    jac->d_pose.topRows<3>() = plane_jac.d_pose;
    jac->d_ext.topRows<3>() = plane_jac.d_ext;
    jac->d_ext.block<1, 3>(3, 3) = -(c * so3::hat(priors.yaw_axis)).row(1);
    jac->d_ext.block<1, 3>(4, 0) = c.row(1);
    jac->d_ext.block<1, 3>(5, 0) = c.row(0);
  }
  return r;
}

}  // namespace stlab
