#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace stlab {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec5 = Eigen::Matrix<double, 5, 1>;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using VecX = Eigen::VectorXd;

using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using MatX = Eigen::MatrixXd;

using Quat = Eigen::Quaterniond;

/// Lower clamp applied to positive model parameters by the optimizers.
inline constexpr double kParamFloor = 1e-6;

/// Rotations whose angle is at or beyond pi minus this margin are rejected
/// when a scalar yaw has to be extracted.
inline constexpr double kYawExtractionMargin = 1e-3;

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

}  // namespace stlab
