#pragma once

#include "stlab/common.hpp"

namespace stlab::so3 {

/// Skew-symmetric matrix such that hat(a) * b = a x b.
Mat3 hat(const Vec3& w);

/// Exponential map, axis-angle vector to unit quaternion.
Quat exp(const Vec3& w);

/// Logarithm map, unit quaternion to axis-angle vector with angle in [0, pi].
Vec3 log(const Quat& q);

/// Right Jacobian of the exponential map at w.
Mat3 right_jacobian(const Vec3& w);

/// Inverse of the right Jacobian at w.
Mat3 right_jacobian_inv(const Vec3& w);

/// Left Jacobian of the exponential map at w.
Mat3 left_jacobian(const Vec3& w);

/// Inverse of the left Jacobian at w.
Mat3 left_jacobian_inv(const Vec3& w);

}  // namespace stlab::so3
