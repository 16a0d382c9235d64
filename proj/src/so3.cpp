#include "stlab/so3.hpp"

#include <cmath>

namespace stlab::so3 {

namespace {
constexpr double kSmallAngle = 1e-8;
}

Mat3 hat(const Vec3& w) {
  Mat3 m;
  m << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
      -w.y(), w.x(), 0.0;
  return m;
}

Quat exp(const Vec3& w) {
  const double theta2 = w.squaredNorm();
  const double theta = std::sqrt(theta2);
  double re;
  double im;  // sin(theta/2) / theta
  if (theta < kSmallAngle) {
    re = 1.0 - theta2 / 8.0;
    im = 0.5 - theta2 / 48.0;
  } else {
    re = std::cos(0.5 * theta);
    im = std::sin(0.5 * theta) / theta;
  }
  return Quat(re, im * w.x(), im * w.y(), im * w.z());
}

Vec3 log(const Quat& q_in) {
  Quat q = q_in.normalized();
  if (q.w() < 0.0) {
    q.coeffs() = -q.coeffs();
  }
  const Vec3 v(q.x(), q.y(), q.z());
  const double nv = v.norm();
  if (nv < kSmallAngle) {
    // theta / |v| ~ 2 + |v|^2 / 3 for small angles (w ~ 1).
    return v * (2.0 + nv * nv / 3.0);
  }
  const double theta = 2.0 * std::atan2(nv, q.w());
  return v * (theta / nv);
}

Mat3 right_jacobian(const Vec3& w) {
  const double theta2 = w.squaredNorm();
  const double theta = std::sqrt(theta2);
  double c1;  // (1 - cos) / theta^2
  double c2;  // (theta - sin) / theta^3
  if (theta < 1e-4) {
    c1 = 0.5 - theta2 / 24.0;
    c2 = 1.0 / 6.0 - theta2 / 120.0;
  } else {
    c1 = (1.0 - std::cos(theta)) / theta2;
    c2 = (theta - std::sin(theta)) / (theta2 * theta);
  }
  const Mat3 k = hat(w);
  return Mat3::Identity() - c1 * k + c2 * k * k;
}

Mat3 right_jacobian_inv(const Vec3& w) {
  const double theta2 = w.squaredNorm();
  const double theta = std::sqrt(theta2);
  double c3;  // 1/theta^2 - cot(theta/2) / (2 theta)
  if (theta < 1e-4) {
    c3 = 1.0 / 12.0 + theta2 / 720.0;
  } else {
    const double half = 0.5 * theta;
    c3 = 1.0 / theta2 - std::cos(half) / (2.0 * theta * std::sin(half));
  }
  const Mat3 k = hat(w);
  return Mat3::Identity() + 0.5 * k + c3 * k * k;
}

Mat3 left_jacobian(const Vec3& w) { return right_jacobian(-w); }

Mat3 left_jacobian_inv(const Vec3& w) { return right_jacobian_inv(-w); }

}  // namespace stlab::so3
