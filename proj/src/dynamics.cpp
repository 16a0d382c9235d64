#include "stlab/dynamics.hpp"

#include <cmath>

namespace stlab {

namespace smooth {

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double soft_threshold(double x) {
  const double a = std::abs(x);
  return a + std::log1p(std::exp(-2.0 * a));
}

}  // namespace smooth

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double longitudinal_force(const DynamicsParams& p, const LongitudinalHyper& h,
                          double u_thr, double v_x, double* d_vx) {
  const double z = p.c_thr1 * u_thr - p.c_thr2 * v_x;
  const double drive = h.psi * z + h.tau * smooth::softplus(z) - std::log(2.0);
  const double th = std::tanh(h.sigma * v_x);
  if (d_vx) {
    const double drive_dz = h.psi + h.tau * sigmoid(z);
    *d_vx = -p.c_thr2 * drive_dz - h.sigma * (1.0 - th * th) * p.c_res;
  }
  return drive - th * p.c_res;
}

void slip_angles(const Vec6& state, double alpha, const VehicleGeometry& geom,
                 double* s_f, double* s_r, SlipJac* jac) {
  const double vx = state[kSvx];
  const double vy = state[kSvy];
  const double wz = state[kSwz];
  const double ca = std::cos(alpha);
  const double sa = std::sin(alpha);
  const double lat_f = vy + geom.l_f * wz;  // front contact lateral speed

  const double num_f = vx * sa - lat_f * ca;
  const double arg_f = vx * ca + lat_f * sa;
  const double den_f = smooth::soft_threshold(arg_f);
  *s_f = std::atan2(num_f, den_f);

  const double num_r = geom.l_r * wz - vy;
  const double den_r = smooth::soft_threshold(vx);
  *s_r = std::atan2(num_r, den_r);

  if (jac) {
    const double tf = std::tanh(arg_f);
    const double norm_f = den_f * den_f + num_f * num_f;
    // d atan2(n, g(a)) = (dn * den - n * tanh(a) * da) / (den^2 + n^2)
    jac->front_d_vel[0] = (sa * den_f - num_f * tf * ca) / norm_f;
    jac->front_d_vel[1] = (-ca * den_f - num_f * tf * sa) / norm_f;
    jac->front_d_vel[2] = geom.l_f * jac->front_d_vel[1];
    jac->front_d_alpha = (arg_f * den_f + num_f * num_f * tf) / norm_f;

    const double tr = std::tanh(vx);
    const double norm_r = den_r * den_r + num_r * num_r;
    jac->rear_d_vel[0] = -num_r * tr / norm_r;
    jac->rear_d_vel[1] = -den_r / norm_r;
    jac->rear_d_vel[2] = geom.l_r * den_r / norm_r;
  }
}

Vec6 state_derivative(const Vec6& state, const ControlInput& u,
                      const DynamicsParams& p, const VehicleGeometry& geom,
                      const LongitudinalHyper& h, StateDerivJac* jac) {
  const double x = state[kSx];
  const double y = state[kSy];
  const double vx = state[kSvx];
  const double vy = state[kSvy];
  const double wz = state[kSwz];

  const double alpha = p.gamma * u.u_str;
  const double ca = std::cos(alpha);
  const double sa = std::sin(alpha);

  double fx_d_vx = 0.0;
  const double f_x = longitudinal_force(p, h, u.u_thr, vx, &fx_d_vx);

  double s_f = 0.0, s_r = 0.0;
  SlipJac slip;
  slip_angles(state, alpha, geom, &s_f, &s_r, jac ? &slip : nullptr);
  double f_fy = 0.0, f_ry = 0.0;
  lateral_forces(s_f, s_r, p.c_tire, &f_fy, &f_ry);

  const double inv_m = 1.0 / geom.m;
  const double inv_iz = 1.0 / geom.i_z;

  Vec6 ds;
  ds[kSx] = vx - wz * y;
  ds[kSy] = vy + wz * x;
  ds[kSyaw] = wz;
  ds[kSvx] = (f_x - f_fy * sa) * inv_m + vy * wz;
  ds[kSvy] = (f_fy * ca + f_ry) * inv_m - vx * wz;
  ds[kSwz] = (geom.l_f * f_fy * ca - geom.l_r * f_ry) * inv_iz;

  if (jac) {
    Mat6& a = jac->d_state;
    a.setZero();
    a(kSx, kSy) = -wz;
    a(kSx, kSvx) = 1.0;
    a(kSx, kSwz) = -y;
    a(kSy, kSx) = wz;
    a(kSy, kSvy) = 1.0;
    a(kSy, kSwz) = x;
    a(kSyaw, kSwz) = 1.0;

    const Vec3 ffy_d_vel = p.c_tire * slip.front_d_vel;
    const Vec3 fry_d_vel = p.c_tire * slip.rear_d_vel;

    a(kSvx, kSvx) = (fx_d_vx - ffy_d_vel[0] * sa) * inv_m;
    a(kSvx, kSvy) = -ffy_d_vel[1] * sa * inv_m + wz;
    a(kSvx, kSwz) = -ffy_d_vel[2] * sa * inv_m + vy;

    a(kSvy, kSvx) = (ffy_d_vel[0] * ca + fry_d_vel[0]) * inv_m - wz;
    a(kSvy, kSvy) = (ffy_d_vel[1] * ca + fry_d_vel[1]) * inv_m;
    a(kSvy, kSwz) = (ffy_d_vel[2] * ca + fry_d_vel[2]) * inv_m - vx;

    a(kSwz, kSvx) =
        (geom.l_f * ffy_d_vel[0] * ca - geom.l_r * fry_d_vel[0]) * inv_iz;
    a(kSwz, kSvy) =
        (geom.l_f * ffy_d_vel[1] * ca - geom.l_r * fry_d_vel[1]) * inv_iz;
    a(kSwz, kSwz) =
        (geom.l_f * ffy_d_vel[2] * ca - geom.l_r * fry_d_vel[2]) * inv_iz;

    auto& b = jac->d_params;
    b.setZero();
    // Wheel angle responds to gamma scaled by the steering input; the force
    // projections rotate with it as well.
    const double ffy_d_alpha = p.c_tire * slip.front_d_alpha;
    const double d_alpha = u.u_str;
    b(kSvx, 0) = (-ffy_d_alpha * sa - f_fy * ca) * d_alpha * inv_m;
    b(kSvy, 0) = (ffy_d_alpha * ca - f_fy * sa) * d_alpha * inv_m;
    b(kSwz, 0) = geom.l_f * (ffy_d_alpha * ca - f_fy * sa) * d_alpha * inv_iz;

    const double z = p.c_thr1 * u.u_thr - p.c_thr2 * vx;
    const double drive_dz = h.psi + h.tau * sigmoid(z);
    b(kSvx, 1) = u.u_thr * drive_dz * inv_m;
    b(kSvx, 2) = -vx * drive_dz * inv_m;
    const double th = std::tanh(h.sigma * vx);
    b(kSvx, 3) = -th * inv_m;

    b(kSvx, 4) = -s_f * sa * inv_m;
    b(kSvy, 4) = (s_f * ca + s_r) * inv_m;
    b(kSwz, 4) = (geom.l_f * s_f * ca - geom.l_r * s_r) * inv_iz;

    auto& hj = jac->d_hyper;
    hj.setZero();
    hj(kSvx, 0) = z * inv_m;
    hj(kSvx, 1) = smooth::softplus(z) * inv_m;
    hj(kSvx, 2) = -vx * (1.0 - th * th) * p.c_res * inv_m;
  }
  return ds;
}

Vec6 state_derivative_truth(const Vec6& state, const ControlInput& u,
                            const DynamicsParams& p,
                            const VehicleGeometry& geom,
                            const LongitudinalHyper& h, double slip_max) {
  if (slip_max <= 0.0) return state_derivative(state, u, p, geom, h);

  const double x = state[kSx];
  const double y = state[kSy];
  const double vx = state[kSvx];
  const double vy = state[kSvy];
  const double wz = state[kSwz];

  const double alpha = p.gamma * u.u_str;
  const double ca = std::cos(alpha);
  const double sa = std::sin(alpha);
  const double f_x = longitudinal_force(p, h, u.u_thr, vx);

  double s_f = 0.0, s_r = 0.0;
  slip_angles(state, alpha, geom, &s_f, &s_r);
  const double f_fy = p.c_tire * slip_max * std::tanh(s_f / slip_max);
  const double f_ry = p.c_tire * slip_max * std::tanh(s_r / slip_max);

  Vec6 ds;
  ds[kSx] = vx - wz * y;
  ds[kSy] = vy + wz * x;
  ds[kSyaw] = wz;
  ds[kSvx] = (f_x - f_fy * sa) / geom.m + vy * wz;
  ds[kSvy] = (f_fy * ca + f_ry) / geom.m - vx * wz;
  ds[kSwz] = (geom.l_f * f_fy * ca - geom.l_r * f_ry) / geom.i_z;
  return ds;
}

}  // namespace stlab
