#pragma once

#include <algorithm>

#include "stlab/common.hpp"

namespace stlab {

// Planar vehicle state layout used throughout: (x, y, yaw, v_x, v_y, omega_z).
// Position and yaw live in the chart of the integration interval's start
// frame; v_x, v_y are body-frame velocities and omega_z the yaw rate.
enum StateIndex { kSx = 0, kSy, kSyaw, kSvx, kSvy, kSwz };

struct ControlInput {
  double u_thr = 0.0;  // throttle, [0, 1]
  double u_str = 0.0;  // steering, [-1, 1]
};

struct ControlSample {
  double t = 0.0;
  ControlInput u;
};

// Calibratable vehicle parameters, ordered (gamma, c_thr1, c_thr2, c_res,
// c_tire) wherever a vector view is used.
struct DynamicsParams {
  double gamma = 0.35;   // steering input to wheel angle ratio, rad
  double c_thr1 = 7.0;   // throttle gain, N
  double c_thr2 = 1.5;   // speed feedback in the throttle map, N s/m
  double c_res = 5.5;    // rolling resistance magnitude, N
  double c_tire = 40.0;  // linear tire stiffness, N/rad

  Vec5 vec() const {
    Vec5 v;
    v << gamma, c_thr1, c_thr2, c_res, c_tire;
    return v;
  }
  static DynamicsParams from_vec(const Vec5& v) {
    return DynamicsParams{v[0], v[1], v[2], v[3], v[4]};
  }
  // Clamps every entry to the positivity floor. Applied after optimizer
  // steps; plain evaluation accepts any finite values.
  DynamicsParams floored() const {
    DynamicsParams out = *this;
    out.gamma = std::max(out.gamma, kParamFloor);
    out.c_thr1 = std::max(out.c_thr1, kParamFloor);
    out.c_thr2 = std::max(out.c_thr2, kParamFloor);
    out.c_res = std::max(out.c_res, kParamFloor);
    out.c_tire = std::max(out.c_tire, kParamFloor);
    return out;
  }
};

// Fixed mechanical constants, never optimized.
struct VehicleGeometry {
  double m = 3.0;     // kg
  double i_z = 0.05;  // yaw inertia, kg m^2
  double l_f = 0.16;  // front axle distance from the reference point, m
  double l_r = 0.17;  // rear axle distance, m
};

// Shape constants of the longitudinal force map, ordered (psi, tau, sigma)
// in vector views. Held fixed online; the offline calibrator may refine them.
struct LongitudinalHyper {
  double psi = 0.202;
  double tau = 2.335;
  double sigma = 10.0;  // resistance switching sharpness, s/m

  Vec3 vec() const { return Vec3(psi, tau, sigma); }
  static LongitudinalHyper from_vec(const Vec3& v) {
    return LongitudinalHyper{v[0], v[1], v[2]};
  }
};

namespace smooth {
// log(1 + exp(x)) without overflow.
double softplus(double x);
// Smooth positive stand-in for |x|: log(exp(2x) + 1) - x. Even, >= ln 2,
// and within ln 2 of |x| everywhere. Derivative is tanh(x).
double soft_threshold(double x);
}  // namespace smooth

// Drive force along the body x axis from throttle and speed, minus a
// smoothly signed rolling resistance. d_vx receives the speed derivative.
double longitudinal_force(const DynamicsParams& p, const LongitudinalHyper& h,
                          double u_thr, double v_x, double* d_vx = nullptr);

struct SlipJac {
  Vec3 front_d_vel = Vec3::Zero();  // d s_f / d (v_x, v_y, omega_z)
  Vec3 rear_d_vel = Vec3::Zero();
  double front_d_alpha = 0.0;  // rear slip does not depend on the wheel angle
};

// Front and rear slip angles with the soft-thresholded denominators that
// keep both defined and differentiable at standstill.
void slip_angles(const Vec6& state, double alpha, const VehicleGeometry& geom,
                 double* s_f, double* s_r, SlipJac* jac = nullptr);

inline void lateral_forces(double s_f, double s_r, double c_tire, double* f_fy,
                           double* f_ry) {
  *f_fy = c_tire * s_f;
  *f_ry = c_tire * s_r;
}

struct StateDerivJac {
  Mat6 d_state = Mat6::Zero();
  Eigen::Matrix<double, 6, 5> d_params = Eigen::Matrix<double, 6, 5>::Zero();
  Eigen::Matrix<double, 6, 3> d_hyper = Eigen::Matrix<double, 6, 3>::Zero();
};

// Continuous-time derivative of the single-track model. The velocity block
// (v_x, v_y, omega_z) is autonomous; the pose block couples to it through
// the rotating-chart terms.
Vec6 state_derivative(const Vec6& state, const ControlInput& u,
                      const DynamicsParams& p, const VehicleGeometry& geom,
                      const LongitudinalHyper& h,
                      StateDerivJac* jac = nullptr);

// Ground-truth variant with an optional saturating tire curve
// F = c_tire * slip_max * tanh(s / slip_max); slip_max <= 0 selects the
// linear tire and then matches state_derivative exactly.
Vec6 state_derivative_truth(const Vec6& state, const ControlInput& u,
                            const DynamicsParams& p,
                            const VehicleGeometry& geom,
                            const LongitudinalHyper& h, double slip_max);

}  // namespace stlab
