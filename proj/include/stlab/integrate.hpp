#pragma once

#include <vector>

#include "stlab/dynamics.hpp"

namespace stlab {

// Default cap on the internal RK4 step, seconds. Intervals are subdivided
// uniformly so every step is <= this.
inline constexpr double kDtMaxDefault = 0.005;

// Zero-order-hold control log. lookup(t) returns the latest sample taken at
// or before t; asking for a time before the first sample is an input error.
class ControlTimeline {
 public:
  ControlTimeline() = default;
  explicit ControlTimeline(std::vector<ControlSample> samples);

  const ControlInput& lookup(double t) const;
  const std::vector<ControlSample>& samples() const { return samples_; }
  bool empty() const { return samples_.empty(); }

 private:
  std::vector<ControlSample> samples_;
};

// Which sensitivity blocks to propagate alongside the state.
enum class SensMode { kNone, kParams, kParamsHyper };

// Width of the stacked differentiation variable (v0, params[, hyper]) for
// rollout-level jacobians.
inline int sens_width(SensMode mode) {
  switch (mode) {
    case SensMode::kNone: return 0;
    case SensMode::kParams: return 8;
    case SensMode::kParamsHyper: return 11;
  }
  return 0;
}

// Integrates the dynamics over [t_a, t_b], splitting at control switches
// strictly inside the interval and holding the control constant per segment.
Vec6 integrate_interval(const Vec6& s0, const ControlTimeline& ctrl,
                        const DynamicsParams& p, const VehicleGeometry& geom,
                        const LongitudinalHyper& h, double t_a, double t_b,
                        double dt_max = kDtMaxDefault);

struct IntervalResult {
  Vec6 state = Vec6::Zero();
  Mat6 d_state0 = Mat6::Zero();  // d state(t_b) / d state(t_a)
  Eigen::Matrix<double, 6, 5> d_params = Eigen::Matrix<double, 6, 5>::Zero();
  Eigen::Matrix<double, 6, 3> d_hyper = Eigen::Matrix<double, 6, 3>::Zero();
};

// Same integral with the exact derivative of the discrete integration map,
// obtained by differentiating every RK4 stage.
IntervalResult integrate_interval_sens(const Vec6& s0,
                                       const ControlTimeline& ctrl,
                                       const DynamicsParams& p,
                                       const VehicleGeometry& geom,
                                       const LongitudinalHyper& h, double t_a,
                                       double t_b, SensMode mode,
                                       double dt_max = kDtMaxDefault);

// Chains planar relative poses: rotates the delta translation into the
// accumulated frame and adds yaws (kept unwrapped).
Vec3 compose_planar(const Vec3& prev, const Vec3& delta,
                    Mat3* d_prev = nullptr, Mat3* d_delta = nullptr);

struct RolloutResult {
  std::vector<double> t;     // frame times
  std::vector<Vec3> pose;    // (x, y, yaw) relative to the first frame
  std::vector<Vec3> vel;     // (v_x, v_y, omega_z) at each frame
  // Per-frame jacobians w.r.t. the stacked (v0, params[, hyper]) variable;
  // empty unless sensitivities were requested.
  std::vector<MatX> d_pose;  // 3 x sens_width
  std::vector<MatX> d_vel;   // 3 x sens_width
};

// Integrates across consecutive frame intervals, restarting each interval
// from a zeroed pose with the carried-over velocity, and composes the
// per-interval deltas into poses relative to the first frame.
RolloutResult rollout(const std::vector<double>& frame_times, const Vec3& v0,
                      const ControlTimeline& ctrl, const DynamicsParams& p,
                      const VehicleGeometry& geom, const LongitudinalHyper& h,
                      SensMode mode = SensMode::kNone,
                      double dt_max = kDtMaxDefault);

// Rollout sampled every frame_dt from zero up to the horizon.
RolloutResult predict(double horizon, const Vec3& v0,
                      const ControlTimeline& ctrl, const DynamicsParams& p,
                      const VehicleGeometry& geom, const LongitudinalHyper& h,
                      double frame_dt, SensMode mode = SensMode::kNone,
                      double dt_max = kDtMaxDefault);

}  // namespace stlab
