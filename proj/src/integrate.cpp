#include "stlab/integrate.hpp"

#include <algorithm>
#include <cmath>

#include "stlab/errors.hpp"

namespace stlab {

ControlTimeline::ControlTimeline(std::vector<ControlSample> samples)
    : samples_(std::move(samples)) {
  if (samples_.empty()) throw SchemaError("control timeline is empty");
  double prev = -std::numeric_limits<double>::infinity();
  for (const ControlSample& s : samples_) {
    if (!(s.t > prev)) {
      throw SchemaError("control timestamps must be strictly increasing");
    }
    prev = s.t;
    if (!(s.u.u_thr >= 0.0 && s.u.u_thr <= 1.0)) {
      throw SchemaError("throttle out of [0, 1]");
    }
    if (!(s.u.u_str >= -1.0 && s.u.u_str <= 1.0)) {
      throw SchemaError("steering out of [-1, 1]");
    }
  }
}

const ControlInput& ControlTimeline::lookup(double t) const {
  if (samples_.empty() || t < samples_.front().t) {
    throw SchemaError("control lookup before the first sample");
  }
  auto it = std::upper_bound(
      samples_.begin(), samples_.end(), t,
      [](double value, const ControlSample& s) { return value < s.t; });
  return std::prev(it)->u;
}

namespace {

// One RK4 step of length h under constant control. T, when present, is the
// 6 x w tangent of the current state w.r.t. the differentiation variable and
// is advanced with the exact derivative of the discrete step.
void rk4_step(Vec6& x, MatX* T, double h, const ControlInput& u,
              const DynamicsParams& p, const VehicleGeometry& geom,
              const LongitudinalHyper& hyper, bool with_hyper) {
  const int w = T ? int(T->cols()) : 0;

  auto eval = [&](const Vec6& y, const MatX* Ty, Vec6* k, MatX* K) {
    StateDerivJac jac;
    *k = state_derivative(y, u, p, geom, hyper, T ? &jac : nullptr);
    if (!all_finite(*k) || !all_finite(y)) {
      throw NonFiniteState("integration produced a non-finite value");
    }
    if (T) {
      *K = jac.d_state * (*Ty);
      K->middleCols(6, 5) += jac.d_params;
      if (with_hyper) K->middleCols(11, 3) += jac.d_hyper;
    }
  };

  Vec6 k1, k2, k3, k4;
  MatX K1, K2, K3, K4, Ttmp;
  if (T) {
    K1.resize(6, w);
    K2.resize(6, w);
    K3.resize(6, w);
    K4.resize(6, w);
  }

  eval(x, T, &k1, &K1);
  Vec6 y = x + 0.5 * h * k1;
  if (T) Ttmp = *T + 0.5 * h * K1;
  eval(y, T ? &Ttmp : nullptr, &k2, &K2);
  y = x + 0.5 * h * k2;
  if (T) Ttmp = *T + 0.5 * h * K2;
  eval(y, T ? &Ttmp : nullptr, &k3, &K3);
  y = x + h * k3;
  if (T) Ttmp = *T + h * K3;
  eval(y, T ? &Ttmp : nullptr, &k4, &K4);

  x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (T) *T += (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4);
}

void integrate_segments(Vec6& x, MatX* T, const ControlTimeline& ctrl,
                        const DynamicsParams& p, const VehicleGeometry& geom,
                        const LongitudinalHyper& h, double t_a, double t_b,
                        bool with_hyper, double dt_max) {
  if (!(t_b > t_a)) throw SchemaError("integration interval must be forward");
  std::vector<double> cuts;
  cuts.push_back(t_a);
  for (const ControlSample& s : ctrl.samples()) {
    if (s.t > t_a && s.t < t_b) cuts.push_back(s.t);
  }
  cuts.push_back(t_b);

  for (size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double len = cuts[i + 1] - cuts[i];
    const ControlInput& u = ctrl.lookup(cuts[i]);
    const int n = std::max(1, int(std::ceil(len / dt_max - 1e-12)));
    const double step = len / n;
    for (int k = 0; k < n; ++k) {
      rk4_step(x, T, step, u, p, geom, h, with_hyper);
    }
  }
}

}  // namespace

Vec6 integrate_interval(const Vec6& s0, const ControlTimeline& ctrl,
                        const DynamicsParams& p, const VehicleGeometry& geom,
                        const LongitudinalHyper& h, double t_a, double t_b,
                        double dt_max) {
  Vec6 x = s0;
  integrate_segments(x, nullptr, ctrl, p, geom, h, t_a, t_b, false, dt_max);
  return x;
}

IntervalResult integrate_interval_sens(const Vec6& s0,
                                       const ControlTimeline& ctrl,
                                       const DynamicsParams& p,
                                       const VehicleGeometry& geom,
                                       const LongitudinalHyper& h, double t_a,
                                       double t_b, SensMode mode,
                                       double dt_max) {
  IntervalResult out;
  out.state = s0;
  if (mode == SensMode::kNone) {
    integrate_segments(out.state, nullptr, ctrl, p, geom, h, t_a, t_b, false,
                       dt_max);
    return out;
  }
  const bool with_hyper = mode == SensMode::kParamsHyper;
  const int w = with_hyper ? 14 : 11;  // state 6 + params 5 [+ hyper 3]
  MatX T = MatX::Zero(6, w);
  T.leftCols<6>().setIdentity();
  integrate_segments(out.state, &T, ctrl, p, geom, h, t_a, t_b, with_hyper,
                     dt_max);
  out.d_state0 = T.leftCols<6>();
  out.d_params = T.middleCols(6, 5);
  if (with_hyper) out.d_hyper = T.middleCols(11, 3);
  return out;
}

Vec3 compose_planar(const Vec3& prev, const Vec3& delta, Mat3* d_prev,
                    Mat3* d_delta) {
  const double c = std::cos(prev.z());
  const double s = std::sin(prev.z());
  Vec3 out;
  out.x() = prev.x() + c * delta.x() - s * delta.y();
  out.y() = prev.y() + s * delta.x() + c * delta.y();
  out.z() = prev.z() + delta.z();
  if (d_prev) {
    d_prev->setIdentity();
    (*d_prev)(0, 2) = -s * delta.x() - c * delta.y();
    (*d_prev)(1, 2) = c * delta.x() - s * delta.y();
  }
  if (d_delta) {
    d_delta->setZero();
    (*d_delta)(0, 0) = c;
    (*d_delta)(0, 1) = -s;
    (*d_delta)(1, 0) = s;
    (*d_delta)(1, 1) = c;
    (*d_delta)(2, 2) = 1.0;
  }
  return out;
}

RolloutResult rollout(const std::vector<double>& frame_times, const Vec3& v0,
                      const ControlTimeline& ctrl, const DynamicsParams& p,
                      const VehicleGeometry& geom, const LongitudinalHyper& h,
                      SensMode mode, double dt_max) {
  if (frame_times.empty()) throw SchemaError("rollout needs a frame time");
  for (size_t i = 0; i + 1 < frame_times.size(); ++i) {
    if (!(frame_times[i + 1] > frame_times[i])) {
      throw SchemaError("frame times must be strictly increasing");
    }
  }

  const int w = sens_width(mode);
  RolloutResult out;
  out.t = frame_times;
  out.pose.reserve(frame_times.size());
  out.vel.reserve(frame_times.size());

  Vec3 pose = Vec3::Zero();
  Vec3 vel = v0;
  MatX j_pose, j_vel;
  if (w > 0) {
    j_pose = MatX::Zero(3, w);
    j_vel = MatX::Zero(3, w);
    j_vel.leftCols<3>().setIdentity();
    out.d_pose.reserve(frame_times.size());
    out.d_vel.reserve(frame_times.size());
  }

  out.pose.push_back(pose);
  out.vel.push_back(vel);
  if (w > 0) {
    out.d_pose.push_back(j_pose);
    out.d_vel.push_back(j_vel);
  }

  for (size_t i = 0; i + 1 < frame_times.size(); ++i) {
    Vec6 s0 = Vec6::Zero();
    s0.tail<3>() = vel;
    const IntervalResult r =
        integrate_interval_sens(s0, ctrl, p, geom, h, frame_times[i],
                                frame_times[i + 1], mode, dt_max);
    const Vec3 delta = r.state.head<3>();
    const Vec3 vel_next = r.state.tail<3>();

    MatX j_interval;
    if (w > 0) {
      // Interval output depends on the differentiation variable through the
      // carried-in velocity plus its direct parameter blocks.
      j_interval = r.d_state0.middleCols<3>(3) * j_vel;
      j_interval.middleCols(3, 5) += r.d_params;
      if (mode == SensMode::kParamsHyper) {
        j_interval.middleCols(8, 3) += r.d_hyper;
      }
    }

    Mat3 d_prev, d_delta;
    pose = compose_planar(pose, delta, w > 0 ? &d_prev : nullptr,
                          w > 0 ? &d_delta : nullptr);
    vel = vel_next;
    if (w > 0) {
      j_pose = d_prev * j_pose + d_delta * j_interval.topRows<3>();
      j_vel = j_interval.bottomRows<3>();
      out.d_pose.push_back(j_pose);
      out.d_vel.push_back(j_vel);
    }
    out.pose.push_back(pose);
    out.vel.push_back(vel);
  }
  return out;
}

RolloutResult predict(double horizon, const Vec3& v0,
                      const ControlTimeline& ctrl, const DynamicsParams& p,
                      const VehicleGeometry& geom, const LongitudinalHyper& h,
                      double frame_dt, SensMode mode, double dt_max) {
  if (!(frame_dt > 0.0)) throw SchemaError("frame_dt must be positive");
  std::vector<double> frames{0.0};
  for (int k = 1; k * frame_dt <= horizon + 1e-9; ++k) {
    frames.push_back(k * frame_dt);
  }
  if (frames.size() == 1) {
    RolloutResult out;
    out.t = frames;
    out.pose.push_back(Vec3::Zero());
    out.vel.push_back(v0);
    const int w = sens_width(mode);
    if (w > 0) {
      out.d_pose.push_back(MatX::Zero(3, w));
      MatX jv = MatX::Zero(3, w);
      jv.leftCols<3>().setIdentity();
      out.d_vel.push_back(jv);
    }
    return out;
  }
  return rollout(frames, v0, ctrl, p, geom, h, mode, dt_max);
}

}  // namespace stlab
