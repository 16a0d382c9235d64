#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include "stlab/dynamics.hpp"

using namespace stlab;

namespace {

std::mt19937 rng(7);

double urand(double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng);
}

// Independent transcription of the continuous model in extended precision,
// written directly from the scalar formulas without reusing library code.
using ld = long double;

ld oracle_g(ld x) { return std::log(std::exp(2.0L * x) + 1.0L) - x; }

std::array<ld, 6> oracle_deriv(const std::array<ld, 6>& s, ld u_thr, ld u_str,
                               ld gamma, ld c1, ld c2, ld cres, ld ctire,
                               ld m, ld iz, ld lf, ld lr, ld psi, ld tau,
                               ld sigma) {
  const ld alpha = gamma * u_str;
  const ld z = c1 * u_thr - c2 * s[3];
  const ld fx = psi * z + tau * std::log(1.0L + std::exp(z)) -
                std::log(2.0L) - std::tanh(sigma * s[3]) * cres;
  const ld sf = std::atan(
      (s[3] * std::sin(alpha) - (s[4] + lf * s[5]) * std::cos(alpha)) /
      oracle_g(s[3] * std::cos(alpha) + (s[4] + lf * s[5]) * std::sin(alpha)));
  const ld sr = std::atan((lr * s[5] - s[4]) / oracle_g(s[3]));
  const ld ffy = ctire * sf;
  const ld fry = ctire * sr;
  std::array<ld, 6> ds;
  ds[0] = s[3] - s[5] * s[1];
  ds[1] = s[4] + s[5] * s[0];
  ds[2] = s[5];
  ds[3] = (fx - ffy * std::sin(alpha)) / m + s[4] * s[5];
  ds[4] = (ffy * std::cos(alpha) + fry) / m - s[3] * s[5];
  ds[5] = (lf * ffy * std::cos(alpha) - lr * fry) / iz;
  return ds;
}

Vec6 rand_state() {
  Vec6 s;
  s << urand(-2, 2), urand(-2, 2), urand(-2, 2), urand(-3, 5), urand(-1, 1),
      urand(-4, 4);
  return s;
}

DynamicsParams rand_params() {
  DynamicsParams p;
  p.gamma = urand(0.1, 0.6);
  p.c_thr1 = urand(1, 10);
  p.c_thr2 = urand(0.1, 3);
  p.c_res = urand(0.5, 8);
  p.c_tire = urand(5, 60);
  return p;
}

VehicleGeometry rand_geom() {
  VehicleGeometry g;
  g.m = urand(1, 5);
  g.i_z = urand(0.01, 0.2);
  g.l_f = urand(0.1, 0.3);
  g.l_r = urand(0.1, 0.3);
  return g;
}

LongitudinalHyper rand_hyper() {
  LongitudinalHyper h;
  h.psi = urand(0.0, 0.5);
  h.tau = urand(1.0, 4.0);
  h.sigma = urand(2.0, 20.0);
  return h;
}

}  // namespace

TEST_CASE("soft threshold hits its anchor values") {
  CHECK(smooth::soft_threshold(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  const double g5 = 5.0 + std::log1p(std::exp(-10.0));
  CHECK(smooth::soft_threshold(5.0) == doctest::Approx(g5).epsilon(1e-14));
  CHECK(smooth::soft_threshold(5.0) == doctest::Approx(5.0000454).epsilon(1e-6));
  CHECK(smooth::soft_threshold(-5.0) == smooth::soft_threshold(5.0));
}

TEST_CASE("soft threshold is even, bounded below, and close to abs") {
  const double ln2 = std::log(2.0);
  for (int i = 0; i < 500; ++i) {
    const double x = urand(-30, 30);
    const double g = smooth::soft_threshold(x);
    CHECK(std::abs(g - smooth::soft_threshold(-x)) < 1e-12);
    CHECK(g >= ln2 - 1e-15);
    CHECK(g - std::abs(x) >= -1e-15);
    CHECK(g - std::abs(x) <= ln2 + 1e-15);
  }
  // No overflow far out in either tail.
  CHECK(smooth::soft_threshold(1000.0) == doctest::Approx(1000.0).epsilon(1e-15));
  CHECK(std::isfinite(smooth::soft_threshold(-1000.0)));
}

TEST_CASE("longitudinal force at standstill carries the shape offset") {
  DynamicsParams p;
  LongitudinalHyper h;  // defaults psi 0.202, tau 2.335
  const double f0 = longitudinal_force(p, h, 0.0, 0.0);
  CHECK(f0 == doctest::Approx((h.tau - 1.0) * std::log(2.0)).epsilon(1e-12));
  CHECK(f0 == doctest::Approx(0.9254).epsilon(1e-4));
}

TEST_CASE("longitudinal force vanishes for the neutral shape") {
  DynamicsParams p;
  p.c_thr1 = p.c_thr2 = p.c_res = 0.0;
  LongitudinalHyper h{0.0, 1.0, 10.0};
  for (double vx : {-3.0, -0.5, 0.0, 1.0, 4.0}) {
    CHECK(std::abs(longitudinal_force(p, h, 0.7, vx)) < 1e-15);
  }
}

TEST_CASE("longitudinal force reaches its linear asymptote") {
  DynamicsParams p;
  p.c_thr1 = 50.0;
  p.c_thr2 = 1.5;
  p.c_res = 5.5;
  LongitudinalHyper h;
  // v_x = 0 removes the resistance term and makes the argument exactly 50.
  const double f = longitudinal_force(p, h, 1.0, 0.0);
  const double asym = (h.psi + h.tau) * 50.0 - std::log(2.0);
  CHECK(std::abs(f - asym) < 1e-6);
}

TEST_CASE("longitudinal force depends on throttle only through its product with the gain") {
  LongitudinalHyper h;
  for (int i = 0; i < 50; ++i) {
    const double product = urand(0.1, 6.0);
    const double vx = urand(-2, 4);
    DynamicsParams a = rand_params();
    DynamicsParams b = a;
    const double ua = urand(0.2, 1.0);
    const double ub = urand(0.2, 1.0);
    a.c_thr1 = product / ua;
    b.c_thr1 = product / ub;
    CHECK(longitudinal_force(a, h, ua, vx) ==
          doctest::Approx(longitudinal_force(b, h, ub, vx)).epsilon(1e-12));
  }
}

TEST_CASE("slip angles vanish for straight rolling and at standstill") {
  VehicleGeometry geom;
  double sf = 1.0, sr = 1.0;
  Vec6 s = Vec6::Zero();
  s[kSvx] = 2.0;
  slip_angles(s, 0.0, geom, &sf, &sr);
  CHECK(sf == 0.0);
  CHECK(sr == 0.0);

  slip_angles(Vec6::Zero(), 0.2, geom, &sf, &sr);
  CHECK(sf == 0.0);
  CHECK(sr == 0.0);
}

TEST_CASE("slip angles match the extended-precision oracle") {
  VehicleGeometry geom;
  geom.l_f = 0.17;
  geom.l_r = 0.17;
  Vec6 s = Vec6::Zero();
  s[kSvx] = 1.0;
  s[kSvy] = 0.1;
  s[kSwz] = 0.5;
  const double alpha = 0.1;
  double sf = 0.0, sr = 0.0;
  slip_angles(s, alpha, geom, &sf, &sr);

  const ld lat = 0.1L + 0.17L * 0.5L;
  const ld sf_ref = std::atan(
      (1.0L * std::sin(0.1L) - lat * std::cos(0.1L)) /
      oracle_g(1.0L * std::cos(0.1L) + lat * std::sin(0.1L)));
  const ld sr_ref = std::atan((0.17L * 0.5L - 0.1L) / oracle_g(1.0L));
  CHECK(std::abs(sf - double(sf_ref)) < 1e-14);
  CHECK(std::abs(sr - double(sr_ref)) < 1e-14);
}

TEST_CASE("lateral forces are linear in slip and stiffness") {
  double ffy = 0.0, fry = 0.0;
  lateral_forces(0.0, 0.0, 55.0, &ffy, &fry);
  CHECK(ffy == 0.0);
  CHECK(fry == 0.0);
  lateral_forces(0.1, -0.05, 30.0, &ffy, &fry);
  CHECK(ffy == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(fry == doctest::Approx(-1.5).epsilon(1e-14));
  double ffy2 = 0.0, fry2 = 0.0;
  lateral_forces(0.1, -0.05, 60.0, &ffy2, &fry2);
  CHECK(ffy2 == doctest::Approx(2.0 * ffy).epsilon(1e-14));
  CHECK(fry2 == doctest::Approx(2.0 * fry).epsilon(1e-14));
}

TEST_CASE("pure longitudinal motion produces no lateral response") {
  DynamicsParams p;
  VehicleGeometry geom;
  LongitudinalHyper h;
  for (double vx : {0.0, 0.5, 3.0}) {
    Vec6 s = Vec6::Zero();
    s[kSvx] = vx;
    const Vec6 ds = state_derivative(s, ControlInput{0.8, 0.0}, p, geom, h);
    CHECK(ds[kSvy] == 0.0);
    CHECK(ds[kSwz] == 0.0);
  }
}

TEST_CASE("force-free straight roll keeps constant velocity") {
  DynamicsParams p;
  p.c_thr1 = p.c_thr2 = p.c_res = p.c_tire = 0.0;
  LongitudinalHyper h{0.0, 1.0, 10.0};
  VehicleGeometry geom;
  Vec6 s = Vec6::Zero();
  s[kSvx] = 1.0;
  const Vec6 ds = state_derivative(s, ControlInput{0.0, 0.0}, p, geom, h);
  Vec6 expect = Vec6::Zero();
  expect[kSx] = 1.0;
  CHECK((ds - expect).norm() < 1e-15);
}

TEST_CASE("state derivative matches the extended-precision oracle") {
  for (int i = 0; i < 300; ++i) {
    const Vec6 s = rand_state();
    const DynamicsParams p = rand_params();
    const VehicleGeometry geom = rand_geom();
    const LongitudinalHyper h = rand_hyper();
    const ControlInput u{urand(0, 1), urand(-1, 1)};

    const Vec6 ds = state_derivative(s, u, p, geom, h);

    std::array<ld, 6> sl;
    for (int k = 0; k < 6; ++k) sl[size_t(k)] = s[k];
    const auto ref = oracle_deriv(sl, u.u_thr, u.u_str, p.gamma, p.c_thr1,
                                  p.c_thr2, p.c_res, p.c_tire, geom.m,
                                  geom.i_z, geom.l_f, geom.l_r, h.psi, h.tau,
                                  h.sigma);
    for (int k = 0; k < 6; ++k) {
      const double r = double(ref[size_t(k)]);
      CHECK(std::abs(ds[k] - r) < 1e-12 * std::max(1.0, std::abs(r)));
    }
  }
}

TEST_CASE("analytic derivatives agree with central differences") {
  const double eps = 1e-6;
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    Vec6 s = rand_state();
    if (i % 10 == 3) s[kSvx] = 0.0;
    if (i % 10 == 6) s[kSvx] = 1e-6;
    if (i % 10 == 9) s[kSvx] = -1e-6;
    const DynamicsParams p = rand_params();
    const VehicleGeometry geom = rand_geom();
    const LongitudinalHyper h = rand_hyper();
    const ControlInput u{urand(0, 1), urand(-1, 1)};

    StateDerivJac jac;
    state_derivative(s, u, p, geom, h, &jac);

    auto close = [](double fd, double an) {
      return std::abs(fd - an) <=
             1e-5 * std::max({1.0, std::abs(fd), std::abs(an)});
    };

    for (int c = 0; c < 6; ++c) {
      Vec6 hi = s, lo = s;
      hi[c] += eps;
      lo[c] -= eps;
      const Vec6 fd = (state_derivative(hi, u, p, geom, h) -
                       state_derivative(lo, u, p, geom, h)) /
                      (2 * eps);
      for (int r = 0; r < 6; ++r) {
        CHECK(close(fd[r], jac.d_state(r, c)));
        ++checked;
      }
    }
    for (int c = 0; c < 5; ++c) {
      Vec5 pv = p.vec();
      Vec5 hi5 = pv, lo5 = pv;
      hi5[c] += eps;
      lo5[c] -= eps;
      const Vec6 fd = (state_derivative(s, u, DynamicsParams::from_vec(hi5),
                                        geom, h) -
                       state_derivative(s, u, DynamicsParams::from_vec(lo5),
                                        geom, h)) /
                      (2 * eps);
      for (int r = 0; r < 6; ++r) {
        CHECK(close(fd[r], jac.d_params(r, c)));
        ++checked;
      }
    }
    for (int c = 0; c < 3; ++c) {
      Vec3 hv = h.vec();
      Vec3 hi3 = hv, lo3 = hv;
      hi3[c] += eps;
      lo3[c] -= eps;
      const Vec6 fd = (state_derivative(s, u, p, geom,
                                        LongitudinalHyper::from_vec(hi3)) -
                       state_derivative(s, u, p, geom,
                                        LongitudinalHyper::from_vec(lo3))) /
                      (2 * eps);
      for (int r = 0; r < 6; ++r) {
        CHECK(close(fd[r], jac.d_hyper(r, c)));
        ++checked;
      }
    }
  }
  CHECK(checked == 1000 * 6 * 14);
}

TEST_CASE("velocity derivatives ignore position and yaw") {
  const DynamicsParams p = rand_params();
  const VehicleGeometry geom = rand_geom();
  const LongitudinalHyper h = rand_hyper();
  const ControlInput u{0.6, -0.3};
  Vec6 a = rand_state();
  for (int i = 0; i < 20; ++i) {
    Vec6 b = a;
    b[kSx] = urand(-10, 10);
    b[kSy] = urand(-10, 10);
    b[kSyaw] = urand(-10, 10);
    const Vec6 da = state_derivative(a, u, p, geom, h);
    const Vec6 db = state_derivative(b, u, p, geom, h);
    CHECK((da.tail<3>() - db.tail<3>()).norm() == 0.0);
  }
}

TEST_CASE("parameter floor clamps only from below") {
  DynamicsParams p;
  p.gamma = -0.2;
  p.c_thr1 = 0.0;
  p.c_tire = 12.0;
  const DynamicsParams q = p.floored();
  CHECK(q.gamma == kParamFloor);
  CHECK(q.c_thr1 == kParamFloor);
  CHECK(q.c_tire == 12.0);
}

TEST_CASE("truth derivative reduces to the linear tire when saturation is off") {
  for (int i = 0; i < 50; ++i) {
    const Vec6 s = rand_state();
    const DynamicsParams p = rand_params();
    const VehicleGeometry geom = rand_geom();
    const LongitudinalHyper h = rand_hyper();
    const ControlInput u{urand(0, 1), urand(-1, 1)};
    const Vec6 a = state_derivative(s, u, p, geom, h);
    const Vec6 b = state_derivative_truth(s, u, p, geom, h, 0.0);
    CHECK((a - b).norm() == 0.0);
    const Vec6 c = state_derivative_truth(s, u, p, geom, h, 1e9);
    CHECK((a - c).norm() < 1e-9);
  }
}

TEST_CASE("truth derivative applies the saturating tire curve") {
  const double slip_max = 0.12;
  for (int i = 0; i < 50; ++i) {
    const Vec6 s = rand_state();
    const DynamicsParams p = rand_params();
    const VehicleGeometry geom = rand_geom();
    const LongitudinalHyper h = rand_hyper();
    const ControlInput u{urand(0, 1), urand(-1, 1)};

    const Vec6 ds = state_derivative_truth(s, u, p, geom, h, slip_max);

    double sf = 0.0, sr = 0.0;
    slip_angles(s, p.gamma * u.u_str, geom, &sf, &sr);
    const double ffy = p.c_tire * slip_max * std::tanh(sf / slip_max);
    const double fry = p.c_tire * slip_max * std::tanh(sr / slip_max);

    // Invert the lateral and yaw rows for the two force unknowns.
    const double lat = (ds[kSvy] + s[kSvx] * s[kSwz]) * geom.m;
    const double yaw = ds[kSwz] * geom.i_z;
    const double ca = std::cos(p.gamma * u.u_str);
    const double ffy_ca = (lat * geom.l_r + yaw) / (geom.l_f + geom.l_r);
    const double fry_rec = lat - ffy_ca;
    CHECK(ffy_ca == doctest::Approx(ffy * ca).epsilon(1e-9));
    CHECK(fry_rec == doctest::Approx(fry).epsilon(1e-9));
  }
}
