#include <doctest.h>

#include "fixtures.hpp"
#include "hss/builtin_ciders.hpp"
#include "hss/cider.hpp"
#include "hss/eigen_solver.hpp"
#include "hss/errors.hpp"

using namespace hss;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::numerical;
}

VectorXd vec2(double a, double b) {
  VectorXd v(2);
  v << a, b;
  return v;
}

CiderSpec gfl(double amplitude = 325.0) {
  return builtin_pq("gfl", {5e-3, 0.1, 10.0, 1000.0}, SignalSpec::constant(vec2(5000.0, 1000.0)),
                    SignalSpec::balanced(amplitude, 0.0));
}

}  // namespace

TEST_CASE("Park maps a balanced set to constant dq") {
  const double f1 = 50.0, w = fx::kTwoPi * f1;
  const MatrixSeries P = park_series();
  const MatrixSeries Pinv = inverse_park_series();
  for (double phi : {0.0, 0.4, -2.1}) {
    const double A = 230.0;
    for (double t : {0.0, 0.0013, 0.007, 0.0191}) {
      VectorXcd abc(3);
      for (int k = 0; k < 3; ++k) abc[k] = A * std::cos(w * t + phi - k * fx::kTwoPi / 3.0);
      const VectorXcd dq = P.evaluate(t, f1) * abc;
      CHECK(std::abs(dq[0] - A * std::cos(phi)) < 1e-9);
      CHECK(std::abs(dq[1] - A * std::sin(phi)) < 1e-9);
      CHECK((Pinv.evaluate(t, f1) * dq - abc).norm() < 1e-9);
      CHECK((P.evaluate(t, f1) * Pinv.evaluate(t, f1) - MatrixXcd::Identity(2, 2)).norm() < 1e-12);
    }
  }
  CHECK(P.is_real_valued());
  CHECK(P.order() == 1);
}

TEST_CASE("balanced signal coefficients") {
  const SignalSpec s = SignalSpec::balanced(10.0, 0.3);
  const HarmonicSignal x = s.at(HarmonicIndexSet(2, 50.0));
  CHECK(x.conjugate_symmetric());
  const VectorXcd v = x.evaluate(0.0);
  CHECK(std::abs(v[0] - 10.0 * std::cos(0.3)) < 1e-12);
  CHECK(std::abs(v[1] - 10.0 * std::cos(0.3 - fx::kTwoPi / 3.0)) < 1e-12);
  CHECK(x.at(2).norm() == 0.0);
}

TEST_CASE("PQ reference Jacobians match finite differences") {
  const PqReference r;
  const VectorXd v = vec2(310.0, -40.0), s = vec2(4000.0, -900.0);
  const MatrixXd Jr = r.jacobian_rho(v, s), Js = r.jacobian_sigma(v, s);
  for (int k = 0; k < 2; ++k) {
    VectorXd e = VectorXd::Zero(2);
    const double hv = 1e-4 * std::abs(v[k]), hs = 1e-4 * std::abs(s[k]);
    e[k] = hv;
    const VectorXd dr = (r.evaluate(v + e, s) - r.evaluate(v - e, s)) / (2 * hv);
    e[k] = hs;
    const VectorXd ds = (r.evaluate(v, s + e) - r.evaluate(v, s - e)) / (2 * hs);
    CHECK((dr - Jr.col(k)).norm() < 1e-6 * Jr.norm());
    CHECK((ds - Js.col(k)).norm() < 1e-6 * Js.norm());
  }
  const VectorXd i = r.evaluate(v, s);
  // delivered power 3/2 v.i
  CHECK(1.5 * (v[0] * i[0] + v[1] * i[1]) == doctest::Approx(s[0]));
  CHECK(1.5 * (v[1] * i[0] - v[0] * i[1]) == doctest::Approx(s[1]));
}

TEST_CASE("PQ reference at zero voltage is singular") {
  const PqReference r;
  CHECK(kind_of([&] { r.evaluate(vec2(0.0, 0.0), vec2(1.0, 0.0)); }) == ErrorKind::singular_operating_point);
  CHECK(kind_of([] { assemble_cider_hss(gfl(0.0), HarmonicIndexSet(1, 50.0)); }) ==
        ErrorKind::singular_operating_point);
}

TEST_CASE("grid-following operating point") {
  const HarmonicIndexSet set(2, 50.0);
  const CiderHss c = assemble_cider_hss(gfl(), set);
  const VectorXcd rho = c.op.w_rho.at(0);
  CHECK(std::abs(rho[0] - 325.0) < 1e-9);
  CHECK(std::abs(rho[1]) < 1e-9);
  const VectorXcd kappa = c.op.w_kappa.at(0);
  CHECK(std::abs(kappa[0] - 2.0 / 3.0 * 5000.0 / 325.0) < 1e-9);
  CHECK(std::abs(kappa[1] + 2.0 / 3.0 * 1000.0 / 325.0) < 1e-9);
  CHECK(c.op.w_kappa.at(1).norm() < 1e-9);
  // 3 abc current states + 2 dq integrator states per harmonic
  CHECK(c.model.states() == 5 * set.count());
  CHECK(c.E_gamma().cols() == 3 * set.count());
  CHECK(c.C_gamma().rows() == 3 * set.count());
  CHECK(c.E_sigma().cols() == 2 * set.count());
  const EigenSolution s = eigen_decompose(c.model);
  CHECK(s.real_form);
  CHECK(s.max_residual < 1e-8 * s.spectral_radius());
}

TEST_CASE("grid-forming resource assembles") {
  VfParameters p{2e-3, 0.1, 50e-6, 0.05, 20.0, 10.0, 1.0};
  const CiderSpec spec = builtin_vf("gfm", p, SignalSpec::constant(vec2(325.0, 0.0)), SignalSpec::balanced(20.0, 3.0));
  CHECK(spec.kind == CiderKind::forming);
  const CiderHss c = assemble_cider_hss(spec, HarmonicIndexSet(2, 50.0));
  CHECK(c.model.states() == 8 * 5);
  // the dq integrators at |h| = hmax lose their Park coupling and sit on the axis
  const EigenSolution e = eigen_decompose(c.model, {false, false});
  CHECK(e.values.real().maxCoeff() < 1e-9 * e.spectral_radius());
}

TEST_CASE("builtin parameter errors") {
  const auto sp = SignalSpec::constant(vec2(1.0, 0.0));
  const auto op = SignalSpec::balanced(1.0, 0.0);
  CHECK(kind_of([&] { builtin_vf("v", {0.0, 0.1, 1e-5, 1, 1, 1, 1}, sp, op); }) == ErrorKind::physical_parameter);
  CHECK(kind_of([&] { builtin_vf("v", {1e-3, -0.1, 1e-5, 1, 1, 1, 1}, sp, op); }) == ErrorKind::physical_parameter);
  CHECK(kind_of([&] { builtin_pq("q", {-1e-3, 0.1, 1, 1}, sp, op); }) == ErrorKind::physical_parameter);
  CHECK(kind_of([&] { builtin_pq("q", {1e-3, 0.1, 1, 1}, SignalSpec::constant(VectorXd::Ones(3)), op); }) ==
        ErrorKind::configuration);
}

TEST_CASE("routing must cover every input once") {
  CiderSpec s = gfl();
  s.routing.hw_actuation.push_back(s.routing.hw_actuation.front());
  CHECK(kind_of([&] { assemble_cider_hss(s, HarmonicIndexSet(1, 50.0)); }) == ErrorKind::wiring);
}
