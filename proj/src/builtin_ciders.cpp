#include "hss/builtin_ciders.hpp"

#include "hss/errors.hpp"

namespace hss {

namespace {

MatrixXd I(Index n) { return MatrixXd::Identity(n, n); }
MatrixXd Z(Index r, Index c) { return MatrixXd::Zero(r, c); }

LtpModel constant_model(const MatrixXd& A, const MatrixXd& B, const MatrixXd& C, const MatrixXd& D) {
  auto s = [](const MatrixXd& m) {
    MatrixSeries out(m.rows(), m.cols());
    out.set(0, m.cast<Complex>());
    return out;
  };
  return {s(A), s(B), s(C), s(D)};
}

std::vector<Index> range(Index a, Index b) {
  std::vector<Index> v;
  for (Index k = a; k < b; ++k) v.push_back(k);
  return v;
}

void positive(double v, const std::string& name, const char* what) {
  if (!(v > 0.0)) fail(ErrorKind::physical_parameter, name + ": " + what + " must be positive");
}

void nonnegative(double v, const std::string& name, const char* what) {
  if (!(v >= 0.0)) fail(ErrorKind::physical_parameter, name + ": " + what + " must be nonnegative");
}

}  // namespace

CiderSpec builtin_vf(const std::string& name, const VfParameters& p, const SignalSpec& setpoint,
                     const SignalSpec& operating_current) {
  positive(p.Lf, name, "Lf");
  positive(p.Cf, name, "Cf");
  nonnegative(p.Rf, name, "Rf");

  // x = [i_f; v_c], u = [u_abc; i_s]; L di/dt = u - v_c - R i, C dv/dt = i - i_s
  MatrixXd A = Z(6, 6);
  A.topLeftCorner(3, 3) = -(p.Rf / p.Lf) * I(3);
  A.topRightCorner(3, 3) = -(1.0 / p.Lf) * I(3);
  A.bottomLeftCorner(3, 3) = (1.0 / p.Cf) * I(3);
  MatrixXd B = Z(6, 6);
  B.topLeftCorner(3, 3) = (1.0 / p.Lf) * I(3);
  B.bottomRightCorner(3, 3) = -(1.0 / p.Cf) * I(3);
  // y = [v_c; i_f; v_c]
  MatrixXd C = Z(9, 6);
  C.block(0, 3, 3, 3) = I(3);
  C.block(3, 0, 3, 3) = I(3);
  C.block(6, 3, 3, 3) = I(3);

  // control inputs [i_dq; v_dq; v*_dq], states xi_dq
  // u = kp_i (kp_v (v* - v) + ki_v xi - i) + kff v
  MatrixXd Ac = Z(2, 2);
  MatrixXd Bc = Z(2, 6);
  Bc.block(0, 2, 2, 2) = -I(2);
  Bc.block(0, 4, 2, 2) = I(2);
  MatrixXd Cc = p.kp_i * p.ki_v * I(2);
  MatrixXd Dc = Z(2, 6);
  Dc.block(0, 0, 2, 2) = -p.kp_i * I(2);
  Dc.block(0, 2, 2, 2) = (p.kff - p.kp_i * p.kp_v) * I(2);
  Dc.block(0, 4, 2, 2) = p.kp_i * p.kp_v * I(2);

  CiderSpec s;
  s.name = name;
  s.kind = CiderKind::forming;
  s.hardware = {{"lc-filter", constant_model(A, B, C, Z(9, 6))}};
  s.control = {{"voltage-control", constant_model(Ac, Bc, Cc, Dc)}};
  s.routing.hw_actuation = range(0, 3);
  s.routing.hw_disturbance = range(3, 6);
  s.routing.hw_grid_output = range(0, 3);
  s.routing.hw_measurement = range(3, 9);
  s.routing.ctrl_measurement = range(0, 4);
  s.routing.ctrl_reference = range(4, 6);
  s.routing.ctrl_actuation = range(0, 2);
  s.pi_from_gamma = FrameTransform::identity();
  s.kappa_from_pi = FrameTransform::park();
  s.pi_from_kappa = FrameTransform::inverse_park();
  s.reference = LinearReference::vf(2);
  s.setpoint = setpoint.channels ? setpoint : SignalSpec::constant(VectorXd::Zero(2));
  s.operating_w_pi = operating_current.channels ? operating_current : SignalSpec::constant(VectorXd::Zero(3));
  return s;
}

CiderSpec builtin_pq(const std::string& name, const PqParameters& p, const SignalSpec& setpoint,
                     const SignalSpec& operating_voltage) {
  positive(p.L, name, "L");
  nonnegative(p.R, name, "R");

  // x = i, u = [u_abc; v_abc]; L di/dt = u - v - R i; y = [i; i]
  const MatrixXd A = -(p.R / p.L) * I(3);
  MatrixXd B(3, 6);
  B << (1.0 / p.L) * I(3), -(1.0 / p.L) * I(3);
  MatrixXd C(6, 3);
  C << I(3), I(3);

  // control inputs [i_dq; i*_dq]; u = kp (i* - i) + ki xi
  MatrixXd Bc(2, 4);
  Bc << -I(2), I(2);
  MatrixXd Dc(2, 4);
  Dc << -p.kp * I(2), p.kp * I(2);

  CiderSpec s;
  s.name = name;
  s.kind = CiderKind::following;
  s.hardware = {{"l-filter", constant_model(A, B, C, Z(6, 6))}};
  s.control = {{"current-control", constant_model(Z(2, 2), Bc, p.ki * I(2), Dc)}};
  s.routing.hw_actuation = range(0, 3);
  s.routing.hw_disturbance = range(3, 6);
  s.routing.hw_grid_output = range(0, 3);
  s.routing.hw_measurement = range(3, 6);
  s.routing.ctrl_measurement = range(0, 2);
  s.routing.ctrl_reference = range(2, 4);
  s.routing.ctrl_actuation = range(0, 2);
  s.pi_from_gamma = FrameTransform::identity();
  s.kappa_from_pi = FrameTransform::park();
  s.pi_from_kappa = FrameTransform::inverse_park();
  s.reference = std::make_shared<PqReference>();
  s.setpoint = setpoint;
  s.operating_w_pi = operating_voltage;
  if (s.setpoint.channels != 2) fail(ErrorKind::configuration, name + ": PQ setpoint needs (P, Q)");
  if (s.operating_w_pi.channels != 3) fail(ErrorKind::configuration, name + ": operating voltage needs 3 phases");
  return s;
}

}  // namespace hss
