#include "hss/cider.hpp"

#include <cmath>
#include <set>

#include "hss/errors.hpp"

namespace hss {

namespace {

const Complex kJ{0.0, 1.0};

Eigen::Vector3cd phase_vector() {
  const double a = 2.0 * kPi / 3.0;
  return {Complex(1.0, 0.0), std::polar(1.0, -a), std::polar(1.0, a)};
}

std::string n2s(Index n) { return std::to_string(n); }

}  // namespace

MatrixSeries park_series() {
  const Eigen::Vector3cd c = phase_vector();
  MatrixXcd p(2, 3);
  p.row(0) = c.transpose() / 3.0;
  p.row(1) = kJ * c.transpose() / 3.0;
  MatrixSeries s(2, 3);
  s.set(1, p);
  s.set(-1, p.conjugate());
  return s;
}

MatrixSeries inverse_park_series() {
  const Eigen::Vector3cd c = phase_vector();
  MatrixXcd p(3, 2);
  p.col(0) = c / 2.0;
  p.col(1) = kJ * c / 2.0;
  MatrixSeries s(3, 2);
  s.set(1, p);
  s.set(-1, p.conjugate());
  return s;
}

MatrixSeries FrameTransform::series(Index in_channels) const {
  switch (kind) {
    case Kind::identity:
      return MatrixSeries::identity(in_channels);
    case Kind::park: {
      if (in_channels % 3 != 0)
        fail(ErrorKind::shape, "Park transform needs a multiple of 3 channels, got " + n2s(in_channels));
      return block_diagonal(std::vector<MatrixSeries>(static_cast<size_t>(in_channels / 3), park_series()));
    }
    case Kind::inverse_park: {
      if (in_channels % 2 != 0)
        fail(ErrorKind::shape, "inverse Park transform needs a multiple of 2 channels, got " + n2s(in_channels));
      return block_diagonal(std::vector<MatrixSeries>(static_cast<size_t>(in_channels / 2), inverse_park_series()));
    }
    case Kind::custom:
      if (custom.cols() != in_channels)
        fail(ErrorKind::shape, "custom transform takes " + n2s(custom.cols()) + " channels, got " + n2s(in_channels));
      return custom;
  }
  return {};
}

std::string FrameTransform::describe() const {
  switch (kind) {
    case Kind::identity: return "identity";
    case Kind::park: return "park";
    case Kind::inverse_park: return "inverse-park";
    case Kind::custom: return "custom";
  }
  return "?";
}

// --- references

LinearReference::LinearReference(MatrixXd m_rho, MatrixXd m_sigma) : m_rho_(std::move(m_rho)), m_sigma_(std::move(m_sigma)) {
  if (m_rho_.rows() != m_sigma_.rows())
    fail(ErrorKind::shape, "linear reference: M_rho and M_sigma must have the same row count");
}

std::shared_ptr<LinearReference> LinearReference::vf(Index dim) {
  return std::make_shared<LinearReference>(MatrixXd::Zero(dim, dim), MatrixXd::Identity(dim, dim));
}

VectorXd LinearReference::evaluate(const VectorXd& w_rho, const VectorXd& w_sigma) const {
  return m_rho_ * w_rho + m_sigma_ * w_sigma;
}

namespace {

double voltage_norm2(const VectorXd& v) {
  const double n2 = v[0] * v[0] + v[1] * v[1];
  if (!(n2 > 1e-18))
    fail(ErrorKind::singular_operating_point, "PQ reference evaluated at zero voltage; the current reference is undefined");
  return n2;
}

void check_pq_dims(const VectorXd& w_rho, const VectorXd& w_sigma) {
  if (w_rho.size() != 2 || w_sigma.size() != 2) fail(ErrorKind::shape, "PQ reference expects (v_d, v_q) and (P, Q)");
}

}  // namespace

VectorXd PqReference::evaluate(const VectorXd& v, const VectorXd& s) const {
  check_pq_dims(v, s);
  const double n2 = voltage_norm2(v);
  const double P = s[0], Q = s[1];
  VectorXd i(2);
  i[0] = 2.0 / 3.0 * (P * v[0] + Q * v[1]) / n2;
  i[1] = 2.0 / 3.0 * (P * v[1] - Q * v[0]) / n2;
  return i;
}

MatrixXd PqReference::jacobian_rho(const VectorXd& v, const VectorXd& s) const {
  check_pq_dims(v, s);
  const double n2 = voltage_norm2(v);
  const double P = s[0], Q = s[1];
  const double a = P * v[0] + Q * v[1];
  const double b = P * v[1] - Q * v[0];
  const double k = 2.0 / 3.0;
  MatrixXd J(2, 2);
  J(0, 0) = k * (P / n2 - 2.0 * a * v[0] / (n2 * n2));
  J(0, 1) = k * (Q / n2 - 2.0 * a * v[1] / (n2 * n2));
  J(1, 0) = k * (-Q / n2 - 2.0 * b * v[0] / (n2 * n2));
  J(1, 1) = k * (P / n2 - 2.0 * b * v[1] / (n2 * n2));
  return J;
}

MatrixXd PqReference::jacobian_sigma(const VectorXd& v, const VectorXd& s) const {
  check_pq_dims(v, s);
  const double n2 = voltage_norm2(v);
  const double k = 2.0 / 3.0 / n2;
  MatrixXd J(2, 2);
  J << k * v[0], k * v[1], k * v[1], -k * v[0];
  return J;
}

// --- signals

HarmonicSignal SignalSpec::at(const HarmonicIndexSet& set) const {
  return HarmonicSignal::from_orders(set, channels, orders, true);
}

SignalSpec SignalSpec::balanced(double amplitude, double phase_rad) {
  SignalSpec s;
  s.channels = 3;
  s.orders[1] = (amplitude / 2.0) * std::polar(1.0, phase_rad) * VectorXcd(phase_vector());
  s.orders[-1] = s.orders[1].conjugate();
  return s;
}

SignalSpec SignalSpec::constant(const VectorXd& value) {
  SignalSpec s;
  s.channels = value.size();
  s.orders[0] = value.cast<Complex>();
  return s;
}

VectorXcd OperatingPoint::packed() const {
  VectorXcd w(w_kappa.coeffs().size() + w_pi.coeffs().size() + w_sigma.coeffs().size());
  w << w_kappa.coeffs(), w_pi.coeffs(), w_sigma.coeffs();
  return w;
}

namespace {

MatrixXcd lift(const MatrixSeries& s, const HarmonicIndexSet& set) {
  if (s.rows() == 0 || s.cols() == 0) return MatrixXcd::Zero(s.rows() * set.count(), s.cols() * set.count());
  return toeplitz_from_fourier(s.truncated(set.hmax()), set).matrix();
}

// real time samples of a harmonic signal at the default rate
MatrixXd sample_signal(const HarmonicSignal& x, Index n) {
  const VectorXd t = sample_times(x.index_set(), n);
  MatrixXd out(n, x.channels());
  for (Index k = 0; k < n; ++k) out.row(k) = x.evaluate(t[k]).real().transpose();
  return out;
}

}  // namespace

OperatingPoint make_operating_point(const ReferencePlugin& plugin, const MatrixSeries& kappa_from_pi,
                                    const HarmonicSignal& w_pi, const HarmonicSignal& w_sigma) {
  const HarmonicIndexSet& set = w_pi.index_set();
  if (kappa_from_pi.cols() != w_pi.channels())
    fail(ErrorKind::shape, "T_{kappa|pi} takes " + n2s(kappa_from_pi.cols()) + " channels, W_pi has " + n2s(w_pi.channels()));
  if (kappa_from_pi.rows() != plugin.rho_dim())
    fail(ErrorKind::shape, "reference '" + plugin.name() + "' expects " + n2s(plugin.rho_dim()) +
                               " rho channels, the transform produces " + n2s(kappa_from_pi.rows()));
  if (w_sigma.channels() != plugin.sigma_dim())
    fail(ErrorKind::shape, "reference '" + plugin.name() + "' expects " + n2s(plugin.sigma_dim()) +
                               " setpoint channels, got " + n2s(w_sigma.channels()));
  OperatingPoint op;
  op.w_pi = w_pi;
  op.w_sigma = w_sigma;
  op.w_rho = HarmonicSignal(set, plugin.rho_dim(), lift(kappa_from_pi, set) * w_pi.coeffs(), true);

  const Index n = default_sample_count(set);
  const MatrixXd rho = sample_signal(op.w_rho, n);
  const MatrixXd sig = sample_signal(w_sigma, n);
  MatrixXd kap(n, plugin.kappa_dim());
  for (Index k = 0; k < n; ++k) {
    const VectorXd r = plugin.evaluate(rho.row(k).transpose(), sig.row(k).transpose());
    if (r.size() != plugin.kappa_dim()) fail(ErrorKind::shape, "reference '" + plugin.name() + "' returned the wrong size");
    kap.row(k) = r.transpose();
  }
  op.w_kappa = fourier_from_samples(kap, set);
  return op;
}

ReferenceLinearization linearize_reference(const ReferencePlugin& plugin, const OperatingPoint& op) {
  const HarmonicIndexSet& set = op.w_rho.index_set();
  const Index n = default_sample_count(set);
  const MatrixXd rho = sample_signal(op.w_rho, n);
  const MatrixXd sig = sample_signal(op.w_sigma, n);
  std::vector<MatrixXd> jr, js;
  jr.reserve(static_cast<size_t>(n));
  js.reserve(static_cast<size_t>(n));
  for (Index k = 0; k < n; ++k) {
    const VectorXd r = rho.row(k).transpose();
    const VectorXd s = sig.row(k).transpose();
    jr.push_back(plugin.jacobian_rho(r, s));
    js.push_back(plugin.jacobian_sigma(r, s));
    if (!jr.back().allFinite() || !js.back().allFinite())
      fail(ErrorKind::singular_operating_point, "reference '" + plugin.name() + "' Jacobian is not finite at the operating point");
  }
  ReferenceLinearization out;
  auto series = [&](const std::vector<MatrixXd>& samples, Index rows, Index cols) {
    MatrixSeries s = series_from_matrix_samples(samples, set);
    if (s.empty()) s = MatrixSeries(rows, cols);
    return s;
  };
  const MatrixSeries sr = series(jr, plugin.kappa_dim(), plugin.rho_dim());
  const MatrixSeries ss = series(js, plugin.kappa_dim(), plugin.sigma_dim());
  auto toeplitz = [&](const MatrixSeries& s) {
    if (s.empty()) {
      MatrixSeries z(s.rows(), s.cols());
      z.set(0, MatrixXcd::Zero(s.rows(), s.cols()));
      return toeplitz_from_fourier(z, set);
    }
    return toeplitz_from_fourier(s, set);
  };
  out.R_rho = toeplitz(sr);
  out.R_sigma = toeplitz(ss);
  return out;
}

ReferenceBlock build_reference_block(const MatrixXcd& R_rho, const MatrixXcd& R_sigma, const MatrixXcd& T_kappa_pi,
                                     const OperatingPoint& op) {
  const Index nk = R_rho.rows();
  if (R_sigma.rows() != nk) fail(ErrorKind::shape, "R_rho and R_sigma row counts differ");
  if (R_rho.cols() != T_kappa_pi.rows()) fail(ErrorKind::shape, "R_rho columns do not match T_{kappa|pi} rows");
  if (op.w_kappa.coeffs().size() != nk || op.w_pi.coeffs().size() != T_kappa_pi.cols() ||
      op.w_sigma.coeffs().size() != R_sigma.cols())
    fail(ErrorKind::shape, "operating point does not match the reference dimensions");
  ReferenceBlock b;
  const Index np = T_kappa_pi.cols(), ns = R_sigma.cols();
  b.R_o.resize(nk, nk + np + ns);
  b.R_o.leftCols(nk).setIdentity();
  b.R_o.middleCols(nk, np) = -(R_rho * T_kappa_pi);
  b.R_o.rightCols(ns) = -R_sigma;
  b.W_o = op.packed();
  return b;
}

LtpModel combine_blocks(const std::vector<LtpBlock>& blocks) {
  std::vector<MatrixSeries> a, b, c, d;
  for (const auto& blk : blocks) {
    blk.model.validate(blk.name);
    a.push_back(blk.model.A);
    b.push_back(blk.model.B);
    c.push_back(blk.model.C);
    d.push_back(blk.model.D);
  }
  return {block_diagonal(a), block_diagonal(b), block_diagonal(c), block_diagonal(d)};
}

namespace {

void check_indices(const std::vector<Index>& idx, Index n, const std::string& what) {
  std::set<Index> seen;
  for (Index i : idx) {
    if (i < 0 || i >= n) fail(ErrorKind::wiring, what + ": index " + n2s(i) + " out of range 0.." + n2s(n - 1));
    if (!seen.insert(i).second) fail(ErrorKind::wiring, what + ": index " + n2s(i) + " listed twice");
  }
}

void check_partition(const std::vector<Index>& a, const std::vector<Index>& b, Index n, const std::string& what) {
  check_indices(a, n, what);
  check_indices(b, n, what);
  std::set<Index> all(a.begin(), a.end());
  for (Index i : b)
    if (!all.insert(i).second) fail(ErrorKind::wiring, what + ": index " + n2s(i) + " routed twice");
  if (static_cast<Index>(all.size()) != n) fail(ErrorKind::wiring, what + ": every input must be routed exactly once");
}

}  // namespace

InternalResponse assemble_internal_response(const std::string& name, const std::vector<LtpBlock>& hardware,
                                            const std::vector<LtpBlock>& control, const CiderRouting& r,
                                            const FrameTransform& kappa_from_pi, const FrameTransform& pi_from_kappa,
                                            const HarmonicIndexSet& set) {
  if (hardware.empty()) fail(ErrorKind::configuration, name + ": no hardware blocks");
  const LtpModel hw = combine_blocks(hardware);
  const LtpModel ctl = control.empty() ? LtpModel{MatrixSeries(0, 0), MatrixSeries(0, 0), MatrixSeries(0, 0), MatrixSeries(0, 0)}
                                       : combine_blocks(control);
  check_partition(r.hw_actuation, r.hw_disturbance, hw.inputs(), name + " hardware inputs");
  check_indices(r.hw_grid_output, hw.outputs(), name + " hardware grid outputs");
  check_indices(r.hw_measurement, hw.outputs(), name + " hardware measurements");
  check_partition(r.ctrl_measurement, r.ctrl_reference, ctl.inputs(), name + " control inputs");
  check_indices(r.ctrl_actuation, ctl.outputs(), name + " control actuation outputs");

  HssModel h = lift_ltp(hw, set, {name, "hardware", 0});
  h = split_inputs(h, "u", {{"act", r.hw_actuation}, {"w_pi", r.hw_disturbance}});
  h = split_outputs(h, "y", {{"y_pi", r.hw_grid_output}, {"m_pi", r.hw_measurement}});
  HssModel c;
  if (ctl.states() > 0 || ctl.inputs() > 0) {
    c = lift_ltp(ctl, set, {name, "control", 0});
  } else {
    c.index_set = set;
    c.state_groups = {{name, "control", 0}};
    c.A = MatrixXcd::Zero(0, 0);
    c.E = MatrixXcd::Zero(0, 0);
    c.C = MatrixXcd::Zero(0, 0);
    c.F = MatrixXcd::Zero(0, 0);
    c.inputs = {harmonic_segment("u", 0, set)};
    c.outputs = {harmonic_segment("y", 0, set)};
  }
  c = split_inputs(c, "u", {{"m_kappa", r.ctrl_measurement}, {"w_kappa", r.ctrl_reference}});
  c = split_outputs(c, "y", {{"u_kappa", r.ctrl_actuation}});

  // open loop: states [hw, ctrl]; inputs [act, m_kappa, w_pi, w_kappa]; outputs [y_pi, m_pi, u_kappa]
  HssModel open;
  open.index_set = set;
  open.state_groups = {h.state_groups.front(), c.state_groups.front()};
  open.inputs = {h.input("act"), c.input("m_kappa"), h.input("w_pi"), c.input("w_kappa")};
  open.outputs = {h.output("y_pi"), h.output("m_pi"), c.output("u_kappa")};
  const Index nh = h.states(), nc = c.states();
  const Index ia = h.input("act").dimension(), im = c.input("m_kappa").dimension();
  const Index iw = h.input("w_pi").dimension(), ik = c.input("w_kappa").dimension();
  const Index oy = h.output("y_pi").dimension(), om = h.output("m_pi").dimension();
  const Index ou = c.output("u_kappa").dimension();
  open.A = MatrixXcd::Zero(nh + nc, nh + nc);
  open.A.topLeftCorner(nh, nh) = h.A;
  open.A.bottomRightCorner(nc, nc) = c.A;
  open.E = MatrixXcd::Zero(nh + nc, ia + im + iw + ik);
  open.E.block(0, 0, nh, ia) = h.E_of("act");
  open.E.block(nh, ia, nc, im) = c.E_of("m_kappa");
  open.E.block(0, ia + im, nh, iw) = h.E_of("w_pi");
  open.E.block(nh, ia + im + iw, nc, ik) = c.E_of("w_kappa");
  open.C = MatrixXcd::Zero(oy + om + ou, nh + nc);
  open.C.block(0, 0, oy, nh) = h.C_of("y_pi");
  open.C.block(oy, 0, om, nh) = h.C_of("m_pi");
  open.C.block(oy + om, nh, ou, nc) = c.C_of("u_kappa");
  open.F = MatrixXcd::Zero(oy + om + ou, ia + im + iw + ik);
  open.F.block(0, 0, oy, ia) = h.F_of("y_pi", "act");
  open.F.block(0, ia + im, oy, iw) = h.F_of("y_pi", "w_pi");
  open.F.block(oy, 0, om, ia) = h.F_of("m_pi", "act");
  open.F.block(oy, ia + im, om, iw) = h.F_of("m_pi", "w_pi");
  open.F.block(oy + om, ia, ou, im) = c.F_of("u_kappa", "m_kappa");
  open.F.block(oy + om, ia + im + iw, ou, ik) = c.F_of("u_kappa", "w_kappa");

  const MatrixSeries t_act = pi_from_kappa.series(static_cast<Index>(r.ctrl_actuation.size()));
  if (t_act.rows() != static_cast<Index>(r.hw_actuation.size()))
    fail(ErrorKind::shape, name + ": actuation transform yields " + n2s(t_act.rows()) + " channels, hardware expects " +
                               n2s(static_cast<Index>(r.hw_actuation.size())));
  const MatrixSeries t_meas = kappa_from_pi.series(static_cast<Index>(r.hw_measurement.size()));
  if (t_meas.rows() != static_cast<Index>(r.ctrl_measurement.size()))
    fail(ErrorKind::shape, name + ": measurement transform yields " + n2s(t_meas.rows()) + " channels, control expects " +
                               n2s(static_cast<Index>(r.ctrl_measurement.size())));
  MatrixXcd J = MatrixXcd::Zero(ia + im, oy + om + ou);
  J.block(0, oy + om, ia, ou) = lift(t_act, set);
  J.block(ia, oy, im, om) = lift(t_meas, set);

  ClosedLoop cl = close_loop(open, {"act", "m_kappa"}, J);
  return {std::move(cl.model), cl.certificate};
}

HssModel assemble_cider_matrices(const std::string& name, const InternalResponse& internal,
                                 const ReferenceLinearization& ref, const ReferenceBlock& block,
                                 const MatrixXcd& T_pi_gamma, const MatrixXcd& T_kappa_pi, const MatrixXcd& T_plus,
                                 Index gamma_in, Index gamma_out, Index sigma_dim) {
  const HarmonicIndexSet& set = internal.model.index_set;
  const MatrixXcd Ep = internal.E_pi(), Ek = internal.E_kappa();
  const MatrixXcd Ct = internal.C(), Fp = internal.F_pi(), Fk = internal.F_kappa();
  const MatrixXcd& Rr = ref.R_rho.matrix();
  const MatrixXcd& Rs = ref.R_sigma.matrix();
  if (Ek.cols() != Rr.rows())
    fail(ErrorKind::shape, name + ": reference produces " + n2s(Rr.rows() / set.count()) +
                               " channels, control reference inputs take " + n2s(Ek.cols() / set.count()));
  if (Ep.cols() != T_pi_gamma.rows())
    fail(ErrorKind::shape, name + ": T_{pi|gamma} yields " + n2s(T_pi_gamma.rows() / set.count()) +
                               " channels, hardware disturbance inputs take " + n2s(Ep.cols() / set.count()));
  if (T_plus.cols() != Ct.rows())
    fail(ErrorKind::shape, name + ": output transform takes " + n2s(T_plus.cols() / set.count()) +
                               " channels, hardware grid outputs give " + n2s(Ct.rows() / set.count()));

  const MatrixXcd chain = Rr * (T_kappa_pi * T_pi_gamma);  // R_rho T_{kappa|pi} T_{pi|gamma}
  HssModel m;
  m.index_set = set;
  m.state_groups = internal.model.state_groups;
  m.inputs = {harmonic_segment("gamma", gamma_in, set), harmonic_segment("sigma", sigma_dim, set), PortSegment{}};
  PortSegment o;
  o.name = "o";
  o.layout.ordering = Grouping::node_major;
  o.layout.index_set = set;
  o.layout.node_dims = {block.R_o.rows() / set.count(), T_kappa_pi.cols() / set.count(), sigma_dim};
  m.inputs[2] = o;
  m.outputs = {harmonic_segment("gamma", gamma_out, set)};

  const MatrixXcd Eg = Ep * T_pi_gamma + Ek * chain;
  const MatrixXcd Es = Ek * Rs;
  const MatrixXcd Eo = Ek * block.R_o;
  const MatrixXcd Fg = T_plus * (Fp * T_pi_gamma + Fk * chain);
  const MatrixXcd Fs = T_plus * (Fk * Rs);
  const MatrixXcd Fo = T_plus * (Fk * block.R_o);
  m.A = internal.A();
  m.E.resize(m.A.rows(), Eg.cols() + Es.cols() + Eo.cols());
  m.E << Eg, Es, Eo;
  m.C = T_plus * Ct;
  m.F.resize(m.C.rows(), m.E.cols());
  m.F << Fg, Fs, Fo;
  m.validate();
  return m;
}

namespace {

MatrixXcd output_transform(const CiderSpec& spec, Index y_channels, const HarmonicIndexSet& set) {
  if (spec.gamma_from_pi_pinv) {
    const MatrixSeries s = spec.gamma_from_pi_pinv->series(y_channels);
    if (s.rows() != 3) fail(ErrorKind::shape, spec.name + ": T+_{gamma|pi} must produce 3 channels");
    return lift(s, set);
  }
  if (spec.gamma_from_pi) {
    const MatrixSeries s = spec.gamma_from_pi->series(3);
    if (s.order() != 0 || s.rows() != s.cols())
      fail(ErrorKind::configuration, spec.name + ": T_{gamma|pi} is " +
                                         (s.order() != 0 ? std::string("time-varying") : std::string("not square")) +
                                         "; supply its pseudo-inverse explicitly");
    const MatrixXcd t0 = s.at(0);
    Eigen::FullPivLU<MatrixXcd> lu(t0);
    if (!lu.isInvertible()) fail(ErrorKind::configuration, spec.name + ": T_{gamma|pi} is singular; supply T+ explicitly");
    if (t0.rows() != y_channels) fail(ErrorKind::shape, spec.name + ": T_{gamma|pi} does not match the hardware grid outputs");
    return lift(MatrixSeries::constant(MatrixXcd(lu.inverse())), set);
  }
  if (y_channels != 3)
    fail(ErrorKind::configuration, spec.name + ": hardware grid output has " + n2s(y_channels) +
                                       " channels; an output transform to the 3-phase node is required");
  return MatrixXcd::Identity(3 * set.count(), 3 * set.count());
}

}  // namespace

CiderHss assemble_cider_hss(const CiderSpec& spec, const HarmonicIndexSet& set) {
  if (!spec.reference) fail(ErrorKind::configuration, spec.name + ": no reference calculation");
  CiderHss out;
  out.name = spec.name;
  out.kind = spec.kind;
  out.internal = assemble_internal_response(spec.name, spec.hardware, spec.control, spec.routing, spec.kappa_from_pi,
                                            spec.pi_from_kappa, set);
  const Index n_pi = static_cast<Index>(spec.routing.hw_disturbance.size());
  const MatrixSeries t_pg = spec.pi_from_gamma.series(3);
  if (t_pg.rows() != n_pi)
    fail(ErrorKind::shape, spec.name + ": T_{pi|gamma} yields " + n2s(t_pg.rows()) + " channels, hardware expects " + n2s(n_pi));
  const MatrixSeries t_kp = spec.kappa_from_pi.series(n_pi).truncated(set.hmax());

  const Index n_sigma = spec.reference->sigma_dim();
  const HarmonicSignal w_pi = spec.operating_w_pi.channels == 0 ? HarmonicSignal::zero(set, n_pi) : spec.operating_w_pi.at(set);
  const HarmonicSignal w_sigma = spec.setpoint.channels == 0 ? HarmonicSignal::zero(set, n_sigma) : spec.setpoint.at(set);
  if (w_pi.channels() != n_pi)
    fail(ErrorKind::shape, spec.name + ": operating point has " + n2s(w_pi.channels()) + " channels, W_pi has " + n2s(n_pi));
  if (spec.reference->kappa_dim() != static_cast<Index>(spec.routing.ctrl_reference.size()))
    fail(ErrorKind::shape, spec.name + ": reference output size does not match the control reference inputs");

  out.op = make_operating_point(*spec.reference, t_kp, w_pi, w_sigma);
  out.reference = linearize_reference(*spec.reference, out.op);
  const MatrixXcd T_kp = lift(t_kp, set);
  out.reference_block = build_reference_block(out.reference.R_rho.matrix(), out.reference.R_sigma.matrix(), T_kp, out.op);
  const MatrixXcd T_plus =
      output_transform(spec, static_cast<Index>(spec.routing.hw_grid_output.size()), set);
  out.model = assemble_cider_matrices(spec.name, out.internal, out.reference, out.reference_block, lift(t_pg, set), T_kp,
                                      T_plus, 3, 3, n_sigma);
  return out;
}

HssModel zero_injection_resource(const std::string& name, const HarmonicIndexSet& set) {
  HssModel m;
  m.index_set = set;
  m.state_groups = {{name, "junction", 0}};
  m.inputs = {harmonic_segment("gamma", 3, set), harmonic_segment("sigma", 0, set), harmonic_segment("o", 0, set)};
  m.outputs = {harmonic_segment("gamma", 3, set)};
  m.A = MatrixXcd::Zero(0, 0);
  m.E = MatrixXcd::Zero(0, 3 * set.count());
  m.C = MatrixXcd::Zero(3 * set.count(), 0);
  m.F = MatrixXcd::Zero(3 * set.count(), 3 * set.count());
  return m;
}

}  // namespace hss
