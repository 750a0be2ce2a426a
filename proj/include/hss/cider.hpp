#pragma once

// HSS model of one converter-interfaced resource (CIDER): internal closed
// loop of power hardware and control software, small-signal reference
// calculation, and the grid-response matrices.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hss/assembly.hpp"
#include "hss/hss_model.hpp"

namespace hss {

enum class CiderKind { forming, following };

struct LtpBlock {
  std::string name;
  LtpModel model;
};

/// Frame change applied per channel group. Park maps each abc triple to a dq
/// pair rotating with the fundamental; inverse Park maps dq pairs back.
struct FrameTransform {
  enum class Kind { identity, park, inverse_park, custom };
  Kind kind = Kind::identity;
  MatrixSeries custom;  // full series for Kind::custom

  static FrameTransform identity() { return {}; }
  static FrameTransform park() { return {Kind::park, {}}; }
  static FrameTransform inverse_park() { return {Kind::inverse_park, {}}; }
  static FrameTransform from_series(MatrixSeries s) { return {Kind::custom, std::move(s)}; }

  /// Series acting on a vector with `in_channels` channels.
  MatrixSeries series(Index in_channels) const;
  std::string describe() const;
};

/// abc -> dq (amplitude invariant), theta = w1 t.
MatrixSeries park_series();
/// dq -> abc.
MatrixSeries inverse_park_series();

/// Reference calculation w_kappa = r(w_rho, w_sigma), evaluated pointwise in
/// time on real signals. Implementations must be pure.
class ReferencePlugin {
 public:
  virtual ~ReferencePlugin() = default;
  virtual std::string name() const = 0;
  virtual Index rho_dim() const = 0;
  virtual Index sigma_dim() const = 0;
  virtual Index kappa_dim() const = 0;
  virtual VectorXd evaluate(const VectorXd& w_rho, const VectorXd& w_sigma) const = 0;
  virtual MatrixXd jacobian_rho(const VectorXd& w_rho, const VectorXd& w_sigma) const = 0;
  virtual MatrixXd jacobian_sigma(const VectorXd& w_rho, const VectorXd& w_sigma) const = 0;
};

/// w_kappa = M_rho w_rho + M_sigma w_sigma.
class LinearReference : public ReferencePlugin {
 public:
  LinearReference(MatrixXd m_rho, MatrixXd m_sigma);
  /// Grid-forming voltage reference: w_kappa = w_sigma (dq voltage setpoint).
  static std::shared_ptr<LinearReference> vf(Index dim = 2);

  std::string name() const override { return "linear"; }
  Index rho_dim() const override { return m_rho_.cols(); }
  Index sigma_dim() const override { return m_sigma_.cols(); }
  Index kappa_dim() const override { return m_rho_.rows(); }
  VectorXd evaluate(const VectorXd& w_rho, const VectorXd& w_sigma) const override;
  MatrixXd jacobian_rho(const VectorXd&, const VectorXd&) const override { return m_rho_; }
  MatrixXd jacobian_sigma(const VectorXd&, const VectorXd&) const override { return m_sigma_; }

 private:
  MatrixXd m_rho_, m_sigma_;
};

/// Current reference from active/reactive power setpoints in the dq frame:
///   i_d = 2/3 (P v_d + Q v_q) / |v|^2,  i_q = 2/3 (P v_q - Q v_d) / |v|^2
/// w_rho = (v_d, v_q), w_sigma = (P, Q), w_kappa = (i_d, i_q).
class PqReference : public ReferencePlugin {
 public:
  std::string name() const override { return "pq"; }
  Index rho_dim() const override { return 2; }
  Index sigma_dim() const override { return 2; }
  Index kappa_dim() const override { return 2; }
  VectorXd evaluate(const VectorXd& w_rho, const VectorXd& w_sigma) const override;
  MatrixXd jacobian_rho(const VectorXd& w_rho, const VectorXd& w_sigma) const override;
  MatrixXd jacobian_sigma(const VectorXd& w_rho, const VectorXd& w_sigma) const override;
};

/// Fourier coefficients of a real multi-channel periodic signal, keyed by h.
/// Missing negative orders are the conjugates of the positive ones.
struct SignalSpec {
  Index channels = 0;
  std::map<int, VectorXcd> orders;

  HarmonicSignal at(const HarmonicIndexSet& set) const;
  /// Balanced positive-sequence abc signal amplitude * cos(w1 t + phase - k 2pi/3).
  static SignalSpec balanced(double amplitude, double phase_rad);
  static SignalSpec constant(const VectorXd& value);
};

/// Declares how hardware and control ports are wired. Indices refer to the
/// stacked (block-diagonal) hardware and control models.
struct CiderRouting {
  std::vector<Index> hw_actuation;      // hardware inputs driven by the control
  std::vector<Index> hw_disturbance;    // hardware inputs receiving W_pi
  std::vector<Index> hw_grid_output;    // hardware outputs forming Y_pi
  std::vector<Index> hw_measurement;    // hardware outputs sent to the control
  std::vector<Index> ctrl_measurement;  // control inputs receiving measurements
  std::vector<Index> ctrl_reference;    // control inputs receiving W_kappa
  std::vector<Index> ctrl_actuation;    // control outputs driving the hardware
};

struct CiderSpec {
  std::string name;
  CiderKind kind = CiderKind::following;
  std::vector<LtpBlock> hardware;
  std::vector<LtpBlock> control;
  CiderRouting routing;
  FrameTransform pi_from_gamma;     // T_{pi|gamma}
  FrameTransform kappa_from_pi;     // T_{kappa|pi}
  FrameTransform pi_from_kappa;     // actuation path
  std::optional<FrameTransform> gamma_from_pi;       // T_{gamma|pi}
  std::optional<FrameTransform> gamma_from_pi_pinv;  // T+_{gamma|pi}
  std::shared_ptr<const ReferencePlugin> reference;
  SignalSpec setpoint;         // W_sigma
  SignalSpec operating_w_pi;   // linearization trajectory of W_pi
};

struct OperatingPoint {
  HarmonicSignal w_rho, w_sigma, w_pi, w_kappa;

  /// col(W_kappa, W_pi, W_sigma)
  VectorXcd packed() const;
};

/// Resolves W_rho = T_{kappa|pi} W_pi and W_kappa = r(w_rho(t), w_sigma(t))
/// in the harmonic domain.
OperatingPoint make_operating_point(const ReferencePlugin& plugin, const MatrixSeries& kappa_from_pi,
                                    const HarmonicSignal& w_pi, const HarmonicSignal& w_sigma);

struct ReferenceLinearization {
  ToeplitzOperator R_rho;
  ToeplitzOperator R_sigma;
};

ReferenceLinearization linearize_reference(const ReferencePlugin& plugin, const OperatingPoint& op);

struct ReferenceBlock {
  MatrixXcd R_o;    // [I | -R_rho T_{kappa|pi} | -R_sigma]
  VectorXcd W_o;    // col(W_kappa, W_pi, W_sigma)
};

ReferenceBlock build_reference_block(const MatrixXcd& R_rho, const MatrixXcd& R_sigma, const MatrixXcd& T_kappa_pi,
                                     const OperatingPoint& op);

struct InternalResponse {
  HssModel model;  // inputs w_pi, w_kappa; outputs y_pi, m_pi, u_kappa
  WellPosedness certificate;

  const MatrixXcd& A() const { return model.A; }
  MatrixXcd E_pi() const { return model.E_of("w_pi"); }
  MatrixXcd E_kappa() const { return model.E_of("w_kappa"); }
  MatrixXcd C() const { return model.C_of("y_pi"); }
  MatrixXcd F_pi() const { return model.F_of("y_pi", "w_pi"); }
  MatrixXcd F_kappa() const { return model.F_of("y_pi", "w_kappa"); }
};

/// Hardware/control blocks are combined block-diagonally and lifted; the
/// loop u_hw = T_{pi|kappa} u_ctrl, m_ctrl = T_{kappa|pi} m_hw is closed.
InternalResponse assemble_internal_response(const std::string& name, const std::vector<LtpBlock>& hardware,
                                            const std::vector<LtpBlock>& control, const CiderRouting& routing,
                                            const FrameTransform& kappa_from_pi, const FrameTransform& pi_from_kappa,
                                            const HarmonicIndexSet& set);

struct CiderHss {
  std::string name;
  CiderKind kind = CiderKind::following;
  HssModel model;  // states col(X_pi, X_kappa); inputs gamma, sigma, o; output gamma
  OperatingPoint op;
  InternalResponse internal;
  ReferenceLinearization reference;
  ReferenceBlock reference_block;

  MatrixXcd E_gamma() const { return model.E_of("gamma"); }
  MatrixXcd E_sigma() const { return model.E_of("sigma"); }
  MatrixXcd E_o() const { return model.E_of("o"); }
  MatrixXcd F_gamma() const { return model.F_of("gamma", "gamma"); }
  MatrixXcd F_sigma() const { return model.F_of("gamma", "sigma"); }
  MatrixXcd F_o() const { return model.F_of("gamma", "o"); }
  MatrixXcd C_gamma() const { return model.C_of("gamma"); }
};

/// Grid-response matrices (A, E, C, F) from the internal response and the
/// reference block. T_pi_gamma maps W_gamma to W_pi, T_plus maps Y_pi to
/// Y_gamma.
HssModel assemble_cider_matrices(const std::string& name, const InternalResponse& internal,
                                 const ReferenceLinearization& ref, const ReferenceBlock& block,
                                 const MatrixXcd& T_pi_gamma, const MatrixXcd& T_kappa_pi, const MatrixXcd& T_plus,
                                 Index gamma_in, Index gamma_out, Index sigma_dim);

/// Full pipeline for one CIDER at the given harmonic set.
CiderHss assemble_cider_hss(const CiderSpec& spec, const HarmonicIndexSet& set);

/// Resource without states that injects nothing (junction node).
HssModel zero_injection_resource(const std::string& name, const HarmonicIndexSet& set);

/// Stacks LTP blocks block-diagonally.
LtpModel combine_blocks(const std::vector<LtpBlock>& blocks);

}  // namespace hss
