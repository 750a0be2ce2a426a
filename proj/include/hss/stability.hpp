#pragma once

// Harmonic stability assessment: HTF evaluation, LAP-based eigenvalue
// tracking, CDI/CDV/DI classification, spurious-mode detection and folding
// to the fundamental strip.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hss/eigen_solver.hpp"
#include "hss/hss_model.hpp"

namespace hss {

// --- HTF

/// G(s) = C (sI + jOmega - A)^-1 E + F with a cached spectrum for the pole
/// proximity check.
class HtfEvaluator {
 public:
  explicit HtfEvaluator(HssModel model, double pole_tolerance = 1e-9);

  MatrixXcd evaluate(Complex s) const;
  /// Restricted to one input and one output segment.
  MatrixXcd evaluate(Complex s, const std::string& output, const std::string& input) const;
  const VectorXcd& poles() const { return poles_; }
  const HssModel& model() const { return model_; }

 private:
  void check(Complex s) const;

  HssModel model_;
  VectorXcd poles_;
  double tol_;
};

MatrixXcd evaluate_htf(const HssModel& model, Complex s);

// --- linear assignment

struct Assignment {
  std::vector<Index> match;  // match[i] = index into the second set
  double cost = 0.0;
};

/// Exact minimum-cost assignment for a square cost matrix (shortest
/// augmenting path, Jonker-Volgenant style).
Assignment solve_lap(const MatrixXd& cost);

/// Minimum total |lambda_i - mu_j| bijection. Rows are processed in
/// lexicographic (Re, Im) order of the first set so ties resolve the same way
/// every time. Optional eigenvector overlap weighting adds
/// weight * (1 - |<v_i, w_j>|) to each cost.
Assignment match_eigenvalues(const VectorXcd& first, const VectorXcd& second, const MatrixXcd* first_vectors = nullptr,
                             const MatrixXcd* second_vectors = nullptr, double overlap_weight = 0.0);

// --- model factories

using ParameterOverrides = std::map<std::string, double>;

/// Rebuilds a model with parameter overrides and optionally another hmax.
class ModelFactory {
 public:
  virtual ~ModelFactory() = default;
  virtual HssModel build(const ParameterOverrides& overrides, std::optional<int> hmax = std::nullopt) const = 0;
  /// Nominal value of a parameter; configuration error if the path does not
  /// resolve to a number.
  virtual double parameter_value(const std::string& path) const = 0;
};

/// Factory from plain functions (tests and toy fixtures).
class FunctionFactory : public ModelFactory {
 public:
  using Builder = std::function<HssModel(const ParameterOverrides&, std::optional<int>)>;
  FunctionFactory(Builder build, std::map<std::string, double> nominal);

  HssModel build(const ParameterOverrides& overrides, std::optional<int> hmax = std::nullopt) const override;
  double parameter_value(const std::string& path) const override;

 private:
  Builder build_;
  std::map<std::string, double> nominal_;
};

// --- sweeps

struct SweepOptions {
  bool refine_on_crossing = false;
  double overlap_weight = 0.0;  // > 0 enables eigenvector overlap in the cost
  int jobs = 1;
};

struct EigenTrace {
  std::string parameter;
  std::vector<double> values;
  // traces[j][k] = eigenvalue j at parameter value k
  std::vector<std::vector<Complex>> traces;
  std::vector<double> step_costs;  // total matching cost per step (size values-1)
  std::vector<bool> step_refined;
  std::vector<bool> step_unresolved;
};

EigenTrace sweep_parameter(const ModelFactory& factory, const std::string& path, const std::vector<double>& values,
                           const SweepOptions& options = {});

// --- classification

enum class EigenClass { CDV, CDI, DI, spurious, unresolved };
std::string to_string(EigenClass c);

struct ClassificationOptions {
  std::vector<double> relative_steps{-0.2, -0.1, 0.1, 0.2};
  std::optional<double> epsilon;  // absolute; default 1e-6 * spectral radius
  double relative_epsilon = 1e-6;
  std::optional<VectorXcd> nominal;  // reuse an already computed nominal spectrum
};

struct EigenClassification {
  VectorXcd nominal;
  std::vector<EigenClass> labels;
  std::vector<double> control_displacement;   // max over control sweeps
  std::vector<double> hardware_displacement;  // max over hardware sweeps
  std::vector<bool> matched;                  // false if any sweep failed
  double epsilon = 0.0;

  /// Relabels with another tolerance from the stored evidence.
  std::vector<EigenClass> relabel(double eps) const;
};

EigenClassification classify_eigenvalues(const ModelFactory& factory, const std::vector<std::string>& control,
                                         const std::vector<std::string>& hardware,
                                         const ClassificationOptions& options = {});

/// Classification from evidence alone.
EigenClass classify_from_evidence(double control, double hardware, bool matched, double eps);

// --- spurious modes and folding

struct FoldedEigenvalue {
  Complex value;
  Index multiplicity = 0;
};

/// Maps Im into (-pi f1, pi f1] and merges representatives within `merge_tol`.
std::vector<FoldedEigenvalue> fold_to_strip(const VectorXcd& values, double f1, double merge_tol = 1e-9);
Complex fold_one(Complex lambda, double f1);

struct SpuriousOptions {
  std::optional<double> delta;  // absolute; default 1e-4 * spectral radius
  double relative_delta = 1e-4;
  double boundary_share = 0.5;
};

struct SpuriousReport {
  VectorXcd values;
  std::vector<bool> probe_mismatch;    // nearest folded probe eigenvalue farther than delta
  std::vector<bool> boundary_suspect;  // >= share of eigenvector energy in |h| >= hmax-1 (coupled models)
  std::vector<double> probe_distance;
  std::vector<int> dominant_harmonic;
  std::vector<std::string> dominant_component;
  bool coupled = false;
  double delta = 0.0;
  int hmax = 0;
  int hmax_probe = 0;

  bool flagged(Index k) const { return probe_mismatch[k] || boundary_suspect[k]; }
};

SpuriousReport detect_spurious(const ModelFactory& factory, int hmax, int hmax_probe, const SpuriousOptions& options = {});
SpuriousReport detect_spurious(const HssModel& model, const HssModel& probe, const SpuriousOptions& options = {});

/// True if A has any nonzero entry linking different harmonic orders.
bool has_harmonic_coupling(const HssModel& model);

/// Unstable iff some eigenvalue not excluded has Re > margin.
bool harmonically_unstable(const VectorXcd& values, const std::vector<bool>& excluded, double margin = 0.0);

}  // namespace hss
