#pragma once

// Container for harmonic state-space quadruples (A, E, C, F).
//
// States are grouped: each group (a hardware block, a control block, the grid)
// is stored h-major on its own, and groups are concatenated (node-major over
// groups). Input and output columns are split into named segments, each with
// its own GroupingLayout.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hss/harmonic.hpp"

namespace hss {

struct StateGroup {
  std::string component;
  std::string block;
  Index dim = 0;
};

struct PortSegment {
  std::string name;
  GroupingLayout layout;

  Index dimension() const { return layout.dimension(); }
};

/// Time-domain LTP quadruple x' = A(t)x + B(t)u, y = C(t)x + D(t)u.
struct LtpModel {
  MatrixSeries A, B, C, D;

  Index states() const { return A.rows(); }
  Index inputs() const { return B.cols(); }
  Index outputs() const { return C.rows(); }
  int order() const;
  void validate(const std::string& name) const;
};

struct HssModel {
  HarmonicIndexSet index_set{0, 50.0};
  std::vector<StateGroup> state_groups;
  MatrixXcd A, E, C, F;
  std::vector<PortSegment> inputs;
  std::vector<PortSegment> outputs;
  // Generating LTP model, kept only for single-group models lifted directly.
  std::optional<LtpModel> source;

  Index states() const { return A.rows(); }
  GroupingLayout state_layout() const;
  Index input_dim() const { return E.cols(); }
  Index output_dim() const { return C.rows(); }

  bool has_input(const std::string& name) const;
  bool has_output(const std::string& name) const;
  const PortSegment& input(const std::string& name) const;
  const PortSegment& output(const std::string& name) const;
  /// (first column, width) of a named input segment.
  std::pair<Index, Index> input_range(const std::string& name) const;
  std::pair<Index, Index> output_range(const std::string& name) const;

  MatrixXcd E_of(const std::string& in) const;
  MatrixXcd F_of(const std::string& out, const std::string& in) const;
  MatrixXcd C_of(const std::string& out) const;

  /// Diagonal of the frequency shift, following the state grouping.
  VectorXd omega() const;
  /// A - j*Omega, the matrix of the HSS eigenvalue problem.
  MatrixXcd system_matrix() const;
  /// Harmonic order of every state position.
  std::vector<int> state_orders() const;
  /// Group index of every state position.
  std::vector<Index> state_group_index() const;

  /// Throws a shape error when matrices and metadata disagree.
  void validate() const;
};

/// Harmonic-major port segment over `channels` channels.
PortSegment harmonic_segment(const std::string& name, Index channels, const HarmonicIndexSet& set);

/// Lifts an LTP model. Inputs and outputs become single segments named
/// `input_name` / `output_name` in harmonic-major order.
HssModel lift_ltp(const LtpModel& ltp, const HarmonicIndexSet& set, StateGroup group,
                  const std::string& input_name = "u", const std::string& output_name = "y");

/// Positions (in a harmonic-major vector with `channels` channels) of the
/// given channel subset, ordered h-major over the subset.
std::vector<Index> channel_positions(Index channels, const std::vector<Index>& subset,
                                     const HarmonicIndexSet& set);

/// Keeps only the listed columns of E/F and rebuilds the input segments.
/// Each entry is (new segment name, channel subset of the old single input).
HssModel split_inputs(const HssModel& model, const std::string& source,
                      const std::vector<std::pair<std::string, std::vector<Index>>>& parts);
HssModel split_outputs(const HssModel& model, const std::string& source,
                       const std::vector<std::pair<std::string, std::vector<Index>>>& parts);

/// Block-diagonal combination of models. Segments with the same name are
/// stacked; the stacked layout is node-major over the contributing segments.
/// Every model must declare the same segment names in the same order.
HssModel stack_models(const std::vector<HssModel>& models);

/// Changes the truncation order. Models with a retained LTP source are
/// relifted; others can only shrink (central crop over every layout).
HssModel regrid_truncation(const HssModel& model, int new_hmax);

/// Converts a segment layout into node-major grouping (rows for outputs,
/// columns for inputs are permuted accordingly).
HssModel regroup_input(const HssModel& model, const std::string& name, Grouping target);
HssModel regroup_output(const HssModel& model, const std::string& name, Grouping target);

}  // namespace hss
