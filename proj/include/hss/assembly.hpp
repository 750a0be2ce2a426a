#pragma once

// Feedback closure of HSS models and assembly of the power-system model
// from resource models and the grid model.

#include <string>
#include <vector>

#include "hss/hss_model.hpp"

namespace hss {

/// How (I - J F) was inverted.
struct WellPosedness {
  bool triangular = false;  // (J F)^2 == 0 exactly, so det = 1 and the inverse is I + J F
  Complex determinant{1.0, 0.0};
  double rcond = 1.0;
  Index loop_dim = 0;
};

struct ClosedLoop {
  HssModel model;
  WellPosedness certificate;
};

/// Closes W_loop = J * Y, where W_loop stacks the listed input segments in
/// order and Y is the full output vector. The closed model keeps every
/// output and the remaining input segments:
///   A~ = A + E_l (I - J F_l)^-1 J C
///   E~ = E_x + E_l (I - J F_l)^-1 J F_x
///   C~ = (I - F_l J)^-1 C,   F~ = (I - F_l J)^-1 F_x
ClosedLoop close_loop(const HssModel& open, const std::vector<std::string>& loop_inputs, const MatrixXcd& J);

/// [[0, I_b], [I_a, 0]]: the first a rows pick the last b entries and vice
/// versa. Sizes must agree (a == b) for the resource/grid interconnection.
MatrixXcd build_interconnection(Index a, Index b);

struct ResourceEntry {
  std::string name;
  std::string node;
  bool forming = false;
  // inputs "gamma", "sigma", "o"; output "gamma"; gamma ports are single
  // three-channel groups
  HssModel model;
};

/// Stacks resources block-diagonally. Forming resources must come first.
HssModel stack_resources(const std::vector<ResourceEntry>& resources);

struct OpenLoopSystem {
  HssModel model;  // inputs gamma_q, gamma_g, sigma, o; outputs y_q, y_g
  std::vector<std::string> nodes;
  Index resource_states = 0;
  Index grid_states = 0;
};

/// `grid` has input "gamma" = col(v_S, i_R) and output "gamma" =
/// col(i_S, v_R), both node-major over `grid_nodes`. Resources are reordered
/// to follow the grid node order.
OpenLoopSystem build_open_loop(const std::vector<ResourceEntry>& resources, const HssModel& grid,
                               const std::vector<std::string>& grid_nodes);

struct ClosedLoopSystem {
  HssModel model;  // inputs sigma, o; outputs y_q, y_g
  WellPosedness certificate;
  MatrixXcd J;
  std::vector<std::string> provenance;
};

ClosedLoopSystem close_system(const OpenLoopSystem& open);

}  // namespace hss
