#pragma once

// Three-phase RL branch / shunt-C grid model.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hss/hss_model.hpp"

namespace hss {

using Eigen::Matrix3d;

struct GridNode {
  std::string id;
  bool forming = false;
};

struct GridBranch {
  std::string id;
  std::string from;
  std::string to;
  Matrix3d R = Matrix3d::Zero();
  Matrix3d L = Matrix3d::Identity();
};

struct GridShunt {
  std::string node;
  Matrix3d C = Matrix3d::Identity();
};

struct GridTopology {
  std::vector<GridNode> nodes;
  std::vector<GridBranch> branches;
  std::vector<GridShunt> shunts;

  /// Forming nodes first, then following nodes, each in declaration order.
  std::vector<std::string> ordered_nodes() const;
  std::vector<std::string> forming_nodes() const;
  std::vector<std::string> following_nodes() const;
  /// Throws topology / physical-parameter / configuration errors.
  void validate() const;
};

struct GridStateSpace {
  // states col(i_L, v_R); disturbances col(v_S, i_R); outputs col(i_S, v_R)
  MatrixXd A, E, C, F;
  std::vector<std::string> forming;
  std::vector<std::string> following;
  std::vector<std::string> branches;
  MatrixXd incidence;  // A_{L|N}, 3 rows per branch, 3 columns per node in N = [S, R]
};

GridStateSpace build_grid_state_space(const GridTopology& topology);

/// DC lift; the disturbance and output segments ("gamma") are regrouped
/// node-major with three channels per node in N = [S, R] order.
HssModel lift_grid_to_hss(const GridStateSpace& gss, const HarmonicIndexSet& set);

}  // namespace hss
