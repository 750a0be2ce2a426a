#pragma once

// Dense eigen-decomposition of HSS system matrices A - j*Omega.

#include <string>
#include <vector>

#include "hss/hss_model.hpp"

namespace hss {

struct EigenOptions {
  bool vectors = true;
  bool residuals = true;      // needs vectors
  bool allow_real_form = true;
};

struct StateLabel {
  std::string component;
  std::string block;
  int harmonic = 0;
};

struct EigenSolution {
  VectorXcd values;
  MatrixXcd vectors;  // unit 2-norm columns, aligned with values (empty if not requested)
  std::vector<StateLabel> labels;
  std::vector<double> residuals;  // ||M v - lambda v|| per pair
  double max_residual = 0.0;
  bool real_form = false;  // solved through the real similarity transform

  Index size() const { return values.size(); }
  double spectral_radius() const { return values.size() ? values.cwiseAbs().maxCoeff() : 0.0; }
};

/// Full spectrum of a dense complex matrix. If `mirror` is non-empty and
/// M = P conj(M) P for the involution P given by `mirror` (mirror[i] = image
/// of index i), the problem is reduced to a real one first.
EigenSolution eigen_decompose_matrix(const MatrixXcd& M, const std::vector<Index>& mirror, const EigenOptions& opt = {});

EigenSolution eigen_decompose(const HssModel& model, const EigenOptions& opt = {});

/// h -> -h index map over a model's state layout.
std::vector<Index> harmonic_mirror(const HssModel& model);

/// Per-eigenvector energy share by harmonic order and by state group.
struct EigenvectorProfile {
  int dominant_harmonic = 0;
  std::string dominant_component;
  double boundary_energy = 0.0;  // share in |h| >= hmax - 1
};

std::vector<EigenvectorProfile> profile_eigenvectors(const EigenSolution& sol, int hmax);

}  // namespace hss
