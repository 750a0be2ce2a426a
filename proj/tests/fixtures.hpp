#pragma once

// Shared fixtures and independent oracles for the unit and acceptance tests.

#include <algorithm>
#include <complex>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hss/builtin_ciders.hpp"
#include "hss/grid.hpp"
#include "hss/hss_model.hpp"

namespace fx {

using hss::Complex;
using hss::Index;
using hss::MatrixXcd;
using hss::MatrixXd;
using hss::VectorXcd;
using hss::VectorXd;

inline constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

inline MatrixXd random_matrix(std::mt19937_64& rng, Index r, Index c, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  MatrixXd m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = n(rng);
  return m;
}

inline MatrixXcd random_complex(std::mt19937_64& rng, Index r, Index c, double scale = 1.0) {
  MatrixXcd m(r, c);
  m.real() = random_matrix(rng, r, c, scale);
  m.imag() = random_matrix(rng, r, c, scale);
  return m;
}

/// Eigen's own complex Schur, used as the reference against LAPACK.
inline VectorXcd oracle_eigenvalues(const MatrixXcd& m) {
  Eigen::ComplexEigenSolver<MatrixXcd> es(m, false);
  return es.eigenvalues();
}
inline VectorXcd oracle_eigenvalues(const MatrixXd& m) {
  Eigen::EigenSolver<MatrixXd> es(m, false);
  return es.eigenvalues();
}

/// Random Hurwitz matrix: shift a Gaussian matrix left of its spectrum.
inline MatrixXd random_stable(std::mt19937_64& rng, Index n) {
  MatrixXd a = random_matrix(rng, n, n, 10.0);
  const double shift = oracle_eigenvalues(a).real().maxCoeff();
  std::uniform_real_distribution<double> u(0.5, 20.0);
  a -= (shift + u(rng)) * MatrixXd::Identity(n, n);
  return a;
}

inline hss::LtpModel lti(const MatrixXd& A, const MatrixXd& B, const MatrixXd& C, const MatrixXd& D) {
  return {hss::MatrixSeries::constant(A), hss::MatrixSeries::constant(B), hss::MatrixSeries::constant(C),
          hss::MatrixSeries::constant(D)};
}

/// Greedy nearest match; every reference value consumes one computed value.
/// Returns the max distance relative to max(1, |ref|).
inline double multiset_distance(const VectorXcd& computed, const VectorXcd& reference) {
  if (computed.size() != reference.size()) return 1e300;
  std::vector<bool> used(static_cast<size_t>(computed.size()), false);
  std::vector<Index> order(static_cast<size_t>(reference.size()));
  for (Index k = 0; k < reference.size(); ++k) order[static_cast<size_t>(k)] = k;
  double worst = 0.0;
  for (Index r : order) {
    double best = 1e300;
    Index bi = -1;
    for (Index k = 0; k < computed.size(); ++k) {
      if (used[static_cast<size_t>(k)]) continue;
      const double d = std::abs(computed[k] - reference[r]);
      if (d < best) {
        best = d;
        bi = k;
      }
    }
    used[static_cast<size_t>(bi)] = true;
    worst = std::max(worst, best / std::max(1.0, std::abs(reference[r])));
  }
  return worst;
}

/// Per-phase RLC roots -R/(2L) +- j sqrt(1/(LC) - (R/(2L))^2).
inline std::pair<Complex, Complex> rlc_roots(double R, double L, double C) {
  const double a = -R / (2.0 * L);
  const Complex w = std::sqrt(Complex(1.0 / (L * C) - (R / (2.0 * L)) * (R / (2.0 * L)), 0.0));
  return {Complex(a, 0.0) + Complex(0.0, 1.0) * w, Complex(a, 0.0) - Complex(0.0, 1.0) * w};
}

/// Forming node s, following node r, one R-L branch, shunt C at r.
inline hss::GridTopology rlc_topology(double R, double L, double C) {
  hss::GridTopology g;
  g.nodes = {{"s", true}, {"r", false}};
  hss::GridBranch b;
  b.id = "line";
  b.from = "s";
  b.to = "r";
  b.R = R * hss::Matrix3d::Identity();
  b.L = L * hss::Matrix3d::Identity();
  g.branches = {b};
  g.shunts = {{"r", C * hss::Matrix3d::Identity()}};
  return g;
}

inline hss::Matrix3d random_spd(std::mt19937_64& rng, double lo, double hi) {
  const MatrixXd q = random_matrix(rng, 3, 3);
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::HouseholderQR<MatrixXd> qr(q);
  const MatrixXd Q = qr.householderQ();
  const VectorXd d = VectorXd::NullaryExpr(3, [&](Index) { return u(rng); });
  return Q * d.asDiagonal() * Q.transpose();
}

/// Random connected topology with SPD parameters: random spanning tree plus
/// a few extra branches.
inline hss::GridTopology random_topology(std::mt19937_64& rng, int nodes) {
  hss::GridTopology g;
  std::uniform_int_distribution<int> forming_count(1, std::max(1, nodes / 2));
  const int nf = forming_count(rng);
  for (int k = 0; k < nodes; ++k) g.nodes.push_back({"n" + std::to_string(k), k < nf});
  int id = 0;
  auto branch = [&](int a, int b) {
    hss::GridBranch br;
    br.id = "b" + std::to_string(id++);
    br.from = g.nodes[static_cast<size_t>(a)].id;
    br.to = g.nodes[static_cast<size_t>(b)].id;
    br.R = random_spd(rng, 0.01, 1.0);
    br.L = random_spd(rng, 1e-4, 5e-3);
    g.branches.push_back(br);
  };
  for (int k = 1; k < nodes; ++k) {
    std::uniform_int_distribution<int> parent(0, k - 1);
    branch(parent(rng), k);
  }
  std::uniform_int_distribution<int> extra(0, 2), pick(0, nodes - 1);
  for (int e = extra(rng); e > 0; --e) {
    const int a = pick(rng), b = pick(rng);
    if (a != b) branch(a, b);
  }
  for (int k = nf; k < nodes; ++k) g.shunts.push_back({g.nodes[static_cast<size_t>(k)].id, random_spd(rng, 5e-6, 5e-5)});
  return g;
}

/// Stable real LTP fixture with first-harmonic coupling A(t) = A0 + 2 Re(A1 e^{jwt}).
inline hss::LtpModel coupled_ltp(std::mt19937_64& rng, Index n, double coupling) {
  const MatrixXd A0 = random_stable(rng, n);
  const MatrixXcd A1 = coupling * random_complex(rng, n, n);
  hss::MatrixSeries A(n, n);
  A.set(0, A0.cast<Complex>());
  A.set(1, A1);
  A.set(-1, A1.conjugate());
  hss::LtpModel m;
  m.A = A;
  m.B = hss::MatrixSeries::constant(MatrixXd(MatrixXd::Identity(n, 1)));
  m.C = hss::MatrixSeries::constant(MatrixXd(MatrixXd::Identity(1, n)));
  m.D = hss::MatrixSeries::constant(MatrixXd(MatrixXd::Zero(1, 1)));
  return m;
}

}  // namespace fx
