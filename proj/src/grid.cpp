#include "hss/grid.hpp"

#include <map>
#include <queue>
#include <set>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "hss/errors.hpp"

namespace hss {

std::vector<std::string> GridTopology::forming_nodes() const {
  std::vector<std::string> out;
  for (const auto& n : nodes)
    if (n.forming) out.push_back(n.id);
  return out;
}

std::vector<std::string> GridTopology::following_nodes() const {
  std::vector<std::string> out;
  for (const auto& n : nodes)
    if (!n.forming) out.push_back(n.id);
  return out;
}

std::vector<std::string> GridTopology::ordered_nodes() const {
  auto out = forming_nodes();
  for (auto& n : following_nodes()) out.push_back(std::move(n));
  return out;
}

namespace {

bool symmetric(const Matrix3d& m) { return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + m.cwiseAbs().maxCoeff()); }

bool spd(const Matrix3d& m) {
  if (!m.allFinite() || !symmetric(m)) return false;
  Eigen::LLT<Matrix3d> llt(m);
  return llt.info() == Eigen::Success && Eigen::SelfAdjointEigenSolver<Matrix3d>(m).eigenvalues().minCoeff() > 0.0;
}

bool psd(const Matrix3d& m) {
  if (!m.allFinite() || !symmetric(m)) return false;
  const double lo = Eigen::SelfAdjointEigenSolver<Matrix3d>(m).eigenvalues().minCoeff();
  return lo >= -1e-12 * (1.0 + m.cwiseAbs().maxCoeff());
}

}  // namespace

void GridTopology::validate() const {
  std::set<std::string> ids;
  for (const auto& n : nodes) {
    if (n.id.empty()) fail(ErrorKind::configuration, "grid node with empty id");
    if (!ids.insert(n.id).second) fail(ErrorKind::configuration, "duplicate grid node '" + n.id + "'");
  }
  if (nodes.empty()) fail(ErrorKind::topology, "grid has no nodes");
  if (forming_nodes().empty()) fail(ErrorKind::configuration, "grid has no forming node (no voltage reference)");

  std::map<std::string, std::vector<std::string>> adj;
  std::set<std::string> branch_ids;
  for (const auto& b : branches) {
    if (!branch_ids.insert(b.id).second) fail(ErrorKind::configuration, "duplicate branch id '" + b.id + "'");
    if (!ids.count(b.from)) fail(ErrorKind::topology, "branch '" + b.id + "' starts at unknown node '" + b.from + "'");
    if (!ids.count(b.to)) fail(ErrorKind::topology, "branch '" + b.id + "' ends at unknown node '" + b.to + "'");
    if (b.from == b.to) fail(ErrorKind::topology, "branch '" + b.id + "' connects node '" + b.from + "' to itself");
    if (!spd(b.L)) fail(ErrorKind::physical_parameter, "branch '" + b.id + "': inductance L is not symmetric positive definite");
    if (!psd(b.R)) fail(ErrorKind::physical_parameter, "branch '" + b.id + "': resistance R is not symmetric positive semidefinite");
    adj[b.from].push_back(b.to);
    adj[b.to].push_back(b.from);
  }

  std::set<std::string> seen{nodes.front().id};
  std::queue<std::string> todo;
  todo.push(nodes.front().id);
  while (!todo.empty()) {
    const std::string n = todo.front();
    todo.pop();
    for (const auto& m : adj[n])
      if (seen.insert(m).second) todo.push(m);
  }
  if (seen.size() != ids.size()) {
    std::string missing;
    for (const auto& n : nodes)
      if (!seen.count(n.id)) missing += (missing.empty() ? "" : ", ") + n.id;
    fail(ErrorKind::topology, "grid is not connected; unreachable from '" + nodes.front().id + "': " + missing);
  }

  std::map<std::string, bool> forming;
  for (const auto& n : nodes) forming[n.id] = n.forming;
  std::set<std::string> shunted;
  for (const auto& s : shunts) {
    if (!ids.count(s.node)) fail(ErrorKind::topology, "shunt at unknown node '" + s.node + "'");
    if (!shunted.insert(s.node).second) fail(ErrorKind::configuration, "node '" + s.node + "' has more than one shunt");
    if (!forming[s.node] && !spd(s.C))
      fail(ErrorKind::physical_parameter, "shunt at node '" + s.node + "': capacitance C is not symmetric positive definite");
  }
  for (const auto& n : nodes)
    if (!n.forming && !shunted.count(n.id))
      fail(ErrorKind::configuration, "following node '" + n.id + "' needs a shunt capacitance");
}

GridStateSpace build_grid_state_space(const GridTopology& topo) {
  topo.validate();
  GridStateSpace g;
  g.forming = topo.forming_nodes();
  g.following = topo.following_nodes();
  const auto order = topo.ordered_nodes();
  std::map<std::string, Index> col;
  for (size_t k = 0; k < order.size(); ++k) col[order[k]] = static_cast<Index>(k);

  const Index nl = static_cast<Index>(topo.branches.size());
  const Index ns = static_cast<Index>(g.forming.size());
  const Index nr = static_cast<Index>(g.following.size());

  g.incidence = MatrixXd::Zero(3 * nl, 3 * (ns + nr));
  MatrixXd Linv_R = MatrixXd::Zero(3 * nl, 3 * nl);
  MatrixXd Linv = MatrixXd::Zero(3 * nl, 3 * nl);
  for (Index l = 0; l < nl; ++l) {
    const auto& b = topo.branches[static_cast<size_t>(l)];
    g.branches.push_back(b.id);
    g.incidence.block(3 * l, 3 * col[b.from], 3, 3) = Matrix3d::Identity();
    g.incidence.block(3 * l, 3 * col[b.to], 3, 3) = -Matrix3d::Identity();
    Eigen::LLT<Matrix3d> llt(b.L);
    const Matrix3d li = llt.solve(Matrix3d::Identity());
    Linv.block(3 * l, 3 * l, 3, 3) = li;
    Linv_R.block(3 * l, 3 * l, 3, 3) = llt.solve(b.R);
  }
  MatrixXd Cinv = MatrixXd::Zero(3 * nr, 3 * nr);
  std::map<std::string, Matrix3d> shunt;
  for (const auto& s : topo.shunts) shunt[s.node] = s.C;
  for (Index r = 0; r < nr; ++r)
    Cinv.block(3 * r, 3 * r, 3, 3) = Eigen::LLT<Matrix3d>(shunt[g.following[static_cast<size_t>(r)]]).solve(Matrix3d::Identity());

  const MatrixXd ALS = g.incidence.leftCols(3 * ns);
  const MatrixXd ALR = g.incidence.rightCols(3 * nr);
  const Index nx = 3 * nl + 3 * nr;
  g.A = MatrixXd::Zero(nx, nx);
  g.A.topLeftCorner(3 * nl, 3 * nl) = -Linv_R;
  g.A.topRightCorner(3 * nl, 3 * nr) = Linv * ALR;
  g.A.bottomLeftCorner(3 * nr, 3 * nl) = -Cinv * ALR.transpose();
  g.E = MatrixXd::Zero(nx, 3 * ns + 3 * nr);
  g.E.topLeftCorner(3 * nl, 3 * ns) = Linv * ALS;
  g.E.bottomRightCorner(3 * nr, 3 * nr) = Cinv;
  g.C = MatrixXd::Zero(3 * ns + 3 * nr, nx);
  g.C.topLeftCorner(3 * ns, 3 * nl) = ALS.transpose();
  g.C.bottomRightCorner(3 * nr, 3 * nr).setIdentity();
  g.F = MatrixXd::Zero(3 * ns + 3 * nr, 3 * ns + 3 * nr);
  return g;
}

HssModel lift_grid_to_hss(const GridStateSpace& gss, const HarmonicIndexSet& set) {
  LtpModel ltp{MatrixSeries::constant(gss.A), MatrixSeries::constant(gss.E), MatrixSeries::constant(gss.C),
               MatrixSeries::constant(gss.F)};
  HssModel m = lift_ltp(ltp, set, StateGroup{"grid", "network", 0}, "gamma", "gamma");
  const Index nodes = static_cast<Index>(gss.forming.size() + gss.following.size());
  std::vector<Index> dims(static_cast<size_t>(nodes), 3);
  m.inputs.front().layout.node_dims = dims;
  m.outputs.front().layout.node_dims = dims;
  m = regroup_input(m, "gamma", Grouping::node_major);
  m = regroup_output(m, "gamma", Grouping::node_major);
  return m;
}

}  // namespace hss
