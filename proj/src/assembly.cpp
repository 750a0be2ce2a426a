#include "hss/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include <Eigen/LU>
#include <Eigen/SparseCore>

#include "hss/errors.hpp"

namespace hss {

namespace {

using Sparse = Eigen::SparseMatrix<Complex>;

Sparse sparse(const MatrixXcd& m) { return m.sparseView(Complex(0.0), 0.0); }

MatrixXcd gather_cols(const MatrixXcd& m, const std::vector<Index>& cols) {
  MatrixXcd out(m.rows(), static_cast<Index>(cols.size()));
  for (size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Index>(k)) = m.col(cols[k]);
  return out;
}

}  // namespace

ClosedLoop close_loop(const HssModel& open, const std::vector<std::string>& loop_inputs, const MatrixXcd& J) {
  open.validate();
  std::vector<Index> lcols, xcols;
  std::vector<PortSegment> ext;
  std::set<std::string> loop_set(loop_inputs.begin(), loop_inputs.end());
  for (const auto& name : loop_inputs) {
    const auto [c0, w] = open.input_range(name);
    for (Index k = 0; k < w; ++k) lcols.push_back(c0 + k);
  }
  for (const auto& s : open.inputs) {
    if (loop_set.count(s.name)) continue;
    const auto [c0, w] = open.input_range(s.name);
    for (Index k = 0; k < w; ++k) xcols.push_back(c0 + k);
    ext.push_back(s);
  }
  const Index nl = static_cast<Index>(lcols.size());
  if (J.rows() != nl || J.cols() != open.output_dim())
    fail(ErrorKind::wiring, "interconnection matrix is " + std::to_string(J.rows()) + "x" + std::to_string(J.cols()) +
                                ", expected " + std::to_string(nl) + "x" + std::to_string(open.output_dim()));

  const MatrixXcd El = gather_cols(open.E, lcols);
  const MatrixXcd Ex = gather_cols(open.E, xcols);
  const MatrixXcd Fl = gather_cols(open.F, lcols);
  const MatrixXcd Fx = gather_cols(open.F, xcols);

  const Sparse Js = sparse(J);
  const Sparse Fls = sparse(Fl);
  Sparse JF = Js * Fls;
  JF.prune(Complex(0.0), 0.0);
  Sparse JF2 = JF * JF;
  JF2.prune(Complex(0.0), 0.0);

  WellPosedness cert;
  cert.loop_dim = nl;
  Sparse K;  // (I - J F_l)^-1 J
  if (JF2.nonZeros() == 0) {
    cert.triangular = true;
    Sparse Minv(nl, nl);
    Minv.setIdentity();
    Minv += JF;
    K = Minv * Js;
  } else {
    MatrixXcd M = MatrixXcd::Identity(nl, nl) - MatrixXcd(JF);
    Eigen::PartialPivLU<MatrixXcd> lu(M);
    cert.determinant = lu.determinant();
    cert.rcond = lu.rcond();
    if (!(cert.rcond > 1e-13) || !std::isfinite(std::abs(cert.determinant))) {
      std::string chain;
      for (const auto& n : loop_inputs) chain += (chain.empty() ? "" : " -> ") + n;
      char buf[96];
      std::snprintf(buf, sizeof buf, "%.3g", cert.rcond > 0 ? 1.0 / cert.rcond : INFINITY);
      fail(ErrorKind::well_posedness, "algebraic loop (I - J F) is singular through feedthrough chain [" + chain +
                                          "], condition estimate " + buf);
    }
    K = sparse(lu.solve(J));
  }
  cert.determinant = cert.triangular ? Complex(1.0, 0.0) : cert.determinant;

  const Sparse Cs = sparse(open.C);
  const Sparse Fxs = sparse(Fx);
  const Sparse Els = sparse(El);
  const Sparse KC = K * Cs;
  const Sparse KF = K * Fxs;

  ClosedLoop out;
  HssModel& m = out.model;
  m.index_set = open.index_set;
  m.state_groups = open.state_groups;
  m.inputs = ext;
  m.outputs = open.outputs;
  m.A = open.A;
  m.A += Sparse(Els * KC);
  m.E = Ex;
  m.E += Sparse(Els * KF);
  m.C = open.C;
  m.C += Sparse(Fls * KC);
  m.F = Fx;
  m.F += Sparse(Fls * KF);
  out.certificate = cert;
  return out;
}

MatrixXcd build_interconnection(Index a, Index b) {
  if (a != b)
    fail(ErrorKind::wiring, "interconnection port groups differ in size: " + std::to_string(a) + " vs " +
                                std::to_string(b));
  MatrixXcd J = MatrixXcd::Zero(a + b, a + b);
  J.block(0, a, a, b).setIdentity();
  J.block(a, 0, b, a).setIdentity();
  return J;
}

HssModel stack_resources(const std::vector<ResourceEntry>& resources) {
  if (resources.empty()) fail(ErrorKind::configuration, "no resources to stack");
  bool seen_following = false;
  std::vector<HssModel> models;
  for (const auto& r : resources) {
    if (r.forming && seen_following)
      fail(ErrorKind::configuration, "resource '" + r.name + "' is grid-forming but listed after a grid-following one");
    seen_following = seen_following || !r.forming;
    if (!(r.model.index_set == resources.front().model.index_set))
      fail(ErrorKind::configuration, "resource '" + r.name + "' uses a different hmax or f1 than '" +
                                         resources.front().name + "'");
    models.push_back(r.model);
  }
  return stack_models(models);
}

OpenLoopSystem build_open_loop(const std::vector<ResourceEntry>& resources_in, const HssModel& grid,
                               const std::vector<std::string>& grid_nodes) {
  std::map<std::string, const ResourceEntry*> by_node;
  std::vector<std::string> unmatched;
  for (const auto& r : resources_in) {
    if (by_node.count(r.node)) fail(ErrorKind::wiring, "node '" + r.node + "' hosts more than one resource");
    by_node[r.node] = &r;
  }
  std::vector<ResourceEntry> resources;
  for (const auto& n : grid_nodes) {
    auto it = by_node.find(n);
    if (it == by_node.end()) {
      unmatched.push_back(n + " (no resource)");
      continue;
    }
    resources.push_back(*it->second);
    by_node.erase(it);
  }
  for (const auto& [n, r] : by_node) unmatched.push_back(n + " (not in grid, resource '" + r->name + "')");
  if (!unmatched.empty()) {
    std::string list;
    for (const auto& u : unmatched) list += (list.empty() ? "" : ", ") + u;
    fail(ErrorKind::wiring, "resource and grid node sets differ: " + list);
  }

  HssModel q = stack_resources(resources);
  if (!(q.index_set == grid.index_set)) fail(ErrorKind::configuration, "resources and grid use different harmonic sets");

  // gamma layouts must agree node for node
  const PortSegment& qin = q.input("gamma");
  const PortSegment& qout = q.output("gamma");
  const PortSegment& gin = grid.input("gamma");
  const PortSegment& gout = grid.output("gamma");
  if (qin.layout.node_dims != gout.layout.node_dims || qout.layout.node_dims != gin.layout.node_dims ||
      gin.layout.ordering != Grouping::node_major || gout.layout.ordering != Grouping::node_major)
    fail(ErrorKind::wiring, "resource and grid port layouts do not match node for node");

  const Index nq = q.states(), ng = grid.states();
  const auto [qg0, qgw] = q.input_range("gamma");
  const auto [qs0, qsw] = q.input_range("sigma");
  const auto [qo0, qow] = q.input_range("o");
  const auto [gg0, ggw] = grid.input_range("gamma");
  const Index nyq = q.output_dim(), nyg = grid.output_dim();

  OpenLoopSystem out;
  out.nodes = grid_nodes;
  out.resource_states = nq;
  out.grid_states = ng;
  HssModel& m = out.model;
  m.index_set = q.index_set;
  m.state_groups = q.state_groups;
  for (const auto& g : grid.state_groups) m.state_groups.push_back(g);
  m.inputs = {{"gamma_q", qin.layout}, {"gamma_g", gin.layout}, {"sigma", q.input("sigma").layout},
              {"o", q.input("o").layout}};
  m.outputs = {{"y_q", qout.layout}, {"y_g", gout.layout}};

  const Index ni = qgw + ggw + qsw + qow;
  m.A = MatrixXcd::Zero(nq + ng, nq + ng);
  m.A.topLeftCorner(nq, nq) = q.A;
  m.A.bottomRightCorner(ng, ng) = grid.A;
  m.E = MatrixXcd::Zero(nq + ng, ni);
  m.E.block(0, 0, nq, qgw) = q.E.middleCols(qg0, qgw);
  m.E.block(nq, qgw, ng, ggw) = grid.E.middleCols(gg0, ggw);
  m.E.block(0, qgw + ggw, nq, qsw) = q.E.middleCols(qs0, qsw);
  m.E.block(0, qgw + ggw + qsw, nq, qow) = q.E.middleCols(qo0, qow);
  m.C = MatrixXcd::Zero(nyq + nyg, nq + ng);
  m.C.topLeftCorner(nyq, nq) = q.C;
  m.C.bottomRightCorner(nyg, ng) = grid.C;
  m.F = MatrixXcd::Zero(nyq + nyg, ni);
  m.F.block(0, 0, nyq, qgw) = q.F.middleCols(qg0, qgw);
  m.F.block(nyq, qgw, nyg, ggw) = grid.F.middleCols(gg0, ggw);
  m.F.block(0, qgw + ggw, nyq, qsw) = q.F.middleCols(qs0, qsw);
  m.F.block(0, qgw + ggw + qsw, nyq, qow) = q.F.middleCols(qo0, qow);
  m.validate();
  return out;
}

ClosedLoopSystem close_system(const OpenLoopSystem& open) {
  const Index a = open.model.input("gamma_q").dimension();
  const Index b = open.model.input("gamma_g").dimension();
  if (open.model.output("y_q").dimension() != b || open.model.output("y_g").dimension() != a)
    fail(ErrorKind::wiring, "resource and grid port sizes do not match");
  ClosedLoopSystem out;
  out.J = build_interconnection(a, b);
  ClosedLoop cl = close_loop(open.model, {"gamma_q", "gamma_g"}, out.J);
  out.model = std::move(cl.model);
  out.certificate = cl.certificate;
  out.provenance = open.nodes;
  return out;
}

}  // namespace hss
