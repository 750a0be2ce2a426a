#include "hss/hss_model.hpp"

#include <algorithm>
#include <string>

#include "hss/errors.hpp"

namespace hss {

int LtpModel::order() const { return std::max({A.order(), B.order(), C.order(), D.order()}); }

void LtpModel::validate(const std::string& name) const {
  const Index n = A.rows();
  if (A.cols() != n) fail(ErrorKind::shape, name + ": A must be square");
  if (B.rows() != n) fail(ErrorKind::shape, name + ": B rows must equal the state count");
  if (C.cols() != n) fail(ErrorKind::shape, name + ": C columns must equal the state count");
  if (D.rows() != C.rows() || D.cols() != B.cols())
    fail(ErrorKind::shape, name + ": D must be outputs x inputs");
}

GroupingLayout HssModel::state_layout() const {
  GroupingLayout l;
  l.ordering = Grouping::node_major;
  l.index_set = index_set;
  for (const auto& g : state_groups) l.node_dims.push_back(g.dim);
  return l;
}

namespace {

template <class Seg>
const PortSegment* find_segment(const Seg& segs, const std::string& name) {
  for (const auto& s : segs)
    if (s.name == name) return &s;
  return nullptr;
}

std::pair<Index, Index> range_of(const std::vector<PortSegment>& segs, const std::string& name, const char* what) {
  Index off = 0;
  for (const auto& s : segs) {
    if (s.name == name) return {off, s.dimension()};
    off += s.dimension();
  }
  fail(ErrorKind::wiring, std::string("no ") + what + " segment named '" + name + "'");
}

}  // namespace

bool HssModel::has_input(const std::string& name) const { return find_segment(inputs, name) != nullptr; }
bool HssModel::has_output(const std::string& name) const { return find_segment(outputs, name) != nullptr; }

const PortSegment& HssModel::input(const std::string& name) const {
  const auto* s = find_segment(inputs, name);
  if (!s) fail(ErrorKind::wiring, "no input segment named '" + name + "'");
  return *s;
}

const PortSegment& HssModel::output(const std::string& name) const {
  const auto* s = find_segment(outputs, name);
  if (!s) fail(ErrorKind::wiring, "no output segment named '" + name + "'");
  return *s;
}

std::pair<Index, Index> HssModel::input_range(const std::string& name) const {
  return range_of(inputs, name, "input");
}
std::pair<Index, Index> HssModel::output_range(const std::string& name) const {
  return range_of(outputs, name, "output");
}

MatrixXcd HssModel::E_of(const std::string& in) const {
  const auto [c0, w] = input_range(in);
  return E.middleCols(c0, w);
}

MatrixXcd HssModel::F_of(const std::string& out, const std::string& in) const {
  const auto [r0, h] = output_range(out);
  const auto [c0, w] = input_range(in);
  return F.block(r0, c0, h, w);
}

MatrixXcd HssModel::C_of(const std::string& out) const {
  const auto [r0, h] = output_range(out);
  return C.middleRows(r0, h);
}

std::vector<int> HssModel::state_orders() const { return state_layout().orders(); }
std::vector<Index> HssModel::state_group_index() const { return state_layout().nodes(); }

VectorXd HssModel::omega() const {
  const auto ord = state_orders();
  VectorXd w(static_cast<Index>(ord.size()));
  const double w1 = index_set.omega1();
  for (size_t i = 0; i < ord.size(); ++i) w[static_cast<Index>(i)] = w1 * ord[i];
  return w;
}

MatrixXcd HssModel::system_matrix() const {
  MatrixXcd m = A;
  const VectorXd w = omega();
  for (Index i = 0; i < m.rows(); ++i) m(i, i) -= Complex(0.0, w[i]);
  return m;
}

void HssModel::validate() const {
  const Index n = state_layout().dimension();
  Index ni = 0, no = 0;
  for (const auto& s : inputs) {
    if (!(s.layout.index_set == index_set)) fail(ErrorKind::shape, "input '" + s.name + "' has a different harmonic set");
    ni += s.dimension();
  }
  for (const auto& s : outputs) {
    if (!(s.layout.index_set == index_set)) fail(ErrorKind::shape, "output '" + s.name + "' has a different harmonic set");
    no += s.dimension();
  }
  if (A.rows() != n || A.cols() != n) fail(ErrorKind::shape, "A does not match the state layout");
  if (E.rows() != n || E.cols() != ni) fail(ErrorKind::shape, "E does not match states x inputs");
  if (C.rows() != no || C.cols() != n) fail(ErrorKind::shape, "C does not match outputs x states");
  if (F.rows() != no || F.cols() != ni) fail(ErrorKind::shape, "F does not match outputs x inputs");
}

PortSegment harmonic_segment(const std::string& name, Index channels, const HarmonicIndexSet& set) {
  PortSegment s;
  s.name = name;
  s.layout.ordering = Grouping::harmonic_major;
  s.layout.index_set = set;
  s.layout.node_dims = {channels};
  return s;
}

HssModel lift_ltp(const LtpModel& ltp, const HarmonicIndexSet& set, StateGroup group,
                  const std::string& input_name, const std::string& output_name) {
  ltp.validate(group.component + "/" + group.block);
  if (ltp.order() > set.hmax())
    fail(ErrorKind::shape, group.component + "/" + group.block + ": model order " + std::to_string(ltp.order()) +
                               " exceeds hmax " + std::to_string(set.hmax()));
  HssModel m;
  m.index_set = set;
  group.dim = ltp.states();
  m.state_groups = {group};
  auto lift = [&](const MatrixSeries& s) -> MatrixXcd {
    if (s.rows() == 0 || s.cols() == 0) return MatrixXcd::Zero(s.rows() * set.count(), s.cols() * set.count());
    return toeplitz_from_fourier(s, set).matrix();
  };
  m.A = lift(ltp.A);
  m.E = lift(ltp.B);
  m.C = lift(ltp.C);
  m.F = lift(ltp.D);
  m.inputs = {harmonic_segment(input_name, ltp.inputs(), set)};
  m.outputs = {harmonic_segment(output_name, ltp.outputs(), set)};
  m.source = ltp;
  return m;
}

std::vector<Index> channel_positions(Index channels, const std::vector<Index>& subset, const HarmonicIndexSet& set) {
  std::vector<Index> pos;
  pos.reserve(subset.size() * static_cast<size_t>(set.count()));
  for (Index p = 0; p < set.count(); ++p)
    for (Index c : subset) {
      if (c < 0 || c >= channels)
        fail(ErrorKind::wiring, "channel index " + std::to_string(c) + " out of range 0.." + std::to_string(channels - 1));
      pos.push_back(p * channels + c);
    }
  return pos;
}

namespace {

void require_single_harmonic(const PortSegment& s) {
  if (s.layout.node_dims.size() != 1)
    fail(ErrorKind::wiring, "segment '" + s.name + "' must be a single harmonic-major group to be split");
}

}  // namespace

HssModel split_inputs(const HssModel& model, const std::string& source,
                      const std::vector<std::pair<std::string, std::vector<Index>>>& parts) {
  const PortSegment& seg = model.input(source);
  require_single_harmonic(seg);
  const auto [c0, w] = model.input_range(source);
  const Index ch = seg.layout.node_dims[0];
  HssModel out = model;
  out.source.reset();
  std::vector<PortSegment> segs;
  std::vector<Index> cols;
  for (const auto& s : model.inputs) {
    if (s.name != source) {
      const auto [o, sw] = model.input_range(s.name);
      for (Index k = 0; k < sw; ++k) cols.push_back(o + k);
      segs.push_back(s);
      continue;
    }
    for (const auto& [name, subset] : parts) {
      for (Index p : channel_positions(ch, subset, model.index_set)) cols.push_back(c0 + p);
      segs.push_back(harmonic_segment(name, static_cast<Index>(subset.size()), model.index_set));
    }
  }
  (void)w;
  out.E.resize(model.E.rows(), static_cast<Index>(cols.size()));
  out.F.resize(model.F.rows(), static_cast<Index>(cols.size()));
  for (size_t k = 0; k < cols.size(); ++k) {
    out.E.col(static_cast<Index>(k)) = model.E.col(cols[k]);
    out.F.col(static_cast<Index>(k)) = model.F.col(cols[k]);
  }
  out.inputs = std::move(segs);
  return out;
}

HssModel split_outputs(const HssModel& model, const std::string& source,
                       const std::vector<std::pair<std::string, std::vector<Index>>>& parts) {
  const PortSegment& seg = model.output(source);
  require_single_harmonic(seg);
  const auto [r0, w] = model.output_range(source);
  const Index ch = seg.layout.node_dims[0];
  HssModel out = model;
  out.source.reset();
  std::vector<PortSegment> segs;
  std::vector<Index> rows;
  for (const auto& s : model.outputs) {
    if (s.name != source) {
      const auto [o, sw] = model.output_range(s.name);
      for (Index k = 0; k < sw; ++k) rows.push_back(o + k);
      segs.push_back(s);
      continue;
    }
    for (const auto& [name, subset] : parts) {
      for (Index p : channel_positions(ch, subset, model.index_set)) rows.push_back(r0 + p);
      segs.push_back(harmonic_segment(name, static_cast<Index>(subset.size()), model.index_set));
    }
  }
  (void)w;
  out.C.resize(static_cast<Index>(rows.size()), model.C.cols());
  out.F.resize(static_cast<Index>(rows.size()), model.F.cols());
  for (size_t k = 0; k < rows.size(); ++k) {
    out.C.row(static_cast<Index>(k)) = model.C.row(rows[k]);
    out.F.row(static_cast<Index>(k)) = model.F.row(rows[k]);
  }
  out.outputs = std::move(segs);
  return out;
}

HssModel regroup_input(const HssModel& model, const std::string& name, Grouping target) {
  const auto [c0, w] = model.input_range(name);
  HssModel out = model;
  out.source.reset();
  for (auto& s : out.inputs) {
    if (s.name != name) continue;
    if (s.layout.ordering == target) return model;
    const auto perm = grouping_permutation(s.layout, target);
    for (Index k = 0; k < w; ++k) {
      out.E.col(c0 + k) = model.E.col(c0 + perm[k]);
      out.F.col(c0 + k) = model.F.col(c0 + perm[k]);
    }
    s.layout = s.layout.with_ordering(target);
  }
  return out;
}

HssModel regroup_output(const HssModel& model, const std::string& name, Grouping target) {
  const auto [r0, h] = model.output_range(name);
  HssModel out = model;
  out.source.reset();
  for (auto& s : out.outputs) {
    if (s.name != name) continue;
    if (s.layout.ordering == target) return model;
    const auto perm = grouping_permutation(s.layout, target);
    for (Index k = 0; k < h; ++k) {
      out.C.row(r0 + k) = model.C.row(r0 + perm[k]);
      out.F.row(r0 + k) = model.F.row(r0 + perm[k]);
    }
    s.layout = s.layout.with_ordering(target);
  }
  return out;
}

namespace {

// node-major form of a segment; single-group segments are equivalent either way
HssModel as_node_major(HssModel m) {
  for (size_t k = 0; k < m.inputs.size(); ++k) {
    if (m.inputs[k].layout.node_dims.size() > 1) m = regroup_input(m, m.inputs[k].name, Grouping::node_major);
    m.inputs[k].layout.ordering = Grouping::node_major;
  }
  for (size_t k = 0; k < m.outputs.size(); ++k) {
    if (m.outputs[k].layout.node_dims.size() > 1) m = regroup_output(m, m.outputs[k].name, Grouping::node_major);
    m.outputs[k].layout.ordering = Grouping::node_major;
  }
  return m;
}

}  // namespace

HssModel stack_models(const std::vector<HssModel>& models_in) {
  if (models_in.empty()) fail(ErrorKind::shape, "nothing to stack");
  std::vector<HssModel> models;
  for (const auto& m : models_in) {
    if (!(m.index_set == models_in.front().index_set))
      fail(ErrorKind::configuration, "cannot stack models with different hmax or f1");
    if (m.inputs.size() != models_in.front().inputs.size() || m.outputs.size() != models_in.front().outputs.size())
      fail(ErrorKind::wiring, "stacked models must declare the same port segments");
    models.push_back(as_node_major(m));
  }
  const auto& first = models.front();
  HssModel out;
  out.index_set = first.index_set;
  for (size_t k = 0; k < first.inputs.size(); ++k) {
    PortSegment s{first.inputs[k].name, {}};
    s.layout.ordering = Grouping::node_major;
    s.layout.index_set = out.index_set;
    for (const auto& m : models) {
      if (m.inputs[k].name != s.name) fail(ErrorKind::wiring, "input segment order differs between stacked models");
      for (Index d : m.inputs[k].layout.node_dims) s.layout.node_dims.push_back(d);
    }
    out.inputs.push_back(s);
  }
  for (size_t k = 0; k < first.outputs.size(); ++k) {
    PortSegment s{first.outputs[k].name, {}};
    s.layout.ordering = Grouping::node_major;
    s.layout.index_set = out.index_set;
    for (const auto& m : models) {
      if (m.outputs[k].name != s.name) fail(ErrorKind::wiring, "output segment order differs between stacked models");
      for (Index d : m.outputs[k].layout.node_dims) s.layout.node_dims.push_back(d);
    }
    out.outputs.push_back(s);
  }
  Index n = 0;
  for (const auto& m : models) {
    n += m.states();
    for (const auto& g : m.state_groups) out.state_groups.push_back(g);
  }
  Index ni = 0, no = 0;
  for (const auto& s : out.inputs) ni += s.dimension();
  for (const auto& s : out.outputs) no += s.dimension();
  out.A = MatrixXcd::Zero(n, n);
  out.E = MatrixXcd::Zero(n, ni);
  out.C = MatrixXcd::Zero(no, n);
  out.F = MatrixXcd::Zero(no, ni);

  // column offset of segment k within the stacked E for model j
  Index x0 = 0;
  std::vector<Index> in_cursor(out.inputs.size()), out_cursor(out.outputs.size());
  {
    Index off = 0;
    for (size_t k = 0; k < out.inputs.size(); ++k) {
      in_cursor[k] = off;
      off += out.inputs[k].dimension();
    }
    off = 0;
    for (size_t k = 0; k < out.outputs.size(); ++k) {
      out_cursor[k] = off;
      off += out.outputs[k].dimension();
    }
  }
  for (const auto& m : models) {
    const Index nx = m.states();
    out.A.block(x0, x0, nx, nx) = m.A;
    std::vector<Index> in_pos(m.inputs.size()), out_pos(m.outputs.size());
    for (size_t k = 0; k < m.inputs.size(); ++k) {
      const auto [c0, w] = m.input_range(m.inputs[k].name);
      out.E.block(x0, in_cursor[k], nx, w) = m.E.middleCols(c0, w);
      in_pos[k] = c0;
    }
    for (size_t r = 0; r < m.outputs.size(); ++r) {
      const auto [r0, h] = m.output_range(m.outputs[r].name);
      out.C.block(out_cursor[r], x0, h, nx) = m.C.middleRows(r0, h);
      for (size_t k = 0; k < m.inputs.size(); ++k) {
        const Index w = m.inputs[k].dimension();
        out.F.block(out_cursor[r], in_cursor[k], h, w) = m.F.block(r0, in_pos[k], h, w);
      }
    }
    for (size_t k = 0; k < m.inputs.size(); ++k) in_cursor[k] += m.inputs[k].dimension();
    for (size_t r = 0; r < m.outputs.size(); ++r) out_cursor[r] += m.outputs[r].dimension();
    x0 += nx;
  }
  return out;
}

namespace {

std::vector<Index> keep_positions(const GroupingLayout& layout, int new_hmax) {
  std::vector<Index> keep;
  const auto ord = layout.orders();
  for (size_t i = 0; i < ord.size(); ++i)
    if (std::abs(ord[i]) <= new_hmax) keep.push_back(static_cast<Index>(i));
  return keep;
}

}  // namespace

HssModel regrid_truncation(const HssModel& model, int new_hmax) {
  if (new_hmax == model.index_set.hmax()) return model;
  if (model.source && model.state_groups.size() == 1 && model.inputs.size() == 1 && model.outputs.size() == 1) {
    const HarmonicIndexSet set = model.index_set.with_hmax(new_hmax);
    if (model.source->order() <= new_hmax)
      return lift_ltp(*model.source, set, model.state_groups.front(), model.inputs.front().name,
                      model.outputs.front().name);
  }
  if (new_hmax > model.index_set.hmax())
    fail(ErrorKind::configuration, "cannot grow the truncation order of a model without its generating series");
  if (new_hmax < 0) fail(ErrorKind::configuration, "hmax must be nonnegative");

  HssModel out;
  out.index_set = model.index_set.with_hmax(new_hmax);
  out.state_groups = model.state_groups;
  const auto xs = keep_positions(model.state_layout(), new_hmax);
  std::vector<Index> ins, outs;
  Index off = 0;
  for (const auto& s : model.inputs) {
    for (Index p : keep_positions(s.layout, new_hmax)) ins.push_back(off + p);
    off += s.dimension();
    out.inputs.push_back({s.name, s.layout.with_hmax(new_hmax)});
  }
  off = 0;
  for (const auto& s : model.outputs) {
    for (Index p : keep_positions(s.layout, new_hmax)) outs.push_back(off + p);
    off += s.dimension();
    out.outputs.push_back({s.name, s.layout.with_hmax(new_hmax)});
  }
  out.A = model.A(xs, xs);
  out.E = model.E(xs, ins);
  out.C = model.C(outs, xs);
  out.F = model.F(outs, ins);
  return out;
}

}  // namespace hss
