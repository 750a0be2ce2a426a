#include "hss/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "hss/builtin_ciders.hpp"
#include "hss/errors.hpp"

namespace hss {

using json = nlohmann::json;

namespace {

// JSON access with dotted-path diagnostics
struct Reader {
  std::string source;

  [[noreturn]] void schema(const std::string& path, const std::string& msg) const {
    fail(ErrorKind::schema, source + ": " + (path.empty() ? std::string("<root>") : path) + ": " + msg);
  }
  [[noreturn]] void xref(const std::string& path, const std::string& msg) const {
    fail(ErrorKind::cross_reference, source + ": " + path + ": " + msg);
  }

  static std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
  static std::string join(const std::string& path, size_t i) { return join(path, std::to_string(i)); }

  void object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) const {
    if (!j.is_object()) schema(path, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || it.key() == a;
      if (!ok) schema(join(path, it.key()), "unknown field");
    }
  }

  const json& at(const json& j, const std::string& path, const char* key) const {
    if (!j.contains(key)) schema(join(path, key), "missing required field");
    return j.at(key);
  }

  const json& array(const json& j, const std::string& path) const {
    if (!j.is_array()) schema(path, "expected an array");
    return j;
  }

  double number(const json& j, const std::string& path) const {
    if (!j.is_number()) schema(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) schema(path, "number is not finite");
    return v;
  }
  double number(const json& j, const std::string& path, const char* key) const { return number(at(j, path, key), join(path, key)); }
  double number_or(const json& j, const std::string& path, const char* key, double fallback) const {
    return j.contains(key) ? number(j.at(key), join(path, key)) : fallback;
  }

  int integer(const json& j, const std::string& path) const {
    if (!j.is_number_integer()) schema(path, "expected an integer");
    return j.get<int>();
  }

  std::string string(const json& j, const std::string& path) const {
    if (!j.is_string()) schema(path, "expected a string");
    return j.get<std::string>();
  }
  std::string string(const json& j, const std::string& path, const char* key) const {
    return string(at(j, path, key), join(path, key));
  }

  std::vector<double> numbers(const json& j, const std::string& path) const {
    array(j, path);
    std::vector<double> out;
    for (size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], join(path, i)));
    return out;
  }

  std::vector<std::string> strings(const json& j, const std::string& path) const {
    array(j, path);
    std::vector<std::string> out;
    for (size_t i = 0; i < j.size(); ++i) out.push_back(string(j[i], join(path, i)));
    return out;
  }

  std::vector<Index> indices(const json& j, const std::string& path) const {
    array(j, path);
    std::vector<Index> out;
    for (size_t i = 0; i < j.size(); ++i) {
      const int v = integer(j[i], join(path, i));
      if (v < 0) schema(join(path, i), "index must be nonnegative");
      out.push_back(v);
    }
    return out;
  }

  // scalar (times I), 9 row-major values or a nested 3x3
  Matrix3d matrix3(const json& j, const std::string& path) const {
    if (j.is_number()) return number(j, path) * Matrix3d::Identity();
    const MatrixXd m = j.is_array() && j.size() == 9 && j[0].is_number() ? flat(j, path, 3, 3) : matrix(j, path);
    if (m.rows() != 3 || m.cols() != 3) schema(path, "expected a scalar, 9 values or a 3x3 matrix");
    return m;
  }

  MatrixXd flat(const json& data, const std::string& path, Index rows, Index cols) const {
    const auto v = numbers(data, path);
    if (static_cast<Index>(v.size()) != rows * cols)
      schema(path, "expected " + std::to_string(rows * cols) + " values, got " + std::to_string(v.size()));
    MatrixXd m(rows, cols);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) m(r, c) = v[static_cast<size_t>(r * cols + c)];
    return m;
  }

  // nested rows, or {"rows", "cols", "data"} (data row-major, zeros if absent)
  MatrixXd matrix(const json& j, const std::string& path) const {
    if (j.is_object()) {
      object(j, path, {"rows", "cols", "data"});
      const int r = integer(at(j, path, "rows"), join(path, "rows"));
      const int c = integer(at(j, path, "cols"), join(path, "cols"));
      if (r < 0 || c < 0) schema(path, "negative matrix size");
      if (!j.contains("data")) return MatrixXd::Zero(r, c);
      return flat(j.at("data"), join(path, "data"), r, c);
    }
    array(j, path);
    if (j.empty()) schema(path, "empty matrix; use {\"rows\": r, \"cols\": c} for zero sizes");
    const Index rows = static_cast<Index>(j.size());
    Index cols = -1;
    MatrixXd m;
    for (size_t r = 0; r < j.size(); ++r) {
      const auto row = numbers(j[r], join(path, r));
      if (cols < 0) {
        cols = static_cast<Index>(row.size());
        m.resize(rows, cols);
      } else if (static_cast<Index>(row.size()) != cols) {
        schema(join(path, r), "row length differs from the first row");
      }
      for (Index c = 0; c < cols; ++c) m(static_cast<Index>(r), c) = row[static_cast<size_t>(c)];
    }
    return m;
  }

  MatrixXcd complex_matrix(const json& j, const std::string& path) const {
    if (j.is_object() && (j.contains("re") || j.contains("im"))) {
      object(j, path, {"re", "im"});
      const MatrixXd re = matrix(at(j, path, "re"), join(path, "re"));
      MatrixXd im = MatrixXd::Zero(re.rows(), re.cols());
      if (j.contains("im")) im = matrix(j.at("im"), join(path, "im"));
      if (im.rows() != re.rows() || im.cols() != re.cols()) schema(path, "re and im sizes differ");
      MatrixXcd out(re.rows(), re.cols());
      out.real() = re;
      out.imag() = im;
      return out;
    }
    return matrix(j, path).cast<Complex>();
  }

  static int order_key(const std::string& key, bool& ok) {
    try {
      size_t used = 0;
      const int h = std::stoi(key, &used);
      ok = used == key.size();
      return h;
    } catch (...) {
      ok = false;
      return 0;
    }
  }

  // constant matrix, or {"harmonics": {"h": matrix | {"re", "im"}}}
  MatrixSeries series(const json& j, const std::string& path) const {
    if (j.is_object() && j.contains("harmonics")) {
      object(j, path, {"harmonics"});
      const std::string hp = join(path, "harmonics");
      const json& hs = j.at("harmonics");
      if (!hs.is_object() || hs.empty()) schema(hp, "expected a nonempty object keyed by harmonic order");
      MatrixSeries out;
      bool first = true;
      for (auto it = hs.begin(); it != hs.end(); ++it) {
        bool ok = false;
        const int h = order_key(it.key(), ok);
        if (!ok) schema(join(hp, it.key()), "harmonic order must be an integer");
        const MatrixXcd m = complex_matrix(it.value(), join(hp, it.key()));
        if (first) {
          out = MatrixSeries(m.rows(), m.cols());
          first = false;
        }
        if (m.rows() != out.rows() || m.cols() != out.cols()) schema(join(hp, it.key()), "coefficient size differs");
        out.set(h, m);
      }
      return out;
    }
    return MatrixSeries::constant(matrix(j, path));
  }

  // {"constant": [...]}, {"balanced": {"amplitude", "phase_deg"}} or
  // {"harmonics": {"h": {"re": [...], "im": [...]}}} with h >= 0
  SignalSpec signal(const json& j, const std::string& path, Index channels) const {
    object(j, path, {"constant", "balanced", "harmonics"});
    if (j.size() != 1) schema(path, "give exactly one of constant, balanced, harmonics");
    SignalSpec s;
    if (j.contains("constant")) {
      const auto v = numbers(j.at("constant"), join(path, "constant"));
      s = SignalSpec::constant(Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size())));
    } else if (j.contains("balanced")) {
      const std::string bp = join(path, "balanced");
      const json& b = j.at("balanced");
      object(b, bp, {"amplitude", "phase_deg"});
      s = SignalSpec::balanced(number(b, bp, "amplitude"), number_or(b, bp, "phase_deg", 0.0) * kPi / 180.0);
    } else {
      const std::string hp = join(path, "harmonics");
      const json& hs = j.at("harmonics");
      if (!hs.is_object() || hs.empty()) schema(hp, "expected a nonempty object keyed by harmonic order");
      s.channels = channels;
      for (auto it = hs.begin(); it != hs.end(); ++it) {
        const std::string cp = join(hp, it.key());
        bool ok = false;
        const int h = order_key(it.key(), ok);
        if (!ok || h < 0) schema(cp, "harmonic order must be a nonnegative integer");
        object(it.value(), cp, {"re", "im"});
        const auto re = numbers(at(it.value(), cp, "re"), join(cp, "re"));
        std::vector<double> im(re.size(), 0.0);
        if (it.value().contains("im")) im = numbers(it.value().at("im"), join(cp, "im"));
        if (re.size() != im.size() || static_cast<Index>(re.size()) != channels)
          schema(cp, "expected " + std::to_string(channels) + " channels");
        if (h == 0)
          for (double v : im)
            if (v != 0.0) schema(cp, "the h = 0 coefficient of a real signal must be real");
        VectorXcd c(channels);
        for (Index k = 0; k < channels; ++k) c[k] = {re[static_cast<size_t>(k)], im[static_cast<size_t>(k)]};
        s.orders[h] = c;
      }
    }
    if (s.channels != channels)
      schema(path, "expected a signal with " + std::to_string(channels) + " channels, got " + std::to_string(s.channels));
    return s;
  }

  FrameTransform transform(const json& j, const std::string& path) const {
    if (j.is_string()) {
      const std::string k = j.get<std::string>();
      if (k == "identity") return FrameTransform::identity();
      if (k == "park") return FrameTransform::park();
      if (k == "inverse_park") return FrameTransform::inverse_park();
      schema(path, "unknown transform '" + k + "' (identity, park, inverse_park or a matrix series)");
    }
    return FrameTransform::from_series(series(j, path));
  }

  std::shared_ptr<const ReferencePlugin> reference(const json& j, const std::string& path) const {
    object(j, path, {"type", "m_rho", "m_sigma", "dim"});
    const std::string type = string(j, path, "type");
    if (type == "pq") return std::make_shared<PqReference>();
    if (type == "vf") return LinearReference::vf(j.contains("dim") ? integer(j.at("dim"), join(path, "dim")) : 2);
    if (type == "linear") {
      const MatrixXd mr = matrix(at(j, path, "m_rho"), join(path, "m_rho"));
      const MatrixXd ms = matrix(at(j, path, "m_sigma"), join(path, "m_sigma"));
      if (mr.rows() != ms.rows()) schema(path, "m_rho and m_sigma must have the same row count");
      return std::make_shared<LinearReference>(mr, ms);
    }
    schema(join(path, "type"), "unknown reference '" + type + "' (linear, vf, pq)");
  }

  std::vector<LtpBlock> blocks(const json& j, const std::string& path) const {
    array(j, path);
    if (j.empty()) schema(path, "expected at least one block");
    std::vector<LtpBlock> out;
    for (size_t i = 0; i < j.size(); ++i) {
      const std::string bp = join(path, i);
      object(j[i], bp, {"name", "A", "B", "C", "D"});
      LtpBlock b;
      b.name = string(j[i], bp, "name");
      b.model.A = series(at(j[i], bp, "A"), join(bp, "A"));
      b.model.B = series(at(j[i], bp, "B"), join(bp, "B"));
      b.model.C = series(at(j[i], bp, "C"), join(bp, "C"));
      b.model.D = series(at(j[i], bp, "D"), join(bp, "D"));
      out.push_back(std::move(b));
    }
    return out;
  }
};

CiderKind parse_kind(const Reader& rd, const json& j, const std::string& path) {
  const std::string k = rd.string(j, path);
  if (k == "forming" || k == "S") return CiderKind::forming;
  if (k == "following" || k == "R") return CiderKind::following;
  rd.schema(path, "kind must be 'forming' or 'following'");
}

CiderSpec parse_cider(const Reader& rd, const json& j, const std::string& path) {
  rd.object(j, path,
            {"name", "node", "kind", "model", "hardware", "control", "setpoint", "operating_point", "routing", "transforms",
             "reference"});
  const std::string name = rd.string(j, path, "name");
  const std::string model = rd.string(j, path, "model");
  const CiderKind kind = parse_kind(rd, rd.at(j, path, "kind"), Reader::join(path, "kind"));
  const std::string hp = Reader::join(path, "hardware");
  const std::string cp = Reader::join(path, "control");

  auto gains = [&](std::initializer_list<const char*> keys) -> std::pair<const json*, std::string> {
    const json& c = rd.at(j, path, "control");
    rd.object(c, cp, {"gains"});
    const std::string gp = Reader::join(cp, "gains");
    const json& g = rd.at(c, cp, "gains");
    rd.object(g, gp, keys);
    return {&g, gp};
  };

  if (model == "builtin-vf" || model == "builtin-pq") {
    for (const char* k : {"routing", "transforms", "reference"})
      if (j.contains(k)) rd.schema(Reader::join(path, k), "not configurable for built-in models");
  }

  if (model == "builtin-vf") {
    if (kind != CiderKind::forming) rd.schema(Reader::join(path, "kind"), "builtin-vf is a forming resource");
    const json& h = rd.at(j, path, "hardware");
    rd.object(h, hp, {"Lf", "Rf", "Cf"});
    auto [g, gp] = gains({"kp_v", "ki_v", "kp_i", "kff"});
    VfParameters p;
    p.Lf = rd.number(h, hp, "Lf");
    p.Rf = rd.number_or(h, hp, "Rf", 0.0);
    p.Cf = rd.number(h, hp, "Cf");
    p.kp_v = rd.number(*g, gp, "kp_v");
    p.ki_v = rd.number(*g, gp, "ki_v");
    p.kp_i = rd.number(*g, gp, "kp_i");
    p.kff = rd.number_or(*g, gp, "kff", 0.0);
    const SignalSpec sp = rd.signal(rd.at(j, path, "setpoint"), Reader::join(path, "setpoint"), 2);
    const SignalSpec op = j.contains("operating_point")
                              ? rd.signal(j.at("operating_point"), Reader::join(path, "operating_point"), 3)
                              : SignalSpec{};
    return builtin_vf(name, p, sp, op);
  }
  if (model == "builtin-pq") {
    if (kind != CiderKind::following) rd.schema(Reader::join(path, "kind"), "builtin-pq is a following resource");
    const json& h = rd.at(j, path, "hardware");
    rd.object(h, hp, {"L", "R"});
    auto [g, gp] = gains({"kp", "ki"});
    PqParameters p;
    p.L = rd.number(h, hp, "L");
    p.R = rd.number_or(h, hp, "R", 0.0);
    p.kp = rd.number(*g, gp, "kp");
    p.ki = rd.number(*g, gp, "ki");
    const SignalSpec sp = rd.signal(rd.at(j, path, "setpoint"), Reader::join(path, "setpoint"), 2);
    const SignalSpec op = rd.signal(rd.at(j, path, "operating_point"), Reader::join(path, "operating_point"), 3);
    return builtin_pq(name, p, sp, op);
  }
  if (model != "custom") rd.schema(Reader::join(path, "model"), "unknown model '" + model + "' (builtin-vf, builtin-pq, custom)");

  CiderSpec s;
  s.name = name;
  s.kind = kind;
  s.hardware = rd.blocks(rd.at(j, path, "hardware"), hp);
  s.control = rd.blocks(rd.at(j, path, "control"), cp);
  const std::string rp = Reader::join(path, "routing");
  const json& r = rd.at(j, path, "routing");
  rd.object(r, rp,
            {"hw_actuation", "hw_disturbance", "hw_grid_output", "hw_measurement", "ctrl_measurement", "ctrl_reference",
             "ctrl_actuation"});
  auto idx = [&](const char* key) { return rd.indices(rd.at(r, rp, key), Reader::join(rp, key)); };
  s.routing.hw_actuation = idx("hw_actuation");
  s.routing.hw_disturbance = idx("hw_disturbance");
  s.routing.hw_grid_output = idx("hw_grid_output");
  s.routing.hw_measurement = idx("hw_measurement");
  s.routing.ctrl_measurement = idx("ctrl_measurement");
  s.routing.ctrl_reference = idx("ctrl_reference");
  s.routing.ctrl_actuation = idx("ctrl_actuation");
  s.pi_from_gamma = FrameTransform::identity();
  s.kappa_from_pi = FrameTransform::identity();
  s.pi_from_kappa = FrameTransform::identity();
  if (j.contains("transforms")) {
    const std::string tp = Reader::join(path, "transforms");
    const json& t = j.at("transforms");
    rd.object(t, tp, {"pi_from_gamma", "kappa_from_pi", "pi_from_kappa", "gamma_from_pi", "gamma_from_pi_pinv"});
    auto tr = [&](const char* key) { return rd.transform(t.at(key), Reader::join(tp, key)); };
    if (t.contains("pi_from_gamma")) s.pi_from_gamma = tr("pi_from_gamma");
    if (t.contains("kappa_from_pi")) s.kappa_from_pi = tr("kappa_from_pi");
    if (t.contains("pi_from_kappa")) s.pi_from_kappa = tr("pi_from_kappa");
    if (t.contains("gamma_from_pi")) s.gamma_from_pi = tr("gamma_from_pi");
    if (t.contains("gamma_from_pi_pinv")) s.gamma_from_pi_pinv = tr("gamma_from_pi_pinv");
  }
  s.reference = rd.reference(rd.at(j, path, "reference"), Reader::join(path, "reference"));
  s.setpoint = rd.signal(rd.at(j, path, "setpoint"), Reader::join(path, "setpoint"), s.reference->sigma_dim());
  s.operating_w_pi = rd.signal(rd.at(j, path, "operating_point"), Reader::join(path, "operating_point"),
                               static_cast<Index>(s.routing.hw_disturbance.size()));
  return s;
}

GridTopology parse_grid(const Reader& rd, const json& j, const std::string& path) {
  rd.object(j, path, {"nodes", "branches", "shunts"});
  GridTopology g;
  const std::string np = Reader::join(path, "nodes");
  const json& nodes = rd.array(rd.at(j, path, "nodes"), np);
  std::set<std::string> ids;
  for (size_t i = 0; i < nodes.size(); ++i) {
    const std::string p = Reader::join(np, i);
    rd.object(nodes[i], p, {"id", "kind"});
    GridNode n;
    n.id = rd.string(nodes[i], p, "id");
    n.forming = parse_kind(rd, rd.at(nodes[i], p, "kind"), Reader::join(p, "kind")) == CiderKind::forming;
    if (!ids.insert(n.id).second) rd.schema(Reader::join(p, "id"), "duplicate node id '" + n.id + "'");
    g.nodes.push_back(n);
  }
  const std::string bp = Reader::join(path, "branches");
  const json& branches = rd.array(rd.at(j, path, "branches"), bp);
  for (size_t i = 0; i < branches.size(); ++i) {
    const std::string p = Reader::join(bp, i);
    rd.object(branches[i], p, {"id", "from", "to", "R", "L"});
    GridBranch b;
    b.id = rd.string(branches[i], p, "id");
    b.from = rd.string(branches[i], p, "from");
    b.to = rd.string(branches[i], p, "to");
    for (const auto& end : {b.from, b.to})
      if (!ids.count(end)) rd.xref(p, "branch '" + b.id + "' references unknown node '" + end + "'");
    b.R = branches[i].contains("R") ? rd.matrix3(branches[i].at("R"), Reader::join(p, "R")) : Matrix3d::Zero();
    b.L = rd.matrix3(rd.at(branches[i], p, "L"), Reader::join(p, "L"));
    g.branches.push_back(b);
  }
  if (j.contains("shunts")) {
    const std::string sp = Reader::join(path, "shunts");
    const json& shunts = rd.array(j.at("shunts"), sp);
    for (size_t i = 0; i < shunts.size(); ++i) {
      const std::string p = Reader::join(sp, i);
      rd.object(shunts[i], p, {"node", "C"});
      GridShunt s;
      s.node = rd.string(shunts[i], p, "node");
      if (!ids.count(s.node)) rd.xref(p, "shunt references unknown node '" + s.node + "'");
      s.C = rd.matrix3(rd.at(shunts[i], p, "C"), Reader::join(p, "C"));
      g.shunts.push_back(s);
    }
  }
  g.validate();
  return g;
}

double resolve_number(const Reader& rd, const json& doc, const std::string& path, const std::string& where) {
  json::json_pointer ptr;
  try {
    ptr = resolve_path(doc, path);
  } catch (const Error& e) {
    rd.xref(where, e.what());
  }
  const json& v = doc.at(ptr);
  if (!v.is_number()) rd.xref(where, "parameter '" + path + "' is not a number");
  return v.get<double>();
}

// everything except the trial build
Scenario parse_document(const json& doc, const std::string& source) {
  Reader rd{source};
  rd.object(doc, "", {"name", "description", "system", "grid", "ciders", "sweeps", "analysis"});
  Scenario sc;
  sc.source = source;
  sc.document = doc;
  sc.name = doc.contains("name") ? rd.string(doc.at("name"), "name") : std::string("scenario");
  if (doc.contains("system")) {
    const json& s = doc.at("system");
    rd.object(s, "system", {"f1", "hmax"});
    sc.f1 = rd.number_or(s, "system", "f1", 50.0);
    if (!(sc.f1 > 0.0)) rd.schema("system.f1", "fundamental frequency must be positive");
    if (s.contains("hmax")) sc.hmax = rd.integer(s.at("hmax"), "system.hmax");
    if (sc.hmax < 0) rd.schema("system.hmax", "hmax must be nonnegative");
  }
  sc.grid = parse_grid(rd, rd.at(doc, "", "grid"), "grid");

  std::map<std::string, bool> node_forming;
  for (const auto& n : sc.grid.nodes) node_forming[n.id] = n.forming;
  std::set<std::string> names, hosts;
  if (doc.contains("ciders")) {
    const json& cs = rd.array(doc.at("ciders"), "ciders");
    for (size_t i = 0; i < cs.size(); ++i) {
      const std::string p = Reader::join("ciders", i);
      CiderEntry e;
      e.spec = parse_cider(rd, cs[i], p);
      e.node = rd.string(cs[i], p, "node");
      auto it = node_forming.find(e.node);
      if (it == node_forming.end()) rd.xref(Reader::join(p, "node"), "unknown node '" + e.node + "'");
      const bool forming = e.spec.kind == CiderKind::forming;
      if (it->second != forming)
        rd.xref(Reader::join(p, "kind"), std::string("a ") + (forming ? "forming" : "following") + " resource cannot sit at " +
                                             (it->second ? "forming" : "following") + " node '" + e.node + "'");
      if (!names.insert(e.spec.name).second) rd.schema(Reader::join(p, "name"), "duplicate resource name '" + e.spec.name + "'");
      if (!hosts.insert(e.node).second) rd.xref(Reader::join(p, "node"), "node '" + e.node + "' already hosts a resource");
      sc.ciders.push_back(std::move(e));
    }
  }

  if (doc.contains("sweeps")) {
    const json& ss = rd.array(doc.at("sweeps"), "sweeps");
    std::set<std::string> sweep_names;
    for (size_t i = 0; i < ss.size(); ++i) {
      const std::string p = Reader::join("sweeps", i);
      rd.object(ss[i], p, {"name", "parameter", "values", "from", "to", "count", "refine"});
      SweepDefinition d;
      d.name = rd.string(ss[i], p, "name");
      d.parameter = rd.string(ss[i], p, "parameter");
      if (ss[i].contains("values")) {
        d.values = rd.numbers(ss[i].at("values"), Reader::join(p, "values"));
      } else {
        const double a = rd.number(ss[i], p, "from");
        const double b = rd.number(ss[i], p, "to");
        const int n = rd.integer(rd.at(ss[i], p, "count"), Reader::join(p, "count"));
        for (int k = 0; k < n; ++k) d.values.push_back(n == 1 ? a : a + (b - a) * k / (n - 1));
      }
      if (d.values.size() < 2) rd.schema(p, "a sweep needs at least 2 values");
      if (ss[i].contains("refine")) {
        if (!ss[i].at("refine").is_boolean()) rd.schema(Reader::join(p, "refine"), "expected a boolean");
        d.refine = ss[i].at("refine").get<bool>();
      }
      if (!sweep_names.insert(d.name).second) rd.schema(Reader::join(p, "name"), "duplicate sweep name");
      resolve_number(rd, doc, d.parameter, Reader::join(p, "parameter"));
      sc.sweeps.push_back(std::move(d));
    }
  }

  if (doc.contains("analysis")) {
    const json& a = doc.at("analysis");
    const std::string ap = "analysis";
    rd.object(a, ap,
              {"epsilon", "delta", "relative_epsilon", "relative_delta", "margin", "hmax_probe", "control_parameters",
               "hardware_parameters", "perturbations", "htf_points"});
    AnalysisSettings& s = sc.analysis;
    if (a.contains("epsilon")) s.epsilon = rd.number(a.at("epsilon"), "analysis.epsilon");
    if (a.contains("delta")) s.delta = rd.number(a.at("delta"), "analysis.delta");
    s.relative_epsilon = rd.number_or(a, ap, "relative_epsilon", s.relative_epsilon);
    s.relative_delta = rd.number_or(a, ap, "relative_delta", s.relative_delta);
    s.margin = rd.number_or(a, ap, "margin", s.margin);
    if (a.contains("hmax_probe")) {
      s.hmax_probe = rd.integer(a.at("hmax_probe"), "analysis.hmax_probe");
      if (*s.hmax_probe < sc.hmax + 2) rd.schema("analysis.hmax_probe", "must be at least hmax + 2");
    }
    if (a.contains("control_parameters")) s.control_parameters = rd.strings(a.at("control_parameters"), "analysis.control_parameters");
    if (a.contains("hardware_parameters"))
      s.hardware_parameters = rd.strings(a.at("hardware_parameters"), "analysis.hardware_parameters");
    for (size_t i = 0; i < s.control_parameters.size(); ++i)
      resolve_number(rd, doc, s.control_parameters[i], Reader::join("analysis.control_parameters", i));
    for (size_t i = 0; i < s.hardware_parameters.size(); ++i)
      resolve_number(rd, doc, s.hardware_parameters[i], Reader::join("analysis.hardware_parameters", i));
    if (a.contains("perturbations")) {
      s.perturbations = rd.numbers(a.at("perturbations"), "analysis.perturbations");
      if (s.perturbations.empty()) rd.schema("analysis.perturbations", "expected at least one relative step");
    }
    if (a.contains("htf_points")) {
      const json& pts = rd.array(a.at("htf_points"), "analysis.htf_points");
      for (size_t i = 0; i < pts.size(); ++i) {
        const auto v = rd.numbers(pts[i], Reader::join("analysis.htf_points", i));
        if (v.size() != 2) rd.schema(Reader::join("analysis.htf_points", i), "expected [re, im]");
        s.htf_points.emplace_back(v[0], v[1]);
      }
    }
  }
  return sc;
}

Scenario with_hmax(Scenario sc, int hmax) {
  sc.hmax = hmax;
  sc.document["system"]["hmax"] = hmax;
  return sc;
}

std::pair<size_t, size_t> line_col(const std::string& text, size_t byte) {
  size_t line = 1, col = 1;
  for (size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

// --- loading

json::json_pointer resolve_path(const json& document, const std::string& path) {
  if (path.empty()) fail(ErrorKind::cross_reference, "empty parameter path");
  json::json_pointer ptr;
  const json* cur = &document;
  std::stringstream ss(path);
  std::string seg;
  while (std::getline(ss, seg, '.')) {
    if (seg.empty()) fail(ErrorKind::cross_reference, "parameter path '" + path + "' has an empty segment");
    if (cur->is_object()) {
      if (!cur->contains(seg)) fail(ErrorKind::cross_reference, "parameter path '" + path + "': no field '" + seg + "'");
      ptr /= seg;
      cur = &cur->at(seg);
    } else if (cur->is_array()) {
      size_t idx = cur->size();
      if (!seg.empty() && std::all_of(seg.begin(), seg.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        idx = std::stoul(seg);
      } else {
        for (size_t i = 0; i < cur->size(); ++i) {
          const json& e = (*cur)[i];
          if (e.is_object() && ((e.contains("name") && e["name"] == seg) || (e.contains("id") && e["id"] == seg))) {
            idx = i;
            break;
          }
        }
      }
      if (idx >= cur->size()) fail(ErrorKind::cross_reference, "parameter path '" + path + "': no element '" + seg + "'");
      ptr /= idx;
      cur = &(*cur)[idx];
    } else {
      fail(ErrorKind::cross_reference, "parameter path '" + path + "': '" + seg + "' goes below a scalar");
    }
  }
  return ptr;
}

Scenario scenario_from_json(const json& document, const std::string& source) {
  Scenario sc = parse_document(document, source);
  // trial build at low order so that every downstream precondition is
  // checked at load time
  try {
    build_system(sc, std::min(sc.hmax, 1));
  } catch (const Error& e) {
    if (!is_validation_error(e.kind())) throw;
    fail(e.kind(), source + ": " + e.what());
  }
  return sc;
}

Scenario parse_scenario(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte);
    std::string msg = e.what();
    const auto pos = msg.find("parse error");
    if (pos != std::string::npos) msg = msg.substr(pos);
    fail(ErrorKind::parse, source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
  }
  return scenario_from_json(doc, source);
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot read scenario '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path);
}

// --- building

BuiltSystem build_system(const Scenario& sc, std::optional<int> hmax) {
  BuiltSystem b;
  b.set = HarmonicIndexSet(hmax.value_or(sc.hmax), sc.f1);
  b.grid = build_grid_state_space(sc.grid);
  b.grid_hss = lift_grid_to_hss(b.grid, b.set);
  const auto order = sc.grid.ordered_nodes();
  std::vector<ResourceEntry> resources;
  for (const auto& node : order) {
    auto it = std::find_if(sc.ciders.begin(), sc.ciders.end(), [&](const CiderEntry& c) { return c.node == node; });
    const bool forming = std::find(b.grid.forming.begin(), b.grid.forming.end(), node) != b.grid.forming.end();
    if (it == sc.ciders.end()) {
      const std::string name = "junction:" + node;
      resources.push_back({name, node, forming, zero_injection_resource(name, b.set)});
      continue;
    }
    CiderHss c = assemble_cider_hss(it->spec, b.set);
    resources.push_back({c.name, node, forming, c.model});
    b.ciders.push_back(std::move(c));
  }
  b.open = build_open_loop(resources, b.grid_hss, order);
  b.closed = close_system(b.open);
  return b;
}

HssModel select_target(const BuiltSystem& b, const std::string& target) {
  if (target == "system") return b.closed.model;
  if (target == "grid") return b.grid_hss;
  if (target.rfind("cider:", 0) == 0) {
    const std::string name = target.substr(6);
    for (const auto& c : b.ciders)
      if (c.name == name) return c.model;
    fail(ErrorKind::cross_reference, "unknown resource '" + name + "' in target '" + target + "'");
  }
  fail(ErrorKind::configuration, "unknown target '" + target + "' (system, grid, cider:<name>)");
}

ScenarioFactory::ScenarioFactory(Scenario scenario, std::string target)
    : scenario_(std::move(scenario)), target_(std::move(target)) {}

HssModel ScenarioFactory::build(const ParameterOverrides& overrides, std::optional<int> hmax) const {
  if (overrides.empty()) return select_target(build_system(scenario_, hmax), target_);
  json doc = scenario_.document;
  for (const auto& [path, value] : overrides) {
    const auto ptr = resolve_path(doc, path);
    if (!doc.at(ptr).is_number()) fail(ErrorKind::cross_reference, "parameter '" + path + "' is not a number");
    doc.at(ptr) = value;
  }
  return select_target(build_system(parse_document(doc, scenario_.source), hmax.value_or(scenario_.hmax)), target_);
}

double ScenarioFactory::parameter_value(const std::string& path) const {
  const json& v = scenario_.document.at(resolve_path(scenario_.document, path));
  if (!v.is_number()) fail(ErrorKind::cross_reference, "parameter '" + path + "' is not a number");
  return v.get<double>();
}

// --- commands

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

void sort_records(std::vector<EigenRecord>& r) {
  std::stable_sort(r.begin(), r.end(), [](const EigenRecord& a, const EigenRecord& b) {
    if (a.value.real() != b.value.real()) return a.value.real() > b.value.real();
    return a.value.imag() < b.value.imag();
  });
  for (size_t k = 0; k < r.size(); ++k) r[k].index = static_cast<Index>(k);
}

double max_real(const VectorXcd& v, const std::vector<bool>& excluded) {
  double m = -std::numeric_limits<double>::infinity();
  for (Index k = 0; k < v.size(); ++k)
    if (!excluded[static_cast<size_t>(k)]) m = std::max(m, v[k].real());
  return m;
}

ResultSet header(const std::string& command, const Scenario& sc, const CommandOptions& o, int hmax) {
  ResultSet r;
  r.command = command;
  r.scenario = sc.name;
  r.target = o.target;
  r.hmax = hmax;
  r.f1 = sc.f1;
  return r;
}

void verdict(ResultSet& r, const VectorXcd& values, const std::vector<bool>& excluded, double margin) {
  const bool unstable = harmonically_unstable(values, excluded, margin);
  r.unstable = unstable;
  r.meta.emplace_back("max_re", format_number(max_real(values, excluded)));
  r.meta.emplace_back("margin", format_number(margin));
  r.meta.emplace_back("verdict", unstable ? "unstable" : "stable");
}

}  // namespace

ResultSet run_command(const std::string& command, const Scenario& scenario, const CommandOptions& o) {
  if (o.jobs < 1) fail(ErrorKind::configuration, "--jobs must be at least 1");
  const int hmax = o.hmax.value_or(scenario.hmax);
  if (hmax < 0) fail(ErrorKind::configuration, "hmax must be nonnegative");
  const Scenario sc = with_hmax(scenario, hmax);
  const AnalysisSettings& an = sc.analysis;
  ResultSet r = header(command, sc, o, hmax);

  if (command == "eig" || command == "classify") {
    const ScenarioFactory factory(sc, o.target);
    BuiltSystem built = build_system(sc);
    const HssModel model = select_target(built, o.target);
    EigenOptions eo;
    eo.residuals = true;
    const EigenSolution sol = eigen_decompose(model, eo);
    const auto prof = profile_eigenvectors(sol, hmax);
    const bool coupled = has_harmonic_coupling(model);
    std::vector<bool> suspect(static_cast<size_t>(sol.size()));
    for (Index k = 0; k < sol.size(); ++k)
      suspect[static_cast<size_t>(k)] = coupled && prof[static_cast<size_t>(k)].boundary_energy >= 0.5;

    std::vector<EigenClass> labels;
    if (command == "classify") {
      ClassificationOptions co;
      co.relative_steps = an.perturbations;
      co.epsilon = an.epsilon;
      co.relative_epsilon = an.relative_epsilon;
      co.nominal = sol.values;
      const auto& ctrl = o.control.empty() ? an.control_parameters : o.control;
      const auto& hw = o.hardware.empty() ? an.hardware_parameters : o.hardware;
      const EigenClassification cls = classify_eigenvalues(factory, ctrl, hw, co);
      labels = cls.labels;
      std::map<std::string, int> counts;
      for (auto l : labels) ++counts[to_string(l)];
      r.meta.emplace_back("epsilon", format_number(cls.epsilon));
      for (const char* k : {"CDV", "CDI", "DI", "unresolved"}) r.meta.emplace_back(std::string("count_") + k, std::to_string(counts[k]));
    }

    for (Index k = 0; k < sol.size(); ++k) {
      EigenRecord e;
      e.value = sol.values[k];
      e.dominant_component = prof[static_cast<size_t>(k)].dominant_component;
      e.dominant_harmonic = prof[static_cast<size_t>(k)].dominant_harmonic;
      e.spurious = suspect[static_cast<size_t>(k)];
      if (!labels.empty()) e.classification = to_string(labels[static_cast<size_t>(k)]);
      r.eigenvalues.push_back(std::move(e));
    }
    sort_records(r.eigenvalues);
    r.meta.emplace_back("states", std::to_string(model.states()));
    r.meta.emplace_back("harmonic_coupling", fmt_bool(coupled));
    r.meta.emplace_back("real_form", fmt_bool(sol.real_form));
    r.meta.emplace_back("spectral_radius", format_number(sol.spectral_radius()));
    if (o.target == "system") {
      r.meta.emplace_back("loop_triangular", fmt_bool(built.closed.certificate.triangular));
      r.meta.emplace_back("loop_determinant_re", format_number(built.closed.certificate.determinant.real()));
      r.meta.emplace_back("loop_determinant_im", format_number(built.closed.certificate.determinant.imag()));
    }
    verdict(r, sol.values, suspect, an.margin);
    return r;
  }

  if (command == "spurious") {
    const int probe = o.hmax_probe ? *o.hmax_probe : an.hmax_probe ? std::max(*an.hmax_probe, hmax + 2) : hmax + 3;
    const ScenarioFactory factory(sc, o.target);
    SpuriousOptions so;
    so.delta = an.delta;
    so.relative_delta = an.relative_delta;
    const SpuriousReport rep = detect_spurious(factory, hmax, probe, so);
    std::vector<bool> flagged(static_cast<size_t>(rep.values.size()));
    Index mismatches = 0, boundary = 0;
    for (Index k = 0; k < rep.values.size(); ++k) {
      flagged[static_cast<size_t>(k)] = rep.flagged(k);
      mismatches += rep.probe_mismatch[static_cast<size_t>(k)];
      boundary += rep.boundary_suspect[static_cast<size_t>(k)];
      EigenRecord e;
      e.value = rep.values[k];
      e.dominant_component = rep.dominant_component[static_cast<size_t>(k)];
      e.dominant_harmonic = rep.dominant_harmonic[static_cast<size_t>(k)];
      e.spurious = rep.flagged(k);
      if (e.spurious) e.classification = to_string(EigenClass::spurious);
      r.eigenvalues.push_back(std::move(e));
    }
    sort_records(r.eigenvalues);
    r.meta.emplace_back("hmax_probe", std::to_string(probe));
    r.meta.emplace_back("delta", format_number(rep.delta));
    r.meta.emplace_back("harmonic_coupling", fmt_bool(rep.coupled));
    r.meta.emplace_back("probe_mismatches", std::to_string(mismatches));
    r.meta.emplace_back("boundary_suspects", std::to_string(boundary));
    verdict(r, rep.values, flagged, an.margin);
    return r;
  }

  if (command == "sweep") {
    if (sc.sweeps.empty()) fail(ErrorKind::configuration, "scenario defines no sweeps");
    const SweepDefinition* def = &sc.sweeps.front();
    if (!o.sweep.empty()) {
      auto it = std::find_if(sc.sweeps.begin(), sc.sweeps.end(), [&](const SweepDefinition& d) { return d.name == o.sweep; });
      if (it == sc.sweeps.end()) fail(ErrorKind::cross_reference, "unknown sweep '" + o.sweep + "'");
      def = &*it;
    }
    const ScenarioFactory factory(sc, o.target);
    SweepOptions so;
    so.refine_on_crossing = def->refine;
    so.jobs = o.jobs;
    r.trace = sweep_parameter(factory, def->parameter, def->values, so);
    std::string unresolved, refined;
    for (size_t k = 0; k < r.trace->step_unresolved.size(); ++k) {
      if (r.trace->step_unresolved[k]) unresolved += (unresolved.empty() ? "" : " ") + std::to_string(k);
      if (r.trace->step_refined[k]) refined += (refined.empty() ? "" : " ") + std::to_string(k);
    }
    r.meta.emplace_back("sweep", def->name);
    r.meta.emplace_back("parameter", def->parameter);
    r.meta.emplace_back("refined_steps", refined.empty() ? "none" : refined);
    r.meta.emplace_back("unresolved_steps", unresolved.empty() ? "none" : unresolved);
    return r;
  }

  if (command == "htf") {
    const auto& pts = o.s_points.empty() ? an.htf_points : o.s_points;
    if (pts.empty()) fail(ErrorKind::configuration, "htf needs at least one evaluation point (--s or analysis.htf_points)");
    if (o.htf_input.empty() != o.htf_output.empty())
      fail(ErrorKind::configuration, "give both --input and --output segments, or neither");
    const HtfEvaluator ev(select_target(build_system(sc), o.target));
    for (const Complex& s : pts) {
      const MatrixXcd G = o.htf_input.empty() ? ev.evaluate(s) : ev.evaluate(s, o.htf_output, o.htf_input);
      for (Index i = 0; i < G.rows(); ++i)
        for (Index k = 0; k < G.cols(); ++k) r.htf.push_back({s, i, k, G(i, k)});
    }
    if (!o.htf_input.empty()) {
      r.meta.emplace_back("input", o.htf_input);
      r.meta.emplace_back("output", o.htf_output);
    }
    return r;
  }

  fail(ErrorKind::configuration, "unknown command '" + command + "' (eig, htf, sweep, classify, spurious)");
}

// --- export

namespace {

std::string timestamp_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string json_string(const std::string& s) { return json(s).dump(); }

std::string json_number(double v) { return std::isfinite(v) ? format_number(v) : "null"; }

}  // namespace

std::string format_results(const ResultSet& r, ExportFormat format, bool timestamp) {
  if (r.empty()) fail(ErrorKind::configuration, "nothing to export");
  std::ostringstream out;
  if (format == ExportFormat::csv) {
    if (timestamp) out << "# generated " << timestamp_now() << "\n";
    out << "# command=" << r.command << " scenario=" << r.scenario << " target=" << r.target << " hmax=" << r.hmax
        << " f1=" << format_number(r.f1) << "\n";
    for (const auto& [k, v] : r.meta) out << "# " << k << "=" << v << "\n";
    if (r.trace) {
      out << "param_value,trace_id,re,im\n";
      const auto& t = *r.trace;
      for (size_t k = 0; k < t.values.size(); ++k)
        for (size_t j = 0; j < t.traces.size(); ++j)
          out << format_number(t.values[k]) << "," << j << "," << format_number(t.traces[j][k].real()) << ","
              << format_number(t.traces[j][k].imag()) << "\n";
    } else if (!r.htf.empty()) {
      out << "s_re,s_im,row,col,re,im\n";
      for (const auto& h : r.htf)
        out << format_number(h.s.real()) << "," << format_number(h.s.imag()) << "," << h.row << "," << h.col << ","
            << format_number(h.value.real()) << "," << format_number(h.value.imag()) << "\n";
    } else {
      out << "index,re,im,dominant_component,dominant_harmonic,classification,spurious_flag\n";
      for (const auto& e : r.eigenvalues)
        out << e.index << "," << format_number(e.value.real()) << "," << format_number(e.value.imag()) << ","
            << csv_field(e.dominant_component) << "," << e.dominant_harmonic << "," << csv_field(e.classification) << ","
            << (e.spurious ? 1 : 0) << "\n";
    }
    return out.str();
  }

  out << "{\n";
  if (timestamp) out << "  \"generated\": " << json_string(timestamp_now()) << ",\n";
  out << "  \"command\": " << json_string(r.command) << ",\n";
  out << "  \"scenario\": " << json_string(r.scenario) << ",\n";
  out << "  \"target\": " << json_string(r.target) << ",\n";
  out << "  \"hmax\": " << r.hmax << ",\n";
  out << "  \"f1\": " << json_number(r.f1) << ",\n";
  out << "  \"meta\": {";
  for (size_t k = 0; k < r.meta.size(); ++k)
    out << (k ? ", " : "") << json_string(r.meta[k].first) << ": " << json_string(r.meta[k].second);
  out << "}";
  if (r.trace) {
    out << ",\n  \"traces\": [";
    const auto& t = *r.trace;
    bool first = true;
    for (size_t k = 0; k < t.values.size(); ++k)
      for (size_t j = 0; j < t.traces.size(); ++j) {
        out << (first ? "\n" : ",\n") << "    {\"param_value\": " << json_number(t.values[k]) << ", \"trace_id\": " << j
            << ", \"re\": " << json_number(t.traces[j][k].real()) << ", \"im\": " << json_number(t.traces[j][k].imag())
            << "}";
        first = false;
      }
    out << "\n  ]";
  }
  if (!r.htf.empty()) {
    out << ",\n  \"htf\": [";
    for (size_t k = 0; k < r.htf.size(); ++k) {
      const auto& h = r.htf[k];
      out << (k ? ",\n" : "\n") << "    {\"s_re\": " << json_number(h.s.real()) << ", \"s_im\": " << json_number(h.s.imag())
          << ", \"row\": " << h.row << ", \"col\": " << h.col << ", \"re\": " << json_number(h.value.real())
          << ", \"im\": " << json_number(h.value.imag()) << "}";
    }
    out << "\n  ]";
  }
  if (!r.eigenvalues.empty()) {
    out << ",\n  \"eigenvalues\": [";
    for (size_t k = 0; k < r.eigenvalues.size(); ++k) {
      const auto& e = r.eigenvalues[k];
      out << (k ? ",\n" : "\n") << "    {\"index\": " << e.index << ", \"re\": " << json_number(e.value.real())
          << ", \"im\": " << json_number(e.value.imag()) << ", \"dominant_component\": " << json_string(e.dominant_component)
          << ", \"dominant_harmonic\": " << e.dominant_harmonic << ", \"classification\": " << json_string(e.classification)
          << ", \"spurious_flag\": " << fmt_bool(e.spurious) << "}";
    }
    out << "\n  ]";
  }
  out << "\n}\n";
  return out.str();
}

void export_results(const ResultSet& r, ExportFormat format, const std::string& path, bool timestamp) {
  const std::string text = format_results(r, format, timestamp);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorKind::io, "cannot write '" + path + "'");
  f << text;
  f.flush();
  if (!f) fail(ErrorKind::io, "failed writing '" + path + "'");
}

}  // namespace hss
