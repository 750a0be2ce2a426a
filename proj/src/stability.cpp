#include "hss/stability.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include <Eigen/LU>

#include "hss/errors.hpp"

namespace hss {

// --- HTF

HtfEvaluator::HtfEvaluator(HssModel model, double pole_tolerance) : model_(std::move(model)), tol_(pole_tolerance) {
  model_.validate();
  EigenOptions opt;
  opt.vectors = false;
  opt.residuals = false;
  poles_ = eigen_decompose(model_, opt).values;
}

void HtfEvaluator::check(Complex s) const {
  if (poles_.size() == 0) return;
  Index k = 0;
  const double d = (poles_.array() - s).abs().minCoeff(&k);
  if (d <= tol_) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "s = %.17g%+.17gj is within %.3g of the eigenvalue %.17g%+.17gj", s.real(), s.imag(), d,
                  poles_[k].real(), poles_[k].imag());
    fail(ErrorKind::pole_proximity, buf);
  }
}

MatrixXcd HtfEvaluator::evaluate(Complex s) const {
  check(s);
  MatrixXcd psi = -model_.A;
  const VectorXd w = model_.omega();
  for (Index i = 0; i < psi.rows(); ++i) psi(i, i) += s + Complex(0.0, w[i]);
  if (psi.rows() == 0) return model_.F;
  Eigen::PartialPivLU<MatrixXcd> lu(psi);
  return model_.C * lu.solve(model_.E) + model_.F;
}

MatrixXcd HtfEvaluator::evaluate(Complex s, const std::string& output, const std::string& input) const {
  check(s);
  MatrixXcd psi = -model_.A;
  const VectorXd w = model_.omega();
  for (Index i = 0; i < psi.rows(); ++i) psi(i, i) += s + Complex(0.0, w[i]);
  if (psi.rows() == 0) return model_.F_of(output, input);
  Eigen::PartialPivLU<MatrixXcd> lu(psi);
  return model_.C_of(output) * lu.solve(model_.E_of(input)) + model_.F_of(output, input);
}

MatrixXcd evaluate_htf(const HssModel& model, Complex s) { return HtfEvaluator(model).evaluate(s); }

// --- LAP

Assignment solve_lap(const MatrixXd& cost) {
  const Index n = cost.rows();
  if (cost.cols() != n) fail(ErrorKind::shape, "assignment needs a square cost matrix");
  if (!cost.allFinite()) fail(ErrorKind::numerical, "assignment cost matrix has non-finite entries");
  Assignment out;
  out.match.assign(static_cast<size_t>(n), -1);
  if (n == 0) return out;

  const double inf = std::numeric_limits<double>::infinity();
  // dual potentials: u on rows, v on columns; column reduction gives the start
  std::vector<double> u(static_cast<size_t>(n + 1), 0.0), v(static_cast<size_t>(n + 1), 0.0);
  for (Index j = 0; j < n; ++j) v[static_cast<size_t>(j + 1)] = cost.col(j).minCoeff();
  // col_owner[j] = row assigned to column j (1-based, 0 = free)
  std::vector<Index> col_owner(static_cast<size_t>(n + 1), 0), way(static_cast<size_t>(n + 1), 0);
  std::vector<double> minv(static_cast<size_t>(n + 1));
  std::vector<char> used(static_cast<size_t>(n + 1));

  for (Index i = 1; i <= n; ++i) {
    // shortest augmenting path from row i (Dijkstra on reduced costs)
    col_owner[0] = i;
    Index j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[static_cast<size_t>(j0)] = 1;
      const Index i0 = col_owner[static_cast<size_t>(j0)];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        if (used[static_cast<size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<size_t>(i0)] - v[static_cast<size_t>(j)];
        if (cur < minv[static_cast<size_t>(j)]) {
          minv[static_cast<size_t>(j)] = cur;
          way[static_cast<size_t>(j)] = j0;
        }
        if (minv[static_cast<size_t>(j)] < delta) {
          delta = minv[static_cast<size_t>(j)];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[static_cast<size_t>(j)]) {
          u[static_cast<size_t>(col_owner[static_cast<size_t>(j)])] += delta;
          v[static_cast<size_t>(j)] -= delta;
        } else {
          minv[static_cast<size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (col_owner[static_cast<size_t>(j0)] != 0);
    // augment along the path
    do {
      const Index j1 = way[static_cast<size_t>(j0)];
      col_owner[static_cast<size_t>(j0)] = col_owner[static_cast<size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  for (Index j = 1; j <= n; ++j) out.match[static_cast<size_t>(col_owner[static_cast<size_t>(j)] - 1)] = j - 1;
  for (Index i = 0; i < n; ++i) out.cost += cost(i, out.match[static_cast<size_t>(i)]);
  return out;
}

Assignment match_eigenvalues(const VectorXcd& first, const VectorXcd& second, const MatrixXcd* fv, const MatrixXcd* sv,
                             double overlap_weight) {
  const Index n = first.size();
  if (second.size() != n)
    fail(ErrorKind::shape, "cannot match eigenvalue sets of sizes " + std::to_string(n) + " and " + std::to_string(second.size()));
  std::vector<Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (first[a].real() != first[b].real()) return first[a].real() < first[b].real();
    return first[a].imag() < first[b].imag();
  });
  const bool overlap = overlap_weight > 0.0 && fv && sv && fv->cols() == n && sv->cols() == n;
  MatrixXd cost(n, n);
  for (Index r = 0; r < n; ++r) {
    const Index i = order[static_cast<size_t>(r)];
    for (Index j = 0; j < n; ++j) {
      double c = std::abs(first[i] - second[j]);
      if (overlap) c += overlap_weight * (1.0 - std::abs(fv->col(i).dot(sv->col(j))));
      cost(r, j) = c;
    }
  }
  const Assignment sorted = solve_lap(cost);
  Assignment out;
  out.match.assign(static_cast<size_t>(n), -1);
  for (Index r = 0; r < n; ++r) out.match[static_cast<size_t>(order[static_cast<size_t>(r)])] = sorted.match[static_cast<size_t>(r)];
  for (Index i = 0; i < n; ++i) out.cost += std::abs(first[i] - second[out.match[static_cast<size_t>(i)]]);
  return out;
}

// --- factories

FunctionFactory::FunctionFactory(Builder build, std::map<std::string, double> nominal)
    : build_(std::move(build)), nominal_(std::move(nominal)) {}

HssModel FunctionFactory::build(const ParameterOverrides& overrides, std::optional<int> hmax) const {
  for (const auto& [k, v] : overrides)
    if (!nominal_.count(k)) fail(ErrorKind::configuration, "unknown parameter '" + k + "'");
  return build_(overrides, hmax);
}

double FunctionFactory::parameter_value(const std::string& path) const {
  auto it = nominal_.find(path);
  if (it == nominal_.end()) fail(ErrorKind::configuration, "parameter path '" + path + "' does not resolve to a number");
  return it->second;
}

// --- sweeps

namespace {

struct Spectrum {
  VectorXcd values;
  MatrixXcd vectors;
};

Spectrum spectrum_at(const ModelFactory& f, const std::string& path, double value, bool vectors) {
  EigenOptions opt;
  opt.vectors = vectors;
  opt.residuals = false;
  EigenSolution s = eigen_decompose(f.build({{path, value}}), opt);
  return {std::move(s.values), std::move(s.vectors)};
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const size_t m = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(m), v.end());
  double hi = v[m];
  if (v.size() % 2) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<long>(m));
  return 0.5 * (lo + hi);
}

// a pair is ambiguous when some other eigenvalue of the next set is clearly
// closer than the partner the global assignment chose
bool ambiguous(const VectorXcd& prev, const VectorXcd& next, const Assignment& a, double tol) {
  for (Index i = 0; i < prev.size(); ++i) {
    const double d = std::abs(prev[i] - next[a.match[static_cast<size_t>(i)]]);
    const double nearest = (next.array() - prev[i]).abs().minCoeff();
    if (nearest < d - tol) return true;
  }
  return false;
}

std::vector<Spectrum> compute_spectra(const ModelFactory& f, const std::string& path, const std::vector<double>& values,
                                      bool vectors, int jobs) {
  std::vector<Spectrum> out(values.size());
  if (jobs <= 1 || values.size() < 2) {
    for (size_t k = 0; k < values.size(); ++k) out[k] = spectrum_at(f, path, values[k], vectors);
    return out;
  }
  std::atomic<size_t> next{0};
  std::vector<std::exception_ptr> errors(values.size());
  auto worker = [&] {
    for (size_t k = next++; k < values.size(); k = next++) {
      try {
        out[k] = spectrum_at(f, path, values[k], vectors);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const size_t n = std::min(values.size(), static_cast<size_t>(jobs));
  for (size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace

EigenTrace sweep_parameter(const ModelFactory& factory, const std::string& path, const std::vector<double>& values,
                           const SweepOptions& options) {
  if (values.size() < 2) fail(ErrorKind::configuration, "a sweep needs at least 2 parameter values");
  factory.parameter_value(path);
  const bool vectors = options.overlap_weight > 0.0;
  const auto spectra = compute_spectra(factory, path, values, vectors, options.jobs);

  EigenTrace tr;
  tr.parameter = path;
  tr.values = values;
  const Index n = spectra.front().values.size();
  tr.traces.assign(static_cast<size_t>(n), {});
  // cur[j] = index of trace j in the current spectrum
  std::vector<Index> cur(static_cast<size_t>(n));
  std::iota(cur.begin(), cur.end(), Index{0});
  for (Index j = 0; j < n; ++j) tr.traces[static_cast<size_t>(j)].push_back(spectra.front().values[j]);

  auto match = [&](const Spectrum& a, const Spectrum& b) {
    return match_eigenvalues(a.values, b.values, vectors ? &a.vectors : nullptr, vectors ? &b.vectors : nullptr,
                             options.overlap_weight);
  };

  for (size_t k = 0; k + 1 < spectra.size(); ++k) {
    const Spectrum& a = spectra[k];
    const Spectrum& b = spectra[k + 1];
    if (b.values.size() != n) fail(ErrorKind::numerical, "spectrum size changed along the sweep");
    const double scale = std::max({1.0, a.values.size() ? a.values.cwiseAbs().maxCoeff() : 0.0});
    const double tol = 1e-8 * scale;
    Assignment step = match(a, b);
    std::vector<double> pair(static_cast<size_t>(n));
    for (Index i = 0; i < n; ++i) pair[static_cast<size_t>(i)] = std::abs(a.values[i] - b.values[step.match[static_cast<size_t>(i)]]);
    const double med = median(pair);
    const double worst = pair.empty() ? 0.0 : *std::max_element(pair.begin(), pair.end());
    bool refined = false;
    bool unresolved = false;
    if (options.refine_on_crossing && worst > 10.0 * med && worst > tol) {
      const double mid_value = 0.5 * (values[k] + values[k + 1]);
      const Spectrum mid = spectrum_at(factory, path, mid_value, vectors);
      if (mid.values.size() != n) fail(ErrorKind::numerical, "spectrum size changed along the sweep");
      const Assignment s1 = match(a, mid);
      const Assignment s2 = match(mid, b);
      unresolved = ambiguous(a.values, mid.values, s1, tol) || ambiguous(mid.values, b.values, s2, tol);
      for (Index i = 0; i < n; ++i)
        step.match[static_cast<size_t>(i)] = s2.match[static_cast<size_t>(s1.match[static_cast<size_t>(i)])];
      step.cost = 0.0;
      for (Index i = 0; i < n; ++i) step.cost += std::abs(a.values[i] - b.values[step.match[static_cast<size_t>(i)]]);
      refined = true;
    } else {
      unresolved = ambiguous(a.values, b.values, step, tol);
    }
    tr.step_costs.push_back(step.cost);
    tr.step_refined.push_back(refined);
    tr.step_unresolved.push_back(unresolved);
    for (Index j = 0; j < n; ++j) {
      Index& c = cur[static_cast<size_t>(j)];
      c = step.match[static_cast<size_t>(c)];
      tr.traces[static_cast<size_t>(j)].push_back(b.values[c]);
    }
  }
  return tr;
}

// --- classification

std::string to_string(EigenClass c) {
  switch (c) {
    case EigenClass::CDV: return "CDV";
    case EigenClass::CDI: return "CDI";
    case EigenClass::DI: return "DI";
    case EigenClass::spurious: return "spurious";
    case EigenClass::unresolved: return "unresolved";
  }
  return "?";
}

EigenClass classify_from_evidence(double control, double hardware, bool matched, double eps) {
  if (!matched) return EigenClass::unresolved;
  if (control > eps) return EigenClass::CDV;
  if (hardware > eps) return EigenClass::CDI;
  return EigenClass::DI;
}

std::vector<EigenClass> EigenClassification::relabel(double eps) const {
  std::vector<EigenClass> out(matched.size());
  for (size_t k = 0; k < out.size(); ++k)
    out[k] = classify_from_evidence(control_displacement[k], hardware_displacement[k], matched[k], eps);
  return out;
}

EigenClassification classify_eigenvalues(const ModelFactory& factory, const std::vector<std::string>& control,
                                         const std::vector<std::string>& hardware, const ClassificationOptions& options) {
  if (control.empty()) fail(ErrorKind::configuration, "classification needs at least one control parameter");
  if (hardware.empty()) fail(ErrorKind::configuration, "classification needs at least one hardware parameter");
  if (options.relative_steps.empty()) fail(ErrorKind::configuration, "classification needs at least one perturbation step");
  std::map<std::string, double> nominal_values;
  for (const auto& p : control) nominal_values[p] = factory.parameter_value(p);
  for (const auto& p : hardware) nominal_values[p] = factory.parameter_value(p);

  EigenOptions opt;
  opt.vectors = false;
  opt.residuals = false;
  EigenClassification out;
  out.nominal = options.nominal ? *options.nominal : eigen_decompose(factory.build({}), opt).values;
  const Index n = out.nominal.size();
  out.control_displacement.assign(static_cast<size_t>(n), 0.0);
  out.hardware_displacement.assign(static_cast<size_t>(n), 0.0);
  out.matched.assign(static_cast<size_t>(n), true);
  const double radius = n ? out.nominal.cwiseAbs().maxCoeff() : 0.0;
  out.epsilon = options.epsilon ? *options.epsilon : options.relative_epsilon * radius;

  auto sweep = [&](const std::vector<std::string>& params, std::vector<double>& disp) {
    for (const auto& p : params) {
      const double p0 = nominal_values[p];
      for (double r : options.relative_steps) {
        VectorXcd vals;
        try {
          vals = eigen_decompose(factory.build({{p, p0 * (1.0 + r)}}), opt).values;
          if (vals.size() != n) throw Error(ErrorKind::numerical, "size changed");
        } catch (const Error&) {
          std::fill(out.matched.begin(), out.matched.end(), false);
          continue;
        }
        const Assignment a = match_eigenvalues(out.nominal, vals);
        for (Index i = 0; i < n; ++i)
          disp[static_cast<size_t>(i)] =
              std::max(disp[static_cast<size_t>(i)], std::abs(out.nominal[i] - vals[a.match[static_cast<size_t>(i)]]));
      }
    }
  };
  sweep(control, out.control_displacement);
  sweep(hardware, out.hardware_displacement);
  out.labels = out.relabel(out.epsilon);
  return out;
}

// --- folding

Complex fold_one(Complex lambda, double f1) {
  const double w = 2.0 * kPi * f1;
  const double k = std::ceil((lambda.imag() - 0.5 * w) / w);
  double im = lambda.imag() - k * w;
  // guard the half-open interval against rounding
  if (im <= -0.5 * w) im += w;
  if (im > 0.5 * w) im -= w;
  return {lambda.real(), im};
}

std::vector<FoldedEigenvalue> fold_to_strip(const VectorXcd& values, double f1, double merge_tol) {
  if (!(f1 > 0.0)) fail(ErrorKind::configuration, "fundamental frequency must be positive");
  std::vector<Complex> f(static_cast<size_t>(values.size()));
  for (Index k = 0; k < values.size(); ++k) f[static_cast<size_t>(k)] = fold_one(values[k], f1);
  std::sort(f.begin(), f.end(), [](Complex a, Complex b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  std::vector<FoldedEigenvalue> out;
  std::vector<bool> taken(f.size(), false);
  for (size_t i = 0; i < f.size(); ++i) {
    if (taken[i]) continue;
    FoldedEigenvalue rep{f[i], 1};
    taken[i] = true;
    for (size_t j = i + 1; j < f.size() && f[j].real() - f[i].real() <= merge_tol; ++j) {
      if (!taken[j] && std::abs(f[j] - f[i]) <= merge_tol) {
        taken[j] = true;
        ++rep.multiplicity;
      }
    }
    out.push_back(rep);
  }
  return out;
}

// --- spurious

bool has_harmonic_coupling(const HssModel& model) {
  const auto ord = model.state_orders();
  for (Index j = 0; j < model.A.cols(); ++j)
    for (Index i = 0; i < model.A.rows(); ++i)
      if (ord[static_cast<size_t>(i)] != ord[static_cast<size_t>(j)] && model.A(i, j) != Complex(0.0, 0.0)) return true;
  return false;
}

SpuriousReport detect_spurious(const HssModel& model, const HssModel& probe, const SpuriousOptions& options) {
  if (probe.index_set.hmax() < model.index_set.hmax() + 2)
    fail(ErrorKind::configuration, "probe hmax must be at least hmax + 2");
  EigenOptions with_vectors;
  with_vectors.residuals = false;
  EigenOptions values_only;
  values_only.vectors = false;
  values_only.residuals = false;
  const EigenSolution base = eigen_decompose(model, with_vectors);
  const EigenSolution pr = eigen_decompose(probe, values_only);
  const double f1 = model.index_set.f1();
  const double w = 2.0 * kPi * f1;

  SpuriousReport rep;
  rep.values = base.values;
  rep.hmax = model.index_set.hmax();
  rep.hmax_probe = probe.index_set.hmax();
  rep.coupled = has_harmonic_coupling(model);
  rep.delta = options.delta ? *options.delta : options.relative_delta * base.spectral_radius();
  const Index n = base.size();
  std::vector<Complex> folded_probe(static_cast<size_t>(pr.size()));
  for (Index k = 0; k < pr.size(); ++k) folded_probe[static_cast<size_t>(k)] = fold_one(pr.values[k], f1);
  const auto prof = profile_eigenvectors(base, rep.hmax);
  rep.probe_mismatch.assign(static_cast<size_t>(n), false);
  rep.boundary_suspect.assign(static_cast<size_t>(n), false);
  rep.probe_distance.assign(static_cast<size_t>(n), 0.0);
  rep.dominant_harmonic.assign(static_cast<size_t>(n), 0);
  rep.dominant_component.assign(static_cast<size_t>(n), {});
  for (Index k = 0; k < n; ++k) {
    const Complex f = fold_one(base.values[k], f1);
    double best = std::numeric_limits<double>::infinity();
    for (const Complex& q : folded_probe)
      for (int wrap = -1; wrap <= 1; ++wrap) best = std::min(best, std::abs(f - (q + Complex(0.0, wrap * w))));
    rep.probe_distance[static_cast<size_t>(k)] = best;
    rep.probe_mismatch[static_cast<size_t>(k)] = best > rep.delta;
    rep.dominant_harmonic[static_cast<size_t>(k)] = prof[static_cast<size_t>(k)].dominant_harmonic;
    rep.dominant_component[static_cast<size_t>(k)] = prof[static_cast<size_t>(k)].dominant_component;
    rep.boundary_suspect[static_cast<size_t>(k)] =
        rep.coupled && prof[static_cast<size_t>(k)].boundary_energy >= options.boundary_share;
  }
  return rep;
}

SpuriousReport detect_spurious(const ModelFactory& factory, int hmax, int hmax_probe, const SpuriousOptions& options) {
  if (hmax_probe < hmax + 2) fail(ErrorKind::configuration, "probe hmax must be at least hmax + 2");
  return detect_spurious(factory.build({}, hmax), factory.build({}, hmax_probe), options);
}

bool harmonically_unstable(const VectorXcd& values, const std::vector<bool>& excluded, double margin) {
  for (Index k = 0; k < values.size(); ++k) {
    if (static_cast<size_t>(k) < excluded.size() && excluded[static_cast<size_t>(k)]) continue;
    if (values[k].real() > margin) return true;
  }
  return false;
}

}  // namespace hss
