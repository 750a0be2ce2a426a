#include "hss/eigen_solver.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>

#include "hss/errors.hpp"

extern "C" {
void dgeev_(const char* jobvl, const char* jobvr, const int* n, double* a, const int* lda, double* wr, double* wi,
            double* vl, const int* ldvl, double* vr, const int* ldvr, double* work, const int* lwork, int* info,
            size_t, size_t);
void zgeev_(const char* jobvl, const char* jobvr, const int* n, std::complex<double>* a, const int* lda,
            std::complex<double>* w, std::complex<double>* vl, const int* ldvl, std::complex<double>* vr,
            const int* ldvr, std::complex<double>* work, const int* lwork, double* rwork, int* info, size_t, size_t);
}

// OpenBLAS picks SkylakeX kernels on AVX-512 machines; with those, dgeev
// loops forever in dlahqr for n around 1000 (0.3.20). Pin the Haswell
// kernels before OpenBLAS initialises, unless the user chose otherwise.
__attribute__((constructor(101))) static void hss_pin_blas() {
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx512f")) setenv("OPENBLAS_CORETYPE", "Haswell", 0);
  setenv("OPENBLAS_NUM_THREADS", "1", 0);
}

namespace hss {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

std::string condition_note(const MatrixXcd& M) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "n=%lld, max|M|=%.3g, finite=%s", static_cast<long long>(M.rows()),
                M.size() ? M.cwiseAbs().maxCoeff() : 0.0, M.allFinite() ? "yes" : "no");
  return buf;
}

bool mirror_symmetric(const MatrixXcd& M, const std::vector<Index>& mirror) {
  const Index n = M.rows();
  if (static_cast<Index>(mirror.size()) != n) return false;
  const double scale = M.cwiseAbs().maxCoeff();
  const double tol = 1e-12 * (1.0 + scale);
  for (Index j = 0; j < n; ++j) {
    const Index mj = mirror[j];
    for (Index i = 0; i < n; ++i)
      if (std::abs(M(i, j) - std::conj(M(mirror[i], mj))) > tol) return false;
  }
  return true;
}

// basis of the unitary T: kind 0 = e_p, 1 = (e_p + e_q)/sqrt2, 2 = j(e_p - e_q)/sqrt2
struct Basis {
  int kind;
  Index p, q;
};

std::vector<Basis> real_basis(const std::vector<Index>& mirror) {
  std::vector<Basis> b;
  const Index n = static_cast<Index>(mirror.size());
  for (Index i = 0; i < n; ++i) {
    const Index m = mirror[i];
    if (m == i) b.push_back({0, i, i});
    else if (i < m) {
      b.push_back({1, i, m});
      b.push_back({2, i, m});
    }
  }
  return b;
}

EigenSolution solve_complex(const MatrixXcd& M, const EigenOptions& opt) {
  const int n = static_cast<int>(M.rows());
  MatrixXcd a = M;
  VectorXcd w(n);
  MatrixXcd vr(opt.vectors ? n : 1, opt.vectors ? n : 1);
  std::complex<double> dummy;
  const int one = 1, ldvr = opt.vectors ? n : 1;
  int info = 0, lwork = -1;
  std::vector<double> rwork(static_cast<size_t>(2 * std::max(n, 1)));
  std::complex<double> query;
  const char jl = 'N', jr = opt.vectors ? 'V' : 'N';
  zgeev_(&jl, &jr, &n, a.data(), &n, w.data(), &dummy, &one, vr.data(), &ldvr, &query, &lwork, rwork.data(), &info, 1, 1);
  lwork = std::max(1, static_cast<int>(query.real()));
  std::vector<std::complex<double>> work(static_cast<size_t>(lwork));
  zgeev_(&jl, &jr, &n, a.data(), &n, w.data(), &dummy, &one, vr.data(), &ldvr, work.data(), &lwork, rwork.data(), &info, 1, 1);
  if (info != 0)
    fail(ErrorKind::numerical, "complex eigensolver did not converge (info " + std::to_string(info) + ", " + condition_note(M) + ")");
  EigenSolution s;
  s.values = w;
  if (opt.vectors) s.vectors = vr;
  return s;
}

EigenSolution solve_real_form(const MatrixXcd& M, const std::vector<Index>& mirror, const EigenOptions& opt) {
  const Index n = M.rows();
  const auto basis = real_basis(mirror);
  // Y = M T
  MatrixXcd Y(n, n);
  for (Index k = 0; k < n; ++k) {
    const Basis& b = basis[static_cast<size_t>(k)];
    if (b.kind == 0) Y.col(k) = M.col(b.p);
    else if (b.kind == 1) Y.col(k) = (M.col(b.p) + M.col(b.q)) * kInvSqrt2;
    else Y.col(k) = (M.col(b.p) - M.col(b.q)) * Complex(0.0, kInvSqrt2);
  }
  // B = Re(T^H Y)
  Eigen::MatrixXd B(n, n);
  for (Index k = 0; k < n; ++k) {
    const Basis& b = basis[static_cast<size_t>(k)];
    if (b.kind == 0) B.row(k) = Y.row(b.p).real();
    else if (b.kind == 1) B.row(k) = (Y.row(b.p) + Y.row(b.q)).real() * kInvSqrt2;
    else B.row(k) = (Y.row(b.p) - Y.row(b.q)).imag() * kInvSqrt2;  // Re(-j z) = Im z
  }
  Y.resize(0, 0);

  const int ni = static_cast<int>(n);
  Eigen::MatrixXd a = B;
  Eigen::VectorXd wr(n), wi(n);
  Eigen::MatrixXd vr(opt.vectors ? n : 1, opt.vectors ? n : 1);
  double dummy = 0.0, query = 0.0;
  const int one = 1, ldvr = opt.vectors ? ni : 1;
  int info = 0, lwork = -1;
  const char jl = 'N', jr = opt.vectors ? 'V' : 'N';
  dgeev_(&jl, &jr, &ni, a.data(), &ni, wr.data(), wi.data(), &dummy, &one, vr.data(), &ldvr, &query, &lwork, &info, 1, 1);
  lwork = std::max(1, static_cast<int>(query));
  std::vector<double> work(static_cast<size_t>(lwork));
  dgeev_(&jl, &jr, &ni, a.data(), &ni, wr.data(), wi.data(), &dummy, &one, vr.data(), &ldvr, work.data(), &lwork, &info, 1, 1);
  if (info != 0)
    fail(ErrorKind::numerical, "real-form eigensolver did not converge (info " + std::to_string(info) + ", " + condition_note(M) + ")");

  EigenSolution s;
  s.real_form = true;
  s.values.resize(n);
  for (Index k = 0; k < n; ++k) s.values[k] = Complex(wr[k], wi[k]);
  if (!opt.vectors) return s;

  // eigenvectors of B (complex pairs stored as re/im columns), then v = T y
  MatrixXcd Yv(n, n);
  for (Index k = 0; k < n; ++k) {
    if (wi[k] == 0.0) {
      Yv.col(k) = vr.col(k).cast<Complex>();
    } else if (wi[k] > 0.0 && k + 1 < n) {
      Yv.col(k) = vr.col(k).cast<Complex>() + Complex(0.0, 1.0) * vr.col(k + 1).cast<Complex>();
      Yv.col(k + 1) = Yv.col(k).conjugate();
      ++k;
    }
  }
  for (Index k = 0; k < n; ++k) {
    const double nv = Yv.col(k).norm();
    if (nv > 0.0) Yv.col(k) /= nv;
  }
  if (opt.residuals) {
    // T is unitary, so ||M v - l v|| = ||B y - l y|| up to the dropped imaginary part of T^H M T
    const Eigen::MatrixXd Br = B * Yv.real();
    const Eigen::MatrixXd Bi = B * Yv.imag();
    s.residuals.resize(static_cast<size_t>(n));
    for (Index k = 0; k < n; ++k) {
      const VectorXcd r = Br.col(k).cast<Complex>() + Complex(0.0, 1.0) * Bi.col(k).cast<Complex>() - s.values[k] * Yv.col(k);
      s.residuals[static_cast<size_t>(k)] = r.norm();
      s.max_residual = std::max(s.max_residual, r.norm());
    }
  }
  s.vectors = MatrixXcd::Zero(n, n);
  for (Index k = 0; k < n; ++k) {
    const Basis& b = basis[static_cast<size_t>(k)];
    if (b.kind == 0) s.vectors.row(b.p) += Yv.row(k);
    else if (b.kind == 1) {
      s.vectors.row(b.p) += Yv.row(k) * kInvSqrt2;
      s.vectors.row(b.q) += Yv.row(k) * kInvSqrt2;
    } else {
      s.vectors.row(b.p) += Yv.row(k) * Complex(0.0, kInvSqrt2);
      s.vectors.row(b.q) -= Yv.row(k) * Complex(0.0, kInvSqrt2);
    }
  }
  return s;
}

EigenSolution solve_dense(const MatrixXcd& M, const std::vector<Index>& mirror, const EigenOptions& opt) {
  EigenSolution s;
  if (M.rows() == 0) return s;
  const bool real_form = opt.allow_real_form && !mirror.empty() && mirror_symmetric(M, mirror);
  s = real_form ? solve_real_form(M, mirror, opt) : solve_complex(M, opt);
  if (!opt.vectors) return s;
  for (Index k = 0; k < s.vectors.cols(); ++k) {
    const double nv = s.vectors.col(k).norm();
    if (nv > 0.0) s.vectors.col(k) /= nv;
  }
  if (opt.residuals && s.residuals.empty()) {
    const MatrixXcd R = M * s.vectors - s.vectors * s.values.asDiagonal();
    s.residuals.resize(static_cast<size_t>(R.cols()));
    for (Index k = 0; k < R.cols(); ++k) {
      s.residuals[static_cast<size_t>(k)] = R.col(k).norm();
      s.max_residual = std::max(s.max_residual, s.residuals[static_cast<size_t>(k)]);
    }
  }
  return s;
}

// Strongly connected components of the nonzero pattern (edge i -> j when
// |M(i, j)| > tol), iterative Tarjan.
std::vector<Index> strong_components(const MatrixXcd& M, double tol, Index& count) {
  const Index n = M.rows();
  std::vector<std::vector<Index>> adj(static_cast<size_t>(n));
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i)
      if (i != j && std::abs(M(i, j)) > tol) adj[static_cast<size_t>(i)].push_back(j);
  std::vector<Index> index(static_cast<size_t>(n), -1), low(static_cast<size_t>(n), 0), comp(static_cast<size_t>(n), -1);
  std::vector<Index> stack;
  std::vector<char> on_stack(static_cast<size_t>(n), 0);
  std::vector<std::pair<Index, size_t>> call;
  Index next = 0;
  count = 0;
  for (Index root = 0; root < n; ++root) {
    if (index[static_cast<size_t>(root)] >= 0) continue;
    call.push_back({root, 0});
    while (!call.empty()) {
      auto& [v, e] = call.back();
      const size_t vs = static_cast<size_t>(v);
      if (e == 0 && index[vs] < 0) {
        index[vs] = low[vs] = next++;
        stack.push_back(v);
        on_stack[vs] = 1;
      }
      if (e < adj[vs].size()) {
        const Index w = adj[vs][e++];
        const size_t ws = static_cast<size_t>(w);
        if (index[ws] < 0) call.push_back({w, 0});
        else if (on_stack[ws]) low[vs] = std::min(low[vs], index[ws]);
        continue;
      }
      if (low[vs] == index[vs]) {
        Index w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[static_cast<size_t>(w)] = 0;
          comp[static_cast<size_t>(w)] = count;
        } while (w != v);
        ++count;
      }
      const Index done = v;
      call.pop_back();
      if (!call.empty()) {
        const size_t ps = static_cast<size_t>(call.back().first);
        low[ps] = std::min(low[ps], low[static_cast<size_t>(done)]);
      }
    }
  }
  return comp;
}

}  // namespace

// Structurally decoupled blocks (e.g. the harmonic-parity split that Park
// transforms produce) are solved one at a time. Entries at roundoff level
// count as zeros.
EigenSolution eigen_decompose_matrix(const MatrixXcd& M, const std::vector<Index>& mirror, const EigenOptions& opt) {
  if (M.rows() != M.cols()) fail(ErrorKind::shape, "eigenproblem needs a square matrix");
  if (!M.allFinite()) fail(ErrorKind::numerical, "system matrix has non-finite entries (" + condition_note(M) + ")");
  const Index n = M.rows();
  if (n == 0) return {};
  Index ncomp = 0;
  const double tol = 64.0 * std::numeric_limits<double>::epsilon() * M.cwiseAbs().maxCoeff();
  const std::vector<Index> comp = strong_components(M, tol, ncomp);
  if (ncomp <= 1) return solve_dense(M, mirror, opt);
  bool diagonal = true;
  for (Index j = 0; j < n && diagonal; ++j)
    for (Index i = 0; i < n; ++i)
      if (comp[static_cast<size_t>(i)] != comp[static_cast<size_t>(j)] && std::abs(M(i, j)) > tol) {
        diagonal = false;
        break;
      }
  // eigenvectors of a block-triangular matrix need back substitution
  if (opt.vectors && !diagonal) return solve_dense(M, mirror, opt);

  std::vector<std::vector<Index>> members(static_cast<size_t>(ncomp));
  for (Index i = 0; i < n; ++i) members[static_cast<size_t>(comp[static_cast<size_t>(i)])].push_back(i);
  const bool use_mirror = static_cast<Index>(mirror.size()) == n;

  EigenSolution s;
  s.values.resize(n);
  if (opt.vectors) s.vectors = MatrixXcd::Zero(n, n);
  if (opt.vectors && opt.residuals) s.residuals.assign(static_cast<size_t>(n), 0.0);
  std::vector<char> done(static_cast<size_t>(ncomp), 0);
  Index col = 0;
  auto place = [&](const std::vector<Index>& idx, const EigenSolution& b) {
    const Index m = static_cast<Index>(idx.size());
    for (Index k = 0; k < m; ++k) {
      s.values[col + k] = b.values[k];
      if (opt.vectors)
        for (Index r = 0; r < m; ++r) s.vectors(idx[static_cast<size_t>(r)], col + k) = b.vectors(r, k);
      if (opt.vectors && opt.residuals) s.residuals[static_cast<size_t>(col + k)] = b.residuals[static_cast<size_t>(k)];
    }
    s.max_residual = std::max(s.max_residual, b.max_residual);
    s.real_form = s.real_form || b.real_form;
    col += m;
  };

  for (Index c = 0; c < ncomp; ++c) {
    if (done[static_cast<size_t>(c)]) continue;
    const auto& idx = members[static_cast<size_t>(c)];
    const Index m = static_cast<Index>(idx.size());
    const MatrixXcd sub = M(idx, idx);
    // where does the mirror send this block?
    Index image = -1;
    if (use_mirror) {
      image = comp[static_cast<size_t>(mirror[static_cast<size_t>(idx.front())])];
      for (Index i : idx)
        if (comp[static_cast<size_t>(mirror[static_cast<size_t>(i)])] != image) image = -1;
    }
    std::vector<Index> local;
    if (image == c) {
      std::vector<Index> pos(static_cast<size_t>(n), -1);
      for (Index k = 0; k < m; ++k) pos[static_cast<size_t>(idx[static_cast<size_t>(k)])] = k;
      for (Index i : idx) local.push_back(pos[static_cast<size_t>(mirror[static_cast<size_t>(i)])]);
    }
    const EigenSolution b = solve_dense(sub, local, opt);
    place(idx, b);
    done[static_cast<size_t>(c)] = 1;
    if (image >= 0 && image != c && !done[static_cast<size_t>(image)]) {
      // mirror image block: conjugate eigenvalues, mirrored conjugate vectors
      const auto& jdx = members[static_cast<size_t>(image)];
      EigenSolution mb;
      mb.values = b.values.conjugate();
      mb.residuals = b.residuals;
      mb.max_residual = b.max_residual;
      if (opt.vectors) {
        std::vector<Index> pos(static_cast<size_t>(n), -1);
        for (size_t k = 0; k < jdx.size(); ++k) pos[static_cast<size_t>(jdx[k])] = static_cast<Index>(k);
        mb.vectors = MatrixXcd::Zero(m, m);
        for (Index r = 0; r < m; ++r)
          mb.vectors.row(pos[static_cast<size_t>(mirror[static_cast<size_t>(idx[static_cast<size_t>(r)])])]) = b.vectors.row(r).conjugate();
      }
      place(jdx, mb);
      done[static_cast<size_t>(image)] = 1;
    }
  }
  return s;
}

std::vector<Index> harmonic_mirror(const HssModel& model) {
  std::vector<Index> m(static_cast<size_t>(model.states()));
  const Index nh = model.index_set.count();
  Index off = 0;
  for (const auto& g : model.state_groups) {
    for (Index p = 0; p < nh; ++p)
      for (Index c = 0; c < g.dim; ++c) m[static_cast<size_t>(off + p * g.dim + c)] = off + (nh - 1 - p) * g.dim + c;
    off += nh * g.dim;
  }
  return m;
}

EigenSolution eigen_decompose(const HssModel& model, const EigenOptions& opt) {
  model.validate();
  EigenSolution s = eigen_decompose_matrix(model.system_matrix(), harmonic_mirror(model), opt);
  const auto orders = model.state_orders();
  const auto groups = model.state_group_index();
  s.labels.resize(orders.size());
  for (size_t i = 0; i < orders.size(); ++i) {
    const auto& g = model.state_groups[static_cast<size_t>(groups[i])];
    s.labels[i] = {g.component, g.block, orders[i]};
  }
  return s;
}

std::vector<EigenvectorProfile> profile_eigenvectors(const EigenSolution& sol, int hmax) {
  std::vector<EigenvectorProfile> out(static_cast<size_t>(sol.vectors.cols()));
  for (Index k = 0; k < sol.vectors.cols(); ++k) {
    std::map<int, double> by_h;
    std::map<std::string, double> by_c;
    double total = 0.0;
    for (Index i = 0; i < sol.vectors.rows(); ++i) {
      const double e = std::norm(sol.vectors(i, k));
      const auto& l = sol.labels[static_cast<size_t>(i)];
      by_h[l.harmonic] += e;
      by_c[l.component + "/" + l.block] += e;
      total += e;
    }
    auto& p = out[static_cast<size_t>(k)];
    double best = -1.0;
    for (const auto& [h, e] : by_h)
      if (e > best) {
        best = e;
        p.dominant_harmonic = h;
      }
    best = -1.0;
    for (const auto& [c, e] : by_c)
      if (e > best) {
        best = e;
        p.dominant_component = c;
      }
    double edge = 0.0;
    for (const auto& [h, e] : by_h)
      if (std::abs(h) >= hmax - 1) edge += e;
    p.boundary_energy = total > 0.0 ? edge / total : 0.0;
  }
  return out;
}

}  // namespace hss
