#include "hss/harmonic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hss/errors.hpp"

namespace hss {

namespace {

std::string dims(Index r, Index c) { return std::to_string(r) + "x" + std::to_string(c); }

// exp(-j 2 pi h k / n) with the phase reduced exactly in integers first
Complex twiddle(long long h, long long k, long long n) {
  long long m = (h * k) % n;
  if (m < 0) m += n;
  const double angle = -2.0 * kPi * static_cast<double>(m) / static_cast<double>(n);
  return {std::cos(angle), std::sin(angle)};
}

// block (i,k) = A_{i-k} for every stored order; no check against hmax
MatrixXcd lift(const MatrixSeries& s, const HarmonicIndexSet& set) {
  const Index nh = set.count();
  const Index m = s.rows(), n = s.cols();
  MatrixXcd out = MatrixXcd::Zero(nh * m, nh * n);
  for (const auto& [h, a] : s.terms()) {
    for (Index k = 0; k < nh; ++k) {
      const Index i = k + h;
      if (i < 0 || i >= nh) continue;
      out.block(i * m, k * n, m, n) = a;
    }
  }
  return out;
}

}  // namespace

HarmonicIndexSet::HarmonicIndexSet(int hmax, double f1) : hmax_(hmax), f1_(f1) {
  if (hmax < 0) fail(ErrorKind::configuration, "hmax must be nonnegative, got " + std::to_string(hmax));
  if (!(f1 > 0.0) || !std::isfinite(f1))
    fail(ErrorKind::configuration, "fundamental frequency must be positive");
}

// --- MatrixSeries

MatrixSeries MatrixSeries::constant(const MatrixXcd& a0) {
  MatrixSeries s(a0.rows(), a0.cols());
  s.set(0, a0);
  return s;
}

MatrixSeries MatrixSeries::identity(Index n) { return constant(MatrixXcd(MatrixXcd::Identity(n, n))); }

int MatrixSeries::order() const {
  int o = 0;
  for (const auto& kv : terms_) o = std::max(o, std::abs(kv.first));
  return o;
}

void MatrixSeries::set(int h, const MatrixXcd& coeff) {
  if (coeff.rows() != rows_ || coeff.cols() != cols_)
    fail(ErrorKind::shape, "Fourier coefficient at h=" + std::to_string(h) + " is " +
                               dims(coeff.rows(), coeff.cols()) + ", series is " + dims(rows_, cols_));
  terms_[h] = coeff;
}

void MatrixSeries::add(int h, const MatrixXcd& coeff) {
  auto it = terms_.find(h);
  if (it == terms_.end()) {
    set(h, coeff);
    return;
  }
  if (coeff.rows() != rows_ || coeff.cols() != cols_)
    fail(ErrorKind::shape, "Fourier coefficient at h=" + std::to_string(h) + " has the wrong shape");
  it->second += coeff;
}

MatrixXcd MatrixSeries::at(int h) const {
  auto it = terms_.find(h);
  if (it == terms_.end()) return MatrixXcd::Zero(rows_, cols_);
  return it->second;
}

MatrixSeries MatrixSeries::scaled(Complex factor) const {
  MatrixSeries s(rows_, cols_);
  for (const auto& [h, a] : terms_) s.terms_[h] = factor * a;
  return s;
}

MatrixSeries MatrixSeries::truncated(int order) const {
  MatrixSeries s(rows_, cols_);
  for (const auto& [h, a] : terms_)
    if (std::abs(h) <= order) s.terms_[h] = a;
  return s;
}

bool MatrixSeries::is_real_valued(double tol) const {
  for (const auto& [h, a] : terms_) {
    if ((a - at(-h).conjugate()).cwiseAbs().maxCoeff() > tol) return false;
  }
  return true;
}

MatrixXcd MatrixSeries::evaluate(double t, double f1) const {
  MatrixXcd out = MatrixXcd::Zero(rows_, cols_);
  const double w = 2.0 * kPi * f1;
  for (const auto& [h, a] : terms_) out += std::polar(1.0, h * w * t) * a;
  return out;
}

MatrixSeries operator+(const MatrixSeries& a, const MatrixSeries& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    fail(ErrorKind::shape, "series sum: " + dims(a.rows(), a.cols()) + " vs " + dims(b.rows(), b.cols()));
  MatrixSeries s = a;
  for (const auto& [h, c] : b.terms()) s.add(h, c);
  return s;
}

MatrixSeries block_diagonal(const std::vector<MatrixSeries>& parts) {
  Index r = 0, c = 0;
  for (const auto& p : parts) {
    r += p.rows();
    c += p.cols();
  }
  MatrixSeries out(r, c);
  Index r0 = 0, c0 = 0;
  for (const auto& p : parts) {
    for (const auto& [h, a] : p.terms()) {
      MatrixXcd full = out.at(h);
      full.block(r0, c0, p.rows(), p.cols()) = a;
      out.set(h, full);
    }
    r0 += p.rows();
    c0 += p.cols();
  }
  return out;
}

// --- HarmonicSignal

HarmonicSignal::HarmonicSignal(HarmonicIndexSet index_set, Index channels, VectorXcd coeffs, bool real_valued)
    : index_set_(index_set), channels_(channels), coeffs_(std::move(coeffs)), real_valued_(real_valued) {
  if (channels_ <= 0) fail(ErrorKind::shape, "harmonic signal needs at least one channel");
  if (coeffs_.size() != index_set_.count() * channels_)
    fail(ErrorKind::shape, "harmonic signal length " + std::to_string(coeffs_.size()) + " != " +
                               std::to_string(index_set_.count() * channels_));
}

HarmonicSignal HarmonicSignal::zero(HarmonicIndexSet index_set, Index channels, bool real_valued) {
  return {index_set, channels, VectorXcd::Zero(index_set.count() * channels), real_valued};
}

HarmonicSignal HarmonicSignal::from_orders(HarmonicIndexSet index_set, Index channels,
                                           const std::map<int, VectorXcd>& orders, bool real_valued) {
  VectorXcd c = VectorXcd::Zero(index_set.count() * channels);
  for (const auto& [h, v] : orders) {
    if (v.size() != channels)
      fail(ErrorKind::shape, "coefficient at h=" + std::to_string(h) + " has " + std::to_string(v.size()) +
                                 " channels, expected " + std::to_string(channels));
    if (!index_set.contains(h)) continue;
    c.segment(index_set.position(h) * channels, channels) = v;
    if (real_valued && h != 0 && !orders.count(-h) && index_set.contains(-h))
      c.segment(index_set.position(-h) * channels, channels) = v.conjugate();
  }
  return {index_set, channels, std::move(c), real_valued};
}

VectorXcd HarmonicSignal::at(int h) const {
  if (!index_set_.contains(h)) return VectorXcd::Zero(channels_);
  return coeffs_.segment(index_set_.position(h) * channels_, channels_);
}

VectorXcd HarmonicSignal::evaluate(double t) const {
  VectorXcd x = VectorXcd::Zero(channels_);
  const double w = index_set_.omega1();
  for (int h = -index_set_.hmax(); h <= index_set_.hmax(); ++h) x += std::polar(1.0, h * w * t) * at(h);
  return x;
}

bool HarmonicSignal::conjugate_symmetric(double tol) const {
  for (int h = 0; h <= index_set_.hmax(); ++h)
    if ((at(h) - at(-h).conjugate()).cwiseAbs().maxCoeff() > tol) return false;
  return true;
}

// --- Toeplitz

ToeplitzOperator toeplitz_from_fourier(const MatrixSeries& series, const HarmonicIndexSet& index_set) {
  if (series.rows() <= 0 || series.cols() <= 0) fail(ErrorKind::shape, "empty coefficient dimensions");
  if (series.order() > index_set.hmax())
    fail(ErrorKind::shape, "series order " + std::to_string(series.order()) + " exceeds hmax " +
                               std::to_string(index_set.hmax()) + "; truncate explicitly");
  return ToeplitzOperator(index_set, series, lift(series, index_set));
}

ToeplitzOperator regrid_truncation(const ToeplitzOperator& op, int new_hmax) {
  const HarmonicIndexSet target = op.index_set().with_hmax(new_hmax);
  if (new_hmax == op.index_set().hmax()) return op;
  if (new_hmax < op.index_set().hmax()) {
    const Index off = op.index_set().hmax() - new_hmax;
    const Index m = op.block_rows(), n = op.block_cols();
    MatrixXcd crop = op.matrix().block(off * m, off * n, target.count() * m, target.count() * n);
    return ToeplitzOperator(target, op.series(), std::move(crop));
  }
  return ToeplitzOperator(target, op.series(), lift(op.series(), target));
}

VectorXd build_omega(const HarmonicIndexSet& index_set, Index block_dim) {
  if (block_dim < 1) fail(ErrorKind::shape, "omega block dimension must be positive");
  VectorXd d(index_set.count() * block_dim);
  const double w = index_set.omega1();
  for (Index p = 0; p < index_set.count(); ++p)
    d.segment(p * block_dim, block_dim).setConstant(w * index_set.order_at(p));
  return d;
}

// --- DFT

Index default_sample_count(const HarmonicIndexSet& index_set) { return 8 * index_set.count(); }

VectorXd sample_times(const HarmonicIndexSet& index_set, Index n) {
  VectorXd t(n);
  const double period = 1.0 / index_set.f1();
  for (Index k = 0; k < n; ++k) t[k] = period * static_cast<double>(k) / static_cast<double>(n);
  return t;
}

namespace {

void check_sample_count(Index n, const HarmonicIndexSet& set) {
  if (n < 2 * set.count())
    fail(ErrorKind::configuration, "need at least " + std::to_string(2 * set.count()) +
                                       " samples per period for hmax " + std::to_string(set.hmax()) +
                                       ", got " + std::to_string(n));
}

}  // namespace

HarmonicSignal fourier_from_samples(const MatrixXcd& samples, const HarmonicIndexSet& index_set) {
  const Index n = samples.rows(), ch = samples.cols();
  check_sample_count(n, index_set);
  VectorXcd c(index_set.count() * ch);
  for (int h = -index_set.hmax(); h <= index_set.hmax(); ++h) {
    VectorXcd acc = VectorXcd::Zero(ch);
    for (Index k = 0; k < n; ++k) acc += twiddle(h, k, n) * samples.row(k).transpose();
    c.segment(index_set.position(h) * ch, ch) = acc / static_cast<double>(n);
  }
  return {index_set, ch, std::move(c), false};
}

HarmonicSignal fourier_from_samples(const MatrixXd& samples, const HarmonicIndexSet& index_set) {
  const Index n = samples.rows(), ch = samples.cols();
  check_sample_count(n, index_set);
  VectorXcd c(index_set.count() * ch);
  for (int h = 0; h <= index_set.hmax(); ++h) {
    VectorXcd acc = VectorXcd::Zero(ch);
    for (Index k = 0; k < n; ++k) acc += twiddle(h, k, n) * samples.row(k).transpose().cast<Complex>();
    acc /= static_cast<double>(n);
    if (h == 0) acc = acc.real().cast<Complex>();
    c.segment(index_set.position(h) * ch, ch) = acc;
    c.segment(index_set.position(-h) * ch, ch) = acc.conjugate();
  }
  return {index_set, ch, std::move(c), true};
}

MatrixSeries series_from_matrix_samples(const std::vector<MatrixXd>& samples, const HarmonicIndexSet& index_set) {
  if (samples.empty()) fail(ErrorKind::shape, "no matrix samples");
  const Index r = samples.front().rows(), c = samples.front().cols();
  const Index n = static_cast<Index>(samples.size());
  MatrixXd flat(n, r * c);
  for (Index k = 0; k < n; ++k) {
    if (samples[k].rows() != r || samples[k].cols() != c) fail(ErrorKind::shape, "matrix samples differ in shape");
    flat.row(k) = Eigen::Map<const Eigen::RowVectorXd>(samples[k].data(), r * c);
  }
  const HarmonicSignal sig = fourier_from_samples(flat, index_set);
  MatrixSeries out(r, c);
  for (int h = -index_set.hmax(); h <= index_set.hmax(); ++h) {
    VectorXcd v = sig.at(h);
    if (v.cwiseAbs().maxCoeff() == 0.0) continue;
    out.set(h, Eigen::Map<const MatrixXcd>(v.data(), r, c));
  }
  return out;
}

// --- grouping

Index GroupingLayout::channels() const {
  return std::accumulate(node_dims.begin(), node_dims.end(), Index{0});
}

std::vector<int> GroupingLayout::orders() const {
  std::vector<int> out(static_cast<size_t>(dimension()));
  const Index d = channels();
  const Index nh = index_set.count();
  if (ordering == Grouping::harmonic_major) {
    for (Index p = 0; p < nh; ++p)
      for (Index c = 0; c < d; ++c) out[p * d + c] = index_set.order_at(p);
  } else {
    Index pos = 0;
    for (Index dn : node_dims)
      for (Index p = 0; p < nh; ++p)
        for (Index c = 0; c < dn; ++c) out[pos++] = index_set.order_at(p);
  }
  return out;
}

std::vector<Index> GroupingLayout::nodes() const {
  std::vector<Index> out(static_cast<size_t>(dimension()));
  const Index nh = index_set.count();
  Index pos = 0;
  if (ordering == Grouping::harmonic_major) {
    for (Index p = 0; p < nh; ++p)
      for (size_t j = 0; j < node_dims.size(); ++j)
        for (Index c = 0; c < node_dims[j]; ++c) out[pos++] = static_cast<Index>(j);
  } else {
    for (size_t j = 0; j < node_dims.size(); ++j)
      for (Index k = 0; k < nh * node_dims[j]; ++k) out[pos++] = static_cast<Index>(j);
  }
  return out;
}

GroupingLayout GroupingLayout::with_ordering(Grouping target) const {
  GroupingLayout l = *this;
  l.ordering = target;
  return l;
}

GroupingLayout GroupingLayout::with_hmax(int hmax) const {
  GroupingLayout l = *this;
  l.index_set = index_set.with_hmax(hmax);
  return l;
}

std::vector<Index> grouping_permutation(const GroupingLayout& layout, Grouping target) {
  const Index nh = layout.index_set.count();
  const Index d = layout.channels();
  std::vector<Index> perm(static_cast<size_t>(nh * d));
  if (layout.ordering == target) {
    std::iota(perm.begin(), perm.end(), Index{0});
    return perm;
  }
  // hm[node-major position] = harmonic-major position
  std::vector<Index> hm(perm.size());
  Index off = 0, pos = 0;
  for (Index dn : layout.node_dims) {
    for (Index p = 0; p < nh; ++p)
      for (Index c = 0; c < dn; ++c) hm[pos++] = p * d + off + c;
    off += dn;
  }
  if (target == Grouping::node_major) return hm;
  for (size_t i = 0; i < hm.size(); ++i) perm[hm[i]] = static_cast<Index>(i);
  return perm;
}

namespace {

void check_layout(Index n, const GroupingLayout& layout, const char* what) {
  if (n != layout.dimension())
    fail(ErrorKind::shape, std::string(what) + " dimension " + std::to_string(n) +
                               " does not match layout dimension " + std::to_string(layout.dimension()));
}

}  // namespace

VectorXcd permute_grouping(const VectorXcd& v, const GroupingLayout& layout, Grouping target) {
  check_layout(v.size(), layout, "vector");
  const auto perm = grouping_permutation(layout, target);
  VectorXcd out(v.size());
  for (size_t i = 0; i < perm.size(); ++i) out[i] = v[perm[i]];
  return out;
}

MatrixXcd permute_rows(const MatrixXcd& m, const GroupingLayout& layout, Grouping target) {
  check_layout(m.rows(), layout, "row");
  const auto perm = grouping_permutation(layout, target);
  MatrixXcd out(m.rows(), m.cols());
  for (size_t i = 0; i < perm.size(); ++i) out.row(i) = m.row(perm[i]);
  return out;
}

MatrixXcd permute_cols(const MatrixXcd& m, const GroupingLayout& layout, Grouping target) {
  check_layout(m.cols(), layout, "column");
  const auto perm = grouping_permutation(layout, target);
  MatrixXcd out(m.rows(), m.cols());
  for (size_t i = 0; i < perm.size(); ++i) out.col(i) = m.col(perm[i]);
  return out;
}

MatrixXcd permute_grouping(const MatrixXcd& m, const GroupingLayout& layout, Grouping target) {
  if (m.rows() != m.cols()) fail(ErrorKind::shape, "similarity regrouping needs a square matrix");
  return permute_cols(permute_rows(m, layout, target), layout, target);
}

MatrixXd permutation_matrix(const GroupingLayout& layout, Grouping target) {
  const auto perm = grouping_permutation(layout, target);
  MatrixXd p = MatrixXd::Zero(static_cast<Index>(perm.size()), static_cast<Index>(perm.size()));
  for (size_t i = 0; i < perm.size(); ++i) p(static_cast<Index>(i), perm[i]) = 1.0;
  return p;
}

}  // namespace hss
