#pragma once

// Fourier-series and Toeplitz machinery for harmonic-domain models.
//
// All harmonic vectors are stored h-major with ascending order: the block for
// h = -hmax comes first, and inside a block the channels keep their natural
// order. A signal with n channels over hmax therefore has (2*hmax+1)*n
// coefficients.

#include <complex>
#include <map>
#include <vector>

#include <Eigen/Dense>

namespace hss {

using Complex = std::complex<double>;
using Index = Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline constexpr double kPi = 3.141592653589793238462643383279502884;

class HarmonicIndexSet {
 public:
  HarmonicIndexSet(int hmax, double f1);

  int hmax() const { return hmax_; }
  double f1() const { return f1_; }
  double omega1() const { return 2.0 * kPi * f1_; }
  Index count() const { return 2 * static_cast<Index>(hmax_) + 1; }
  Index position(int h) const { return static_cast<Index>(h) + hmax_; }
  int order_at(Index position) const { return static_cast<int>(position) - hmax_; }
  bool contains(int h) const { return h >= -hmax_ && h <= hmax_; }

  HarmonicIndexSet with_hmax(int hmax) const { return {hmax, f1_}; }

  friend bool operator==(const HarmonicIndexSet&, const HarmonicIndexSet&) = default;

 private:
  int hmax_;
  double f1_;
};

/// Matrix-valued Fourier series A(t) = sum_h A_h exp(j h w1 t). Orders that
/// are not stored are zero.
class MatrixSeries {
 public:
  MatrixSeries() = default;
  MatrixSeries(Index rows, Index cols) : rows_(rows), cols_(cols) {}

  static MatrixSeries constant(const MatrixXcd& a0);
  static MatrixSeries constant(const MatrixXd& a0) { return constant(MatrixXcd(a0.cast<Complex>())); }
  static MatrixSeries identity(Index n);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  /// Largest |h| with a stored coefficient (0 for an empty series).
  int order() const;
  bool empty() const { return terms_.empty(); }

  /// Stores a coefficient; throws a shape error on dimension mismatch.
  void set(int h, const MatrixXcd& coeff);
  void add(int h, const MatrixXcd& coeff);
  MatrixXcd at(int h) const;
  const std::map<int, MatrixXcd>& terms() const { return terms_; }

  MatrixSeries scaled(Complex factor) const;
  MatrixSeries truncated(int order) const;
  /// True when A_{-h} = conj(A_h) for every h (real time-domain matrix).
  bool is_real_valued(double tol = 1e-12) const;
  /// Evaluates A(t).
  MatrixXcd evaluate(double t, double f1) const;

  friend MatrixSeries operator+(const MatrixSeries& a, const MatrixSeries& b);

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::map<int, MatrixXcd> terms_;
};

/// Block-diagonal combination of series (channel stacking).
MatrixSeries block_diagonal(const std::vector<MatrixSeries>& parts);

class HarmonicSignal {
 public:
  HarmonicSignal() : index_set_(0, 50.0), channels_(0), real_valued_(true) {}
  HarmonicSignal(HarmonicIndexSet index_set, Index channels, VectorXcd coeffs,
                 bool real_valued = false);

  static HarmonicSignal zero(HarmonicIndexSet index_set, Index channels, bool real_valued = true);
  /// Builds a signal from per-order coefficient vectors; for real-valued
  /// signals a missing negative order is filled with the conjugate.
  static HarmonicSignal from_orders(HarmonicIndexSet index_set, Index channels,
                                    const std::map<int, VectorXcd>& orders, bool real_valued);

  const HarmonicIndexSet& index_set() const { return index_set_; }
  Index channels() const { return channels_; }
  const VectorXcd& coeffs() const { return coeffs_; }
  bool real_valued() const { return real_valued_; }

  VectorXcd at(int h) const;
  /// x(t) = sum_h X_h exp(j h w1 t).
  VectorXcd evaluate(double t) const;
  bool conjugate_symmetric(double tol = 1e-12) const;

 private:
  HarmonicIndexSet index_set_;
  Index channels_;
  VectorXcd coeffs_;
  bool real_valued_;
};

/// Dense block-Toeplitz lift of a matrix series. Retains its generating
/// series so that it can be regridded.
class ToeplitzOperator {
 public:
  ToeplitzOperator() : index_set_(0, 50.0) {}

  const HarmonicIndexSet& index_set() const { return index_set_; }
  Index block_rows() const { return series_.rows(); }
  Index block_cols() const { return series_.cols(); }
  const MatrixSeries& series() const { return series_; }
  const MatrixXcd& matrix() const { return matrix_; }

  /// Block (i, k) for harmonic positions i, k in [0, 2*hmax].
  auto block(Index i, Index k) const {
    return matrix_.block(i * block_rows(), k * block_cols(), block_rows(), block_cols());
  }

 private:
  friend ToeplitzOperator toeplitz_from_fourier(const MatrixSeries&, const HarmonicIndexSet&);
  friend ToeplitzOperator regrid_truncation(const ToeplitzOperator&, int);

  ToeplitzOperator(HarmonicIndexSet index_set, MatrixSeries series, MatrixXcd matrix)
      : index_set_(index_set), series_(std::move(series)), matrix_(std::move(matrix)) {}

  HarmonicIndexSet index_set_;
  MatrixSeries series_;
  MatrixXcd matrix_;
};

/// Block (i, k) = A_{i-k}. Rejects series whose order exceeds hmax.
ToeplitzOperator toeplitz_from_fourier(const MatrixSeries& series, const HarmonicIndexSet& index_set);

/// Moves an operator to a new truncation order. Shrinking crops the central
/// blocks; growing re-runs the construction from the retained series.
ToeplitzOperator regrid_truncation(const ToeplitzOperator& op, int new_hmax);

/// Diagonal of the frequency-shift operator: 2*pi*f1*h repeated block_dim
/// times per order h.
VectorXd build_omega(const HarmonicIndexSet& index_set, Index block_dim);

/// Default DFT resolution: 8 samples per retained harmonic slot.
Index default_sample_count(const HarmonicIndexSet& index_set);

/// Uniform sample instants t_k = k / (n f1), k = 0..n-1.
VectorXd sample_times(const HarmonicIndexSet& index_set, Index n);

/// DFT of samples spanning exactly one fundamental period (rows = instants,
/// columns = channels).
HarmonicSignal fourier_from_samples(const MatrixXcd& samples, const HarmonicIndexSet& index_set);
/// Real samples: only h >= 0 is transformed and X_{-h} = conj(X_h) exactly.
HarmonicSignal fourier_from_samples(const MatrixXd& samples, const HarmonicIndexSet& index_set);

/// Fourier series of a real matrix trajectory sampled over one period;
/// samples[k] is the matrix at sample_times(index_set, n)[k].
MatrixSeries series_from_matrix_samples(const std::vector<MatrixXd>& samples,
                                        const HarmonicIndexSet& index_set);

// ---------------------------------------------------------------------------
// Harmonic-major <-> node-major regrouping

enum class Grouping { harmonic_major, node_major };

struct GroupingLayout {
  Grouping ordering = Grouping::harmonic_major;
  std::vector<Index> node_dims;
  HarmonicIndexSet index_set{0, 50.0};

  Index channels() const;
  Index dimension() const { return index_set.count() * channels(); }
  /// Harmonic order carried by each position of a vector in this layout.
  std::vector<int> orders() const;
  /// Node (group) index carried by each position.
  std::vector<Index> nodes() const;
  GroupingLayout with_ordering(Grouping target) const;
  GroupingLayout with_hmax(int hmax) const;
};

/// perm[i] = position in `layout` of the entry that lands at position i of
/// the target ordering.
std::vector<Index> grouping_permutation(const GroupingLayout& layout, Grouping target);

VectorXcd permute_grouping(const VectorXcd& v, const GroupingLayout& layout, Grouping target);
/// Similarity transform P M P^T for square matrices in `layout`.
MatrixXcd permute_grouping(const MatrixXcd& m, const GroupingLayout& layout, Grouping target);
MatrixXcd permute_rows(const MatrixXcd& m, const GroupingLayout& layout, Grouping target);
MatrixXcd permute_cols(const MatrixXcd& m, const GroupingLayout& layout, Grouping target);
MatrixXd permutation_matrix(const GroupingLayout& layout, Grouping target);

}  // namespace hss
