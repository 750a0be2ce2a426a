#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "hss/errors.hpp"
#include "hss/harmonic.hpp"

using namespace hss;

namespace {

MatrixSeries random_series(std::mt19937_64& rng, Index r, Index c, int order) {
  MatrixSeries s(r, c);
  for (int h = -order; h <= order; ++h) s.set(h, fx::random_complex(rng, r, c));
  return s;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::numerical;
}

}  // namespace

TEST_CASE("toeplitz blocks hold A_{i-k}") {
  std::mt19937_64 rng(1);
  const HarmonicIndexSet set(3, 50.0);
  const MatrixSeries s = random_series(rng, 2, 3, 2);
  const ToeplitzOperator T = toeplitz_from_fourier(s, set);
  CHECK(T.matrix().rows() == 14);
  CHECK(T.matrix().cols() == 21);
  for (Index i = 0; i < set.count(); ++i)
    for (Index k = 0; k < set.count(); ++k) {
      const int d = set.order_at(i) - set.order_at(k);
      CHECK((MatrixXcd(T.block(i, k)) - s.at(d)).norm() == 0.0);
    }
}

TEST_CASE("toeplitz rejects series longer than hmax") {
  std::mt19937_64 rng(2);
  const MatrixSeries s = random_series(rng, 1, 1, 4);
  CHECK(kind_of([&] { toeplitz_from_fourier(s, HarmonicIndexSet(3, 50.0)); }) == ErrorKind::shape);
}

TEST_CASE("index set validation") {
  CHECK(kind_of([] { HarmonicIndexSet(-1, 50.0); }) == ErrorKind::configuration);
  CHECK(kind_of([] { HarmonicIndexSet(2, 0.0); }) == ErrorKind::configuration);
  const HarmonicIndexSet set(4, 60.0);
  CHECK(set.count() == 9);
  CHECK(set.position(-4) == 0);
  CHECK(set.order_at(8) == 4);
}

TEST_CASE("omega follows the harmonic order") {
  const HarmonicIndexSet set(2, 50.0);
  const VectorXd w = build_omega(set, 3);
  REQUIRE(w.size() == 15);
  for (Index p = 0; p < 5; ++p)
    for (Index c = 0; c < 3; ++c) CHECK(w[p * 3 + c] == doctest::Approx(set.omega1() * set.order_at(p)));
}

TEST_CASE("DFT of a shifted cosine") {
  const HarmonicIndexSet set(5, 50.0);
  const Index n = default_sample_count(set);
  const VectorXd t = sample_times(set, n);
  MatrixXd x(n, 1);
  const double amp = 3.0, phi = 0.7;
  for (Index k = 0; k < n; ++k) x(k, 0) = 1.5 + amp * std::cos(2.0 * set.omega1() * t[k] + phi);
  const HarmonicSignal X = fourier_from_samples(x, set);
  CHECK(std::abs(X.at(0)[0] - Complex(1.5, 0.0)) < 1e-12);
  CHECK(std::abs(X.at(2)[0] - 0.5 * amp * std::polar(1.0, phi)) < 1e-12);
  CHECK(std::abs(X.at(-2)[0] - 0.5 * amp * std::polar(1.0, -phi)) < 1e-12);
  CHECK(std::abs(X.at(1)[0]) < 1e-12);
  CHECK(X.conjugate_symmetric());
  for (Index k = 0; k < n; k += 7) CHECK(std::abs(X.evaluate(t[k])[0] - x(k, 0)) < 1e-10);
}

TEST_CASE("toeplitz product is the truncated convolution") {
  std::mt19937_64 rng(3);
  const HarmonicIndexSet set(6, 50.0);
  const MatrixSeries a = random_series(rng, 2, 2, 2);
  const VectorXcd x = fx::random_complex(rng, 2 * set.count(), 1);
  const VectorXcd y = toeplitz_from_fourier(a, set).matrix() * x;
  for (int h = -6; h <= 6; ++h) {
    VectorXcd ref = VectorXcd::Zero(2);
    for (int k = -6; k <= 6; ++k)
      if (std::abs(h - k) <= 2) ref += a.at(h - k) * x.segment(set.position(k) * 2, 2);
    CHECK((y.segment(set.position(h) * 2, 2) - ref).norm() < 1e-12);
  }
}

TEST_CASE("regridding crops and regrows") {
  std::mt19937_64 rng(4);
  const MatrixSeries a = random_series(rng, 2, 2, 1);
  const ToeplitzOperator big = toeplitz_from_fourier(a, HarmonicIndexSet(5, 50.0));
  const ToeplitzOperator small = toeplitz_from_fourier(a, HarmonicIndexSet(2, 50.0));
  CHECK((regrid_truncation(big, 2).matrix() - small.matrix()).norm() == 0.0);
  CHECK((regrid_truncation(small, 5).matrix() - big.matrix()).norm() == 0.0);
}

TEST_CASE("grouping permutation round trip") {
  GroupingLayout l;
  l.node_dims = {3, 2, 3};
  l.index_set = HarmonicIndexSet(2, 50.0);
  std::mt19937_64 rng(5);
  const VectorXcd v = fx::random_complex(rng, l.dimension(), 1);
  const VectorXcd w = permute_grouping(v, l, Grouping::node_major);
  const VectorXcd back = permute_grouping(w, l.with_ordering(Grouping::node_major), Grouping::harmonic_major);
  CHECK((back - v).norm() == 0.0);
  // node-major: all harmonics of node 0 first
  const auto orders = l.with_ordering(Grouping::node_major).orders();
  CHECK(orders[0] == -2);
  CHECK(orders[3] == -1);
  CHECK(w[0] == v[0]);
  CHECK(w[3] == v[8]);
}

TEST_CASE("series from matrix samples recovers the coefficients") {
  const HarmonicIndexSet set(3, 50.0);
  std::mt19937_64 rng(6);
  MatrixSeries a(2, 2);
  const MatrixXcd a1 = fx::random_complex(rng, 2, 2);
  a.set(0, fx::random_matrix(rng, 2, 2).cast<Complex>());
  a.set(1, a1);
  a.set(-1, a1.conjugate());
  const Index n = default_sample_count(set);
  const VectorXd t = sample_times(set, n);
  std::vector<MatrixXd> samples;
  for (Index k = 0; k < n; ++k) samples.push_back(a.evaluate(t[k], set.f1()).real());
  const MatrixSeries b = series_from_matrix_samples(samples, set);
  for (int h = -3; h <= 3; ++h) CHECK((b.at(h) - a.at(h)).norm() < 1e-12);
  CHECK(b.is_real_valued());
}
