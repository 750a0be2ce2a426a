#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "hss/errors.hpp"
#include "hss/stability.hpp"

using namespace hss;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::numerical;
}

VectorXcd cvec(std::initializer_list<Complex> xs) {
  VectorXcd v(static_cast<Index>(xs.size()));
  Index k = 0;
  for (Complex x : xs) v[k++] = x;
  return v;
}

HssModel scalar(double a, int hmax) {
  MatrixXd A(1, 1), B(1, 1), C(1, 1), D(1, 1);
  A << a;
  B << 1.0;
  C << 1.0;
  D << 0.0;
  return lift_ltp(fx::lti(A, B, C, D), HarmonicIndexSet(hmax, 50.0), {"toy", "x", 1});
}

FunctionFactory scalar_factory(int hmax) {
  return FunctionFactory(
      [hmax](const ParameterOverrides& o, std::optional<int> h) {
        return scalar(o.count("a") ? -o.at("a") : -3.0, h.value_or(hmax));
      },
      {{"a", 3.0}});
}

}  // namespace

TEST_CASE("LAP picks the crossing assignment") {
  const Assignment a = match_eigenvalues(cvec({1.0, 2.0}), cvec({2.1, 0.9}));
  CHECK(a.match == std::vector<Index>{1, 0});
  CHECK(a.cost == doctest::Approx(0.2));
}

TEST_CASE("LAP on a known 3x3") {
  MatrixXd c(3, 3);
  c << 4, 1, 3, 2, 0, 5, 3, 2, 2;
  const Assignment a = solve_lap(c);
  CHECK(a.cost == doctest::Approx(5.0));
  CHECK(a.match == std::vector<Index>{1, 0, 2});
  CHECK(kind_of([] { solve_lap(MatrixXd::Zero(2, 3)); }) == ErrorKind::shape);
}

TEST_CASE("matching a permuted set is exact") {
  std::mt19937_64 rng(31);
  const VectorXcd a = fx::random_complex(rng, 12, 1);
  std::vector<Index> p(12);
  for (Index k = 0; k < 12; ++k) p[static_cast<size_t>(k)] = k;
  std::shuffle(p.begin(), p.end(), rng);
  VectorXcd b(12);
  for (Index k = 0; k < 12; ++k) b[p[static_cast<size_t>(k)]] = a[k];
  const Assignment m = match_eigenvalues(a, b);
  CHECK(m.match == p);
  CHECK(m.cost == 0.0);
}

TEST_CASE("folding to the fundamental strip") {
  const double w = fx::kTwoPi * 50.0;
  const Complex f = fold_one(Complex(-1.0, 3.0 * w + 10.0), 50.0);
  CHECK(f.real() == -1.0);
  CHECK(f.imag() == doctest::Approx(10.0));
  CHECK(fold_one(Complex(0.0, 0.5 * w), 50.0).imag() == doctest::Approx(0.5 * w));
  CHECK(fold_one(Complex(0.0, -0.5 * w), 50.0).imag() == doctest::Approx(0.5 * w));

  VectorXcd v(5);
  for (int h = -2; h <= 2; ++h) v[h + 2] = Complex(-2.0, 7.0 + h * w);
  const auto folded = fold_to_strip(v, 50.0);
  REQUIRE(folded.size() == 1);
  CHECK(folded[0].multiplicity == 5);
  CHECK(std::abs(folded[0].value - Complex(-2.0, 7.0)) < 1e-9);
  CHECK(kind_of([&] { fold_to_strip(v, 0.0); }) == ErrorKind::configuration);
}

TEST_CASE("HTF of a scalar LTI system") {
  const HssModel m = scalar(-2.0, 1);
  const double w = fx::kTwoPi * 50.0;
  const Complex s(0.5, 3.0);
  const MatrixXcd G = evaluate_htf(m, s);
  REQUIRE(G.rows() == 3);
  for (int h = -1; h <= 1; ++h) CHECK(std::abs(G(h + 1, h + 1) - 1.0 / (s + Complex(0.0, h * w) + 2.0)) < 1e-14);
  CHECK(std::abs(G(0, 1)) == 0.0);
  const HtfEvaluator e(m);
  CHECK((e.evaluate(s) - G).norm() < 1e-14);
  CHECK((e.evaluate(s, "y", "u") - G).norm() < 1e-14);
}

TEST_CASE("HTF at a pole is refused") {
  const HtfEvaluator e(scalar(-2.0, 1));
  CHECK(kind_of([&] { e.evaluate(Complex(-2.0, 0.0)); }) == ErrorKind::pole_proximity);
  CHECK(kind_of([&] { e.evaluate(Complex(-2.0, -fx::kTwoPi * 50.0)); }) == ErrorKind::pole_proximity);
}

TEST_CASE("sweep preconditions") {
  const FunctionFactory f = scalar_factory(1);
  CHECK(kind_of([&] { sweep_parameter(f, "a", {1.0}); }) == ErrorKind::configuration);
  CHECK(kind_of([&] { sweep_parameter(f, "b", {1.0, 2.0}); }) == ErrorKind::configuration);
  const EigenTrace t = sweep_parameter(f, "a", {1.0, 2.0, 3.0});
  REQUIRE(t.traces.size() == 3);
  for (const auto& tr : t.traces) {
    CHECK(tr[0].real() == doctest::Approx(-1.0));
    CHECK(tr[2].real() == doctest::Approx(-3.0));
    CHECK(tr[0].imag() == doctest::Approx(tr[2].imag()));
  }
}

TEST_CASE("classification evidence table") {
  CHECK(classify_from_evidence(1.0, 0.0, true, 0.1) == EigenClass::CDV);
  CHECK(classify_from_evidence(1.0, 1.0, true, 0.1) == EigenClass::CDV);
  CHECK(classify_from_evidence(0.0, 1.0, true, 0.1) == EigenClass::CDI);
  CHECK(classify_from_evidence(0.01, 0.01, true, 0.1) == EigenClass::DI);
  CHECK(classify_from_evidence(1.0, 1.0, false, 0.1) == EigenClass::unresolved);
  CHECK(to_string(EigenClass::CDI) == "CDI");
  CHECK(to_string(EigenClass::unresolved) == "unresolved");
}

TEST_CASE("classification preconditions") {
  const FunctionFactory f = scalar_factory(1);
  CHECK(kind_of([&] { classify_eigenvalues(f, {}, {"a"}); }) == ErrorKind::configuration);
  CHECK(kind_of([&] { classify_eigenvalues(f, {"a"}, {}); }) == ErrorKind::configuration);
}

TEST_CASE("spurious probe needs two extra harmonics") {
  const FunctionFactory f = scalar_factory(2);
  CHECK(kind_of([&] { detect_spurious(f, 2, 3); }) == ErrorKind::configuration);
  const SpuriousReport r = detect_spurious(f, 2, 4);
  CHECK_FALSE(r.coupled);
  for (Index k = 0; k < r.values.size(); ++k) CHECK_FALSE(r.flagged(k));
}

TEST_CASE("instability verdict honours exclusions and margin") {
  const VectorXcd v = cvec({{-1.0, 0.0}, {0.5, 2.0}});
  CHECK(harmonically_unstable(v, {false, false}));
  CHECK_FALSE(harmonically_unstable(v, {false, true}));
  CHECK_FALSE(harmonically_unstable(v, {false, false}, 1.0));
  CHECK(harmonically_unstable(v, {false, true}, -2.0));
}
