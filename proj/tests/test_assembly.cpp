#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "hss/assembly.hpp"
#include "hss/cider.hpp"
#include "hss/errors.hpp"

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

MatrixXcd kron_identity(Index n, const MatrixXd& m) {
  MatrixXcd out = MatrixXcd::Zero(n * m.rows(), n * m.cols());
  for (Index p = 0; p < n; ++p) out.block(p * m.rows(), p * m.cols(), m.rows(), m.cols()) = m.cast<Complex>();
  return out;
}

struct Plant {
  MatrixXd A, B, C, D;
};

Plant random_plant(std::mt19937_64& rng) {
  return {fx::random_stable(rng, 4), fx::random_matrix(rng, 4, 3), fx::random_matrix(rng, 2, 4),
          0.3 * fx::random_matrix(rng, 2, 3)};
}

HssModel open_model(const Plant& p, const HarmonicIndexSet& set) {
  const HssModel m = lift_ltp(fx::lti(p.A, p.B, p.C, p.D), set, {"plant", "x", 4});
  return split_inputs(m, "u", {{"w", {0, 1}}, {"x", {2}}});
}

}  // namespace

TEST_CASE("feedback closure matches the LTI closed loop") {
  std::mt19937_64 rng(21);
  for (int hmax : {0, 2}) {
    const HarmonicIndexSet set(hmax, 50.0);
    const Plant p = random_plant(rng);
    const MatrixXd J0 = fx::random_matrix(rng, 2, 2);
    const ClosedLoop cl = close_loop(open_model(p, set), {"w"}, kron_identity(set.count(), J0));

    const MatrixXd Bw = p.B.leftCols(2), Bx = p.B.rightCols(1);
    const MatrixXd Dw = p.D.leftCols(2), Dx = p.D.rightCols(1);
    const MatrixXd K = (MatrixXd::Identity(2, 2) - J0 * Dw).inverse() * J0;
    const MatrixXd Acl = p.A + Bw * K * p.C;
    const MatrixXd Ecl = Bx + Bw * K * Dx;
    const MatrixXd Ccl = (MatrixXd::Identity(2, 2) - Dw * J0).inverse() * p.C;
    const MatrixXd Fcl = (MatrixXd::Identity(2, 2) - Dw * J0).inverse() * Dx;
    const Index n = set.count();
    CHECK((cl.model.A - kron_identity(n, Acl)).norm() < 1e-10 * (1.0 + Acl.norm()));
    CHECK((cl.model.E - kron_identity(n, Ecl)).norm() < 1e-10 * (1.0 + Ecl.norm()));
    CHECK((cl.model.C - kron_identity(n, Ccl)).norm() < 1e-10 * (1.0 + Ccl.norm()));
    CHECK((cl.model.F - kron_identity(n, Fcl)).norm() < 1e-10 * (1.0 + Fcl.norm()));
    CHECK_FALSE(cl.certificate.triangular);
        // one copy of the LTI loop per harmonic
    const Complex det = std::pow(Complex((MatrixXd::Identity(2, 2) - J0 * Dw).determinant()), static_cast<double>(n));
    CHECK(std::abs(cl.certificate.determinant - det) < 1e-9 * std::abs(det));
    REQUIRE(cl.model.inputs.size() == 1);
    CHECK(cl.model.inputs[0].name == "x");
  }
}

TEST_CASE("strictly proper loop is certified triangular") {
  std::mt19937_64 rng(22);
  Plant p = random_plant(rng);
  p.D.setZero();
  const HarmonicIndexSet set(1, 50.0);
  const ClosedLoop cl = close_loop(open_model(p, set), {"w"}, kron_identity(set.count(), fx::random_matrix(rng, 2, 2)));
  CHECK(cl.certificate.triangular);
  CHECK(cl.certificate.determinant == Complex(1.0, 0.0));
}

TEST_CASE("singular algebraic loop is rejected") {
  std::mt19937_64 rng(23);
  Plant p = random_plant(rng);
  p.D.setZero();
  p.D.leftCols(2) = MatrixXd::Identity(2, 2);
  const HarmonicIndexSet set(1, 50.0);
  CHECK(kind_of([&] { close_loop(open_model(p, set), {"w"}, kron_identity(set.count(), MatrixXd::Identity(2, 2))); }) ==
        ErrorKind::well_posedness);
}

TEST_CASE("interconnection shape is checked") {
  std::mt19937_64 rng(24);
  const HarmonicIndexSet set(1, 50.0);
  const HssModel m = open_model(random_plant(rng), set);
  CHECK(kind_of([&] { close_loop(m, {"w"}, MatrixXcd::Zero(5, 6)); }) == ErrorKind::wiring);
  CHECK(kind_of([] { build_interconnection(3, 4); }) == ErrorKind::wiring);
}

TEST_CASE("interconnection swaps the two port groups") {
  const MatrixXcd J = build_interconnection(2, 2);
  MatrixXcd ref = MatrixXcd::Zero(4, 4);
  ref.topRightCorner(2, 2).setIdentity();
  ref.bottomLeftCorner(2, 2).setIdentity();
  CHECK((J - ref).norm() == 0.0);
}

TEST_CASE("resource stacking order and node checks") {
  const HarmonicIndexSet set(1, 50.0);
  ResourceEntry a{"a", "n1", false, zero_injection_resource("a", set)};
  ResourceEntry b{"b", "n2", true, zero_injection_resource("b", set)};
  CHECK(kind_of([&] { stack_resources({a, b}); }) == ErrorKind::configuration);
  CHECK(kind_of([] { stack_resources({}); }) == ErrorKind::configuration);
}
