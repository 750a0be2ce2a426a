#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "hss/eigen_solver.hpp"
#include "hss/errors.hpp"
#include "hss/grid.hpp"

using namespace hss;

namespace {

Error error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  FAIL("no error raised");
  return Error(ErrorKind::numerical, "");
}

}  // namespace

TEST_CASE("RLC branch has the analytic roots") {
  const double R = 0.4, L = 2e-3, C = 40e-6;
  const GridStateSpace g = build_grid_state_space(fx::rlc_topology(R, L, C));
  REQUIRE(g.A.rows() == 6);
  const VectorXcd ev = fx::oracle_eigenvalues(g.A);
  const auto [p, q] = fx::rlc_roots(R, L, C);
  VectorXcd ref(6);
  ref << p, p, p, q, q, q;
  CHECK(fx::multiset_distance(ev, ref) < 1e-10);
}

TEST_CASE("ports and incidence") {
  const GridStateSpace g = build_grid_state_space(fx::rlc_topology(0.1, 1e-3, 1e-5));
  CHECK(g.forming == std::vector<std::string>{"s"});
  CHECK(g.following == std::vector<std::string>{"r"});
  CHECK(g.E.cols() == 6);
  CHECK(g.C.rows() == 6);
  CHECK(g.incidence.rows() == 3);
  CHECK(g.incidence.cols() == 6);
  CHECK(std::abs(g.incidence.block(0, 0, 3, 3).trace()) == doctest::Approx(3.0));
  CHECK(g.incidence.block(0, 0, 3, 3).trace() == -g.incidence.block(0, 3, 3, 3).trace());
}

TEST_CASE("random SPD topologies are passive") {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 10; ++k) {
    const GridStateSpace g = build_grid_state_space(fx::random_topology(rng, 2 + k % 4));
    CHECK(fx::oracle_eigenvalues(g.A).real().maxCoeff() < 0.0);
  }
}

TEST_CASE("lifted grid spectrum is the shifted LTI spectrum") {
  const GridStateSpace g = build_grid_state_space(fx::rlc_topology(0.3, 1e-3, 2e-5));
  const HarmonicIndexSet set(2, 50.0);
  const HssModel m = lift_grid_to_hss(g, set);
  const VectorXcd base = fx::oracle_eigenvalues(g.A);
  VectorXcd ref(base.size() * set.count());
  for (Index p = 0; p < set.count(); ++p)
    ref.segment(p * base.size(), base.size()) = base.array() - Complex(0.0, set.omega1() * set.order_at(p));
  CHECK(fx::multiset_distance(eigen_decompose(m, {false, false}).values, ref) < 1e-10);
  CHECK_FALSE(m.input("gamma").layout.ordering == Grouping::harmonic_major);
}

TEST_CASE("validation errors name the offending element") {
  auto g = fx::rlc_topology(0.1, 1e-3, 1e-5);
  g.branches[0].L = -1e-3 * Matrix3d::Identity();
  const Error e = error_of([&] { g.validate(); });
  CHECK(e.kind() == ErrorKind::physical_parameter);
  CHECK(std::string(e.what()).find("line") != std::string::npos);

  g = fx::rlc_topology(0.1, 1e-3, 1e-5);
  g.branches[0].R = -0.1 * Matrix3d::Identity();
  CHECK(error_of([&] { g.validate(); }).kind() == ErrorKind::physical_parameter);

  g = fx::rlc_topology(0.1, 1e-3, 1e-5);
  g.branches[0].to = "x";
  const Error t = error_of([&] { g.validate(); });
  CHECK(t.kind() == ErrorKind::topology);
  CHECK(std::string(t.what()).find("'x'") != std::string::npos);

  g = fx::rlc_topology(0.1, 1e-3, 1e-5);
  g.shunts.clear();
  CHECK(error_of([&] { g.validate(); }).kind() == ErrorKind::configuration);

  g = fx::rlc_topology(0.1, 1e-3, 1e-5);
  g.nodes.push_back({"island", false});
  g.shunts.push_back({"island", 1e-5 * Matrix3d::Identity()});
  CHECK(error_of([&] { g.validate(); }).kind() == ErrorKind::topology);

  g = fx::rlc_topology(0.1, 1e-3, 1e-5);
  g.nodes[0].forming = false;
  g.shunts.push_back({"s", 1e-5 * Matrix3d::Identity()});
  CHECK(error_of([&] { g.validate(); }).kind() == ErrorKind::configuration);
}

TEST_CASE("forming nodes come first") {
  GridTopology g;
  g.nodes = {{"a", false}, {"b", true}, {"c", false}, {"d", true}};
  CHECK(g.ordered_nodes() == std::vector<std::string>{"b", "d", "a", "c"});
}
