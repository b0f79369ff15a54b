#include <cmath>
#include <vector>

#include "doctest.h"
#include "robinspec/model1d.hpp"
#include "support/oracle_constants.hpp"

TEST_SUITE_BEGIN("model1d");

using namespace robinspec;

namespace {

IntervalOperator make(double length, EndCondition l, EndCondition r) {
  IntervalOperator op;
  op.length = length;
  op.left = l;
  op.right = r;
  return op;
}

void check_close(const std::vector<Eig1D>& got, const std::vector<double>& want,
                 double tol) {
  REQUIRE(got.size() >= want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    INFO("eigenvalue index ", i + 1);
    CHECK(std::abs(got[i].value - want[i]) <= tol);
  }
}

}  // namespace

TEST_CASE("transcendental: Dirichlet-Dirichlet on (0, pi) gives m^2") {
  const auto eigs = interval_eigs(
      make(3.14159265358979323846, EndCondition::dirichlet(), EndCondition::dirichlet()),
      3);
  check_close(eigs, {oracle::dd_pi_1, oracle::dd_pi_2, oracle::dd_pi_3}, 1e-11);
  for (const auto& e : eigs) CHECK(e.error_estimate <= 1e-10);
}

TEST_CASE("transcendental: Robin(1)-Neumann intervals match the shooting oracle") {
  SUBCASE("length 10") {
    const auto eigs = interval_eigs(
        make(10.0, EndCondition::robin(1.0), EndCondition::neumann()), 3);
    check_close(eigs, {oracle::rn10_1, oracle::rn10_2, oracle::rn10_3}, 1e-11);
  }
  SUBCASE("length 15") {
    const auto eigs = interval_eigs(
        make(15.0, EndCondition::robin(1.0), EndCondition::neumann()), 4);
    check_close(eigs,
                {oracle::rn15_1, oracle::rn15_2, oracle::rn15_3, oracle::rn15_4},
                1e-11);
  }
  SUBCASE("length 20") {
    const auto eigs = interval_eigs(
        make(20.0, EndCondition::robin(1.0), EndCondition::neumann()), 2);
    check_close(eigs, {oracle::rn20_1, oracle::rn20_2}, 1e-11);
  }
  SUBCASE("length 30") {
    const auto eigs = interval_eigs(
        make(30.0, EndCondition::robin(1.0), EndCondition::neumann()), 2);
    check_close(eigs, {oracle::rn30_1, oracle::rn30_2}, 1e-11);
  }
}

TEST_CASE("transcendental: Neumann end is orientation-independent") {
  // Swapping the two end conditions reverses the interval; the spectrum
  // must be identical.
  const auto a = interval_eigs(
      make(10.0, EndCondition::robin(1.0), EndCondition::neumann()), 3);
  const auto b = interval_eigs(
      make(10.0, EndCondition::neumann(), EndCondition::robin(1.0)), 3);
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(a[i].value - b[i].value) <= 1e-11);
}

TEST_CASE("transcendental: symmetric Robin-Robin, including the split pair") {
  SUBCASE("beta 10") {
    const auto eigs = interval_eigs(
        make(1.0, EndCondition::robin(10.0), EndCondition::robin(10.0)), 4);
    check_close(eigs,
                {oracle::rr_a10_1, oracle::rr_a10_2, oracle::rr_a10_3, oracle::rr_a10_4},
                1e-10);
  }
  SUBCASE("beta 20") {
    const auto eigs = interval_eigs(
        make(1.0, EndCondition::robin(20.0), EndCondition::robin(20.0)), 4);
    check_close(eigs,
                {oracle::rr_a20_1, oracle::rr_a20_2, oracle::rr_a20_3, oracle::rr_a20_4},
                1e-9);
  }
  SUBCASE("beta 40: pair split below double resolution, indexing still exact") {
    const auto eigs = interval_eigs(
        make(1.0, EndCondition::robin(40.0), EndCondition::robin(40.0)), 4);
    check_close(eigs,
                {oracle::rr_a40_1, oracle::rr_a40_2, oracle::rr_a40_3, oracle::rr_a40_4},
                1e-8);
    CHECK(eigs[0].value <= eigs[1].value);
    CHECK(eigs[1].value < -1500.0);
    CHECK(eigs[2].value > 0.0);
  }
}

TEST_CASE("transcendental: Robin-Dirichlet matches the shooting oracle") {
  const auto eigs = interval_eigs(
      make(0.8, EndCondition::robin(12.0), EndCondition::dirichlet()), 2);
  check_close(eigs, {oracle::rd_a12_d08_1, oracle::rd_a12_d08_2}, 1e-9);
}

TEST_CASE("finite differences agree with the transcendental route") {
  SUBCASE("Robin(1)-Neumann length 10") {
    const auto fd = interval_eigs(
        make(10.0, EndCondition::robin(1.0), EndCondition::neumann()), 3,
        Method1D::FiniteDifference);
    check_close(fd, {oracle::rn10_1, oracle::rn10_2, oracle::rn10_3}, 1e-6);
    for (const auto& e : fd) CHECK(e.error_estimate <= 1e-5);
  }
  SUBCASE("deep Robin-Robin well, length 1") {
    const auto fd = interval_eigs(
        make(1.0, EndCondition::robin(10.0), EndCondition::robin(10.0)), 4,
        Method1D::FiniteDifference);
    check_close(fd, {oracle::rr_a10_1, oracle::rr_a10_2, oracle::rr_a10_3, oracle::rr_a10_4},
                1e-3);
  }
}

TEST_CASE("transcendental route rejects a potential") {
  IntervalOperator op =
      make(1.0, EndCondition::dirichlet(), EndCondition::dirichlet());
  op.potential = [](double) { return 1.0; };
  CHECK_THROWS_AS(interval_eigs(op, 1, Method1D::Transcendental), Error);
  // Auto falls back to finite differences: shifted Dirichlet spectrum.
  const auto eigs = interval_eigs(op, 1);
  const double pi = 3.14159265358979323846;
  CHECK(std::abs(eigs[0].value - (pi * pi + 1.0)) <= 1e-3);
}

TEST_CASE("direct sum merge is ascending and deterministically tie-broken") {
  std::vector<std::vector<Eig1D>> parts = {
      {{1.0, 0}, {3.0, 0}, {5.0, 0}},
      {{2.0, 0}, {3.0, 0}, {10.0, 0}},
  };
  const auto merged = direct_sum_eigs(parts, 5);
  REQUIRE(merged.size() == 5);
  CHECK(merged[0].value == 1.0);
  CHECK(merged[0].source == 0);
  CHECK(merged[1].value == 2.0);
  CHECK(merged[1].source == 1);
  CHECK(merged[2].value == 3.0);
  CHECK(merged[2].source == 0);  // tie goes to the lower source index
  CHECK(merged[3].value == 3.0);
  CHECK(merged[3].source == 1);
  CHECK(merged[4].value == 5.0);

  CHECK_THROWS_AS(direct_sum_eigs(parts, 7), Error);
}

TEST_CASE("Schrodinger solver with constant curvature shifts the spectrum") {
  const double pi = 3.14159265358979323846;
  const double alpha = 3.0, c = 0.7, len = 2.0;
  const auto H = [c](double) { return c; };

  const auto dd = schrodinger_eigs(len, alpha, H, EndPair::DirichletDirichlet, 2);
  CHECK(std::abs(dd[0].value - (pi * pi / (len * len) - alpha * c)) <= 1e-6);
  CHECK(std::abs(dd[1].value - (4.0 * pi * pi / (len * len) - alpha * c)) <= 1e-5);

  // The Neumann ground state of a constant potential is the constant mode.
  const auto nn = schrodinger_eigs(len, alpha, H, EndPair::NeumannNeumann, 1);
  CHECK(std::abs(nn[0].value + alpha * c) <= 1e-9);
}

TEST_CASE("Schrodinger solver: Neumann ground state below Dirichlet") {
  const auto H = [](double s) { return 0.3 * std::cos(s); };
  const auto dd = schrodinger_eigs(2.0, 5.0, H, EndPair::DirichletDirichlet, 1);
  const auto nn = schrodinger_eigs(2.0, 5.0, H, EndPair::NeumannNeumann, 1);
  CHECK(nn[0].value < dd[0].value);
}

TEST_CASE("input validation") {
  const auto op = make(1.0, EndCondition::dirichlet(), EndCondition::dirichlet());
  CHECK_THROWS_AS(interval_eigs(op, 0), Error);
  CHECK_THROWS_AS(interval_eigs(make(-1.0, EndCondition::dirichlet(),
                                     EndCondition::dirichlet()),
                                1),
                  Error);
}

TEST_SUITE_END();
