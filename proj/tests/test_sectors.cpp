#include <cmath>
#include <vector>

#include "doctest.h"
#include "robinspec/sectors.hpp"
#include "support/oracle_constants.hpp"

TEST_SUITE_BEGIN("sectors");

using namespace robinspec;

namespace {

constexpr double kPi = 3.14159265358979323846;

SectorSettings cached() {
  SectorSettings st;
  st.cache_dir = "robinspec-test-mesh-cache";
  return st;
}

}  // namespace

TEST_CASE("separable oracle reproduces the frozen 1D constants") {
  const auto e10 = square_separable_oracle(10.0, 1.0, 3);
  CHECK(e10[0] == doctest::Approx(2.0 * oracle::rn10_1).epsilon(1e-10));
  CHECK(e10[1] == doctest::Approx(oracle::rn10_1 + oracle::rn10_2).epsilon(1e-10));
  CHECK(e10[2] == doctest::Approx(oracle::rn10_1 + oracle::rn10_2).epsilon(1e-10));

  const auto e15 = square_separable_oracle(15.0, 1.0, 6);
  const double want15[6] = {2.0 * oracle::rn15_1,
                            oracle::rn15_1 + oracle::rn15_2,
                            oracle::rn15_1 + oracle::rn15_2,
                            oracle::rn15_1 + oracle::rn15_3,
                            oracle::rn15_1 + oracle::rn15_3,
                            oracle::rn15_1 + oracle::rn15_4};
  for (int i = 0; i < 6; ++i) {
    INFO("index ", i);
    CHECK(e15[static_cast<std::size_t>(i)] ==
          doctest::Approx(want15[i]).epsilon(1e-10));
  }

  CHECK_THROWS_AS(square_separable_oracle(-1.0, 1.0, 1), Error);
  CHECK_THROWS_AS(square_separable_oracle(10.0, 1.0, 0), Error);
}

TEST_CASE("quarter-angle sector matches the separable oracle") {
  SectorSpectrumRequest req;
  req.theta = kPi / 4.0;
  req.alpha = 1.0;
  req.r = 20.0;
  req.ext_bc = ExteriorBC::Neumann;
  req.n = 3;
  const SectorSpectrum spec = sector_eigs(req, cached());

  CHECK(spec.large_alpha_r);
  CHECK(std::abs(spec.values[0] - (-2.0)) <= 1e-2);

  const auto want = square_separable_oracle(20.0, 1.0, 3);
  for (int i = 0; i < 3; ++i) {
    INFO("index ", i, ": got ", spec.values[static_cast<std::size_t>(i)],
         " want ", want[static_cast<std::size_t>(i)]);
    CHECK(std::abs(spec.values[static_cast<std::size_t>(i)] -
                   want[static_cast<std::size_t>(i)]) <=
          1e-3 * std::abs(want[static_cast<std::size_t>(i)]));
    CHECK(spec.error_estimates[static_cast<std::size_t>(i)] >= 0.0);
  }
}

TEST_CASE("coupling scaling reduction is exact for the scaled mesh family") {
  // The sizing field scales with (alpha, r) -> (1, alpha * r), so solving at
  // coupling 4 directly must agree with the internal reduction to machine
  // accuracy.
  SectorSpectrumRequest req;
  req.theta = kPi / 3.0;
  req.alpha = 4.0;
  req.r = 5.0;
  req.ext_bc = ExteriorBC::Neumann;
  req.n = 1;
  const SectorSpectrum scaled = sector_eigs(req, cached());

  SectorSpectrumRequest unit;
  unit.theta = req.theta;
  unit.alpha = 1.0;
  unit.r = 20.0;
  unit.ext_bc = ExteriorBC::Neumann;
  unit.n = 1;
  const SectorSpectrum reduced = sector_eigs(unit, cached());

  CHECK(std::abs(scaled.values[0] - 16.0 * reduced.values[0]) <=
        1e-9 * std::abs(scaled.values[0]));
}

TEST_CASE("Dirichlet far boundary dominates Neumann eigenvalue-wise") {
  SectorSpectrumRequest req;
  req.theta = kPi / 3.0;
  req.alpha = 1.0;
  req.r = 20.0;
  req.n = 4;
  req.ext_bc = ExteriorBC::Neumann;
  const auto sn = sector_eigs(req, cached());
  req.ext_bc = ExteriorBC::Dirichlet;
  const auto sd = sector_eigs(req, cached());
  for (int k = 0; k < 4; ++k) {
    INFO("index ", k);
    CHECK(sn.values[static_cast<std::size_t>(k)] <=
          sd.values[static_cast<std::size_t>(k)] + 1e-9);
  }
}

TEST_CASE("Robin far boundary adds its own corner states") {
  // At theta = pi/3 the far on-axis corner has half-angle pi/6 and hosts the
  // deepest state -1/cos^2(pi/3) = -4; the two corners where a radius meets
  // the far boundary have half-angle pi/4 and host a degenerate pair at -2.
  SectorSpectrumRequest req;
  req.theta = kPi / 3.0;
  req.alpha = 1.0;
  req.r = 20.0;
  req.ext_bc = ExteriorBC::Robin;
  req.n = 3;
  const SectorSpectrum spec = sector_eigs(req, cached());
  CHECK(std::abs(spec.values[0] - (-4.0)) <= 5e-3);
  CHECK(std::abs(spec.values[1] - (-2.0)) <= 5e-3);
  CHECK(std::abs(spec.values[2] - (-2.0)) <= 5e-3);
  CHECK(std::abs(spec.values[1] - spec.values[2]) <= 1e-3);

  // Lower bound -C alpha^2 with C covering every corner of the quadrangle.
  const double s = std::sin(req.theta), c = std::cos(req.theta);
  CHECK(spec.values[0] >= -(1.0 / (s * s) + 1.0 / (c * c)) * 1.01);
}

TEST_CASE("corner data counts and energies") {
  SUBCASE("pi/3: one state at -4/3") {
    const CornerData cd = corner_data(kPi / 3.0, cached());
    REQUIRE(cd.kappa == 1);
    CHECK(std::abs(cd.energies[0] - (-4.0 / 3.0)) <= 1e-2);
    CHECK(cd.energies[0] < -1.0);
    CHECK(cd.uncertainty[0] <= 1e-9);
  }
  SUBCASE("obtuse half-angles have no discrete states") {
    const CornerData cd = corner_data(3.0 * kPi / 5.0, cached());
    CHECK(cd.kappa == 0);
    CHECK(cd.energies.empty());
  }
  SUBCASE("invalid half-angle is rejected") {
    CHECK_THROWS_AS(corner_data(-0.1, cached()), Error);
    CHECK_THROWS_AS(corner_data(3.5, cached()), Error);
  }
  SUBCASE("extrapolation sharpens the tip energy") {
    // Two-level accuracy check: the extrapolated energy must beat the raw
    // single-mesh energy on the known value by a clear factor.
    SectorSettings raw = cached();
    raw.richardson = false;
    const double exact = -4.0 / 3.0;
    const double err_raw =
        std::abs(corner_data(kPi / 3.0, raw).energies[0] - exact);
    const double err_ext =
        std::abs(corner_data(kPi / 3.0, cached()).energies[0] - exact);
    CHECK(err_ext <= 0.3 * err_raw);
  }
}

TEST_CASE("nonresonance verdicts") {
  SUBCASE("pi/4 fits the inverse-square law") {
    const auto nr =
        nonresonance(kPi / 4.0, {10.0, 15.0, 20.0, 30.0}, 0.05, cached());
    CHECK(nr.kappa == 1);
    CHECK(nr.verdict == NonresonanceReport::Verdict::Nonresonant);
    CHECK(nr.p_fit >= 1.9);
    CHECK(nr.p_fit <= 2.35);
    CHECK(nr.c_fit >= 3.0);
    CHECK(nr.c_fit <= 5.0);
    CHECK(nr.r_squared >= 0.999);
    for (std::size_t i = 0; i + 1 < nr.gap.size(); ++i)
      CHECK(nr.gap[i] > nr.gap[i + 1]);
  }
  SUBCASE("pi/6 gap closes: resonant or inconclusive") {
    const auto nr =
        nonresonance(kPi / 6.0, {10.0, 14.0, 20.0, 26.0}, 0.05, cached());
    CHECK(nr.verdict != NonresonanceReport::Verdict::Nonresonant);
    // The gap sits inside the numerical noise at every radius.
    for (std::size_t i = 0; i < nr.gap.size(); ++i)
      CHECK(std::abs(nr.gap[i]) <= 1e-3);
  }
  SUBCASE("grid validation") {
    CHECK_THROWS_AS(nonresonance(kPi / 4.0, {10.0, 15.0, 20.0}, 0.05, cached()),
                    Error);
    CHECK_THROWS_AS(
        nonresonance(kPi / 4.0, {10.0, 12.0, 14.0, 16.0}, 0.05, cached()),
        Error);
    CHECK_THROWS_AS(
        nonresonance(kPi / 4.0, {10.0, 15.0, 15.0, 20.0}, 0.05, cached()),
        Error);
  }
}

TEST_SUITE_END();
