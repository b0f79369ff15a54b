#include "robinspec/effective.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <mutex>
#include <tuple>

namespace robinspec {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

// ---------------------------------------------------------------------------
// corner-data cache
//
// corner_data runs are the expensive part of a prediction (four 2D
// eigenproblems per half-angle), so results are memoized process-wide.  The
// half-angle is quantized to ~1e-12 for the key: equal angles of a polygon
// are computed from different tangent pairs and may disagree in the last
// bits, while the sector energies move by far less than the truncation
// uncertainty under such a perturbation.

struct CornerCacheKey {
  std::int64_t theta_q = 0;
  int refine_rounds = 0;
  bool richardson = false;
  std::int64_t tol_bits = 0;
  std::int64_t shift_bits = 0;
  int max_basis = 0;
  int block = 0;
  std::uint64_t seed = 0;

  bool operator<(const CornerCacheKey& o) const {
    return std::tie(theta_q, refine_rounds, richardson, tol_bits, shift_bits,
                    max_basis, block, seed) <
           std::tie(o.theta_q, o.refine_rounds, o.richardson, o.tol_bits,
                    o.shift_bits, o.max_basis, o.block, o.seed);
  }
};

CornerCacheKey corner_cache_key(double theta, const SectorSettings& s) {
  CornerCacheKey key;
  key.theta_q = static_cast<std::int64_t>(
      std::llround(theta * 1099511627776.0));  // 2^40 ~ 9e-13 quantum
  key.refine_rounds = s.refine_rounds;
  key.richardson = s.richardson;
  key.tol_bits = std::bit_cast<std::int64_t>(s.solve.tol);
  key.shift_bits = std::bit_cast<std::int64_t>(s.solve.shift);
  key.max_basis = s.solve.max_basis;
  key.block = s.solve.block;
  key.seed = s.solve.seed;
  return key;
}

CornerData corner_data_cached(double theta, const SectorSettings& settings) {
  static std::mutex mu;
  static std::map<CornerCacheKey, CornerData> cache;

  const CornerCacheKey key = corner_cache_key(theta, settings);
  {
    std::lock_guard<std::mutex> lock(mu);
    const auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  CornerData data = corner_data(theta, settings);  // slow; done unlocked
  std::lock_guard<std::mutex> lock(mu);
  return cache.emplace(key, std::move(data)).first->second;
}

// ---------------------------------------------------------------------------
// side curvature profiles

struct CurvatureProfile {
  double h_start = 0.0;  ///< curvature at s = 0
  double h_end = 0.0;    ///< curvature at s = length
  double h_min = 0.0;
  double h_max = 0.0;
  double s_max = 0.0;  ///< argmax of the curvature
};

/// Dense scan of the side curvature with a ternary-search polish around the
/// maximum (the sides are piecewise smooth, so the scan brackets it).
CurvatureProfile scan_curvature(const SideCurve& side) {
  const int kSamples = 512;
  const double length = side.length();

  CurvatureProfile prof;
  prof.h_start = side.curvature(0.0);
  prof.h_end = side.curvature(length);
  prof.h_min = prof.h_max = prof.h_start;
  for (int i = 1; i <= kSamples; ++i) {
    const double s = length * i / kSamples;
    const double h = side.curvature(s);
    prof.h_min = std::min(prof.h_min, h);
    if (h > prof.h_max) {
      prof.h_max = h;
      prof.s_max = s;
    }
  }

  double a = std::max(0.0, prof.s_max - length / kSamples);
  double b = std::min(length, prof.s_max + length / kSamples);
  for (int it = 0; it < 100 && b - a > 1e-14 * std::max(1.0, length); ++it) {
    const double m1 = a + (b - a) / 3.0;
    const double m2 = b - (b - a) / 3.0;
    if (side.curvature(m1) < side.curvature(m2))
      a = m1;
    else
      b = m2;
  }
  const double s_best = 0.5 * (a + b);
  const double h_best = side.curvature(s_best);
  if (h_best > prof.h_max) {
    prof.h_max = h_best;
    prof.s_max = s_best;
  }
  return prof;
}

}  // namespace

// ---------------------------------------------------------------------------

const char* to_token(SideFormula formula) noexcept {
  switch (formula) {
    case SideFormula::StraightSides:
      return "thm1";
    case SideFormula::InteriorCurvatureMax:
      return "thm2";
    case SideFormula::ConstantCurvature:
      return "thm3";
  }
  return "thm1";
}

SideFormula formula_from_token(const std::string& token) {
  if (token == "thm1") return SideFormula::StraightSides;
  if (token == "thm2") return SideFormula::InteriorCurvatureMax;
  if (token == "thm3") return SideFormula::ConstantCurvature;
  fail(ErrorCode::BadInput,
       "unknown formula token '" + token + "' (expected thm1, thm2, or thm3)");
}

const char* to_string(RemainderClass remainder) noexcept {
  switch (remainder) {
    case RemainderClass::LogOverSqrt:
      return "O(log(alpha)/sqrt(alpha))";
    case RemainderClass::OrderOne:
      return "O(1)";
    case RemainderClass::Vanishing:
      return "o(1)";
  }
  return "O(1)";
}

CornerSpectrum corner_spectrum(const CurvilinearPolygon& poly,
                               const SectorSettings& settings) {
  CornerSpectrum spectrum;
  for (int j = 0; j < poly.num_sides(); ++j) {
    const Vertex& v = poly.vertex(j);
    if (!v.convex) continue;  // concave corners carry no discrete states
    const CornerData data = corner_data_cached(v.half_angle, settings);
    for (int m = 0; m < data.kappa; ++m)
      spectrum.states.push_back(
          {data.energies[m], data.uncertainty[m], j, m + 1});
  }
  std::stable_sort(spectrum.states.begin(), spectrum.states.end(),
                   [](const CornerState& a, const CornerState& b) {
                     if (a.energy != b.energy) return a.energy < b.energy;
                     if (a.vertex != b.vertex) return a.vertex < b.vertex;
                     return a.index < b.index;
                   });
  return spectrum;
}

Prediction predict(const CurvilinearPolygon& poly, double alpha, int n_max,
                   SideFormula formula, NonresonanceAttestation attestation,
                   const SectorSettings& settings) {
  if (!(alpha > 0.0))
    fail(ErrorCode::BadInput, "coupling alpha must be positive");
  if (n_max < 0) fail(ErrorCode::BadInput, "n_max must be nonnegative");

  const int num_sides = poly.num_sides();
  std::vector<CurvatureProfile> prof(num_sides);
  for (int j = 0; j < num_sides; ++j) prof[j] = scan_curvature(poly.side(j));

  Prediction out;
  out.alpha = alpha;
  out.formula = formula;
  out.attestation = attestation;

  const double a2 = alpha * alpha;

  // Applicability checks and the contributing side set come first: they are
  // cheap and must reject before the expensive corner solves start.
  double level_shift = -a2;
  switch (formula) {
    case SideFormula::StraightSides: {
      for (int j = 0; j < num_sides; ++j) {
        const double bend =
            std::max(std::abs(prof[j].h_min), std::abs(prof[j].h_max));
        if (bend > 1e-9)
          fail(ErrorCode::FormulaInapplicable,
               "straight-side formula: side " + std::to_string(j) +
                   " is curved (curvature up to " + format_double(bend) + ")");
        out.contributing_sides.push_back(j);
      }
      out.curvature_max = 0.0;
      out.remainder = RemainderClass::LogOverSqrt;
      break;
    }
    case SideFormula::InteriorCurvatureMax: {
      double h_star = prof[0].h_max;
      for (int j = 1; j < num_sides; ++j)
        h_star = std::max(h_star, prof[j].h_max);
      const double margin = 1e-6;
      for (int j = 0; j < num_sides; ++j) {
        if (h_star - prof[j].h_start <= margin ||
            h_star - prof[j].h_end <= margin)
          fail(ErrorCode::FormulaInapplicable,
               "interior-curvature-max formula: side " + std::to_string(j) +
                   " reaches the curvature maximum " + format_double(h_star) +
                   " at an endpoint (needs the maximizer strictly inside a "
                   "side)");
      }
      const double tie = 1e-9 * (1.0 + std::abs(h_star));
      for (int j = 0; j < num_sides; ++j)
        if (h_star - prof[j].h_max <= tie) out.contributing_sides.push_back(j);
      out.curvature_max = h_star;
      out.remainder = RemainderClass::OrderOne;
      break;
    }
    case SideFormula::ConstantCurvature: {
      double h_star = prof[0].h_max;
      for (int j = 0; j < num_sides; ++j) {
        const double osc = prof[j].h_max - prof[j].h_min;
        if (osc > 1e-9)
          fail(ErrorCode::FormulaInapplicable,
               "constant-curvature formula: side " + std::to_string(j) +
                   " has varying curvature (oscillation " + format_double(osc) +
                   ")");
        h_star = std::max(h_star, prof[j].h_max);
      }
      const double tie = 1e-9 * (1.0 + std::abs(h_star));
      for (int j = 0; j < num_sides; ++j)
        if (h_star - prof[j].h_max <= tie) out.contributing_sides.push_back(j);
      out.curvature_max = h_star;
      out.remainder = RemainderClass::LogOverSqrt;
      // H* = 0 keeps the shift bitwise equal to the straight-side formula.
      level_shift = -a2 - h_star * alpha - 0.5 * h_star * h_star;
      break;
    }
  }

  // Corner cluster: all K levels, scaled to coupling alpha.
  const CornerSpectrum corners = corner_spectrum(poly, settings);
  for (const CornerState& state : corners.states)
    out.corner_levels.push_back({state.energy * a2, state.vertex, state.index});

  if (n_max == 0) return out;

  // 1D side operators over the contributing set, merged as a direct sum.
  std::vector<std::vector<Eig1D>> parts;
  std::vector<std::vector<Eig1D>> parts_neumann;  // InteriorCurvatureMax only
  for (const int j : out.contributing_sides) {
    const double length = poly.side(j).length();
    if (formula == SideFormula::InteriorCurvatureMax) {
      const auto side = poly.side_ptr(j);
      const auto curvature = [side](double s) { return side->curvature(s); };
      parts.push_back(schrodinger_eigs(length, alpha, curvature,
                                       EndPair::DirichletDirichlet, n_max));
      parts_neumann.push_back(schrodinger_eigs(
          length, alpha, curvature, EndPair::NeumannNeumann, n_max));
    } else {
      IntervalOperator op;
      op.length = length;
      op.left = EndCondition::dirichlet();
      op.right = EndCondition::dirichlet();
      parts.push_back(interval_eigs(op, n_max));
    }
  }

  const std::vector<LabeledEig> merged = direct_sum_eigs(parts, n_max);
  for (int k = 0; k < static_cast<int>(merged.size()); ++k) {
    const LabeledEig& lab = merged[k];
    SideLevel level;
    level.value = level_shift + lab.value;
    level.formula = formula;
    level.n = k + 1;
    level.source_side = out.contributing_sides[lab.source];
    level.index_in_side = lab.index;
    level.solver_error = parts[lab.source][lab.index - 1].error_estimate;
    out.side_levels.push_back(level);
  }

  if (formula == SideFormula::InteriorCurvatureMax) {
    const std::vector<LabeledEig> merged_n =
        direct_sum_eigs(parts_neumann, n_max);
    for (int k = 0; k < static_cast<int>(merged_n.size()); ++k) {
      out.neumann_variant.push_back(level_shift + merged_n[k].value);
      out.variant_gap =
          std::max(out.variant_gap, std::abs(out.side_levels[k].value -
                                             out.neumann_variant[k]));
    }
  }
  return out;
}

EquilateralReference equilateral_reference(double side_length, double alpha,
                                           int n_max) {
  if (!(side_length > 0.0))
    fail(ErrorCode::BadInput, "side length must be positive");
  if (!(alpha > 0.0))
    fail(ErrorCode::BadInput, "coupling alpha must be positive");
  if (n_max < 0) fail(ErrorCode::BadInput, "n_max must be nonnegative");

  EquilateralReference ref;
  ref.alpha = alpha;
  ref.side_length = side_length;
  ref.corner_levels.assign(3, -4.0 * alpha * alpha);

  const double step = 2.0 * kPi / (3.0 * side_length);
  if (n_max > 0) ref.z.push_back(0.0);
  for (int m = 1; static_cast<int>(ref.z.size()) < n_max; ++m) {
    const double value = (step * m) * (step * m);
    ref.z.push_back(value);  // the circle spectrum is doubly degenerate
    if (static_cast<int>(ref.z.size()) < n_max) ref.z.push_back(value);
  }
  for (const double z : ref.z)
    ref.side_levels.push_back(-alpha * alpha + z);
  return ref;
}

}  // namespace robinspec
