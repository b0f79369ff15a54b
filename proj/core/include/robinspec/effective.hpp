#pragma once

#include <string>
#include <vector>

#include "robinspec/geometry.hpp"
#include "robinspec/model1d.hpp"
#include "robinspec/sectors.hpp"

namespace robinspec {

/// Selects which effective side-level formula a prediction evaluates.  The
/// token in parentheses is the spelling used by the CLI and in CSV output.
enum class SideFormula {
  StraightSides,         ///< ("thm1") all sides straight: -a^2 + E_n of the
                         ///< direct sum of Dirichlet Laplacians on the sides
  InteriorCurvatureMax,  ///< ("thm2") the curvature maximum is attained
                         ///< strictly inside sides: -a^2 + E_n of the direct
                         ///< sum of D_j - a H_j over the maximizing sides
  ConstantCurvature,     ///< ("thm3") every side has constant curvature:
                         ///< -a^2 - H* a - H*^2/2 + E_n of the direct sum of
                         ///< Dirichlet Laplacians over the maximizing sides
};

/// CLI/CSV token for a formula selector ("thm1" | "thm2" | "thm3").
const char* to_token(SideFormula formula) noexcept;
/// Inverse of to_token; BadInput on unknown tokens.
SideFormula formula_from_token(const std::string& token);

/// How the caller established the non-resonance hypothesis on the convex
/// corners.  The side-level formulas are conditional on it, so predictions
/// record whether it was actually checked (e.g. with nonresonance()) or
/// merely assumed.
enum class NonresonanceAttestation { Verified, Asserted };

/// Symbolic class of the remainder that the side-level formula leaves
/// unresolved at coupling alpha.
enum class RemainderClass {
  LogOverSqrt,  ///< O(log(alpha)/sqrt(alpha))
  OrderOne,     ///< O(1)
  Vanishing,    ///< o(1)
};

/// Display form: "O(log(alpha)/sqrt(alpha))" | "O(1)" | "o(1)".
const char* to_string(RemainderClass remainder) noexcept;

/// One corner-induced state of a polygon at coupling 1: an energy below -1
/// contributed by a convex vertex.
struct CornerState {
  double energy = 0.0;       ///< sector energy at coupling 1, < -1
  double uncertainty = 0.0;  ///< truncation uncertainty of the energy
  int vertex = 0;            ///< index of the contributing vertex
  int index = 0;             ///< 1-based index within that vertex's states
};

/// The merged corner states of a polygon: K = states.size() is the number of
/// eigenvalues that dive like energy * alpha^2, ahead of the side-induced
/// levels.
struct CornerSpectrum {
  std::vector<CornerState> states;  ///< ascending by energy, ties by vertex
  int count() const { return static_cast<int>(states.size()); }
};

/// Collects the corner states of all convex vertices (concave vertices
/// contribute none) and merges them into one ascending multiset; ties are
/// ordered by vertex index.  The per-half-angle sector data is computed with
/// corner_data and memoized process-wide (keyed by half-angle and settings,
/// reads and writes behind a single lock), so polygons with repeated angles
/// pay for each distinct half-angle once.  CountUnstable propagates from
/// corner_data.
CornerSpectrum corner_spectrum(const CurvilinearPolygon& poly,
                               const SectorSettings& settings = {});

/// One predicted eigenvalue of the corner cluster: energy * alpha^2.
struct CornerLevel {
  double value = 0.0;  ///< predicted eigenvalue, strictly below -alpha^2
  int vertex = 0;      ///< contributing vertex
  int index = 0;       ///< 1-based index within that vertex's states
};

/// One predicted side-induced eigenvalue E_{K+n}.
struct SideLevel {
  double value = 0.0;         ///< predicted eigenvalue
  SideFormula formula = SideFormula::StraightSides;
  int n = 0;                  ///< effective index: this predicts E_{K+n}
  int source_side = 0;        ///< side whose 1D operator produced the level
  int index_in_side = 0;      ///< 1-based index within that side's operator
  double solver_error = 0.0;  ///< 1D discretization/root error estimate
};

/// Asymptotic eigenvalue prediction for a polygon at coupling alpha: the K
/// corner levels followed by n_max side levels from one of the three
/// effective formulas, plus the bookkeeping needed to audit it.
struct Prediction {
  double alpha = 0.0;
  SideFormula formula = SideFormula::StraightSides;
  NonresonanceAttestation attestation = NonresonanceAttestation::Asserted;
  RemainderClass remainder = RemainderClass::LogOverSqrt;

  std::vector<CornerLevel> corner_levels;  ///< all K, ascending, < -alpha^2
  std::vector<SideLevel> side_levels;      ///< n_max entries, ascending

  double curvature_max = 0.0;          ///< H*; 0 for the straight-side formula
  std::vector<int> contributing_sides; ///< the maximizing side set the side
                                       ///< levels are allowed to come from

  /// For InteriorCurvatureMax only: the same merged levels with Neumann ends
  /// on each side operator.  The two variants agree up to the formula's own
  /// O(1) remainder, so their gap is reported as a built-in error indicator.
  std::vector<double> neumann_variant;
  double variant_gap = 0.0;  ///< max |Dirichlet - Neumann| over the levels
};

/// Evaluates one side-level formula on the polygon at coupling alpha.
///
/// Applicability is checked against the geometry and rejected with
/// FormulaInapplicable naming the offending side:
///  * StraightSides requires every side curvature to vanish;
///  * InteriorCurvatureMax requires the global curvature maximum H* to stay
///    clear of every side endpoint by a margin of 1e-6 (the formula needs
///    the maximizer strictly inside a side);
///  * ConstantCurvature requires every side to have constant curvature.
///
/// The corner cluster additionally requires every convex corner to be
/// non-resonant; that hypothesis cannot be checked from the polygon alone,
/// so the caller attests it (Verified when backed by nonresonance() runs,
/// Asserted otherwise) and the flag is carried in the result.
///
/// On an all-straight polygon ConstantCurvature has H* = 0 and reproduces
/// StraightSides exactly (same operators, same arithmetic).
Prediction predict(const CurvilinearPolygon& poly, double alpha, int n_max,
                   SideFormula formula,
                   NonresonanceAttestation attestation =
                       NonresonanceAttestation::Asserted,
                   const SectorSettings& settings = {});

/// Closed-form reference spectrum for the equilateral triangle with side
/// length ell at coupling alpha: three corner levels at -4 alpha^2, and side
/// levels -alpha^2 + z_n where z_n is the n-th element of the multiset
/// { (2 pi m / (3 ell))^2 : m integer } — the spectrum of the Laplacian on a
/// circle of circumference 3 ell (z_1 = 0, then doubly degenerate steps).
/// The multiset scales as 1/ell^2 under dilation, which is how the ell
/// dependence enters.  This is the configuration whose side levels disagree
/// with the straight-side formula: z_1 = 0 while the Dirichlet direct sum
/// starts at (pi/ell)^2, which is what makes the half-angle pi/6 resonant.
struct EquilateralReference {
  double alpha = 0.0;
  double side_length = 0.0;
  std::vector<double> corner_levels;  ///< three entries, -4 alpha^2 each
  std::vector<double> side_levels;    ///< -alpha^2 + z_n, n = 1..n_max
  std::vector<double> z;              ///< the z_n themselves
};
EquilateralReference equilateral_reference(double side_length, double alpha,
                                           int n_max);

}  // namespace robinspec
