#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "robinspec/effective.hpp"
#include "robinspec/fem2d.hpp"
#include "robinspec/geometry.hpp"
#include "robinspec/mesh.hpp"
#include "robinspec/sectors.hpp"

namespace robinspec {

/// Library version string recorded in run manifests.
inline constexpr const char* kVersion = "0.1.0";

/// Rule producing the decomposition width delta as a function of alpha.
enum class DeltaRule {
  Fixed,         ///< delta = value
  LogOverAlpha,  ///< delta = value * log(alpha) / alpha
  PowerLaw,      ///< delta = alpha^(-value)
};

double delta_for(DeltaRule rule, double value, double alpha);

const char* to_token(DeltaRule rule) noexcept;
DeltaRule delta_rule_from_token(const std::string& token);

/// A verification experiment: FEM spectra of the Robin problem on one
/// polygon across an increasing alpha grid, compared level by level against
/// the effective-operator predictions.
struct ExperimentConfig {
  std::string polygon = "square:1";  ///< CurvilinearPolygon::named reference
  std::vector<double> alphas;        ///< strictly increasing, all positive
  DeltaRule delta_rule = DeltaRule::LogOverAlpha;
  double delta_value = 3.0;  ///< rule parameter (width, prefactor, or exponent)
  int n_max = 2;             ///< side levels requested per alpha
  SideFormula formula = SideFormula::StraightSides;
  NonresonanceAttestation attestation = NonresonanceAttestation::Asserted;
  MeshParams mesh;        ///< base 2D mesh controls; alpha is set per run
  SolveOpts solve;        ///< 2D eigensolver controls; seed is overridden
  SectorSettings sectors; ///< corner-model controls
  std::string mesh_cache; ///< 2D mesh cache directory ("" = rebuild)
  std::string out_dir;    ///< output directory ("" = in-memory only)
  int seed = 24601;       ///< RNG seed for every eigensolve in the run
};

/// Parses the line-oriented `key = value` config format used by the CLI
/// (`#` comments, blank lines ignored).  Unknown or duplicate keys fail with
/// BadInput; semantic validation happens in run_experiment.
ExperimentConfig parse_experiment_config(const std::string& text);

/// One (alpha, level) comparison.
struct ResultRow {
  double alpha = 0.0;
  int k = 0;                  ///< 1-based eigenvalue index
  double fem = 0.0;           ///< two-mesh extrapolated FEM eigenvalue
  double predicted = 0.0;     ///< matched corner or side prediction
  double gap = 0.0;           ///< fem - predicted
  std::uint64_t mesh_id = 0;  ///< content hash of the fine mesh
  double residual = 0.0;      ///< eigensolver residual bound (fine mesh)
  double budget = 0.0;        ///< two-mesh FEM error estimate
  bool corner_cluster = false;  ///< k <= K (matched to a corner level)
};

/// Decay model a remainder is fitted against.
enum class RemainderModel { LogOverSqrtAlpha, InverseAlpha, Constant };

const char* to_token(RemainderModel model) noexcept;
RemainderModel remainder_model_from_token(const std::string& token);

/// Least-squares fit of |gap| at a fixed level against a decay model.
struct RemainderFit {
  RemainderModel model = RemainderModel::Constant;
  int k = 0;                 ///< eigenvalue index the series was taken at
  double coefficient = 0.0;  ///< C in |gap| ~= C * model(alpha)
  double r_squared = 0.0;    ///< of the one-parameter model fit
  double exponent = 0.0;     ///< free power-law decay p in |gap| ~ alpha^-p
  double sigma = 0.0;        ///< 1-sigma uncertainty of the exponent
  bool consistent = false;   ///< decays at least as fast as the model (2 sigma)
  int points = 0;            ///< alpha points with signal used by the fit
};

/// Meshes built for one alpha of an experiment (for the run manifest).
struct MeshRecord {
  double alpha = 0.0;
  std::uint64_t request = 0;  ///< cache key (geometry + parameters)
  std::uint64_t coarse = 0;   ///< content hash of the base mesh
  std::uint64_t fine = 0;     ///< content hash of the refined mesh
  int nodes_coarse = 0;
  int nodes_fine = 0;
};

struct ResultTable {
  ExperimentConfig config;
  std::vector<ResultRow> rows;      ///< sorted by (alpha, k)
  std::vector<RemainderFit> fits;   ///< one per side level, when signal allows
  std::vector<MeshRecord> meshes;   ///< one per completed alpha
  std::vector<std::string> flags;   ///< audit findings and partial-run notes
  int corner_count = 0;             ///< K, the number of corner-cluster levels
  bool complete = true;             ///< no alpha job failed
};

/// Runs the experiment: for each alpha, meshes the polygon (base mesh plus
/// one red refinement), solves for the lowest K + n_max eigenvalues on both
/// meshes, extrapolates, and matches the first K values to the corner levels
/// and the next n_max to the side levels of predict().  Audits (corner
/// cluster size, monotonicity in alpha, one-sided upper bound for the
/// straight-side formula) append to `flags`; a failed alpha is flagged and
/// skipped rather than discarding the table.  Validates the config: grid
/// increasing, alpha * delta >= 5 at the smallest alpha.  Writes CSV and a
/// manifest to `out_dir` when set.  Deterministic for fixed config and seed.
ResultTable run_experiment(const ExperimentConfig& cfg);

/// Fits |gap| of the rows at eigenvalue index k against the model.
/// Rows qualify only when |gap| exceeds 10x the row's FEM budget; fewer than
/// three qualifying alpha points fail with InsufficientSignal.  Consistency
/// means the free power-law decay is at least as fast as the model's mean
/// logarithmic slope over the used grid, within two sigma.
RemainderFit remainder_fit(const ResultTable& table, RemainderModel model, int k);

/// CSV encodings (header row, comma separators, '.' decimal point, 17
/// significant digits, no timestamps — fixed contract, locale-independent).
std::string to_csv(const ResultTable& table);
std::string fits_csv(const ResultTable& table);
/// JSON run manifest: versions, config echo, seed, mesh hashes, flags.
std::string manifest_text(const ResultTable& table);
/// Writes results.csv, fits.csv, and manifest.json into dir (created if
/// needed).  Fails with IoFailure.
void write_outputs(const ResultTable& table, const std::string& dir);

/// Options for bracket_check.
struct BracketOptions {
  int n = 8;                ///< eigenvalue levels to compare
  MeshParams mesh;          ///< base mesh controls; alpha is set per piece
  SolveOpts solve;          ///< eigensolver controls
  std::string mesh_cache;   ///< mesh cache directory ("" = rebuild)
  bool throw_on_violation = true;
  double cluster_margin = 0.2;  ///< corner cluster threshold -alpha^2 (1 + margin)
};

/// Spectra of one decomposition piece under the two cut conditions.
struct PieceSpectrum {
  PieceKind kind = PieceKind::Core;
  int index = -1;
  std::vector<double> lower;         ///< Neumann cuts, extrapolated
  std::vector<double> lower_budget;
  std::vector<double> upper;         ///< Dirichlet cuts (empty for the core)
  std::vector<double> upper_budget;
  std::uint64_t mesh_id = 0;         ///< content hash of the piece's fine mesh
};

struct BracketReport {
  double alpha = 0.0;
  double delta = 0.0;
  int n = 0;
  std::vector<double> lower, lower_budget;  ///< merged Neumann-cut levels
  std::vector<double> fem, fem_budget;      ///< full-domain levels
  std::vector<double> upper, upper_budget;  ///< merged Dirichlet-cut levels
  double fem_residual = 0.0;
  std::uint64_t domain_mesh_id = 0;  ///< content hash of the full-domain fine mesh
  int corner_count = 0;           ///< full-domain levels below the threshold
  double cluster_separation = 0.0;  ///< fem[K] - fem[K-1] across the threshold
  std::vector<PieceSpectrum> pieces;
  bool all_hold = true;
  std::vector<std::string> violations;
};

/// Dirichlet--Neumann bracketing check: decomposes the polygon at width
/// delta into vertex neighborhoods, side tubes, and the core, meshes every
/// piece, and compares the merged piece spectra against the full-domain FEM
/// spectrum.  With Neumann conditions on all cuts (core included) the merged
/// levels bound the true levels from below; with Dirichlet conditions on the
/// vertex and side pieces they bound from above (dropping the core only
/// raises the merged sequence, so the upper bound survives).  Every
/// inequality is asserted up to the summed two-mesh FEM budgets of its two
/// sides; a violation beyond budget fails with BracketViolationBeyondBudget
/// unless `throw_on_violation` is off.
BracketReport bracket_check(const CurvilinearPolygon& poly, double alpha,
                            double delta, const BracketOptions& opts = {});

}  // namespace robinspec
