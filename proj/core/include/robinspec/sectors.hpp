#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "robinspec/fem2d.hpp"

namespace robinspec {

/// Condition imposed on the far (truncation) boundary of a truncated sector.
/// The two radii through the tip always carry the attractive Robin condition.
enum class ExteriorBC { Dirichlet, Neumann, Robin };

/// One truncated-sector eigenvalue computation: half-angle theta, Robin
/// coupling alpha on the radii, truncation radius r, far-boundary condition,
/// and the number of eigenvalues wanted.
struct SectorSpectrumRequest {
  double theta = 0.0;
  double alpha = 1.0;
  double r = 20.0;
  ExteriorBC ext_bc = ExteriorBC::Dirichlet;
  int n = 1;
};

/// Shared knobs for the sector computations.  With `richardson` set, each
/// spectrum is computed on a mesh and its red refinement and extrapolated,
/// which also yields a per-eigenvalue discretization-error estimate; without
/// it a single mesh is used and the estimates are reported as zero.
struct SectorSettings {
  int refine_rounds = 0;   ///< refinement rounds for the base mesh
  bool richardson = true;  ///< extrapolate across one extra red refinement
  std::string cache_dir;   ///< mesh cache directory, "" = rebuild every time
  SolveOpts solve;         ///< eigensolver options
  /// Sector spectra near the continuous threshold form clusters whose mesh
  /// splitting floors the attainable residual, so the default tolerance is
  /// looser than the solver's; eigenvalue errors scale as residual^2 / gap
  /// and stay orders of magnitude below the discretization error that the
  /// Richardson step is there to remove.
  SectorSettings() {
    solve.tol = 1e-5;
    solve.max_basis = 200;
  }
};

/// Spectrum of a truncated-sector operator with bookkeeping.
struct SectorSpectrum {
  std::vector<double> values;           ///< ascending best estimates
  std::vector<double> error_estimates;  ///< per-value discretization estimate
  bool large_alpha_r = false;           ///< alpha * r >= 10 (asymptotic regime)
  int coarse_nodes = 0;
  int fine_nodes = 0;            ///< 0 when richardson is off
  std::uint64_t mesh_hash = 0;   ///< request hash of the base mesh
  double max_residual = 0.0;     ///< worst eigensolver residual seen
};

/// Lowest eigenvalues of the truncated sector operator.  Internally the
/// problem is always reduced to coupling 1 on the dilated sector of radius
/// alpha * r (the spectrum scales by alpha^2), so one mesh family serves all
/// couplings.  Requires 0 < theta < pi/2.
SectorSpectrum sector_eigs(const SectorSpectrumRequest& req,
                           const SectorSettings& settings = {});

/// Exact separable spectrum of the half-angle pi/4 sector with Neumann far
/// boundary: sorted pairwise sums of the 1D interval eigenvalues on (0, r)
/// with Robin(alpha) at 0 and Neumann at r.  Accurate to 1D root tolerance.
std::vector<double> square_separable_oracle(double r, double alpha, int n);

/// Corner model data for one half-angle: the number kappa of discrete corner
/// states and their energies at coupling 1 (so the corner-induced eigenvalues
/// of a polygon behave as energy * alpha^2).
struct CornerData {
  double theta = 0.0;
  int kappa = 0;
  std::vector<double> energies;     ///< ascending, all < -1
  std::vector<double> uncertainty;  ///< per energy: |Dirichlet - Neumann| run
};

/// Computes kappa as the count of eigenvalues below -1 - margin, stabilized
/// across truncation radii r in {20, 40} and cross-checked between Dirichlet
/// and Neumann far boundaries (the two sandwich the infinite-sector values).
/// Energies come from the Dirichlet run at the largest radius; the
/// uncertainty is the Dirichlet/Neumann disagreement there.  Half-angles at
/// or beyond pi/2 have no discrete states and return immediately.
/// Throws CountUnstable when the four counts disagree.
CornerData corner_data(double theta, const SectorSettings& settings = {},
                       double margin = 0.05);

/// Non-resonance verdict for a half-angle.
struct NonresonanceReport {
  double theta = 0.0;
  int kappa = 0;
  std::vector<double> r;          ///< the probed radii
  std::vector<double> gap;        ///< g(r) = E_{kappa+1}(N^r) + 1
  std::vector<double> gap_error;  ///< discretization estimate per gap
  std::vector<char> in_fit;       ///< 1 if the point entered the fit window
  double c_fit = 0.0;             ///< g ~ c / r^p
  double p_fit = 0.0;
  double r_squared = 0.0;
  enum class Verdict { Nonresonant, Resonant, Inconclusive } verdict =
      Verdict::Inconclusive;
};

/// Probes the gap above the corner cluster on a radius grid (>= 4 increasing
/// values, largest >= 20) and fits g(r) = c / r^p on the log-log scale over
/// the points whose gap exceeds 10x the discretization estimate.  Verdict:
/// nonresonant when p is within [1.5, 2.5] of the expected inverse-square
/// law with c > 0 and fit R^2 >= 0.99; resonant when the gap decays faster
/// than r^-3; inconclusive otherwise (including when the gap closes into the
/// numerical noise).  The thresholds are calibrated heuristics, not proofs.
/// Throws NegativeGap when some gap is below -margin, which signals a
/// miscounted corner cluster.
NonresonanceReport nonresonance(double theta, const std::vector<double>& r_grid,
                                double margin = 0.05,
                                const SectorSettings& settings = {});

}  // namespace robinspec
