#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <string>
#include <vector>

#include "robinspec/mesh.hpp"

namespace robinspec {

/// End condition imposed on the artificial boundary parts when the quadratic
/// form is assembled.  The Robin part always carries the -alpha * u^2
/// boundary term; Exterior and Interface cuts are either clamped (Dirichlet)
/// or left free (Neumann).
enum class CutCondition { Dirichlet, Neumann };

struct AssemblyPolicy {
  CutCondition exterior_cut = CutCondition::Dirichlet;
  CutCondition interface_cut = CutCondition::Neumann;

  /// Both cut families clamped: eigenvalues bound the untruncated ones from
  /// above (and decomposition pieces bound the full domain from above).
  static AssemblyPolicy dirichlet_cuts() {
    return {CutCondition::Dirichlet, CutCondition::Dirichlet};
  }
  /// Both cut families free: the corresponding lower bounds.
  static AssemblyPolicy neumann_cuts() {
    return {CutCondition::Neumann, CutCondition::Neumann};
  }
};

/// Assembled P1 generalized eigenproblem A x = lambda M x on the free nodes.
/// A = stiffness - alpha * (Robin boundary mass); Dirichlet nodes are
/// eliminated (dof_of_node[i] == -1).
struct FemSystem {
  Eigen::SparseMatrix<double> A;
  Eigen::SparseMatrix<double> M;
  std::vector<int> dof_of_node;
  int ndof = 0;
  double alpha = 0.0;
};

FemSystem assemble(const Mesh& mesh, double alpha, const AssemblyPolicy& policy);

struct SolveOpts {
  int block = 8;          ///< Lanczos block width (resolves multiplicities)
  int max_basis = 160;    ///< accumulated basis cap before giving up
  double tol = 1e-7;      ///< residual tolerance |Ax - lambda Mx|_{M^-1}
  double shift = 0.0;     ///< spectral shift; 0 picks one from alpha
  unsigned seed = 24601;  ///< deterministic start block
};

struct EigResult {
  std::vector<double> values;  ///< ascending
  Eigen::MatrixXd vectors;     ///< ndof x n, M-orthonormal
  bool converged = true;
  double max_residual = 0.0;
  int basis_size = 0;
};

/// Lowest `n` eigenpairs by shift-invert block Lanczos with full
/// M-reorthogonalization and Rayleigh-Ritz on the accumulated basis.
/// Throws ShiftTooClose if no usable factorization is found and
/// NotConverged if the basis cap is reached before the residuals drop
/// under opts.tol.
EigResult lowest_eigs(const FemSystem& sys, int n, const SolveOpts& opts = {});

/// Mesh + assemble + solve, returning the lowest `n` eigenvalues.
std::vector<double> region_eigs(const TaggedRegion& region, double alpha, int n,
                                const MeshParams& mesh_params,
                                const AssemblyPolicy& policy = {},
                                const SolveOpts& opts = {},
                                const std::string& cache_dir = "");

/// Rayleigh quotient of a full-length nodal vector (Dirichlet dofs ignored).
double rayleigh_quotient(const FemSystem& sys, const Eigen::VectorXd& reduced);

}  // namespace robinspec
