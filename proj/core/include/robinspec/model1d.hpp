#pragma once

#include <functional>
#include <vector>

#include "robinspec/errors.hpp"

namespace robinspec {

/// Boundary condition at one end of an interval.  Robin(beta) prescribes
/// (outward derivative) = beta * u at that end, so beta > 0 is the
/// attractive coupling that can create negative eigenvalues.
struct EndCondition {
  enum class Kind { Dirichlet, Neumann, Robin };
  Kind kind = Kind::Dirichlet;
  double beta = 0.0;

  static EndCondition dirichlet() { return {Kind::Dirichlet, 0.0}; }
  static EndCondition neumann() { return {Kind::Neumann, 0.0}; }
  static EndCondition robin(double beta) { return {Kind::Robin, beta}; }
};

/// Sturm-Liouville operator -u'' + V(s) u on (0, length) with one condition
/// at each end.  An empty potential means V == 0.
struct IntervalOperator {
  double length = 1.0;
  EndCondition left;
  EndCondition right;
  std::function<double(double)> potential;
};

enum class Method1D { Auto, Transcendental, FiniteDifference };

/// One eigenvalue together with a numerical error estimate
/// (bisection interval width or Richardson difference).
struct Eig1D {
  double value = 0.0;
  double error_estimate = 0.0;
};

/// Lowest n eigenvalues of `op`, ascending.
///
/// Transcendental route (V == 0 only): the m-th eigenvalue is located by
/// bisection on the exact Pruefer phase of the fundamental solution launched
/// from the left end condition; the phase is evaluated in closed form from
/// exp/trig fundamental solutions, is strictly increasing in the spectral
/// parameter, and indexes eigenvalues exactly, so clustered pairs
/// (e.g. the exponentially split negative Robin-Robin pair) are never missed.
/// Bisection runs to absolute tolerance 1e-12 (or machine closure).
///
/// Finite-difference route: second-order lumped-mass P1 discretization on a
/// uniform grid (default 2048 intervals) reduced to a symmetric tridiagonal
/// problem, with one Richardson extrapolation step over grids n and 2n;
/// the extrapolation difference is reported as the error estimate.
///
/// Method1D::Auto picks transcendental when V == 0, finite differences
/// otherwise.  Requesting Transcendental with V != 0 is a BadInput error.
std::vector<Eig1D> interval_eigs(const IntervalOperator& op, int n,
                                 Method1D method = Method1D::Auto,
                                 int fd_points = 2048);

/// Entry of a merged direct-sum spectrum: `source` is the index of the
/// summand the eigenvalue came from, `index` its 1-based index there.
struct LabeledEig {
  double value = 0.0;
  int source = 0;
  int index = 0;
};

/// Ascending merge of the spectra of a direct sum; ties are broken by source
/// index, then by index within the source (stable and deterministic).
std::vector<LabeledEig> direct_sum_eigs(
    const std::vector<std::vector<Eig1D>>& parts, int n);

enum class EndPair { DirichletDirichlet, NeumannNeumann };

/// Lowest n eigenvalues of -d^2/ds^2 - alpha * H(s) on (0, length) with
/// Dirichlet/Dirichlet or Neumann/Neumann ends.  The grid is refined until
/// the estimated eigenvalue error is below 1e-4 * (1 + alpha * osc(H)) where
/// osc(H) is the oscillation (max - min) of H over the interval; exceeding
/// the grid cap raises GridTooCoarse.  Values are Richardson-extrapolated
/// and carry error estimates.
std::vector<Eig1D> schrodinger_eigs(double length, double alpha,
                                    const std::function<double(double)>& H,
                                    EndPair ends, int n);

}  // namespace robinspec
