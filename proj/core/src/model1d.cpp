#include "robinspec/model1d.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace robinspec {

namespace {

constexpr double kPi = 3.14159265358979323846;

/// Initial data (u(0), u'(0)) of the fundamental solution that satisfies
/// the left end condition, plus nothing else: Dirichlet launches (0, 1),
/// Neumann (1, 0), Robin(beta) launches (1, -beta) because the outward
/// derivative at the left end is -u'(0).
void left_launch(const EndCondition& c, double& u0, double& du0) {
  switch (c.kind) {
    case EndCondition::Kind::Dirichlet:
      u0 = 0.0;
      du0 = 1.0;
      break;
    case EndCondition::Kind::Neumann:
      u0 = 1.0;
      du0 = 0.0;
      break;
    case EndCondition::Kind::Robin:
      u0 = 1.0;
      du0 = -c.beta;
      break;
  }
}

/// Pruefer phase theta(L; lam) of the left-launched solution, with the
/// classical normalization u = rho sin(theta), u' = rho cos(theta) and
/// theta(0) in [0, pi).  Strictly increasing in lam.  Closed form for V == 0:
///
///  * lam > 0: u, u' are trig in omega = sqrt(lam); the phase advances by pi
///    per half-period, so we count whole pi-cells of the shifted angle
///    Phi = omega*L + atan2(omega*u0, u0') and convert the in-cell remainder
///    back to the (1, omega)-weighted angle.
///  * lam <= 0: u has at most one zero, so the raw angle
///    atan2(u(L), u'(L)) determines theta on (0, 2*pi] directly; the
///    hyperbolic solution is evaluated with the growing factor e^{kL}
///    divided out (a positive common factor does not change the angle),
///    which keeps everything finite for arbitrarily large k*L.
double pruefer_phase(double lam, double L, double u0, double du0) {
  if (lam > 0.0) {
    const double omega = std::sqrt(lam);
    const double psi = std::atan2(omega * u0, du0);
    const double phi_total = omega * L + psi;
    const double wind = std::floor(phi_total / kPi);
    const double phi = phi_total - wind * kPi;
    return wind * kPi + std::atan2(std::sin(phi), omega * std::cos(phi));
  }
  double ut, dut;
  if (lam == 0.0) {
    ut = u0 + du0 * L;
    dut = du0;
  } else {
    const double k = std::sqrt(-lam);
    if (k * L < 1.0) {
      const double em = -std::expm1(-2.0 * k * L);  // 1 - e^{-2kL}, stable
      const double ch = 1.0 - 0.5 * em;             // cosh(kL) * e^{-kL}
      const double sh = 0.5 * em;                   // sinh(kL) * e^{-kL}
      ut = u0 * ch + du0 * (0.5 * em / k);
      dut = u0 * k * sh + du0 * ch;
    } else {
      // Exponential coefficients of the launched solution, scaled by e^{-kL}.
      // Differencing cosh/sinh terms instead loses all accuracy near a
      // clustered Robin pair, where u(L) and u'(L) are exponentially small
      // against the O(1) launch scale; here every addend is relatively
      // accurate, so the angle stays resolved through the pair window.
      const double E = std::exp(-2.0 * k * L);
      const double A = (u0 * k + du0) / (2.0 * k);
      const double B = (u0 * k - du0) / (2.0 * k);
      ut = A + B * E;
      dut = k * (A - B * E);
    }
  }
  const double raw = std::atan2(ut, dut);
  return raw <= 0.0 ? raw + 2.0 * kPi : raw;
}

/// Phase value the m-th eigenvalue must hit at the right end.
double right_target(const EndCondition& c, int m) {
  double tau;
  switch (c.kind) {
    case EndCondition::Kind::Dirichlet:
      tau = kPi;
      break;
    case EndCondition::Kind::Neumann:
      tau = 0.5 * kPi;
      break;
    case EndCondition::Kind::Robin:
    default:
      tau = std::atan2(1.0, c.beta);  // arccot(beta) in (0, pi)
      break;
  }
  return tau + (m - 1) * kPi;
}

std::vector<Eig1D> transcendental_eigs(const IntervalOperator& op, int n) {
  const double L = op.length;
  double u0, du0;
  left_launch(op.left, u0, du0);
  const auto phase = [&](double lam) { return pruefer_phase(lam, L, u0, du0); };

  const double bl = op.left.kind == EndCondition::Kind::Robin ? op.left.beta : 0.0;
  const double br = op.right.kind == EndCondition::Kind::Robin ? op.right.beta : 0.0;
  const double beta_scale = std::max({1.0, std::abs(bl), std::abs(br)});

  std::vector<Eig1D> out;
  out.reserve(n);
  for (int m = 1; m <= n; ++m) {
    const double target = right_target(op.right, m);

    double lo = -9.0 * beta_scale * beta_scale - 10.0;
    int guard = 0;
    while (phase(lo) >= target) {
      lo = 4.0 * lo - 10.0;
      if (++guard > 200) fail(ErrorCode::RootBracketFailure, "no lower phase bracket");
    }
    double span = (m + 1) * kPi / L + 3.0 * beta_scale;
    double hi = span * span + 10.0;
    guard = 0;
    while (phase(hi) < target) {
      hi = 4.0 * hi + 10.0;
      if (++guard > 200) fail(ErrorCode::RootBracketFailure, "no upper phase bracket");
    }

    for (int it = 0; it < 200; ++it) {
      const double width = hi - lo;
      if (width <= 1e-12 + 4.0 * std::numeric_limits<double>::epsilon() *
                               std::max(std::abs(lo), std::abs(hi)))
        break;
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;  // machine closure
      (phase(mid) < target ? lo : hi) = mid;
    }
    out.push_back({0.5 * (lo + hi), 0.5 * (hi - lo)});
  }
  return out;
}

/// Eigenvalues of the lumped-mass P1 discretization on `cells` uniform cells.
/// Dirichlet ends are eliminated; Robin ends subtract beta from the boundary
/// stiffness entry (the form is  int u'v' + int V uv - beta_l u(0)v(0)
/// - beta_r u(L)v(L)).  Reduced to a symmetric tridiagonal problem by the
/// diagonal mass square root.
std::vector<double> fd_eigs(const IntervalOperator& op, int cells, int n) {
  const double L = op.length;
  const double h = L / cells;
  const int nodes = cells + 1;

  const bool dir_l = op.left.kind == EndCondition::Kind::Dirichlet;
  const bool dir_r = op.right.kind == EndCondition::Kind::Dirichlet;
  const int first = dir_l ? 1 : 0;
  const int last = dir_r ? nodes - 2 : nodes - 1;
  const int dim = last - first + 1;
  if (dim < n) fail(ErrorCode::BadInput, "grid smaller than requested count");

  Eigen::VectorXd diag(dim), subdiag(std::max(dim - 1, 0)), mass(dim);
  for (int i = 0; i < dim; ++i) {
    const int node = first + i;
    const bool end = node == 0 || node == nodes - 1;
    double k = end ? 1.0 / h : 2.0 / h;
    double m = end ? 0.5 * h : h;
    if (node == 0 && op.left.kind == EndCondition::Kind::Robin) k -= op.left.beta;
    if (node == nodes - 1 && op.right.kind == EndCondition::Kind::Robin)
      k -= op.right.beta;
    if (op.potential) k += op.potential(node * h) * m;
    diag(i) = k;
    mass(i) = m;
  }
  for (int i = 0; i + 1 < dim; ++i) subdiag(i) = -1.0 / h;

  for (int i = 0; i < dim; ++i) diag(i) /= mass(i);
  for (int i = 0; i + 1 < dim; ++i)
    subdiag(i) /= std::sqrt(mass(i) * mass(i + 1));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, subdiag, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    fail(ErrorCode::NoConvergence, "tridiagonal eigensolver failed");

  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = es.eigenvalues()(i);
  return out;
}

std::vector<Eig1D> fd_eigs_richardson(const IntervalOperator& op, int n,
                                      int fd_points) {
  const std::vector<double> coarse = fd_eigs(op, fd_points, n);
  const std::vector<double> fine = fd_eigs(op, 2 * fd_points, n);
  std::vector<Eig1D> out(n);
  for (int i = 0; i < n; ++i) {
    const double d = (fine[i] - coarse[i]) / 3.0;
    out[i] = {fine[i] + d, std::abs(d)};
  }
  return out;
}

}  // namespace

std::vector<Eig1D> interval_eigs(const IntervalOperator& op, int n,
                                 Method1D method, int fd_points) {
  if (n <= 0) fail(ErrorCode::BadInput, "eigenvalue count must be positive");
  if (!(op.length > 0.0) || !std::isfinite(op.length))
    fail(ErrorCode::BadInput, "interval length must be positive and finite");
  if (fd_points < 8) fail(ErrorCode::BadInput, "too few grid points");

  const bool has_potential = static_cast<bool>(op.potential);
  if (method == Method1D::Transcendental && has_potential)
    fail(ErrorCode::BadInput, "transcendental method requires zero potential");
  if (method == Method1D::Auto)
    method = has_potential ? Method1D::FiniteDifference : Method1D::Transcendental;

  return method == Method1D::Transcendental ? transcendental_eigs(op, n)
                                            : fd_eigs_richardson(op, n, fd_points);
}

std::vector<LabeledEig> direct_sum_eigs(
    const std::vector<std::vector<Eig1D>>& parts, int n) {
  if (n <= 0) fail(ErrorCode::BadInput, "eigenvalue count must be positive");
  std::vector<LabeledEig> all;
  for (int s = 0; s < static_cast<int>(parts.size()); ++s)
    for (int i = 0; i < static_cast<int>(parts[s].size()); ++i)
      all.push_back({parts[s][i].value, s, i + 1});
  if (static_cast<int>(all.size()) < n)
    fail(ErrorCode::BadInput, "direct sum holds fewer eigenvalues than requested");
  std::sort(all.begin(), all.end(), [](const LabeledEig& a, const LabeledEig& b) {
    if (a.value != b.value) return a.value < b.value;
    if (a.source != b.source) return a.source < b.source;
    return a.index < b.index;
  });
  all.resize(n);
  return all;
}

std::vector<Eig1D> schrodinger_eigs(double length, double alpha,
                                    const std::function<double(double)>& H,
                                    EndPair ends, int n) {
  if (!H) fail(ErrorCode::BadInput, "curvature profile is required");

  double hmin = std::numeric_limits<double>::infinity();
  double hmax = -hmin;
  constexpr int kSamples = 4096;
  for (int i = 0; i <= kSamples; ++i) {
    const double v = H(length * i / kSamples);
    if (!std::isfinite(v)) fail(ErrorCode::BadInput, "curvature profile not finite");
    hmin = std::min(hmin, v);
    hmax = std::max(hmax, v);
  }
  const double tol = 1e-4 * (1.0 + alpha * (hmax - hmin));

  IntervalOperator op;
  op.length = length;
  op.left = op.right = ends == EndPair::DirichletDirichlet
                           ? EndCondition::dirichlet()
                           : EndCondition::neumann();
  op.potential = [alpha, &H](double s) { return -alpha * H(s); };

  for (int pts = 2048; pts <= 65536; pts *= 2) {
    std::vector<Eig1D> eigs =
        interval_eigs(op, n, Method1D::FiniteDifference, pts);
    double worst = 0.0;
    for (const Eig1D& e : eigs) worst = std::max(worst, e.error_estimate);
    if (worst <= tol) return eigs;
  }
  fail(ErrorCode::GridTooCoarse,
       "grid cap reached before the eigenvalue error target");
}

}  // namespace robinspec
