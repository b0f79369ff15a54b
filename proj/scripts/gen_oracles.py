#!/usr/bin/env python3
"""Generate frozen oracle constants for the 1D interval eigenproblems.

The continuous problem is  -u'' = lambda u  on (0, L) with end conditions
  Dirichlet:   u = 0
  Neumann:     u' (outward) = 0
  Robin(beta): outward derivative = beta * u   (attractive for beta > 0)

Eigenvalues are computed two independent ways:
  1. arbitrary-precision root finding on the exact characteristic function
     (mpmath, 50 digits), shooting from the left end;
  2. a dense second-order finite-difference discretization with Richardson
     extrapolation (numpy), as a cross-check.

Run from the repository root:  python3 scripts/gen_oracles.py
Paste the printed block into tests/oracle_constants.hpp when regenerating.
"""

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal
from mpmath import mp, mpf, cosh, sinh, cos, sin, sqrt, findroot

mp.dps = 50


# ---------------------------------------------------------------------------
# exact characteristic via shooting from the left end
# ---------------------------------------------------------------------------

def shoot(lam, L, left, right):
    """Value of the right-end boundary functional for spectral parameter lam.

    left / right are ('D',), ('N',) or ('R', beta).  Roots in lam are the
    eigenvalues.
    """
    lam = mpf(lam)
    if left[0] == 'D':
        u0, du0 = mpf(0), mpf(1)
    elif left[0] == 'N':
        u0, du0 = mpf(1), mpf(0)
    else:
        u0, du0 = mpf(1), -mpf(left[1])   # outward at 0 is -d/dx

    if lam > 0:
        w = sqrt(lam)
        u = u0 * cos(w * L) + du0 * sin(w * L) / w
        du = -u0 * w * sin(w * L) + du0 * cos(w * L)
    elif lam < 0:
        k = sqrt(-lam)
        u = u0 * cosh(k * L) + du0 * sinh(k * L) / k
        du = u0 * k * sinh(k * L) + du0 * cosh(k * L)
    else:
        u = u0 + du0 * L
        du = du0

    if right[0] == 'D':
        return u
    if right[0] == 'N':
        return du
    return du - mpf(right[1]) * u         # outward at L is +d/dx


def shoot_np(lam, L, left, right):
    """Vectorized double-precision version of `shoot` for the sign scan.

    Uses exp-scaled hyperbolics so large k*L does not overflow; scaling by
    the positive factor exp(-k*L) preserves signs.
    """
    lam = np.asarray(lam, dtype=float)
    if left[0] == 'D':
        u0, du0 = 0.0, 1.0
    elif left[0] == 'N':
        u0, du0 = 1.0, 0.0
    else:
        u0, du0 = 1.0, -float(left[1])

    u = np.empty_like(lam)
    du = np.empty_like(lam)

    pos = lam > 0
    if pos.any():
        w = np.sqrt(lam[pos])
        u[pos] = u0 * np.cos(w * L) + du0 * np.sin(w * L) / w
        du[pos] = -u0 * w * np.sin(w * L) + du0 * np.cos(w * L)
    neg = lam < 0
    if neg.any():
        k = np.sqrt(-lam[neg])
        e = np.exp(-2.0 * k * L)
        ch = 0.5 * (1.0 + e)           # cosh(kL) * exp(-kL)
        sh = 0.5 * (1.0 - e)           # sinh(kL) * exp(-kL)
        u[neg] = u0 * ch + du0 * sh / k
        du[neg] = u0 * k * sh + du0 * ch
    zer = lam == 0
    if zer.any():
        u[zer] = u0 + du0 * L
        du[zer] = du0

    if right[0] == 'D':
        return u
    if right[0] == 'N':
        return du
    return du - float(right[1]) * u


def eigs_exact(L, left, right, n, lam_min=None, lam_max=None, grid=400000):
    """First n eigenvalues by sign-change scan + high-precision refinement."""
    betas = [abs(e[1]) for e in (left, right) if e[0] == 'R']
    bmax = max(betas) if betas else 1.0
    if lam_min is None:
        lam_min = -(3.0 * max(bmax, 1.0)) ** 2 - 10.0
    if lam_max is None:
        lam_max = ((n + 3) * np.pi / L) ** 2 + 10.0

    xs = np.linspace(lam_min, lam_max, grid)
    vals = shoot_np(xs, L, left, right)
    roots = []
    for i in range(len(xs) - 1):
        if vals[i] == 0.0:
            roots.append(mpf(xs[i]))
        elif vals[i] * vals[i + 1] < 0:
            a, b = mpf(xs[i]), mpf(xs[i + 1])
            fa = shoot(a, L, left, right)
            for _ in range(200):
                m = (a + b) / 2
                fm = shoot(m, L, left, right)
                if fa * fm <= 0:
                    b = m
                else:
                    a, fa = m, fm
            roots.append((a + b) / 2)
        if len(roots) >= n:
            break
    return roots[:n]


# ---------------------------------------------------------------------------
# independent FD route
# ---------------------------------------------------------------------------

def eigs_fd(L, left, right, n, npts=6000, V=None):
    """Lumped-mass P1 discretization -> symmetric tridiagonal eigensolve."""
    def solve(m):
        h = L / m
        x = np.linspace(0.0, L, m + 1)
        main = np.full(m + 1, 2.0 / h)
        main[0] = main[-1] = 1.0 / h
        off = np.full(m, -1.0 / h)
        lump = np.full(m + 1, h)
        lump[0] = lump[-1] = h / 2
        if V is not None:
            main += lump * V(x)
        if left[0] == 'R':
            main[0] -= left[1]
        if right[0] == 'R':
            main[-1] -= right[1]
        keep = slice(1 if left[0] == 'D' else 0, m if right[0] == 'D' else m + 1)
        dg = main[keep]
        d = np.sqrt(lump[keep])
        dg = dg / d / d
        od = off[: len(dg) - 1] / d[:-1] / d[1:]
        return eigvalsh_tridiagonal(dg, od, select='i',
                                    select_range=(0, n - 1))

    e1, e2 = solve(npts), solve(2 * npts)
    return e2 + (e2 - e1) / 3.0           # Richardson, O(h^2) -> O(h^4)


def rr_eigs(L, beta, n_pos):
    """Symmetric Robin(beta)/Robin(beta) interval: the two negative
    eigenvalues come from the even/odd factorized characteristic equations
    (the pair is exponentially close, far below what a sign scan separates);
    positive ones come from the scan."""
    h = mpf(L) / 2
    k_even = findroot(lambda k: k * sinh(k * h) - mpf(beta) * cosh(k * h),
                      mpf(beta) * mpf("1.000001"))
    k_odd = findroot(lambda k: k * cosh(k * h) - mpf(beta) * sinh(k * h),
                     mpf(beta) * mpf("0.999999"))
    neg = sorted([-k_even ** 2, -k_odd ** 2])
    pos = eigs_exact(L, ('R', beta), ('R', beta), n_pos, lam_min=1e-9)
    return neg + pos


def report(tag, L, left, right, n, **kw):
    ex = eigs_exact(L, left, right, n, **kw)
    fd = eigs_fd(L, left, right, n)
    print(f"// {tag}: L={L}, left={left}, right={right}")
    for i, (e, f) in enumerate(zip(ex, fd)):
        ok = abs(float(e) - f) / max(1.0, abs(float(e)))
        print(f"inline constexpr double {tag}_{i + 1} = {mp.nstr(e, 20)};"
              f"  // fd-check rel {ok:.2e}")
    return [float(e) for e in ex]


def report_rr(tag, L, beta, n_pos=1):
    ex = rr_eigs(L, beta, n_pos)
    fd = eigs_fd(L, ('R', beta), ('R', beta), 2 + n_pos, npts=8000)
    print(f"// {tag}: L={L}, Robin({beta}) both ends")
    for i, (e, f) in enumerate(zip(ex, fd)):
        ok = abs(float(e) - f) / max(1.0, abs(float(e)))
        print(f"inline constexpr double {tag}_{i + 1} = {mp.nstr(e, 20)};"
              f"  // fd-check rel {ok:.2e}")
    return [float(e) for e in ex]


print("// generated by scripts/gen_oracles.py -- do not edit by hand")
print()

# Robin(1)/Neumann intervals used by the quarter-pi sector separation oracle
rn10 = report("rn10", 10.0, ('R', 1.0), ('N',), 3)
rn15 = report("rn15", 15.0, ('R', 1.0), ('N',), 4)
rn20 = report("rn20", 20.0, ('R', 1.0), ('N',), 2)
rn30 = report("rn30", 30.0, ('R', 1.0), ('N',), 2)

# Robin/Robin unit interval (square separation)
rr10 = report_rr("rr_a10", 1.0, 10.0, 2)
rr20 = report_rr("rr_a20", 1.0, 20.0, 2)
rr40 = report_rr("rr_a40", 1.0, 40.0, 2)

# Robin/Dirichlet sample
ld = report("rd_a12_d08", 0.8, ('R', 12.0), ('D',), 2)

# Dirichlet/Dirichlet sanity (must be (m pi / L)^2)
dd = report("dd_pi", float(np.pi), ('D',), ('D',), 3)

print()
print("// derived diagnostics (not constants):")
print("// quarter-pi truncated-sector Neumann E-levels, alpha=1:")
for r, mus in (("10", rn10), ("15", rn15), ("20", rn20), ("30", rn30)):
    sums = sorted(a + b for a in mus for b in mus)
    print(f"//   r={r}: E1..E4 = {[f'{s:.12f}' for s in sums[:4]]}")
    print(f"//   r={r}: (E2+1)*r^2 = {(sums[1] + 1.0) * float(r) ** 2:.12f}")

print("// unit-square Robin E5 + a^2 - pi^2 (exact separation):")
for a, mus in (("10", rr10), ("20", rr20), ("40", rr40)):
    e5 = mus[0] + mus[2]
    print(f"//   alpha={a}: {e5 + float(a) ** 2 - np.pi ** 2:+.12f}")

# Schrodinger cross-checks for the curved-side model
print("// -d^2/ds^2 - a*H(s), H = 1-(s-1)^2 on (0,2):")
for a in (100.0, 200.0, 400.0, 800.0):
    V = lambda s: -a * (1.0 - (s - 1.0) ** 2)
    eD = eigs_fd(2.0, ('D',), ('D',), 1, npts=4000, V=V)[0]
    eN = eigs_fd(2.0, ('N',), ('N',), 1, npts=4000, V=V)[0]
    print(f"//   alpha={a:.0f}: E1(DD)={eD:.10f}  E1(DD)-E1(NN)={eD - eN:.3e}"
          f"  (E1+alpha)/sqrt(alpha)={(eD + a) / np.sqrt(a):.6f}")
