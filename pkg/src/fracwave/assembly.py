"""Solution assembly and independent fractional-calculus verification.

The verification side never touches the Mittag-Leffler machinery: it checks
solutions with quadrature/finite-difference realizations of the fractional
operators.

Two Caputo constructions are provided.

* ``caputo_derivative``: ceil(alpha)-th derivative by 4th-order finite
  differences (one-sided at the ends), then the Riemann-Liouville integral
  of order ceil(alpha) - alpha.  Exact for polynomials of low degree; the
  right tool for smooth samples.
* ``caputo_interpolant``: the exact Caputo derivative of the piecewise-linear
  interpolant of the samples, after the known leading fractional mode
  c * t^p (p = the equation's alpha) and the linear part are fitted on the
  first two increments, differentiated in closed form, and added back.
  Solutions of the mode equation behave like  u(0) + b t + c t^alpha + ...
  near t = 0; differencing across that t^alpha mode is what ruins plain
  finite-difference oracles, so ``residual_check`` uses this construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (GridMismatchError, InfeasibleModeError, MissingModeError,
                     ValidationError)
from .grids import TimeGrid
from .modes import RESONANT_INFEASIBLE, ModeSolution, MultiTermOrders
from .operators import OperatorSpec, basis

__all__ = [
    "SolutionGrid", "TimeGrid", "assemble_solution", "rl_integral",
    "caputo_derivative", "caputo_interpolant", "residual_check",
    "sobolev_norm", "nonlocal_condition_residual",
]


@dataclass(frozen=True)
class SolutionGrid:
    """Assembled solution u(t_i, x_j) with per-mode diagnostics."""

    times: np.ndarray
    points: np.ndarray
    values: np.ndarray          # shape (len(times), len(points))
    truncation: int
    denominators: tuple = ()
    regimes: tuple = ()

    def __post_init__(self):
        if self.values.shape != (len(self.times), self.points.shape[0]):
            raise GridMismatchError(
                f"values shape {self.values.shape} != "
                f"({len(self.times)}, {self.points.shape[0]})")
        if self.truncation < 1:
            raise ValidationError([("truncation", "must be >= 1")])


def assemble_solution(spec: OperatorSpec, mode_solutions: Sequence[ModeSolution],
                      points, n_modes: int,
                      times: Optional[np.ndarray] = None) -> SolutionGrid:
    """Superpose per-mode samples against the first n_modes eigenfunctions.

    ``mode_solutions`` must cover ordinals 1..n_modes in order; resonant
    family members contribute with their chosen free coefficient already
    baked into the samples, and any infeasible mode aborts the assembly.
    """
    if len(mode_solutions) < n_modes:
        raise MissingModeError(
            f"need {n_modes} mode solutions, got {len(mode_solutions)}")
    sols = list(mode_solutions[:n_modes])
    bad = [i + 1 for i, s in enumerate(sols) if s.regime == RESONANT_INFEASIBLE]
    if bad:
        raise InfeasibleModeError(
            "resonant modes with nonzero forcing component: "
            + ", ".join(map(str, bad)))
    b = basis(spec, n_modes)
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1 and b.grid.nodes.ndim == 2:
        raise GridMismatchError("operator domain is planar; points need 2 columns")
    efun = np.empty((n_modes, pts.shape[0]))
    for i in range(n_modes):
        fn = b.mode(i + 1).eigenfunction
        if pts.ndim == 1:
            efun[i] = [fn(float(x)) for x in pts]
        else:
            efun[i] = [fn(float(x), float(y)) for x, y in pts]
    coeffs = np.vstack([s.samples for s in sols])      # (N, T)
    values = coeffs.T @ efun                           # (T, P)
    n_times = coeffs.shape[1]
    if times is None:
        times = np.arange(n_times, dtype=float)
    times = np.asarray(times, dtype=float)
    return SolutionGrid(
        times=times, points=pts, values=values, truncation=n_modes,
        denominators=tuple(s.denominator for s in sols),
        regimes=tuple(s.regime for s in sols))


# ---------------------------------------------------------------------------
# fractional operators on sampled functions


def _product_weights(alpha: float, n_intervals: int, h: float):
    r = np.arange(n_intervals, dtype=float)
    p0 = h ** alpha * ((r + 1.0) ** alpha - r ** alpha) / alpha
    p1 = h ** (alpha + 1.0) * ((r + 1.0) ** (alpha + 1.0)
                               - r ** (alpha + 1.0)) / (alpha + 1.0)
    wa = (r + 1.0) * p0 - p1 / h
    wb = p1 / h - r * p0
    return wa, wb


def rl_integral(samples, alpha: float, grid: TimeGrid) -> np.ndarray:
    """Riemann-Liouville integral (1/Gamma(a)) int_0^t (t-s)^{a-1} f(s) ds.

    Product-trapezoidal rule: the kernel moments are integrated exactly
    against the piecewise-linear interpolant of the samples.
    """
    if not (alpha > 0):
        raise ValidationError([("alpha", "requires alpha > 0")])
    f = np.ascontiguousarray(samples, dtype=float)
    if f.shape != grid.nodes.shape:
        raise GridMismatchError("samples do not match the grid")
    n = len(f)
    wa, wb = _product_weights(alpha, n - 1, grid.step)
    # I[m] = sum_{r<m} wa[r] f[m-r] + sum_{r<m} wb[r] f[m-1-r]; the first
    # sum never touches f[0] (mask it so the convolution cannot add an
    # r=m term)
    f_hi = f.copy()
    f_hi[0] = 0.0
    out = np.convolve(wa, f_hi)[:n]
    out[1:] += np.convolve(wb, f)[: n - 1]
    out[0] = 0.0
    return out / math.gamma(alpha)


def _fornberg_weights(x0: float, xs: np.ndarray, m: int) -> np.ndarray:
    """Finite-difference weights for the m-th derivative at x0 on nodes xs."""
    n = len(xs)
    c = np.zeros((n, m + 1))
    c[0, 0] = 1.0
    c1, c4 = 1.0, xs[0] - x0
    for i in range(1, n):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


def _fd_derivative(u: np.ndarray, m: int, h: float) -> np.ndarray:
    """m-th derivative by 4th-order finite differences, one-sided at ends."""
    n = len(u)
    width = m + 4 + (m % 2 == 0)   # odd stencil width so the interior is centered
    if n < width:
        raise ValidationError([("samples", "grid too coarse for the stencil")])
    half = width // 2
    out = np.empty(n)
    offs = np.arange(width, dtype=float)
    w_int = _fornberg_weights(half, offs, m) / h ** m
    interior = np.convolve(u, w_int[::-1])[width - 1 - half: width - 1 - half + n]
    out[:] = interior
    for i in range(half):
        out[i] = _fornberg_weights(i, offs, m) @ u[:width] / h ** m
        out[n - 1 - i] = _fornberg_weights(width - 1 - i, offs, m) \
            @ u[n - width:] / h ** m
    return out


def caputo_derivative(samples, alpha: float, grid: TimeGrid) -> np.ndarray:
    """Caputo derivative of order alpha in (0, 2]: differentiate ceil(alpha)
    times by 4th-order finite differences, then apply the Riemann-Liouville
    integral of the remaining order (integer alpha is the plain derivative).
    """
    f = np.ascontiguousarray(samples, dtype=float)
    if f.shape != grid.nodes.shape:
        raise GridMismatchError("samples do not match the grid")
    if len(f) < 8:
        raise ValidationError([("grid", "grid too coarse (fewer than 8 nodes)")])
    if not (0.0 < alpha <= 2.0):
        raise ValidationError([("alpha", "order must lie in (0,2]")])
    m = int(math.ceil(alpha - 1e-12))
    d = _fd_derivative(f, m, grid.step)
    if abs(alpha - m) <= 1e-12:
        return d
    return rl_integral(d, m - alpha, grid)


def caputo_interpolant(samples, alpha: float, grid: TimeGrid,
                       lead_exponent: Optional[float] = None,
                       peel_exponents: Optional[Sequence[float]] = None
                       ) -> np.ndarray:
    """Caputo derivative of an interpolant of the samples, exactly.

    The fractional modes ``t^p`` listed in ``peel_exponents`` (default:
    just ``lead_exponent``), together with the linear part, are fitted in
    least squares on the first few nodes, removed, differentiated in closed
    form and added back, so the kernel sums only see a smooth remainder.
    Order < 1 uses the linear-spline form; order in (1, 2) integrates
    interval-averaged second differences against exact kernel moments.
    """
    u = np.ascontiguousarray(samples, dtype=float)
    if u.shape != grid.nodes.shape:
        raise GridMismatchError("samples do not match the grid")
    n = len(u)
    if n < 8:
        raise ValidationError([("grid", "grid too coarse (fewer than 8 nodes)")])
    if not (0.0 < alpha <= 2.0):
        raise ValidationError([("alpha", "order must lie in (0,2]")])
    h = grid.step
    if abs(alpha - round(alpha)) <= 1e-12:
        return _fd_derivative(u, int(round(alpha)), h)

    t = grid.nodes
    uh = u - u[0]
    if peel_exponents is None:
        peel_exponents = () if lead_exponent is None else (lead_exponent,)
    # modes below the derivative's integer ceiling have no Caputo power rule
    p_min = 1.0 + 1e-9 if alpha > 1.0 else 0.0
    peel = []
    for p in peel_exponents:
        p = float(p)
        if abs(p - 1.0) > 1e-6 and p_min < p < 2.0 and \
                all(abs(p - q) > 1e-6 for q in peel):
            peel.append(p)
    b_lin = 0.0
    coefs = []
    if peel:
        w = min(n - 1, max(8, 3 * (len(peel) + 1)))
        tw = t[1: w + 1]
        cols = [tw] + [tw ** p for p in peel]
        design = np.column_stack(cols)
        fit, *_ = np.linalg.lstsq(design, uh[1: w + 1], rcond=None)
        b_lin = float(fit[0])
        coefs = [float(c) for c in fit[1:]]
        uh = uh - b_lin * t
        for c, p in zip(coefs, peel):
            uh = uh - c * t ** p

    out = np.zeros(n)
    with np.errstate(divide="ignore"):
        if alpha < 1.0:
            # exact Caputo of the linear-spline remainder (classic L1 form)
            slopes = np.diff(uh) / h
            kern = (np.arange(1, n) ** (1.0 - alpha)
                    - np.arange(0, n - 1) ** (1.0 - alpha)) \
                * h ** (1.0 - alpha) / math.gamma(2.0 - alpha)
            out[1:] = np.convolve(kern, slopes)[: n - 1]
            out += b_lin * t ** (1.0 - alpha) / math.gamma(2.0 - alpha)
        else:
            # interval-averaged second differences against exact kernel
            # moments; exact for parabolas, midpoint-centered for cubics
            d2n = (uh[2:] - 2.0 * uh[1:-1] + uh[:-2]) / (h * h)  # at nodes 1..n-2
            d2 = np.empty(n - 1)
            d2[0] = d2n[0]
            d2[n - 2] = d2n[n - 3]
            d2[1: n - 2] = 0.5 * (d2n[:-1] + d2n[1:])
            r = np.arange(n - 1, dtype=float)
            kern = ((r + 1.0) ** (2.0 - alpha) - r ** (2.0 - alpha)) \
                * h ** (2.0 - alpha) / math.gamma(3.0 - alpha)
            out[1:] = np.convolve(kern, d2)[: n - 1]
        for c, p in zip(coefs, peel):
            out += c * math.gamma(p + 1.0) / math.gamma(p + 1.0 - alpha) \
                * t ** (p - alpha)
    out[0] = 0.0
    return out


def _exponent_ladder(orders: MultiTermOrders, cap: int = 6) -> tuple:
    """Fractional small-time exponents of mode solutions below 2: the
    additive closure of alpha with {alpha, 1, alpha - alpha_j}."""
    gens = [orders.alpha, 1.0] + [orders.alpha - aj for _, aj in orders.terms
                                  if orders.alpha - aj > 1e-9]
    found = set()
    frontier = [orders.alpha]
    while frontier:
        p = frontier.pop()
        if p >= 2.0 or any(abs(p - q) <= 1e-6 for q in found):
            continue
        found.add(p)
        frontier.extend(p + g for g in gens)
    return tuple(sorted(found))[:cap]


def residual_check(samples, orders: MultiTermOrders, lam: float,
                   forcing, grid: TimeGrid, boundary_skip: int = 2) -> float:
    """Max interior defect of the mode equation
    D^alpha u - sum_j a_j D^{alpha_j} u + lam u - f, computed with the
    interpolant-based Caputo oracle; the first and last ``boundary_skip``
    nodes are excluded, where one-sided behavior degrades."""
    u = np.ascontiguousarray(samples, dtype=float)
    f = np.ascontiguousarray(forcing, dtype=float)
    if u.shape != grid.nodes.shape or f.shape != grid.nodes.shape:
        raise GridMismatchError("samples do not match the grid")
    peel = _exponent_ladder(orders)
    res = caputo_interpolant(u, orders.alpha, grid, peel_exponents=peel)
    for a_j, alpha_j in orders.terms:
        if a_j != 0.0:
            res = res - a_j * caputo_interpolant(u, alpha_j, grid,
                                                 peel_exponents=peel)
    res = res + lam * u - f
    inner = res[boundary_skip: len(res) - boundary_skip]
    return float(np.max(np.abs(inner)))


def sobolev_norm(coefficients, eigenvalues, s: float) -> float:
    """Operator-generated Sobolev norm (sum lam^s |c|^2)^(1/2)."""
    c = np.asarray(coefficients, dtype=float)
    lam = np.asarray(eigenvalues, dtype=float)
    if c.shape != lam.shape:
        raise GridMismatchError("coefficient/eigenvalue lengths differ")
    if s < 0 and np.any(lam == 0):
        raise ValidationError(
            [("eigenvalues", "zero eigenvalue with negative s")])
    if s == 0:
        return float(np.sqrt(np.sum(c * c)))
    return float(np.sqrt(np.sum(lam ** s * c * c)))


def nonlocal_condition_residual(solution: SolutionGrid, nonlocal_points) -> float:
    """Max over space of |u(0, x) - sum_i mu_i u(T_i, x)|."""
    times = np.asarray(solution.times, dtype=float)
    acc = np.array(solution.values[0], dtype=float)
    for mu, t in nonlocal_points:
        hits = np.nonzero(np.abs(times - t) <= 1e-9 * max(1.0, times[-1]))[0]
        if len(hits) != 1:
            raise GridMismatchError(f"time {t:g} is not a solution time node")
        acc = acc - mu * solution.values[hits[0]]
    return float(np.max(np.abs(acc)))
