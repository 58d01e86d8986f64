"""Per-mode fractional ODE solver.

Each spatial mode with eigenvalue ``lam`` obeys the multi-term equation

    D^alpha u - sum_j a_j D^{alpha_j} u + lam * u = f,   (Caputo derivatives)

subject to the multi-point condition ``u(0) = sum_i mu_i u(T_i)`` (plus
``u'(0) = 0`` when alpha > 1).  Writing ``Delta(s) = s^alpha -
sum_j a_j s^{alpha_j} + lam`` for the Laplace symbol, the building blocks are

* ``forced_response``: the zero-initial-data response, the convolution of the
  forcing with the kernel ``s^{alpha-1} E_{(...),alpha}(a_1 s^{alpha-alpha_1},
  ..., -lam s^alpha)`` (transform ``1/Delta``), computed by product quadrature
  that integrates the ``s^{alpha-1}`` endpoint weight exactly against a
  piecewise-linear interpolant of the remaining factor;
* ``homogeneous_solution``: the response to a unit initial value,
  ``u0(t) = 1 - lam * t^alpha * E_{(...),alpha+1}(...)`` (transform
  ``(s^{alpha-1} - sum_j a_j s^{alpha_j-1})/Delta``).  With no lower-order
  terms this reduces to the relaxation function
  ``E_{(...),1}(...) = E_{alpha,1}(-lam t^alpha)``; with lower-order Caputo
  terms the two differ, and only ``u0`` satisfies the equation together with
  ``u0(0) = 1`` (and ``u0'(0) = 0`` for alpha > 1: its small-time expansion
  is ``1 + O(t^alpha)``).

The regular solution is ``u = F + [sum_i mu_i F(T_i) / (1 - sum_i mu_i
u0(T_i))] * u0``.  A vanishing denominator is the resonant case: solutions
then exist only for forcing with zero component on the mode, and form the
one-parameter family ``C * u0``.

Terms with ``alpha_j = alpha`` are folded into the leading coefficient
(dividing the equation by ``1 - sum of their a_j``, required to be positive),
which is exactly the geometric resummation of the zero-exponent series
direction; equal exponents ``alpha - alpha_j`` are merged additively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .backend import kernels
from .errors import GridMismatchError, ResonanceError, ValidationError
from .grids import TimeGrid
from .special import DEFAULT_SERIES_CONTROL, SeriesControl

__all__ = [
    "MultiTermOrders", "NonlocalData", "ModeProblem", "ModeSolution",
    "ModeConditionReport", "NonResonanceReport",
    "relaxation_function", "homogeneous_solution", "homogeneous_solution_grid",
    "forced_response", "forced_response_grid", "nonresonance_denominator",
    "check_nonresonance", "solve_mode", "solve_mode_resonant",
    "homogeneous_mode",
    "REGULAR", "RESONANT_FAMILY", "RESONANT_INFEASIBLE",
]

REGULAR = "regular"
RESONANT_FAMILY = "resonant-family"
RESONANT_INFEASIBLE = "resonant-infeasible"

_MERGE_TOL = 1e-12


@dataclass(frozen=True)
class MultiTermOrders:
    """Leading order alpha and lower-order terms (a_j, alpha_j)."""

    alpha: float
    terms: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(
            self, "terms",
            tuple((float(a), float(aj)) for a, aj in self.terms))
        issues = []
        if not (0.0 < self.alpha <= 2.0):
            issues.append(("alpha", "alpha must lie in (0,2]"))
        for j, (_, aj) in enumerate(self.terms):
            if not (0.0 < aj <= 1.0):
                issues.append((f"terms[{j}].alpha_j", "must lie in (0,1]"))
            elif aj > self.alpha + _MERGE_TOL:
                issues.append((f"terms[{j}].alpha_j", "must not exceed alpha"))
        if issues:
            raise ValidationError(issues)
        # fold alpha_j == alpha terms into the leading coefficient
        folded = [a for a, aj in self.terms if abs(aj - self.alpha) <= _MERGE_TOL]
        if folded and sum(abs(a) for a in folded) >= 1.0:
            raise ValidationError(
                [("terms", "coefficients of order-alpha terms must satisfy "
                  "sum|a_j| < 1 for the equation to remain well-posed")])
        scale = 1.0 - sum(folded)
        # merge equal exponents alpha - alpha_j
        merged: dict = {}
        for a, aj in self.terms:
            if abs(aj - self.alpha) <= _MERGE_TOL or a == 0.0:
                continue
            b = self.alpha - aj
            for key in merged:
                if abs(key - b) <= _MERGE_TOL:
                    b = key
                    break
            merged[b] = merged.get(b, 0.0) + a
        pairs = sorted(merged.items())
        object.__setattr__(self, "_scale", scale)
        object.__setattr__(self, "_exponents",
                           tuple(b for b, _ in pairs) + (self.alpha,))
        object.__setattr__(self, "_coefs",
                           tuple(a / scale for _, a in pairs))

    @property
    def scale(self) -> float:
        """Leading coefficient after folding order-alpha terms."""
        return self._scale

    @property
    def reduced_term_count(self) -> int:
        return len(self._coefs)

    def ml_exponents(self) -> tuple:
        """Index entries (alpha - alpha_1, ..., alpha - alpha_m, alpha)."""
        return self._exponents

    def ml_coefs(self, lam: float) -> tuple:
        """Argument coefficients (a_1, ..., a_m, -lam), rescaled."""
        return self._coefs + (-float(lam) / self._scale,)


@dataclass(frozen=True)
class NonlocalData:
    """Multi-point condition data: u(0) = sum_i mu_i u(T_i)."""

    points: tuple  # ((mu_i, T_i), ...) with 0 < T_1 <= ... <= T_n

    def __post_init__(self):
        object.__setattr__(
            self, "points",
            tuple((float(m), float(t)) for m, t in self.points))
        issues = []
        if len(self.points) < 1:
            issues.append(("points", "at least one (mu, T) pair required"))
        prev = 0.0
        for i, (_, t) in enumerate(self.points):
            if not (t > 0):
                issues.append((f"points[{i}].time", "times must be positive"))
            elif t < prev:
                issues.append(
                    (f"points[{i}].time",
                     "times must be sorted nondecreasing (0 < T_1 <= ... <= T_n)"))
            prev = max(prev, t)
        if issues:
            raise ValidationError(issues)

    @property
    def horizon(self) -> float:
        return self.points[-1][1]

    @property
    def sum_abs_mu(self) -> float:
        return sum(abs(m) for m, _ in self.points)


@dataclass(frozen=True)
class ModeProblem:
    lam: float
    forcing: np.ndarray            # samples on grid.nodes
    orders: MultiTermOrders
    nonlocal_data: NonlocalData
    grid: TimeGrid

    def __post_init__(self):
        forcing = np.ascontiguousarray(self.forcing, dtype=float)
        object.__setattr__(self, "forcing", forcing)
        if forcing.shape != self.grid.nodes.shape:
            raise GridMismatchError(
                f"forcing samples {forcing.shape} != grid {self.grid.nodes.shape}")
        if not math.isfinite(self.lam):
            raise ValidationError([("lam", "eigenvalue must be finite")])


@dataclass(frozen=True)
class ModeSolution:
    samples: np.ndarray
    regime: str                    # REGULAR / RESONANT_FAMILY / RESONANT_INFEASIBLE
    denominator: float             # 1 - sum_i mu_i u0(T_i)
    response_at_points: tuple      # u0(T_i)
    sufficient_sum: float          # sum_i |mu_i| |u0(T_i)|
    free_coefficient: Optional[float] = None
    diagnostics: dict = field(default_factory=dict, compare=False)


# ---------------------------------------------------------------------------
# scalar building blocks


def relaxation_function(orders: MultiTermOrders, lam: float, t: float,
                        ctl: SeriesControl = DEFAULT_SERIES_CONTROL) -> float:
    """Multivariate Mittag-Leffler value E_{(...),1}(a_1 t^{alpha-alpha_1},
    ..., -lam t^alpha); equals exp(-lam t) at alpha=1 and cos(sqrt(lam) t)
    at alpha=2 when no lower-order terms are present."""
    if t < 0:
        raise ValidationError([("t", "requires t >= 0")])
    if t == 0.0:
        return 1.0
    b = orders.ml_exponents()
    z = tuple(c * t ** e for c, e in zip(orders.ml_coefs(lam), b))
    return kernels.ml_multi(b, 1.0, z, ctl.abs_tol, ctl.max_total_degree)


def homogeneous_solution(orders: MultiTermOrders, lam: float, t: float,
                         ctl: SeriesControl = DEFAULT_SERIES_CONTROL) -> float:
    """Unit-initial-value solution u0(t); equals the relaxation function when
    there are no lower-order terms."""
    if t < 0:
        raise ValidationError([("t", "requires t >= 0")])
    if t == 0.0:
        return 1.0
    if orders.reduced_term_count == 0:
        return relaxation_function(orders, lam, t, ctl)
    b = orders.ml_exponents()
    coefs = orders.ml_coefs(lam)
    z = tuple(c * t ** e for c, e in zip(coefs, b))
    tail = kernels.ml_multi(b, orders.alpha + 1.0, z,
                            ctl.abs_tol, ctl.max_total_degree)
    lam_eff = float(lam) / orders.scale
    return 1.0 - lam_eff * t ** orders.alpha * tail


def homogeneous_solution_grid(orders: MultiTermOrders, lam: float,
                              times: np.ndarray,
                              ctl: SeriesControl = DEFAULT_SERIES_CONTROL
                              ) -> np.ndarray:
    times = np.ascontiguousarray(times, dtype=float)
    b = orders.ml_exponents()
    coefs = orders.ml_coefs(lam)
    if orders.reduced_term_count == 0:
        return kernels.ml_multi_grid(b, 1.0, coefs, times,
                                     ctl.abs_tol, ctl.max_total_degree)
    tail = kernels.ml_multi_grid(b, orders.alpha + 1.0, coefs, times,
                                 ctl.abs_tol, ctl.max_total_degree)
    lam_eff = float(lam) / orders.scale
    return 1.0 - lam_eff * times ** orders.alpha * tail


def _forced_kernel_grid(orders, lam, times, ctl) -> np.ndarray:
    """E_{(...),alpha}(a_1 s^{alpha-alpha_1}, ..., -lam s^alpha) on the grid."""
    b = orders.ml_exponents()
    return kernels.ml_multi_grid(b, orders.alpha, orders.ml_coefs(lam), times,
                                 ctl.abs_tol, ctl.max_total_degree)


def _product_weights(alpha: float, n_intervals: int, h: float):
    """Exact moments of s^{alpha-1} against the two hat functions on each
    interval [rh, (r+1)h]: returns (wa, wb) with
    integral ~ g_r * wa_r + g_{r+1} * wb_r for linear g."""
    r = np.arange(n_intervals, dtype=float)
    p0 = h ** alpha * ((r + 1.0) ** alpha - r ** alpha) / alpha
    p1 = h ** (alpha + 1.0) * ((r + 1.0) ** (alpha + 1.0)
                               - r ** (alpha + 1.0)) / (alpha + 1.0)
    wa = (r + 1.0) * p0 - p1 / h
    wb = p1 / h - r * p0
    return wa, wb


def _kernel_low_terms(orders: MultiTermOrders, lam: float,
                      q_cap: float = 1.25) -> list:
    """Leading series terms c * s^q (q <= q_cap) of the forced kernel.

    These are the non-smooth small-s modes; the product rule integrates
    them exactly so that only a smooth kernel remainder is interpolated.
    """
    from .special import compositions

    b = orders.ml_exponents()
    coefs = orders.ml_coefs(lam)
    alpha = orders.alpha
    amin = min(b)
    found: dict = {}
    k = 0
    while k * amin <= q_cap and k <= 48:
        for l in compositions(k, len(b)):
            q = sum(bi * li for bi, li in zip(b, l))
            if q > q_cap:
                continue
            c = math.factorial(k)
            for bi, ci, li in zip(b, coefs, l):
                if li:
                    c = c / math.factorial(li) * ci ** li
            c /= math.gamma(alpha + q)
            for key in found:
                if abs(key - q) <= 1e-12:
                    q = key
                    break
            found[q] = found.get(q, 0.0) + c
        k += 1
    return sorted(found.items())


def forced_response_grid(orders: MultiTermOrders, lam: float,
                         forcing: np.ndarray, grid: TimeGrid,
                         ctl: SeriesControl = DEFAULT_SERIES_CONTROL
                         ) -> np.ndarray:
    """Zero-initial-data response on the whole grid.

    Product quadrature with the s^{alpha-1} endpoint weight handled exactly:
    the kernel's own non-smooth leading terms c*s^q are folded into the
    weight (their moments are exact), and only the smooth kernel remainder
    times the forcing is piecewise-linearly interpolated.
    """
    f = np.ascontiguousarray(forcing, dtype=float) / orders.scale
    if f.shape != grid.nodes.shape:
        raise GridMismatchError("forcing samples do not match the time grid")
    n = len(f)
    if n < 2 or not np.any(f):
        return np.zeros(n)
    h = grid.step
    alpha = orders.alpha
    kern = _forced_kernel_grid(orders, lam, grid.nodes, ctl)
    low = _kernel_low_terms(orders, lam)
    khat = kern.copy()
    wa_total = np.zeros(n - 1)
    wb_total = np.zeros(n - 1)
    with np.errstate(divide="ignore"):
        for q, c in low:
            khat -= c * grid.nodes ** q
            wa, wb = _product_weights(alpha + q, n - 1, h)
            wa_total += c * wa
            wb_total += c * wb
    # remainder part: F[m] = sum_{r<m} wa[r] Khat[r] f[m-r]
    #                      + sum_{r<m} wb[r] Khat[r+1] f[m-1-r];
    # the first sum never touches f[0], so mask it to keep the convolution
    # from picking up an r=m term
    wa, wb = _product_weights(alpha, n - 1, h)
    f_hi = f.copy()
    f_hi[0] = 0.0
    out = np.convolve(wa * khat[:-1] + wa_total, f_hi)[:n]
    out[1:] += np.convolve(wb * khat[1:] + wb_total, f)[: n - 1]
    out[0] = 0.0
    return out


def forced_response(orders: MultiTermOrders, lam: float, forcing: np.ndarray,
                    grid: TimeGrid, t_index: Optional[int] = None,
                    ctl: SeriesControl = DEFAULT_SERIES_CONTROL):
    """Forced response; full sample array, or one value when t_index given."""
    out = forced_response_grid(orders, lam, forcing, grid, ctl)
    if t_index is None:
        return out
    if not (0 <= t_index < len(out)):
        raise GridMismatchError(f"t_index {t_index} outside grid")
    return float(out[t_index])


def nonresonance_denominator(orders: MultiTermOrders,
                             nonlocal_data: NonlocalData, lam: float,
                             ctl: SeriesControl = DEFAULT_SERIES_CONTROL
                             ) -> float:
    """1 - sum_i mu_i u0(T_i), the denominator of the regular solution."""
    return 1.0 - sum(
        mu * homogeneous_solution(orders, lam, t, ctl)
        for mu, t in nonlocal_data.points)


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class ModeConditionReport:
    lam: float
    response_at_points: tuple   # u0(T_i) per nonlocal point
    denominator: float
    sufficient_sum: float       # sum_i |mu_i| |u0(T_i)|
    regime: str                 # non-resonant / near-resonant / resonant
    envelope_value: float       # sum|mu| / (1 + lam * T_1)


@dataclass(frozen=True)
class NonResonanceReport:
    modes: tuple
    sum_abs_mu: float
    shortcut_applicable: bool   # alpha in {1,2}, no lower-order terms
    shortcut_pass: bool
    envelope_lambda_threshold: float
    envelope_first_ordinal: Optional[int]  # first supplied mode past the threshold
    resonance_tol: float
    near_tol: float

    @property
    def all_nonresonant(self) -> bool:
        return all(m.regime == "non-resonant" for m in self.modes)


def _classify(denominator, scale, resonance_tol, near_tol):
    if abs(denominator) <= resonance_tol * scale:
        return "resonant"
    if abs(denominator) <= near_tol * scale:
        return "near-resonant"
    return "non-resonant"


def check_nonresonance(orders: MultiTermOrders, nonlocal_data: NonlocalData,
                       lambdas, resonance_tol: float = 1e-8,
                       near_tol: float = 1e-4,
                       ctl: SeriesControl = DEFAULT_SERIES_CONTROL
                       ) -> NonResonanceReport:
    """Classify every supplied eigenvalue against the non-resonance condition.

    Reports, per mode, the denominator 1 - sum_i mu_i u0(T_i), the sufficient
    sum sum_i |mu_i| |u0(T_i)| (< 1 guarantees non-resonance), and the
    envelope value sum|mu| / (1 + lam T_1): since |u0(T_i)| is eventually
    bounded by 1/(1 + lam T_i), eigenvalues above the threshold
    (sum|mu| - 1)/T_1 pass the sufficient condition automatically, so only
    finitely many modes ever need the explicit check.  For the classical
    orders alpha = 1 or 2 (no lower-order terms) the response magnitudes
    never exceed 1 and sum|mu| < 1 settles every mode at once.
    """
    lambdas = [float(v) for v in lambdas]
    if not lambdas:
        raise ValidationError([("lambdas", "at least one eigenvalue required")])
    mus = [m for m, _ in nonlocal_data.points]
    t1 = nonlocal_data.points[0][1]
    sum_abs_mu = nonlocal_data.sum_abs_mu
    shortcut_applicable = (orders.reduced_term_count == 0
                           and abs(orders.alpha - round(orders.alpha)) < 1e-12)
    threshold = max(0.0, (sum_abs_mu - 1.0) / t1)
    first_ord = None
    reports = []
    for i, lam in enumerate(lambdas):
        vals = tuple(homogeneous_solution(orders, lam, t, ctl)
                     for _, t in nonlocal_data.points)
        den = 1.0 - sum(mu * v for mu, v in zip(mus, vals))
        suff = sum(abs(mu) * abs(v) for mu, v in zip(mus, vals))
        regime = _classify(den, 1.0 + suff, resonance_tol, near_tol)
        env = sum_abs_mu / (1.0 + lam * t1)
        reports.append(ModeConditionReport(
            lam=lam, response_at_points=vals, denominator=den,
            sufficient_sum=suff, regime=regime, envelope_value=env))
        if first_ord is None and lam > threshold:
            first_ord = i + 1
    return NonResonanceReport(
        modes=tuple(reports), sum_abs_mu=sum_abs_mu,
        shortcut_applicable=shortcut_applicable,
        shortcut_pass=shortcut_applicable and sum_abs_mu < 1.0,
        envelope_lambda_threshold=threshold,
        envelope_first_ordinal=first_ord,
        resonance_tol=resonance_tol, near_tol=near_tol)


# ---------------------------------------------------------------------------
# mode solves


def _mode_pieces(problem: ModeProblem, ctl: SeriesControl):
    grid = problem.grid
    u0 = homogeneous_solution_grid(problem.orders, problem.lam, grid.nodes, ctl)
    vals, mus = [], []
    for mu, t in problem.nonlocal_data.points:
        vals.append(float(u0[grid.index_of(t)]))
        mus.append(mu)
    den = 1.0 - sum(mu * v for mu, v in zip(mus, vals))
    suff = sum(abs(mu) * abs(v) for mu, v in zip(mus, vals))
    return u0, tuple(vals), den, suff


def solve_mode(problem: ModeProblem, resonance_tol: float = 1e-8,
               ctl: SeriesControl = DEFAULT_SERIES_CONTROL) -> ModeSolution:
    """Regular solution of one mode; raises ResonanceError when the
    denominator is below resonance_tol (relatively), in which case
    ``solve_mode_resonant`` applies."""
    u0, vals, den, suff = _mode_pieces(problem, ctl)
    if abs(den) <= resonance_tol * (1.0 + suff):
        raise ResonanceError(
            f"denominator {den:.3e} below tolerance; mode is resonant")
    F = forced_response_grid(problem.orders, problem.lam, problem.forcing,
                             problem.grid, ctl)
    grid = problem.grid
    forced_at = sum(mu * F[grid.index_of(t)]
                    for mu, t in problem.nonlocal_data.points)
    multiplier = forced_at / den
    samples = F + multiplier * u0
    return ModeSolution(
        samples=samples, regime=REGULAR, denominator=den,
        response_at_points=vals, sufficient_sum=suff,
        diagnostics={"homogeneous_multiplier": multiplier})


def solve_mode_resonant(problem: ModeProblem, c_xi: float,
                        feasibility_tol: float = 1e-9,
                        ctl: SeriesControl = DEFAULT_SERIES_CONTROL
                        ) -> ModeSolution:
    """Resonant-mode handling: zero forcing admits the family C * u0(t); any
    nonzero forcing component makes the mode infeasible (a regime, not an
    exception)."""
    u0, vals, den, suff = _mode_pieces(problem, ctl)
    fmax = float(np.max(np.abs(problem.forcing))) if len(problem.forcing) else 0.0
    if fmax > feasibility_tol:
        return ModeSolution(
            samples=np.zeros_like(u0), regime=RESONANT_INFEASIBLE,
            denominator=den, response_at_points=vals, sufficient_sum=suff,
            diagnostics={"forcing_max": fmax})
    return ModeSolution(
        samples=c_xi * u0, regime=RESONANT_FAMILY, denominator=den,
        response_at_points=vals, sufficient_sum=suff, free_coefficient=c_xi)


def homogeneous_mode(orders: MultiTermOrders, lam: float, rho: float,
                     grid: TimeGrid,
                     ctl: SeriesControl = DEFAULT_SERIES_CONTROL) -> np.ndarray:
    """Samples of rho * u0(t): value rho at t=0, flat start when alpha > 1."""
    return rho * homogeneous_solution_grid(orders, lam, grid.nodes, ctl)
