"""Catalog of spatial operators with known spectral data.

Each operator provides eigenvalues, L2-normalized eigenfunction evaluation,
and a quadrature grid realizing its inner product, enumerated by a flat
1-based ordinal sorted by eigenvalue (ties broken by the operator's natural
sub-index so the ordering is deterministic).

Kinds
-----
* ``DirichletLaplacian1D(length)``: -u'' on (0, L), u(0)=u(L)=0.
* ``Involution(eps)``: -u''(x) + eps*u''(pi - x) on (0, pi), Dirichlet;
  even/odd sine modes pick up factors (1+eps)/(1-eps).
* ``Bessel(nu)``: the cylindrical radial operator on (0, 1) with u(1)=0;
  eigenvalues are squared zeros of J_nu, located here by bracketing the
  large-argument phase estimate and polishing with Newton on a direct
  series/asymptotic evaluation of J_nu.
* ``HarmonicOscillator1D``: -u'' + x^2 u on the line, Hermite functions.
* ``Landau2D(field_b)``: the planar magnetic Hamiltonian; level n has
  eigenvalue (2n+1)*B with a finite configured number of real basis
  functions r^k {cos,sin}(k phi) L_n^(k)(B r^2) exp(-B r^2 / 2) per level.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import DomainError, GridMismatchError, ValidationError
from .quadrature import QuadratureGrid, gauss_hermite, gauss_legendre_panels, polar_laguerre

__all__ = [
    "DirichletLaplacian1D", "Involution", "Bessel", "HarmonicOscillator1D",
    "Landau2D", "OperatorSpec", "SpectralMode", "SpectralBasis",
    "basis", "eigenvalue", "eigenfunction_eval", "fourier_coefficient",
    "hermite_function", "laguerre_poly", "bessel_j", "bessel_zero",
]


@dataclass(frozen=True)
class DirichletLaplacian1D:
    length: float = math.pi

    def __post_init__(self):
        if not (self.length > 0 and math.isfinite(self.length)):
            raise ValidationError([("length", "must be positive and finite")])


@dataclass(frozen=True)
class Involution:
    eps: float

    def __post_init__(self):
        if not (abs(self.eps) < 1):
            raise ValidationError([("eps", "requires |eps| < 1")])


@dataclass(frozen=True)
class Bessel:
    nu: float

    def __post_init__(self):
        if not (self.nu > 0 and math.isfinite(self.nu)):
            raise ValidationError([("nu", "must be positive and finite")])


@dataclass(frozen=True)
class HarmonicOscillator1D:
    pass


@dataclass(frozen=True)
class Landau2D:
    field_b: float
    copies_per_level: int = 3

    def __post_init__(self):
        if not (self.field_b > 0 and math.isfinite(self.field_b)):
            raise ValidationError([("field_b", "must be positive and finite")])
        if self.copies_per_level < 1:
            raise ValidationError([("copies_per_level", "must be >= 1")])


OperatorSpec = Union[DirichletLaplacian1D, Involution, Bessel,
                     HarmonicOscillator1D, Landau2D]


@dataclass(frozen=True)
class SpectralMode:
    """One eigenpair of the flattened enumeration."""

    ordinal: int                      # 1-based position, nondecreasing eigenvalue
    eigenvalue: float
    label: tuple                      # operator-specific sub-index
    eigenfunction: Callable[..., float] = field(compare=False, repr=False)
    multiplicity: Optional[int] = None  # copies sharing the eigenvalue (Landau)


# ---------------------------------------------------------------------------
# special functions for the catalog


def hermite_function(l: int, x: float) -> float:
    """Normalized Hermite function: P_l(x) * exp(-x^2/2) with unit L2 norm.

    Three-term recurrence on the normalized functions; stable for l <= 200.
    """
    if l < 0 or l > 200:
        raise ValidationError([("l", "supported range is 0..200")])
    h_prev = math.pi ** -0.25 * math.exp(-0.5 * x * x)
    if l == 0:
        return h_prev
    h = math.sqrt(2.0) * x * h_prev
    for m in range(2, l + 1):
        h, h_prev = x * math.sqrt(2.0 / m) * h - math.sqrt((m - 1) / m) * h_prev, h
    return h


def laguerre_poly(n: int, a: float, t: float) -> float:
    """Generalized Laguerre polynomial via its explicit finite sum,
    sum_{k<=n} (-1)^k C(n+a, n-k) t^k / k!, valid for a > -1, n <= 100."""
    if n < 0 or n > 100:
        raise ValidationError([("n", "supported range is 0..100")])
    if not (a > -1):
        raise ValidationError([("a", "requires a > -1")])
    lg_top = math.lgamma(n + a + 1.0)
    total = 0.0
    for k in range(n + 1):
        c = math.exp(lg_top - math.lgamma(k + a + 1.0) - math.lgamma(n - k + 1.0)
                     - math.lgamma(k + 1.0))
        term = c * t ** k
        total += -term if k % 2 else term
    return total


def bessel_j(nu: float, x: float) -> float:
    """J_nu(x) for x >= 0: power series up to x=18, Hankel expansion beyond.

    Intended for the zero search (nu of a few units, x up to ~150); accuracy
    there is ~1e-10 or better.
    """
    if x < 0:
        raise ValidationError([("x", "requires x >= 0")])
    if x == 0.0:
        return 0.0 if nu > 0 else 1.0
    if x <= 18.0:
        q = 0.25 * x * x
        term = math.exp(nu * math.log(0.5 * x) - math.lgamma(nu + 1.0))
        total = term
        for m in range(1, 200):
            term *= -q / (m * (m + nu))
            total += term
            if abs(term) < 1e-18 * (1.0 + abs(total)):
                break
        return total
    mu = 4.0 * nu * nu
    p, q = 1.0, 0.0
    term = 1.0
    e8x = 8.0 * x
    for k in range(1, 12):
        term *= (mu - (2 * k - 1) ** 2) / (k * e8x)
        if k % 2 == 1:
            q += term if (k % 4 == 1) else -term
        else:
            p += -term if (k % 4 == 2) else term
        if abs(term) < 1e-17:
            break
    omega = x - 0.5 * nu * math.pi - 0.25 * math.pi
    return math.sqrt(2.0 / (math.pi * x)) * (p * math.cos(omega) - q * math.sin(omega))


def _bessel_j_prime(nu: float, x: float) -> float:
    return bessel_j(nu - 1.0, x) - (nu / x) * bessel_j(nu, x)


def bessel_zero(nu: float, k: int) -> float:
    """k-th positive zero of J_nu (k >= 1): phase estimate, bracket, Newton."""
    if k < 1:
        raise ValidationError([("k", "requires k >= 1")])
    mu = 4.0 * nu * nu
    b = (k + 0.5 * nu - 0.25) * math.pi
    est = b - (mu - 1) / (8 * b) - 4 * (mu - 1) * (7 * mu - 31) / (3 * (8 * b) ** 3)
    lo, hi = est - 0.6, est + 0.6
    flo, fhi = bessel_j(nu, lo), bessel_j(nu, hi)
    if flo * fhi > 0:  # widen until the bracket straddles the zero
        lo, hi = est - 1.5, est + 1.5
        flo, fhi = bessel_j(nu, lo), bessel_j(nu, hi)
    x = est
    for _ in range(60):
        f = bessel_j(nu, x)
        if f * flo <= 0:
            hi = x
        else:
            lo, flo = x, f
        step = f / _bessel_j_prime(nu, x)
        x_new = x - step
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) < 1e-13 * x:
            return x_new
        x = x_new
    return x


# ---------------------------------------------------------------------------
# basis construction


class SpectralBasis:
    """Realized eigendata of a catalog operator truncated to n_modes.

    Holds the flat mode enumeration, the operator's quadrature grid, and the
    matrix of (quadrature-normalized) eigenfunction values on that grid.
    """

    def __init__(self, spec: OperatorSpec, n_modes: int,
                 min_quad_points: int = 0):
        if n_modes < 1:
            raise ValidationError([("n_modes", "must be >= 1")])
        self.spec = spec
        self.n_modes = n_modes
        self.grid = _default_grid(spec, n_modes, min_quad_points)
        raw = _enumerate_modes(spec, n_modes)
        values = np.empty((n_modes, len(self.grid)))
        modes = []
        for i, (lam, label, mult, fn) in enumerate(raw):
            row = _eval_on_grid(fn, self.grid.nodes)
            norm = math.sqrt(float(self.grid.weights @ (row * row)))
            row /= norm
            values[i] = row
            modes.append(SpectralMode(
                ordinal=i + 1, eigenvalue=lam, label=label,
                eigenfunction=_normalized(fn, norm), multiplicity=mult))
        self.modes = modes
        self.values = values  # shape (n_modes, n_nodes)

    def mode(self, xi: int) -> SpectralMode:
        if not (1 <= xi <= self.n_modes):
            raise IndexError(f"mode ordinal {xi} outside 1..{self.n_modes}")
        return self.modes[xi - 1]

    def eigenvalues(self) -> np.ndarray:
        return np.array([m.eigenvalue for m in self.modes])

    def coefficient(self, f_samples: np.ndarray, xi: int) -> float:
        f_samples = np.asarray(f_samples, dtype=float)
        if f_samples.shape[0] != len(self.grid):
            raise GridMismatchError(
                f"sample count {f_samples.shape[0]} != grid size {len(self.grid)}")
        self.mode(xi)
        return float(self.grid.weights @ (f_samples * self.values[xi - 1]))

    def coefficients(self, f_samples: np.ndarray) -> np.ndarray:
        f_samples = np.asarray(f_samples, dtype=float)
        if f_samples.shape[0] != len(self.grid):
            raise GridMismatchError(
                f"sample count {f_samples.shape[0]} != grid size {len(self.grid)}")
        return self.values @ (self.grid.weights * f_samples)


def _normalized(fn, norm):
    def wrapped(*x):
        return fn(*x) / norm
    return wrapped


def _eval_on_grid(fn, nodes) -> np.ndarray:
    if nodes.ndim == 1:
        return np.array([fn(float(x)) for x in nodes])
    return np.array([fn(float(x), float(y)) for x, y in nodes])


def _default_grid(spec: OperatorSpec, n_modes: int,
                  min_points: int = 0) -> QuadratureGrid:
    if isinstance(spec, DirichletLaplacian1D):
        panels = max(24, 2 * n_modes, -(-min_points // 10))
        return gauss_legendre_panels(0.0, spec.length, panels=panels)
    if isinstance(spec, Involution):
        panels = max(24, 2 * n_modes, -(-min_points // 10))
        return gauss_legendre_panels(0.0, math.pi, panels=panels)
    if isinstance(spec, Bessel):
        # sqrt(x) factor in the eigenfunctions: refine the panel touching 0
        panels = max(24, 2 * n_modes, -(-min_points // 12))
        return gauss_legendre_panels(0.0, 1.0, panels=panels,
                                     nodes_per_panel=12, refine_first=18)
    if isinstance(spec, HarmonicOscillator1D):
        return gauss_hermite(max(48, 2 * n_modes + 8, min_points))
    if isinstance(spec, Landau2D):
        k_max = max(1, (spec.copies_per_level + 1) // 2)
        levels = n_modes // spec.copies_per_level + 1
        n_ang = max(16, 2 * k_max + 4)
        n_rad = max(32, 2 * levels + k_max + 8, -(-min_points // n_ang))
        return polar_laguerre(spec.field_b, n_radial=n_rad, n_angular=n_ang)
    raise ValidationError([("operator", f"unknown kind {type(spec).__name__}")])


def _enumerate_modes(spec: OperatorSpec, n: int):
    """Return [(eigenvalue, label, multiplicity, eigenfunction)] sorted by
    eigenvalue with deterministic tie-breaking."""
    if isinstance(spec, DirichletLaplacian1D):
        L = spec.length
        amp = math.sqrt(2.0 / L)

        def make(k):
            return lambda x: amp * math.sin(k * math.pi * x / L) \
                if _check_interval(x, 0.0, L) else None
        return [((k * math.pi / L) ** 2, ("sin", k), None, make(k))
                for k in range(1, n + 1)]

    if isinstance(spec, Involution):
        eps = spec.eps
        amp = math.sqrt(2.0 / math.pi)
        cands = []
        for k in range(0, n + 1):  # odd family: frequencies 2k+1
            lam = (1.0 - eps) * (2 * k + 1) ** 2
            cands.append((lam, 2 * k + 1))
        for k in range(1, n + 1):  # even family: frequencies 2k
            lam = 4.0 * (1.0 + eps) * k * k
            cands.append((lam, 2 * k))
        cands.sort(key=lambda t: (t[0], t[1]))

        def make(freq):
            return lambda x: amp * math.sin(freq * x) \
                if _check_interval(x, 0.0, math.pi) else None
        return [(lam, ("sin", freq), None, make(freq))
                for lam, freq in cands[:n]]

    if isinstance(spec, Bessel):
        nu = spec.nu
        out = []
        for k in range(1, n + 1):
            j = bessel_zero(nu, k)

            def make(jk):
                return lambda x: math.sqrt(x) * bessel_j(nu, jk * x) \
                    if _check_interval(x, 0.0, 1.0) else None
            out.append((j * j, ("zero", k), None, make(j)))
        return out

    if isinstance(spec, HarmonicOscillator1D):
        def make(l):
            return lambda x: hermite_function(l, x)
        return [(2.0 * l + 1.0, ("hermite", l), None, make(l))
                for l in range(n)]

    if isinstance(spec, Landau2D):
        B = spec.field_b
        copies = spec.copies_per_level
        out = []
        level = 0
        while len(out) < n:
            lam = (2 * level + 1) * B
            for c in range(copies):
                if len(out) >= n:
                    break
                # copy order: k=0; k=1 cos; k=1 sin; k=2 cos; k=2 sin; ...
                k = (c + 1) // 2
                kind = "sin" if (c % 2 == 0 and c > 0) else "cos"
                out.append((lam, ("level", level, kind, k), copies,
                            _landau_fn(B, level, k, kind)))
            level += 1
        return out

    raise ValidationError([("operator", f"unknown kind {type(spec).__name__}")])


def _landau_fn(B, level, k, kind):
    def fn(x, y):
        r2 = x * x + y * y
        radial = (B * r2) ** (0.5 * k) * math.exp(-0.5 * B * r2) \
            * laguerre_poly(level, float(k), B * r2)
        if k == 0:
            return radial
        phi = math.atan2(y, x)
        ang = math.cos(k * phi) if kind == "cos" else math.sin(k * phi)
        return radial * ang
    return fn


def _check_interval(x, lo, hi):
    if not (lo <= x <= hi):
        raise DomainError(f"point {x:g} outside [{lo:g}, {hi:g}]")
    return True


@functools.lru_cache(maxsize=64)
def basis(spec: OperatorSpec, n_modes: int,
          min_quad_points: int = 0) -> SpectralBasis:
    return SpectralBasis(spec, n_modes, min_quad_points)


def eigenvalue(spec: OperatorSpec, xi: int) -> float:
    """Eigenvalue of the xi-th mode (flat 1-based enumeration)."""
    return basis(spec, max(xi, 8)).mode(xi).eigenvalue


def eigenfunction_eval(spec: OperatorSpec, xi: int, *x) -> float:
    """Value of the L2-normalized xi-th eigenfunction at a domain point."""
    return basis(spec, max(xi, 8)).mode(xi).eigenfunction(*x)


def fourier_coefficient(spec: OperatorSpec, grid: QuadratureGrid,
                        f_slice: np.ndarray, xi: int) -> float:
    """Inner product of sampled data with the xi-th eigenfunction.

    ``f_slice`` must be sampled on ``grid.nodes``; the grid must be the
    basis grid of ``spec`` (pass ``basis(spec, n).grid``).
    """
    b = basis(spec, max(xi, 8))
    if len(grid) != len(b.grid) or not np.array_equal(grid.nodes, b.grid.nodes):
        raise GridMismatchError("grid does not match the operator's basis grid")
    return b.coefficient(np.asarray(f_slice, dtype=float), xi)
