"""Quadrature grids realizing the inner products of the operator catalog.

Bounded intervals use composite Gauss-Legendre panels (optionally with a
geometrically refined first panel for integrands with an endpoint kink);
the harmonic oscillator uses Gauss-Hermite with the weight folded into the
total weights; the 2-D magnetic operator uses a polar grid, Gauss-Laguerre
radially and a uniform (trigonometrically exact) angular rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class QuadratureGrid:
    """Nodes and positive weights; ``sum(w * f(nodes))`` approximates the
    operator's inner-product integral of ``f``.

    ``nodes`` has shape (n,) for 1-D domains and (n, 2) for planar ones.
    """

    nodes: np.ndarray
    weights: np.ndarray
    scheme: str

    def __post_init__(self):
        issues = []
        if self.weights.ndim != 1 or len(self.weights) < 2:
            issues.append(("weights", "need at least 2 nodes"))
        if np.any(self.weights <= 0):
            issues.append(("weights", "must all be positive"))
        if self.nodes.shape[0] != self.weights.shape[0]:
            issues.append(("nodes", "node/weight counts differ"))
        if issues:
            raise ValidationError(issues)

    def __len__(self):
        return len(self.weights)


def gauss_legendre_panels(a: float, b: float, panels: int,
                          nodes_per_panel: int = 10,
                          refine_first: int = 0) -> QuadratureGrid:
    """Composite Gauss-Legendre rule on [a, b].

    ``refine_first`` geometrically subdivides the first panel that many
    times, which restores accuracy for integrands with a kink at ``a``.
    """
    if panels < 1 or nodes_per_panel < 2:
        raise ValidationError([("panels", "need panels >= 1, nodes >= 2")])
    edges = list(np.linspace(a, b, panels + 1))
    for _ in range(refine_first):
        edges.insert(1, a + (edges[1] - a) / 2.0)
    x0, w0 = np.polynomial.legendre.leggauss(nodes_per_panel)
    xs, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid, half = (lo + hi) / 2.0, (hi - lo) / 2.0
        xs.append(mid + half * x0)
        ws.append(half * w0)
    return QuadratureGrid(np.concatenate(xs), np.concatenate(ws),
                          f"gauss-legendre[{panels}x{nodes_per_panel}]")


def gauss_hermite(n: int) -> QuadratureGrid:
    """Full-line rule with the Gaussian weight folded into total weights."""
    x, w = np.polynomial.hermite.hermgauss(n)
    total = np.exp(np.log(w) + x * x)
    return QuadratureGrid(x, total, f"gauss-hermite[{n}]")


def polar_laguerre(field_b: float, n_radial: int, n_angular: int) -> QuadratureGrid:
    """Plane rule adapted to densities ~ exp(-B r^2) times polynomials.

    Radially Gauss-Laguerre in rho = B r^2, angularly the n-point uniform
    rule (exact for trigonometric polynomials of degree < n_angular).
    """
    rho, w = np.polynomial.laguerre.laggauss(n_radial)
    w_total = np.exp(np.log(w) + rho) / (2.0 * field_b)
    phi = 2.0 * np.pi * np.arange(n_angular) / n_angular
    dphi = 2.0 * np.pi / n_angular
    r = np.sqrt(rho / field_b)
    xx = np.outer(r, np.cos(phi)).ravel()
    yy = np.outer(r, np.sin(phi)).ravel()
    ww = np.outer(w_total, np.full(n_angular, dphi)).ravel()
    nodes = np.column_stack([xx, yy])
    return QuadratureGrid(nodes, ww, f"polar-laguerre[{n_radial}x{n_angular}]")
