"""Uniform time grids.

The nonlocal condition times must land exactly on grid nodes (values at
those nodes feed the solution denominators, so interpolation there is not
acceptable); ``TimeGrid.containing`` picks the node count accordingly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import GridMismatchError, ValidationError


@dataclass(frozen=True)
class TimeGrid:
    """Uniform nodes 0 = t_0 < t_1 < ... < t_{n-1} = horizon."""

    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.ascontiguousarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        issues = []
        if nodes.ndim != 1 or len(nodes) < 2:
            issues.append(("nodes", "need at least 2 nodes"))
        else:
            if nodes[0] != 0.0:
                issues.append(("nodes", "grid must start at 0"))
            d = np.diff(nodes)
            if np.any(d <= 0):
                issues.append(("nodes", "nodes must be strictly increasing"))
            elif np.max(np.abs(d - d[0])) > 1e-12 * max(1.0, nodes[-1]):
                issues.append(("nodes", "grid must be uniform"))
        if issues:
            raise ValidationError(issues)

    def __len__(self):
        return len(self.nodes)

    @property
    def horizon(self) -> float:
        return float(self.nodes[-1])

    @property
    def step(self) -> float:
        return float(self.nodes[1] - self.nodes[0])

    def index_of(self, t: float) -> int:
        """Index of the node equal to t (up to 1e-9 relative)."""
        idx = int(round(t / self.step))
        if not (0 <= idx < len(self.nodes)) or \
                abs(self.nodes[idx] - t) > 1e-9 * max(1.0, self.horizon):
            raise GridMismatchError(f"time {t:g} is not a grid node")
        return idx

    @staticmethod
    def regular(horizon: float, n_nodes: int) -> "TimeGrid":
        if not (horizon > 0):
            raise ValidationError([("horizon", "must be positive")])
        if n_nodes < 2:
            raise ValidationError([("n_nodes", "need at least 2 nodes")])
        return TimeGrid(np.linspace(0.0, horizon, n_nodes))

    @staticmethod
    def containing(horizon: float, times, min_nodes: int = 1024,
                   max_nodes: int = 4_000_000) -> "TimeGrid":
        """Uniform grid over [0, horizon] with >= min_nodes nodes whose nodes
        include every entry of ``times`` exactly.

        The ratios t/horizon are rationalized (denominators up to 10^5); an
        impossible combination raises ValidationError.
        """
        if not (horizon > 0):
            raise ValidationError([("horizon", "must be positive")])
        denom = 1
        for t in times:
            frac = Fraction(float(t) / float(horizon)).limit_denominator(100_000)
            if abs(float(frac) - float(t) / float(horizon)) > 1e-9:
                raise ValidationError(
                    [("times", f"time {t:g} is not a small rational multiple "
                      "of the horizon; choose grid-compatible times")])
            denom = denom * frac.denominator // np.gcd(denom, frac.denominator)
        intervals = denom * max(1, -(-(min_nodes - 1) // denom))
        if intervals + 1 > max_nodes:
            raise ValidationError(
                [("times", "containing grid would need more than "
                  f"{max_nodes} nodes")])
        grid = TimeGrid.regular(float(horizon), intervals + 1)
        for t in times:
            grid.index_of(float(t))
        return grid
