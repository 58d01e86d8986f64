"""Problem definition: parsing, validation, serialization, orchestration.

A problem is a YAML document::

    operator:  {kind: dirichlet_laplacian, length: 3.141592653589793}
    orders:    {alpha: 1.0, terms: [{a: 0.2, alpha_j: 0.5}]}
    nonlocal:  {points: [{mu: 0.5, time: 1.0}]}
    forcing:
      terms:
        - time:  {kind: sin, amplitude: 1.0, frequency: 1.0, phase: 0.0}
          space: {kind: eigenfunction, index: 1}
    truncation: {modes: 8}
    grids:      {time_nodes: 1024, space_nodes: 48}
    tolerances: {series_abs_tol: 1.0e-12, series_max_degree: 600,
                 resonance: 1.0e-8, near_resonance: 1.0e-4,
                 feasibility: 1.0e-9}

Validation is not fail-fast: every violated constraint is reported with its
field path.  The assembled solution is sampled at the operator's quadrature
nodes, which lets ``verify`` reproject an emitted CSV onto the modes exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import yaml

from .errors import ValidationError
from .grids import TimeGrid
from .modes import MultiTermOrders, NonlocalData
from .operators import (Bessel, DirichletLaplacian1D, HarmonicOscillator1D,
                        Involution, Landau2D, OperatorSpec)

_TIME_KINDS = ("polynomial", "exp", "sin", "cos", "tabulated")
_SPACE_KINDS = ("eigenfunction", "tabulated")


@dataclass(frozen=True)
class TimeFactor:
    kind: str
    amplitude: float = 1.0
    frequency: float = 1.0
    phase: float = 0.0
    rate: float = 0.0
    coefficients: tuple = ()
    values: tuple = ()

    def sample(self, t: np.ndarray) -> np.ndarray:
        if self.kind == "polynomial":
            out = np.zeros_like(t)
            for c in reversed(self.coefficients):
                out = out * t + c
            return out
        if self.kind == "exp":
            return self.amplitude * np.exp(self.rate * t)
        if self.kind == "sin":
            return self.amplitude * np.sin(self.frequency * t + self.phase)
        if self.kind == "cos":
            return self.amplitude * np.cos(self.frequency * t + self.phase)
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != t.shape:
            raise ValidationError(
                [("forcing.time.values",
                  f"tabulated length {len(vals)} != time nodes {len(t)}")])
        return vals


@dataclass(frozen=True)
class SpaceFactor:
    kind: str
    index: int = 0
    values: tuple = ()


@dataclass(frozen=True)
class ForcingTerm:
    time: TimeFactor
    space: SpaceFactor


@dataclass(frozen=True)
class Tolerances:
    series_abs_tol: float = 1e-12
    series_max_degree: int = 600
    resonance: float = 1e-8
    near_resonance: float = 1e-4
    feasibility: float = 1e-9


@dataclass(frozen=True)
class ProblemConfig:
    operator: OperatorSpec
    orders: MultiTermOrders
    nonlocal_data: NonlocalData
    forcing: tuple            # of ForcingTerm
    n_modes: int
    time_nodes: int
    space_nodes: int
    tolerances: Tolerances = field(default_factory=Tolerances)

    def time_grid(self) -> TimeGrid:
        return TimeGrid.containing(
            self.nonlocal_data.horizon,
            [t for _, t in self.nonlocal_data.points],
            self.time_nodes)


_OPERATOR_KINDS = {
    "dirichlet_laplacian": (DirichletLaplacian1D, ("length",)),
    "involution": (Involution, ("eps",)),
    "bessel": (Bessel, ("nu",)),
    "harmonic_oscillator": (HarmonicOscillator1D, ()),
    "landau": (Landau2D, ("field_b", "copies_per_level")),
}


class _Collector:
    """Accumulates (path, message) pairs so validation reports everything."""

    def __init__(self):
        self.issues = []

    def add(self, path, msg):
        self.issues.append((path, msg))

    def absorb(self, exc: ValidationError, prefix: str):
        for path, msg in exc.issues:
            self.issues.append((f"{prefix}.{path}" if path else prefix, msg))

    def raise_if_any(self):
        if self.issues:
            raise ValidationError(self.issues)


def _need_map(doc, key, issues) -> dict:
    v = doc.get(key)
    if not isinstance(v, dict):
        issues.add(key, "section missing or not a mapping")
        return {}
    return v


def _get_num(sec, path, key, issues, default=None, required=False):
    v = sec.get(key, default)
    if v is None:
        if required:
            issues.add(f"{path}.{key}", "required value missing")
        return default
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        issues.add(f"{path}.{key}", "must be a number")
        return default
    return float(v)


def _get_int(sec, path, key, issues, default=None, required=False):
    v = sec.get(key, default)
    if v is None:
        if required:
            issues.add(f"{path}.{key}", "required value missing")
        return default
    if isinstance(v, bool) or not isinstance(v, int):
        issues.add(f"{path}.{key}", "must be an integer")
        return default
    return v


def parse_config(text: str) -> ProblemConfig:
    """Parse and fully validate a YAML problem document.

    Raises ``ValidationError`` carrying every violation (with field paths),
    or ``yaml.YAMLError`` for syntactically invalid documents.
    """
    doc = yaml.safe_load(text)
    issues = _Collector()
    if not isinstance(doc, dict):
        issues.add("", "document must be a mapping")
        issues.raise_if_any()

    op_sec = _need_map(doc, "operator", issues)
    operator = None
    kind = op_sec.get("kind")
    if kind not in _OPERATOR_KINDS:
        issues.add("operator.kind",
                   f"must be one of {sorted(_OPERATOR_KINDS)}")
    else:
        cls, keys = _OPERATOR_KINDS[kind]
        kwargs = {}
        for key in keys:
            if key in op_sec:
                if key == "copies_per_level":
                    v = _get_int(op_sec, "operator", key, issues)
                else:
                    v = _get_num(op_sec, "operator", key, issues)
                if v is not None:
                    kwargs[key] = v
        extra = set(op_sec) - set(keys) - {"kind"}
        if extra:
            issues.add("operator", f"unknown parameters: {sorted(extra)}")
        try:
            operator = cls(**kwargs)
        except ValidationError as e:
            issues.absorb(e, "operator")
        except TypeError:
            issues.add("operator", f"missing required parameters for {kind}")

    orders_sec = _need_map(doc, "orders", issues)
    alpha = _get_num(orders_sec, "orders", "alpha", issues, required=True)
    terms = []
    raw_terms = orders_sec.get("terms", [])
    if not isinstance(raw_terms, list):
        issues.add("orders.terms", "must be a list")
        raw_terms = []
    for j, item in enumerate(raw_terms):
        if not isinstance(item, dict):
            issues.add(f"orders.terms[{j}]", "must be a mapping {a, alpha_j}")
            continue
        a = _get_num(item, f"orders.terms[{j}]", "a", issues, required=True)
        aj = _get_num(item, f"orders.terms[{j}]", "alpha_j", issues,
                      required=True)
        if a is not None and aj is not None:
            terms.append((a, aj))
    orders = None
    if alpha is not None:
        try:
            orders = MultiTermOrders(alpha, tuple(terms))
        except ValidationError as e:
            issues.absorb(e, "orders")

    nl_sec = _need_map(doc, "nonlocal", issues)
    raw_pts = nl_sec.get("points", [])
    pts = []
    if not isinstance(raw_pts, list) or not raw_pts:
        issues.add("nonlocal.points", "must be a non-empty list")
    else:
        for i, item in enumerate(raw_pts):
            if not isinstance(item, dict):
                issues.add(f"nonlocal.points[{i}]",
                           "must be a mapping {mu, time}")
                continue
            mu = _get_num(item, f"nonlocal.points[{i}]", "mu", issues,
                          required=True)
            tv = _get_num(item, f"nonlocal.points[{i}]", "time", issues,
                          required=True)
            if mu is not None and tv is not None:
                pts.append((mu, tv))
    nonlocal_data = None
    if pts:
        try:
            nonlocal_data = NonlocalData(tuple(pts))
        except ValidationError as e:
            issues.absorb(e, "nonlocal")

    forcing_sec = _need_map(doc, "forcing", issues)
    fterms = []
    raw_f = forcing_sec.get("terms", [])
    if not isinstance(raw_f, list):
        issues.add("forcing.terms", "must be a list")
        raw_f = []
    for q, item in enumerate(raw_f):
        path = f"forcing.terms[{q}]"
        if not isinstance(item, dict):
            issues.add(path, "must be a mapping {time, space}")
            continue
        tsec = item.get("time")
        ssec = item.get("space")
        tf = sf = None
        if not isinstance(tsec, dict) or tsec.get("kind") not in _TIME_KINDS:
            issues.add(f"{path}.time.kind", f"must be one of {_TIME_KINDS}")
        else:
            kw = dict(kind=tsec["kind"])
            for key in ("amplitude", "frequency", "phase", "rate"):
                if key in tsec:
                    v = _get_num(tsec, f"{path}.time", key, issues)
                    if v is not None:
                        kw[key] = v
            if tsec["kind"] == "polynomial":
                coeffs = tsec.get("coefficients")
                if not isinstance(coeffs, list) or not coeffs:
                    issues.add(f"{path}.time.coefficients",
                               "polynomial needs a non-empty coefficient list")
                else:
                    kw["coefficients"] = tuple(float(c) for c in coeffs)
            if tsec["kind"] == "tabulated":
                vals = tsec.get("values")
                if not isinstance(vals, list) or len(vals) < 2:
                    issues.add(f"{path}.time.values",
                               "tabulated needs a list of samples")
                else:
                    kw["values"] = tuple(float(v) for v in vals)
            tf = TimeFactor(**kw)
        if not isinstance(ssec, dict) or ssec.get("kind") not in _SPACE_KINDS:
            issues.add(f"{path}.space.kind", f"must be one of {_SPACE_KINDS}")
        elif ssec["kind"] == "eigenfunction":
            idx = _get_int(ssec, f"{path}.space", "index", issues,
                           required=True)
            if idx is not None:
                if idx < 1:
                    issues.add(f"{path}.space.index", "mode index is 1-based")
                else:
                    sf = SpaceFactor(kind="eigenfunction", index=idx)
        else:
            vals = ssec.get("values")
            if not isinstance(vals, list) or len(vals) < 2:
                issues.add(f"{path}.space.values",
                           "tabulated needs samples on the quadrature nodes")
            else:
                sf = SpaceFactor(kind="tabulated",
                                 values=tuple(float(v) for v in vals))
        if tf is not None and sf is not None:
            fterms.append(ForcingTerm(time=tf, space=sf))

    trunc_sec = _need_map(doc, "truncation", issues)
    n_modes = _get_int(trunc_sec, "truncation", "modes", issues, required=True)
    if n_modes is not None and n_modes < 1:
        issues.add("truncation.modes", "must be at least 1")

    grids_sec = _need_map(doc, "grids", issues)
    time_nodes = _get_int(grids_sec, "grids", "time_nodes", issues,
                          default=1024)
    space_nodes = _get_int(grids_sec, "grids", "space_nodes", issues,
                           default=0)
    if time_nodes is not None and time_nodes < 8:
        issues.add("grids.time_nodes", "need at least 8 time nodes")
    if space_nodes is not None and space_nodes < 0:
        issues.add("grids.space_nodes", "must be non-negative (0 = default)")

    tol_sec = doc.get("tolerances", {}) or {}
    tol_kwargs = {}
    if isinstance(tol_sec, dict):
        for key, conv in (("series_abs_tol", float),
                          ("series_max_degree", int),
                          ("resonance", float), ("near_resonance", float),
                          ("feasibility", float)):
            if key in tol_sec:
                v = tol_sec[key]
                if not isinstance(v, (int, float)) or isinstance(v, bool) \
                        or float(v) <= 0:
                    issues.add(f"tolerances.{key}", "must be a positive number")
                else:
                    tol_kwargs[key] = conv(v)
    else:
        issues.add("tolerances", "must be a mapping")

    known = {"operator", "orders", "nonlocal", "forcing", "truncation",
             "grids", "tolerances"}
    for key in set(doc) - known:
        issues.add(str(key), "unknown top-level section")

    issues.raise_if_any()
    assert operator is not None and orders is not None \
        and nonlocal_data is not None and n_modes is not None
    cfg = ProblemConfig(
        operator=operator, orders=orders, nonlocal_data=nonlocal_data,
        forcing=tuple(fterms), n_modes=n_modes, time_nodes=time_nodes,
        space_nodes=space_nodes, tolerances=Tolerances(**tol_kwargs))
    # grid compatibility of the nonlocal times is part of validation
    try:
        cfg.time_grid()
    except ValidationError as e:
        issues.absorb(e, "grids")
        issues.raise_if_any()
    return cfg


def serialize(config: ProblemConfig) -> str:
    """Canonical YAML for a config; parse_config(serialize(c)) == c."""
    op = config.operator
    op_doc: dict = {}
    for kind, (cls, keys) in _OPERATOR_KINDS.items():
        if isinstance(op, cls):
            op_doc["kind"] = kind
            for key in keys:
                op_doc[key] = getattr(op, key)
            break
    doc = {
        "operator": op_doc,
        "orders": {
            "alpha": config.orders.alpha,
            "terms": [{"a": a, "alpha_j": aj} for a, aj in config.orders.terms],
        },
        "nonlocal": {
            "points": [{"mu": mu, "time": tv}
                       for mu, tv in config.nonlocal_data.points],
        },
        "forcing": {"terms": [_forcing_doc(term) for term in config.forcing]},
        "truncation": {"modes": config.n_modes},
        "grids": {"time_nodes": config.time_nodes,
                  "space_nodes": config.space_nodes},
        "tolerances": {
            "series_abs_tol": config.tolerances.series_abs_tol,
            "series_max_degree": config.tolerances.series_max_degree,
            "resonance": config.tolerances.resonance,
            "near_resonance": config.tolerances.near_resonance,
            "feasibility": config.tolerances.feasibility,
        },
    }
    return yaml.safe_dump(doc, sort_keys=True)


def _forcing_doc(term: ForcingTerm) -> dict:
    t = {"kind": term.time.kind}
    if term.time.kind == "polynomial":
        t["coefficients"] = list(term.time.coefficients)
    elif term.time.kind == "exp":
        t["amplitude"] = term.time.amplitude
        t["rate"] = term.time.rate
    elif term.time.kind in ("sin", "cos"):
        t["amplitude"] = term.time.amplitude
        t["frequency"] = term.time.frequency
        t["phase"] = term.time.phase
    else:
        t["values"] = list(term.time.values)
    s = {"kind": term.space.kind}
    if term.space.kind == "eigenfunction":
        s["index"] = term.space.index
    else:
        s["values"] = list(term.space.values)
    return {"time": t, "space": s}


def space_quadrature_size(config: ProblemConfig) -> int:
    """Requested spatial quadrature refinement (0 means operator default)."""
    return config.space_nodes


def mode_forcing_matrix(config: ProblemConfig, time_grid: TimeGrid,
                        spectral_basis) -> np.ndarray:
    """Per-mode forcing samples f_xi(t): shape (n_modes, time_nodes).

    Eigenfunction-indexed spatial factors land exactly on their mode;
    tabulated spatial samples are projected by quadrature.
    """
    n = config.n_modes
    out = np.zeros((n, len(time_grid)))
    for q, term in enumerate(config.forcing):
        g = term.time.sample(time_grid.nodes)
        if term.space.kind == "eigenfunction":
            idx = term.space.index
            if idx <= n:
                out[idx - 1] += g
        else:
            vals = np.asarray(term.space.values, dtype=float)
            if vals.shape[0] != len(spectral_basis.grid):
                raise ValidationError(
                    [(f"forcing.terms[{q}].space.values",
                      f"tabulated length {vals.shape[0]} != quadrature size "
                      f"{len(spectral_basis.grid)}")])
            coeffs = spectral_basis.coefficients(vals)
            out += np.outer(coeffs, g)
    return out
