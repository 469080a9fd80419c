"""Group Fourier transform, Plancherel and Sobolev norms.

The transform pairs a function against the adjoint representation,
``phi_hat(xi) = int phi(x) xi(x)^* dx``, and synthesis is
``phi(x) = sum_xi d_xi tr(xi(x) phi_hat(xi))``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .group_backend import QuadratureGrid, SU2, Torus, parse_group


class GridMismatch(ValueError):
    pass


@dataclass
class GridFunction:
    """Complex values at the nodes of a quadrature grid.

    ``values`` has shape ``(*batch, nodes)``; a leading batch lets one object
    carry many functions on the same grid.
    """

    grid: QuadratureGrid
    values: np.ndarray
    band_limit_hint: Optional[object] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape[-1] != self.grid.size:
            raise GridMismatch(f"{self.values.shape[-1]} values for a grid with {self.grid.size} nodes")

    @property
    def group(self):
        return self.grid.group

    def __add__(self, other):
        _same_grid(self, other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other):
        _same_grid(self, other)
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            _same_grid(self, other)
            return GridFunction(self.grid, self.values * other.values)
        return GridFunction(self.grid, self.values * other, self.band_limit_hint)

    __rmul__ = __mul__

    def conj(self):
        return GridFunction(self.grid, np.conj(self.values), self.band_limit_hint)


def _same_grid(a, b):
    if a.grid is not b.grid and (a.grid.group != b.grid.group or a.grid.band_limit != b.grid.band_limit):
        raise GridMismatch("functions live on different grids")


@dataclass
class FourierCoefficients:
    """Finitely supported matrix sequence on the unitary dual.

    ``data`` uses the backend layout described in :mod:`group_backend`.
    """

    group: object
    support_limit: object
    data: object = field(repr=False)

    def __post_init__(self):
        self.group = parse_group(self.group)
        self.support_limit = self.group.canonical_limit(self.support_limit)

    @classmethod
    def zeros(cls, group, limit, batch=()):
        group = parse_group(group)
        return cls(group, limit, group.zeros(limit, batch))

    def __getitem__(self, label) -> np.ndarray:
        return self.group.get_block(self.data, label, self.support_limit)

    def __setitem__(self, label, value):
        self.group.set_block(self.data, label, self.support_limit, value)

    def labels(self) -> list:
        return self.group.labels(self.support_limit)

    def items(self):
        for lab in self.labels():
            yield lab, self[lab]

    def copy(self):
        return FourierCoefficients(self.group, self.support_limit, self.group.copy(self.data))

    def resized(self, limit):
        return FourierCoefficients(self.group, limit, self.group.resize(self.data, limit))

    def __add__(self, other):
        limit = max(self.support_limit, other.support_limit)
        a, b = self.resized(limit), other.resized(limit)
        return FourierCoefficients(self.group, limit, self.group.map_blocks(lambda x, y: x + y, a.data, b.data))

    def __sub__(self, other):
        return self + other * -1

    def __mul__(self, scalar):
        return FourierCoefficients(self.group, self.support_limit, self.group.map_blocks(lambda x: x * scalar, self.data))

    __rmul__ = __mul__

    def max_abs(self) -> float:
        return float(np.max(self.group.opnorms(self.data))) if self.labels() else 0.0


def forward(f: GridFunction, limit=None) -> FourierCoefficients:
    """Quadrature transform ``sum_nodes w phi(x) xi(x)^*`` for labels up to ``limit``."""
    grid = f.grid
    group = grid.group
    if f.band_limit_hint is not None and group.canonical_limit(f.band_limit_hint) > grid.band_limit:
        raise GridMismatch(f"band limit {f.band_limit_hint} exceeds grid capability {grid.band_limit}")
    limit = grid.band_limit if limit is None else group.canonical_limit(limit)
    return FourierCoefficients(group, limit, group.forward(f.values, grid, limit))


def inverse(c: FourierCoefficients, grid: QuadratureGrid) -> GridFunction:
    """Synthesis ``sum d_xi tr(xi(x) c(xi))`` at every node of ``grid``."""
    if c.group != grid.group:
        raise GridMismatch(f"coefficients on {c.group} but grid on {grid.group}")
    if c.support_limit > grid.band_limit:
        raise GridMismatch(f"support {c.support_limit} exceeds grid band limit {grid.band_limit}")
    return GridFunction(grid, c.group.inverse(c.data, grid), c.support_limit)


def evaluate(c: FourierCoefficients, points) -> np.ndarray:
    """Synthesize at arbitrary group elements."""
    return c.group.evaluate(c.data, points)


def resample(f: GridFunction, grid: QuadratureGrid, limit=None) -> GridFunction:
    """Move a band-limited function onto another grid."""
    limit = f.grid.band_limit if limit is None else limit
    if f.band_limit_hint is not None:
        limit = min(f.grid.group.canonical_limit(limit), f.grid.group.canonical_limit(f.band_limit_hint))
    return inverse(forward(f, limit), grid)


def translate(f: GridFunction, y) -> GridFunction:
    """``x -> f(y x)`` for band-limited ``f``, evaluated at the same nodes."""
    c = forward(f)
    group = f.group
    points = group.multiply(np.broadcast_to(np.asarray(y, float), f.grid.nodes.shape), f.grid.nodes)
    return GridFunction(f.grid, evaluate(c, points), f.band_limit_hint)


def grid_function(group, band_limit, fn, grid_limit=None) -> GridFunction:
    """Sample ``fn(nodes)`` on the Haar grid of ``grid_limit`` (defaults to ``band_limit``)."""
    group = parse_group(group)
    grid = group.haar_grid(band_limit if grid_limit is None else grid_limit)
    return GridFunction(grid, fn(grid.nodes), band_limit)


def _fsum_last(terms: np.ndarray) -> np.ndarray:
    terms = np.asarray(terms, dtype=float)
    flat = terms.reshape(-1, terms.shape[-1])
    out = np.array([math.fsum(row) for row in flat])
    return out.reshape(terms.shape[:-1])


def plancherel_norm(c: FourierCoefficients):
    """``sqrt(sum d_xi |c(xi)|_HS^2)``, compensated over the canonical label order."""
    out = np.sqrt(_fsum_last(c.group.hs_terms(c.data)))
    return float(out) if out.ndim == 0 else out


def sobolev_norm(c: FourierCoefficients, s: float):
    weights = c.group.casimir_weights(c.support_limit) ** s
    scaled = FourierCoefficients(c.group, c.support_limit, c.group.scale_labels(c.data, weights))
    return plancherel_norm(scaled)


def grid_l2_norm(f: GridFunction):
    terms = f.grid.weights * np.abs(f.values) ** 2
    out = np.sqrt(_fsum_last(terms))
    return float(out) if out.ndim == 0 else out


def random_coefficients(group, limit, rng: np.random.Generator, *, exclude_trivial=False, batch=()) -> FourierCoefficients:
    """I.i.d. standard complex normal entries on every label up to ``limit``."""
    group = parse_group(group)
    c = FourierCoefficients.zeros(group, limit, batch)

    def draw(block):
        return (rng.standard_normal(block.shape) + 1j * rng.standard_normal(block.shape)) / math.sqrt(2)

    c.data = group.map_blocks(draw, c.data) if isinstance(group, SU2) else draw(c.data)
    if exclude_trivial:
        trivial = group.labels(0)[0]
        c[trivial] = np.zeros((1, 1))
    return c


# ---------------------------------------------------------------------------
# JSON


def label_to_json(group, label):
    if isinstance(group, SU2):
        return str(group.label(label).l)
    return list(group.label(label))


def label_from_json(group, raw):
    if isinstance(group, SU2):
        return group.label(Fraction(str(raw)))
    return group.label(raw)


def limit_to_json(group, limit):
    if isinstance(group, SU2):
        return str(Fraction(limit))
    return int(limit)


def limit_from_json(group, raw):
    if isinstance(group, SU2):
        return Fraction(str(raw))
    return int(raw)


class MalformedRecord(ValueError):
    pass


def coefficients_to_dict(c: FourierCoefficients) -> dict:
    entries = []
    for lab, block in c.items():
        block = np.asarray(block)
        entries.append({
            "label": label_to_json(c.group, lab),
            "matrix_re": block.real.tolist(),
            "matrix_im": block.imag.tolist(),
        })
    return {"group": str(c.group), "entries": entries, "support_limit": limit_to_json(c.group, c.support_limit)}


def coefficients_from_dict(doc: dict) -> FourierCoefficients:
    try:
        group = parse_group(doc["group"])
        limit = limit_from_json(group, doc["support_limit"])
    except (KeyError, ValueError, TypeError) as exc:
        raise MalformedRecord(f"header: {exc}") from exc
    c = FourierCoefficients.zeros(group, limit)
    for i, rec in enumerate(doc.get("entries", [])):
        try:
            lab = label_from_json(group, rec["label"])
            block = np.asarray(rec["matrix_re"], float) + 1j * np.asarray(rec["matrix_im"], float)
            d = group.irrep_dim(lab)
            if block.shape != (d, d):
                raise ValueError(f"expected a {d}x{d} matrix, got shape {block.shape}")
            c[lab] = block
        except (KeyError, ValueError, TypeError) as exc:
            raise MalformedRecord(f"entry {i}: {exc}") from exc
    return c


def dumps(c: FourierCoefficients) -> str:
    return json.dumps(coefficients_to_dict(c))


def loads(text: str) -> FourierCoefficients:
    return coefficients_from_dict(json.loads(text))
