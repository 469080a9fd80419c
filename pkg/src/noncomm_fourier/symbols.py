"""Matrix-valued symbols and their quantization.

An operator ``A`` has symbol ``sigma_A(x, xi) = xi(x)^* (A xi)(x)`` and acts by
``A phi(x) = sum_xi d_xi tr(xi(x) sigma_A(x, xi) phi_hat(xi))``.
"""

from __future__ import annotations

import inspect
import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

import numpy as np

from .fourier import (FourierCoefficients, GridFunction, MalformedRecord, coefficients_from_dict, coefficients_to_dict,
                      forward, inverse, label_from_json, label_to_json, limit_from_json, limit_to_json)
from .group_backend import QuadratureGrid, SU2, Torus, magnetic_numbers, parse_group


class LabelRangeError(ValueError):
    pass


class AliasingError(ValueError):
    pass


@dataclass
class InvariantSymbol(FourierCoefficients):
    """Symbol of a Fourier multiplier, dense on all labels up to ``support_limit``.

    ``trusted_limit`` marks how far the entries are exact; differences of a
    truncated symbol lose trust near the cutoff.
    """

    trusted_limit: object = None
    declared_order: Optional[float] = None

    def __post_init__(self):
        super().__post_init__()
        if self.trusted_limit is None:
            self.trusted_limit = self.support_limit
        self.trusted_limit = min(self.group.canonical_limit(max(self.trusted_limit, 0)), self.support_limit)

    @classmethod
    def zeros(cls, group, limit, batch=()):
        group = parse_group(group)
        return cls(group, limit, group.zeros(limit, batch))

    @classmethod
    def identity(cls, group, limit):
        group = parse_group(group)
        return spectral_multiplier(group, lambda *_: 1.0, limit)

    def _like(self, data, **kw):
        return replace(self, data=data, **kw)

    def copy(self):
        return self._like(self.group.copy(self.data))

    def resized(self, limit):
        limit = self.group.canonical_limit(limit)
        return self._like(self.group.resize(self.data, limit), support_limit=limit,
                          trusted_limit=min(self.trusted_limit, limit))

    def __add__(self, other):
        limit = max(self.support_limit, other.support_limit)
        a, b = self.resized(limit), other.resized(limit)
        trusted = min(self.trusted_limit, getattr(other, "trusted_limit", other.support_limit))
        return a._like(self.group.map_blocks(lambda x, y: x + y, a.data, b.data), trusted_limit=trusted)

    def __mul__(self, scalar):
        return self._like(self.group.map_blocks(lambda x: x * scalar, self.data))

    __rmul__ = __mul__

    def __sub__(self, other):
        return self + other * -1

    def adjoint(self):
        return self._like(self.group.map_blocks(lambda x: np.conj(np.swapaxes(x, -1, -2)), self.data))

    def compose(self, other):
        """Symbol of ``Op(self) Op(other)`` (block products, invariant case)."""
        limit = min(self.support_limit, other.support_limit)
        a, b = self.resized(limit), other.resized(limit)
        return a._like(self.group.matmul(a.data, b.data), trusted_limit=min(a.trusted_limit, b.trusted_limit))

    def opnorms(self) -> np.ndarray:
        """Per-label operator norms in canonical label order."""
        return self.group.opnorms(self.data)


@dataclass
class FullSymbol:
    """Symbol depending on the grid node ``x`` as well as on ``xi``.

    ``data`` carries a leading node axis of length ``grid.size``.
    """

    group: object
    grid: QuadratureGrid
    support_limit: object
    data: object = field(repr=False)
    trusted_limit: object = None

    def __post_init__(self):
        self.group = parse_group(self.group)
        self.support_limit = self.group.canonical_limit(self.support_limit)
        if self.trusted_limit is None:
            self.trusted_limit = self.support_limit

    @classmethod
    def from_invariant(cls, sigma: InvariantSymbol, grid: QuadratureGrid, factor=None) -> "FullSymbol":
        """``a(x) sigma(xi)`` on ``grid``; ``factor`` holds ``a`` at the nodes (default 1)."""
        a = np.ones(grid.size) if factor is None else np.asarray(factor, dtype=complex)
        group = sigma.group
        if isinstance(group, SU2):
            data = [a[:, None, None] * b[None] for b in sigma.data]
        else:
            data = a.reshape((-1,) + (1,) * group.n) * sigma.data[None]
        return cls(group, grid, sigma.support_limit, data, trusted_limit=sigma.trusted_limit)

    def __getitem__(self, key) -> np.ndarray:
        node, label = key
        return self.group.get_block(self.data, label, self.support_limit)[node]

    def node_slice(self, node: int) -> InvariantSymbol:
        data = self.group.map_blocks(lambda b: b[node], self.data)
        return InvariantSymbol(self.group, self.support_limit, data, trusted_limit=self.trusted_limit)

    def labels(self):
        return self.group.labels(self.support_limit)

    def opnorms(self) -> np.ndarray:
        return self.group.opnorms(self.data)


Symbol = Union[InvariantSymbol, FullSymbol]


# ---------------------------------------------------------------------------
# quantization


def _restrict_input(phi_hat: FourierCoefficients, limit, tol=1e-10) -> FourierCoefficients:
    group = phi_hat.group
    if phi_hat.support_limit <= limit:
        return phi_hat
    norms = group.opnorms(phi_hat.data)
    inside = np.array([group.label_size(lab) <= limit for lab in group.labels(phi_hat.support_limit)]) \
        if isinstance(group, SU2) else _torus_inside(group, phi_hat.support_limit, limit)
    outside = norms[..., ~inside]
    scale = max(float(np.max(norms)) if norms.size else 0.0, 1e-300)
    if outside.size and float(np.max(outside)) > tol * scale:
        raise LabelRangeError(f"input has content beyond the symbol's label range {limit}")
    return phi_hat.resized(limit)


def _torus_inside(group, big, small) -> np.ndarray:
    ks = np.meshgrid(*[np.arange(-big, big + 1)] * group.n, indexing="ij")
    return np.all([np.abs(k) <= small for k in ks], axis=0).ravel()


def _synthesize_full(group, data, nodes) -> np.ndarray:
    """``sum_xi d tr(xi(x_p) D_p(xi))`` where ``D`` has a node axis just before the block."""
    if isinstance(group, SU2):
        total = 0.0
        for two_l, block in enumerate(data):
            mats = group.irrep_matrix(two_l / 2, nodes)
            total = total + (two_l + 1) * np.einsum("pij,...pji->...p", mats, block)
        return total
    c = group.data_limit(data)
    ks = np.stack([k.ravel() for k in np.meshgrid(*[np.arange(-c, c + 1)] * group.n, indexing="ij")], axis=-1)
    phases = np.exp(2j * np.pi * nodes @ ks.T)
    flat = data.reshape(data.shape[: data.ndim - group.n] + (-1,))
    return np.einsum("pk,...pk->...p", phases, flat)


def op_apply(sigma: Symbol, phi: GridFunction) -> GridFunction:
    """Apply ``Op(sigma)`` to ``phi`` at every node of its grid."""
    group = phi.group
    if sigma.group != group:
        raise ValueError(f"symbol on {sigma.group} applied to a function on {group}")
    phi_hat = forward(phi)
    limit = min(sigma.support_limit, phi.grid.band_limit)
    phi_hat = _restrict_input(phi_hat, limit)
    if isinstance(sigma, InvariantSymbol):
        sig = sigma.resized(limit)
        out = FourierCoefficients(group, limit, group.matmul(sig.data, phi_hat.data))
        return GridFunction(phi.grid, inverse(out, phi.grid).values, limit)
    if sigma.grid.size != phi.grid.size:
        raise ValueError("full symbol and function live on different grids")
    sig = group.resize(sigma.data, limit)
    if isinstance(group, SU2):
        prod = [s @ p[..., None, :, :] for s, p in zip(sig, phi_hat.data)]
    else:
        prod = sig * np.expand_dims(phi_hat.data, axis=-(group.n + 1))
    return GridFunction(phi.grid, _synthesize_full(group, prod, phi.grid.nodes), limit)


def matrix_coefficient_functions(group, limit, grid: QuadratureGrid) -> tuple[list, np.ndarray]:
    """All ``xi_ij`` for labels up to ``limit`` as a batch ``(K, nodes)``.

    Returns the per-label slices into the batch and the stacked values.
    """
    group = parse_group(group)
    rows, slices, start = [], [], 0
    if isinstance(group, SU2):
        for lab in group.labels(limit):
            mats = group.irrep_matrix(lab, grid.nodes)  # (N, d, d)
            d = lab.dim
            rows.append(mats.reshape(grid.size, d * d).T)
            slices.append(slice(start, start + d * d))
            start += d * d
        return slices, np.concatenate(rows, axis=0)
    c = group.canonical_limit(limit)
    ks = np.stack([k.ravel() for k in np.meshgrid(*[np.arange(-c, c + 1)] * group.n, indexing="ij")], axis=-1)
    vals = np.exp(2j * np.pi * ks @ grid.nodes.T)
    return [slice(i, i + 1) for i in range(len(ks))], vals


def symbol_of(A: Callable, group, limit, grid: QuadratureGrid = None, *, invariance_tol=1e-9, alias_tol=1e-8) -> Symbol:
    """Recover ``sigma_A(x, xi) = xi(x)^* (A xi)(x)`` for labels up to ``limit``.

    ``A`` receives one batched :class:`GridFunction` holding every matrix
    coefficient and must return a function (or array) of the same shape. When
    the result is node independent to ``invariance_tol`` an
    :class:`InvariantSymbol` is returned.
    """
    group = parse_group(group)
    limit = group.canonical_limit(limit)
    grid = group.haar_grid(limit) if grid is None else grid
    slices, vals = matrix_coefficient_functions(group, limit, grid)
    out = A(GridFunction(grid, vals, limit))
    out_vals = np.asarray(out.values if isinstance(out, GridFunction) else out, dtype=complex)
    if out_vals.shape != vals.shape:
        raise ValueError(f"operator returned shape {out_vals.shape}, expected {vals.shape}")
    back = inverse(forward(GridFunction(grid, out_vals)), grid).values
    scale = max(float(np.max(np.abs(out_vals))), 1e-300)
    resid = float(np.max(np.abs(back - out_vals))) / scale if out_vals.size else 0.0
    if resid > alias_tol:
        raise AliasingError(f"operator output exceeds the grid band limit (round-trip residual {resid:.2e})")
    n = grid.size
    if isinstance(group, SU2):
        data = []
        for lab, sl in zip(group.labels(limit), slices):
            d = lab.dim
            a_xi = out_vals[sl].T.reshape(n, d, d)
            xi = vals[sl].T.reshape(n, d, d)
            data.append(np.conj(np.swapaxes(xi, -1, -2)) @ a_xi)
    else:
        data = (np.conj(vals) * out_vals).T.reshape((n,) + (2 * limit + 1,) * group.n)
    full = FullSymbol(group, grid, limit, data)
    mean = group.map_blocks(lambda b: b.mean(axis=0), data)
    dev = group.map_blocks(lambda b, m: np.abs(b - m).max(initial=0.0), data, mean)
    dev = max(dev) if isinstance(dev, list) else float(dev)
    sym_scale = max(float(np.max(group.opnorms(data))), 1e-300)
    if dev <= invariance_tol * max(sym_scale, 1.0):
        return InvariantSymbol(group, limit, mean)
    return full


def spectral_multiplier(group, g: Callable, cutoff) -> InvariantSymbol:
    """Diagonal symbol from a scalar function of the label.

    SU(2): ``g(l)`` or ``g(l, m)`` with ``l`` a float and ``m`` the array of
    magnetic numbers; the result fills the diagonal. Torus: ``g(k)`` receives
    an integer array of lattice points with last axis ``n``.
    """
    group = parse_group(group)
    cutoff = group.canonical_limit(cutoff)
    if isinstance(group, SU2):
        nargs = _arity(g)
        data = []
        for two_l in range(group.two(cutoff) + 1):
            m = magnetic_numbers(two_l)
            vals = g(two_l / 2, m) if nargs >= 2 else g(two_l / 2)
            vals = np.broadcast_to(np.asarray(vals, dtype=complex), m.shape)
            data.append(np.diag(vals))
        return InvariantSymbol(group, cutoff, data)
    ks = np.stack(np.meshgrid(*[np.arange(-cutoff, cutoff + 1)] * group.n, indexing="ij"), axis=-1)
    vals = np.broadcast_to(np.asarray(g(ks), dtype=complex), ks.shape[:-1]).copy()
    return InvariantSymbol(group, cutoff, vals)


def _arity(fn) -> int:
    try:
        params = inspect.signature(fn).parameters.values()
    except (TypeError, ValueError):
        return 1
    if any(p.kind == p.VAR_POSITIONAL for p in params):
        return 2
    return sum(1 for p in params if p.default is p.empty and p.kind in (p.POSITIONAL_ONLY, p.POSITIONAL_OR_KEYWORD))


def moderate_fit(sigma: InvariantSymbol, limit=None) -> tuple[float, float]:
    """Fit ``|sigma(xi)|_op ~ C <xi>^N`` on the per-shell maximum; diagnostics only."""
    group = sigma.group
    limit = sigma.trusted_limit if limit is None else min(group.canonical_limit(limit), sigma.support_limit)
    s = sigma.resized(limit)
    norms = np.asarray(s.opnorms()).reshape(-1)
    weights = group.casimir_weights(limit).reshape(-1)
    if not np.any(norms > 0):
        return 0.0, -math.inf
    shells: dict = {}
    for w, v in zip(np.round(weights, 12), norms):
        if v > 0:
            shells[w] = max(shells.get(w, 0.0), v)
    if len(shells) < 3:
        raise ValueError("need at least three distinct <xi> values with nonzero symbol")
    x = np.log(np.array(list(shells.keys())))
    y = np.log(np.array(list(shells.values())))
    slope, intercept = np.polyfit(x, y, 1)
    return float(math.exp(intercept)), float(slope)


def sup_opnorm(sigma: InvariantSymbol) -> float:
    return float(np.max(sigma.opnorms()))


# ---------------------------------------------------------------------------
# JSON


def symbol_to_dict(sigma: Symbol) -> dict:
    """Coefficient schema plus ``kind``; full symbols carry ``node_index`` per record and the grid band."""
    group = sigma.group
    if isinstance(sigma, InvariantSymbol):
        doc = coefficients_to_dict(sigma)
        doc["kind"] = "invariant"
        doc["trusted_limit"] = limit_to_json(group, sigma.trusted_limit)
        return doc
    entries = []
    for node in range(sigma.grid.size):
        for lab in sigma.labels():
            block = np.asarray(sigma[node, lab])
            entries.append({"node_index": node, "label": label_to_json(group, lab),
                            "matrix_re": block.real.tolist(), "matrix_im": block.imag.tolist()})
    return {"group": str(group), "kind": "full", "grid_band_limit": limit_to_json(group, sigma.grid.band_limit),
            "support_limit": limit_to_json(group, sigma.support_limit),
            "trusted_limit": limit_to_json(group, sigma.trusted_limit), "entries": entries}


def symbol_from_dict(doc: dict) -> Symbol:
    kind = doc.get("kind", "invariant")
    if kind == "invariant":
        c = coefficients_from_dict(doc)
        trusted = limit_from_json(c.group, doc["trusted_limit"]) if "trusted_limit" in doc else None
        return InvariantSymbol(c.group, c.support_limit, c.data, trusted_limit=trusted)
    if kind != "full":
        raise MalformedRecord(f"header: unknown symbol kind {kind!r}")
    try:
        group = parse_group(doc["group"])
        limit = limit_from_json(group, doc["support_limit"])
        grid = group.haar_grid(limit_from_json(group, doc["grid_band_limit"]))
        trusted = limit_from_json(group, doc["trusted_limit"]) if "trusted_limit" in doc else None
    except (KeyError, ValueError, TypeError) as exc:
        raise MalformedRecord(f"header: {exc}") from exc
    data = group.zeros(limit, (grid.size,))
    for i, rec in enumerate(doc.get("entries", [])):
        try:
            node = int(rec["node_index"])
            if not 0 <= node < grid.size:
                raise ValueError(f"node_index {node} outside 0..{grid.size - 1}")
            lab = label_from_json(group, rec["label"])
            block = np.asarray(rec["matrix_re"], float) + 1j * np.asarray(rec["matrix_im"], float)
            d = group.irrep_dim(lab)
            if block.shape != (d, d):
                raise ValueError(f"expected a {d}x{d} matrix, got shape {block.shape}")
            if isinstance(group, SU2):
                data[group.label_index(lab, limit)][node] = block
            else:
                data[(node,) + group.label_index(lab, limit)] = block[0, 0]
        except (KeyError, ValueError, TypeError) as exc:
            raise MalformedRecord(f"entry {i}: {exc}") from exc
    return FullSymbol(group, grid, limit, data, trusted_limit=trusted)


def dumps_symbol(sigma: Symbol) -> str:
    return json.dumps(symbol_to_dict(sigma))


def loads_symbol(text: str) -> Symbol:
    return symbol_from_dict(json.loads(text))
