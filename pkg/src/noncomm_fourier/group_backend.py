"""Unitary duals, Haar quadrature and left-invariant calculus for SU(2) and tori.

Two backends are provided, :class:`SU2` and :class:`Torus`. Each knows its
irreducible representations, a quadrature grid that integrates products of
band-limited functions exactly, the collection ``Delta0`` of representations
that generate first-order differences, and the function ``rho^2`` built from
them.

Coefficient data (Fourier coefficients and symbols) is stored per backend:

* SU(2): a list indexed by ``two_l`` (twice the spin) of arrays of shape
  ``(*batch, d, d)`` with ``d = two_l + 1``; rows and columns are ordered by
  ascending magnetic number ``m = -l, ..., l``.
* Torus(n): one array of shape ``(*batch, 2B+1, ..., 2B+1)``; the entry for
  the lattice point ``k`` sits at index ``k + B``.
"""

from __future__ import annotations

import functools
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

MAX_GRID_NODES = int(os.environ.get("NONCOMM_FOURIER_MAX_NODES", 4_000_000))


class GridTooLarge(ValueError):
    pass


class InvalidLabel(ValueError):
    pass


# ---------------------------------------------------------------------------
# labels


@functools.total_ordering
@dataclass(frozen=True)
class Spin:
    """Spin label of an SU(2) irrep, stored as twice the spin."""

    two_l: int

    def __post_init__(self):
        if not isinstance(self.two_l, (int, np.integer)) or self.two_l < 0:
            raise InvalidLabel(f"spin label needs a nonnegative integer two_l, got {self.two_l!r}")
        object.__setattr__(self, "two_l", int(self.two_l))

    @classmethod
    def of(cls, value) -> "Spin":
        if isinstance(value, Spin):
            return value
        return cls(_twice(value))

    @property
    def l(self) -> Fraction:
        return Fraction(self.two_l, 2)

    @property
    def dim(self) -> int:
        return self.two_l + 1

    def __lt__(self, other):
        return self.two_l < Spin.of(other).two_l

    def __str__(self):
        return str(self.l)


def _twice(value) -> int:
    if isinstance(value, str):
        value = Fraction(value)
    twice = Fraction(value) * 2 if not isinstance(value, float) else Fraction(value * 2)
    if twice.denominator != 1 or twice < 0:
        raise InvalidLabel(f"{value!r} is not a nonnegative half-integer")
    return int(twice)


def magnetic_numbers(two_l: int) -> np.ndarray:
    """Ascending ``m = -l, ..., l`` as floats."""
    return (2 * np.arange(two_l + 1) - two_l) / 2.0


@functools.lru_cache(maxsize=None)
def spin_matrices(two_l: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Hermitian angular momentum matrices ``(J_x, J_y, J_z)`` in the ascending basis."""
    d = two_l + 1
    m = magnetic_numbers(two_l)
    l = two_l / 2.0
    jp = np.zeros((d, d))
    for i in range(d - 1):
        jp[i + 1, i] = math.sqrt(l * (l + 1) - m[i] * (m[i] + 1))
    jm = jp.T
    jx = (jp + jm) / 2
    jy = (jp - jm) / 2j
    jz = np.diag(m).astype(complex)
    for a in (jx, jy, jz):
        a.setflags(write=False)
    return jx.astype(complex), jy, jz


@functools.lru_cache(maxsize=None)
def _jy_eigen(two_l: int) -> tuple[np.ndarray, np.ndarray]:
    _, jy, _ = spin_matrices(two_l)
    w, v = np.linalg.eigh(jy)
    # eigenvalues are exactly the magnetic numbers
    return magnetic_numbers(two_l), v


def wigner_small_d(two_l: int, beta) -> np.ndarray:
    """Real matrices ``exp(-i beta J_y)``, shape ``(*beta.shape, d, d)``."""
    beta = np.asarray(beta, dtype=float)
    m, v = _jy_eigen(two_l)
    phase = np.exp(-1j * beta[..., None] * m)
    out = np.einsum("ik,...k,jk->...ij", v, phase, v.conj())
    return out.real


# ---------------------------------------------------------------------------
# grids and Delta0


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Haar-weighted nodes; weights sum to one."""

    group: "Group"
    band_limit: Union[Fraction, int]
    nodes: np.ndarray
    weights: np.ndarray
    shape: tuple

    @property
    def size(self) -> int:
        return len(self.weights)

    def __repr__(self):
        return f"QuadratureGrid({self.group}, band_limit={self.band_limit}, nodes={self.size})"


@dataclass(frozen=True)
class Delta0:
    """Representations generating first-order differences, and their entries.

    ``component_index`` holds ``(label, i, j)`` with zero-based ``i, j``.
    """

    labels: tuple
    component_index: tuple


# ---------------------------------------------------------------------------
# SU(2)


class SU2:
    """SU(2) in ZYZ Euler angles ``alpha in [0, 2pi)``, ``beta in [0, pi]``, ``gamma in [0, 4pi)``.

    The irrep of spin ``l`` is ``exp(-i alpha J_z) exp(-i beta J_y) exp(-i gamma J_z)``.
    Left-invariant fields ``D_j`` come from the orthonormal basis ``X_j = i sigma_j / 2``
    of su(2), so the symbol of ``D_j`` at spin ``l`` is ``i J_j``; the Casimir
    eigenvalue is ``l(l+1)``.
    """

    dim = 3
    name = "su2"

    def __eq__(self, other):
        return isinstance(other, SU2)

    def __hash__(self):
        return hash("su2")

    def __repr__(self):
        return "SU2()"

    def __str__(self):
        return "su2"

    # limits and labels -----------------------------------------------------
    def canonical_limit(self, limit) -> Fraction:
        return Spin.of(limit).l

    def two(self, limit) -> int:
        return Spin.of(limit).two_l

    def label(self, raw) -> Spin:
        return Spin.of(raw)

    def labels(self, limit) -> list[Spin]:
        return [Spin(t) for t in range(self.two(limit) + 1)]

    def label_index(self, label, limit) -> int:
        two_l = Spin.of(label).two_l
        if two_l > self.two(limit):
            raise InvalidLabel(f"label {label} beyond limit {limit}")
        return two_l

    def label_at(self, index, limit) -> Spin:
        return Spin(int(index))

    def irrep_dim(self, label) -> int:
        return Spin.of(label).dim

    def label_size(self, label) -> Fraction:
        return Spin.of(label).l

    def casimir_weight(self, label) -> float:
        l = Spin.of(label).two_l / 2
        return max(1.0, math.sqrt(l * (l + 1)))

    def casimir_weights(self, limit) -> np.ndarray:
        """``<xi>`` per label in canonical order."""
        return np.array([self.casimir_weight(s) for s in self.labels(limit)])

    def laplace_eigenvalues(self, limit) -> np.ndarray:
        t = np.arange(self.two(limit) + 1) / 2
        return t * (t + 1)

    # representation ----------------------------------------------------------
    identity = np.zeros(3)

    def irrep_matrix(self, label, x) -> np.ndarray:
        two_l = Spin.of(label).two_l
        x = np.asarray(x, dtype=float)
        alpha, beta, gamma = x[..., 0], x[..., 1], x[..., 2]
        m = magnetic_numbers(two_l)
        d = wigner_small_d(two_l, beta)
        left = np.exp(-1j * alpha[..., None] * m)
        right = np.exp(-1j * gamma[..., None] * m)
        return left[..., :, None] * d * right[..., None, :]

    def algebra_matrix(self, label, axis: int) -> np.ndarray:
        """Symbol of ``D_axis`` (axis 1, 2 or 3) at the given label."""
        _check_axis(axis, 3)
        return 1j * spin_matrices(Spin.of(label).two_l)[axis - 1]

    def to_matrix(self, x) -> np.ndarray:
        return self.irrep_matrix(Spin(1), x)

    def from_matrix(self, g) -> np.ndarray:
        g = np.asarray(g)
        a, b = g[..., 0, 0], g[..., 0, 1]
        beta = 2 * np.arctan2(np.abs(b), np.abs(a))
        pa, pb = np.angle(a), np.angle(b)
        alpha = pa + pb
        gamma = pa - pb
        # shifting alpha by 2 pi k flips the sign for odd k; gamma absorbs the same shift
        k = np.floor(alpha / (2 * np.pi))
        alpha = alpha - 2 * np.pi * k
        over = alpha >= 2 * np.pi
        alpha = np.where(over, alpha - 2 * np.pi, alpha)
        k = k + over
        under = alpha < 0
        alpha = np.where(under, alpha + 2 * np.pi, alpha)
        k = k - under
        gamma = np.mod(gamma - 2 * np.pi * k, 4 * np.pi)
        gamma = np.where(gamma >= 4 * np.pi, 0.0, gamma)
        return np.stack([alpha, beta, gamma], axis=-1)

    def multiply(self, x, y) -> np.ndarray:
        return self.from_matrix(self.to_matrix(x) @ self.to_matrix(y))

    def inverse_element(self, x) -> np.ndarray:
        g = self.to_matrix(x)
        return self.from_matrix(np.conj(np.swapaxes(g, -1, -2)))

    def exp_algebra(self, axis: int, t) -> np.ndarray:
        """Group element ``exp(t X_axis)``."""
        _check_axis(axis, 3)
        t = np.asarray(t, dtype=float)[..., None, None]
        gen = 1j * spin_matrices(1)[axis - 1]
        # gen @ gen = -I/4
        g = np.cos(t / 2) * np.eye(2) + 2 * np.sin(t / 2) * gen
        return self.from_matrix(g)

    def geodesic_distance(self, x) -> np.ndarray:
        """Distance from the identity under the metric making ``D_j`` orthonormal."""
        g = self.to_matrix(x)
        half_trace = np.clip(np.real(np.trace(g, axis1=-2, axis2=-1)) / 2, -1.0, 1.0)
        # g = exp(theta * unit X), |X_j| = 1 and exp(theta X_j) has half-trace cos(theta/2)
        return 2 * np.arccos(half_trace)

    # Delta0 ------------------------------------------------------------------
    def delta0(self) -> Delta0:
        labels = (Spin(2), Spin(1))
        index = tuple((lab, i, j) for lab in labels for i in range(lab.dim) for j in range(lab.dim))
        return Delta0(labels, index)

    def rho_squared(self, x) -> np.ndarray:
        total = 0.0
        for lab in self.delta0().labels:
            tr = np.trace(self.irrep_matrix(lab, x), axis1=-2, axis2=-1)
            total = total + (lab.dim - tr.real)
        return total

    # quadrature ----------------------------------------------------------------
    def haar_grid(self, band_limit) -> QuadratureGrid:
        return _su2_grid(self.two(band_limit))

    # coefficient data ----------------------------------------------------------
    def zeros(self, limit, batch=()) -> list:
        return [np.zeros(tuple(batch) + (t + 1, t + 1), dtype=complex) for t in range(self.two(limit) + 1)]

    def resize(self, data, limit) -> list:
        two = self.two(limit)
        batch = data[0].shape[:-2] if data else ()
        out = [data[t] if t < len(data) else np.zeros(batch + (t + 1, t + 1), complex) for t in range(two + 1)]
        return out

    def get_block(self, data, label, limit):
        return data[self.label_index(label, limit)]

    def set_block(self, data, label, limit, value):
        t = self.label_index(label, limit)
        data[t][...] = value

    def map_blocks(self, fn, *datas) -> list:
        return [fn(*blocks) for blocks in zip(*datas)]

    def scale_labels(self, data, weights) -> list:
        return [b * w for b, w in zip(data, weights)]

    def matmul(self, a, b) -> list:
        return [x @ y for x, y in zip(a, b)]

    def opnorms(self, data) -> np.ndarray:
        """Per-label spectral norms, shape ``(*batch, labels)``."""
        return np.stack([_spectral_norm(b) for b in data], axis=-1)

    def hs_terms(self, data) -> np.ndarray:
        """Per-label ``d * |block|_HS^2``, shape ``(*batch, labels)``."""
        return np.stack([(b.shape[-1]) * np.sum(np.abs(b) ** 2, axis=(-2, -1)) for b in data], axis=-1)

    def batch_shape(self, data) -> tuple:
        return data[0].shape[:-2]

    def copy(self, data) -> list:
        return [b.copy() for b in data]

    def data_limit(self, data) -> Fraction:
        return Fraction(len(data) - 1, 2)

    # transforms ------------------------------------------------------------
    def forward(self, values: np.ndarray, grid: QuadratureGrid, limit=None) -> list:
        two_b = self.two(grid.band_limit)
        two_c = two_b if limit is None else self.two(limit)
        if two_c > two_b:
            raise ValueError("requested coefficients beyond the grid band limit")
        tab = _su2_tables(two_b)
        na, nb, ng = grid.shape
        batch = values.shape[:-1]
        v = values.reshape(batch + (na, nb, ng))
        freq = np.arange(-two_c, two_c + 1) / 2
        ea = np.exp(1j * np.outer(freq, tab.alpha))  # (P, Na)
        eg = np.exp(1j * np.outer(freq, tab.gamma))  # (Q, Ng)
        tmp = v @ eg.T  # (..., Na, Nb, Q)
        tmp = np.moveaxis(tmp, -3, -1)  # (..., Nb, Q, Na)
        f = tmp @ ea.T  # (..., Nb, Q, P)
        f = np.moveaxis(f, -3, -1)  # (..., Q, P, Nb)  index [m, n, b]
        scale = 1.0 / (2 * na * ng)
        out = []
        for two_l in range(two_c + 1):
            sl = slice(two_c - two_l, two_c + two_l + 1, 2)
            block = f[..., sl, sl, :]  # [m, n, b]
            d = tab.small_d[two_l]  # (Nb, d, d) indexed [b, n, m] after transpose
            wd = np.swapaxes(d, -1, -2) * tab.wbeta[:, None, None]  # [b, m, n] = w_b d[n, m]
            out.append(scale * np.einsum("...mnb,bmn->...mn", block, wd))
        return out

    def inverse(self, data, grid: QuadratureGrid) -> np.ndarray:
        two_b = self.two(grid.band_limit)
        two_c = len(data) - 1
        if two_c > two_b:
            raise ValueError(f"coefficients up to spin {Fraction(two_c, 2)} exceed grid band limit {grid.band_limit}")
        tab = _su2_tables(two_b)
        na, nb, ng = grid.shape
        batch = data[0].shape[:-2]
        p = 2 * two_c + 1
        g = np.zeros(batch + (p, p, nb), dtype=complex)  # [m, n, b]
        for two_l, block in enumerate(data):
            sl = slice(two_c - two_l, two_c + two_l + 1, 2)
            d = tab.small_d[two_l]  # [b, m, n]
            g[..., sl, sl, :] += (two_l + 1) * np.einsum("bmn,...nm->...mnb", d, block)
        freq = np.arange(-two_c, two_c + 1) / 2
        ea = np.exp(-1j * np.outer(tab.alpha, freq))  # (Na, P)
        eg = np.exp(-1j * np.outer(tab.gamma, freq))  # (Ng, Q)
        tmp = np.moveaxis(g, -3, -1)  # (..., n, b, m)
        tmp = tmp @ ea.T  # (..., n, b, Na)
        tmp = np.moveaxis(tmp, -3, -1)  # (..., b, Na, n)
        tmp = tmp @ eg.T  # (..., b, Na, Ng)
        tmp = np.moveaxis(tmp, -3, -2)  # (..., Na, b, Ng)
        return tmp.reshape(batch + (na * nb * ng,))

    def evaluate(self, data, points) -> np.ndarray:
        """Synthesize ``sum d tr(xi(x) c(xi))`` at arbitrary points."""
        points = np.asarray(points, dtype=float)
        total = 0.0
        for two_l, block in enumerate(data):
            mats = self.irrep_matrix(Spin(two_l), points)  # (P, d, d)
            total = total + (two_l + 1) * np.einsum("pij,...ji->...p", mats, block)
        return total


@dataclass(frozen=True, eq=False)
class _SU2Tables:
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    wbeta: np.ndarray
    small_d: list = field(repr=False)


@functools.lru_cache(maxsize=6)
def _su2_tables(two_b: int) -> _SU2Tables:
    na = two_b + 1
    ng = 2 * two_b + 1
    nb = two_b // 2 + 1
    alpha = 2 * np.pi * np.arange(na) / na
    gamma = 4 * np.pi * np.arange(ng) / ng
    x, w = np.polynomial.legendre.leggauss(nb)
    beta = np.arccos(x)
    small_d = [wigner_small_d(t, beta) for t in range(two_b + 1)]
    return _SU2Tables(alpha, beta, gamma, w, small_d)


@functools.lru_cache(maxsize=6)
def _su2_grid(two_b: int) -> QuadratureGrid:
    na, nb, ng = two_b + 1, two_b // 2 + 1, 2 * two_b + 1
    if na * nb * ng > MAX_GRID_NODES:
        raise GridTooLarge(f"SU(2) grid for band limit {Fraction(two_b, 2)} needs {na * nb * ng} nodes")
    tab = _su2_tables(two_b)
    a, b, g = np.meshgrid(tab.alpha, tab.beta, tab.gamma, indexing="ij")
    nodes = np.stack([a.ravel(), b.ravel(), g.ravel()], axis=-1)
    weights = np.broadcast_to(tab.wbeta[None, :, None] / (2 * na * ng), (na, nb, ng)).ravel().copy()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureGrid(SU2(), Fraction(two_b, 2), nodes, weights, (na, nb, ng))


# ---------------------------------------------------------------------------
# Torus


class Torus:
    """The torus ``R^n / Z^n`` with characters ``exp(2 pi i k.x)``.

    Casimir normalisation is ``lambda_k = |k|``; the symbol of ``d/dx_j`` is
    ``2 pi i k_j``. Band limits are boxes ``max_j |k_j| <= B``.
    """

    name = "torus"

    def __init__(self, n: int):
        if int(n) != n or n < 1:
            raise ValueError(f"torus dimension must be a positive integer, got {n!r}")
        self.n = int(n)

    @property
    def dim(self) -> int:
        return self.n

    def __eq__(self, other):
        return isinstance(other, Torus) and other.n == self.n

    def __hash__(self):
        return hash(("torus", self.n))

    def __repr__(self):
        return f"Torus({self.n})"

    def __str__(self):
        return f"t{self.n}"

    # limits and labels -----------------------------------------------------
    def canonical_limit(self, limit) -> int:
        if int(limit) != limit or limit < 0:
            raise ValueError(f"torus band limit must be a nonnegative integer, got {limit!r}")
        return int(limit)

    def label(self, raw) -> tuple:
        k = tuple(int(v) for v in np.atleast_1d(raw))
        if len(k) != self.n or any(int(v) != v for v in np.atleast_1d(raw)):
            raise InvalidLabel(f"{raw!r} is not a lattice point of Z^{self.n}")
        return k

    def labels(self, limit) -> list[tuple]:
        b = self.canonical_limit(limit)
        grids = np.meshgrid(*[np.arange(-b, b + 1)] * self.n, indexing="ij")
        return [tuple(int(v) for v in row) for row in np.stack([g.ravel() for g in grids], axis=-1)]

    def label_index(self, label, limit) -> tuple:
        b = self.canonical_limit(limit)
        k = self.label(label)
        if max(abs(v) for v in k) > b:
            raise InvalidLabel(f"label {k} beyond limit {b}")
        return tuple(v + b for v in k)

    def label_at(self, index, limit) -> tuple:
        b = self.canonical_limit(limit)
        idx = np.unravel_index(int(index), (2 * b + 1,) * self.n)
        return tuple(int(i) - b for i in idx)

    def irrep_dim(self, label) -> int:
        self.label(label)
        return 1

    def label_size(self, label) -> int:
        return max(abs(v) for v in self.label(label))

    def casimir_weight(self, label) -> float:
        return max(1.0, math.sqrt(sum(v * v for v in self.label(label))))

    def _k_grids(self, limit) -> list[np.ndarray]:
        b = self.canonical_limit(limit)
        return np.meshgrid(*[np.arange(-b, b + 1)] * self.n, indexing="ij")

    def casimir_weights(self, limit) -> np.ndarray:
        return np.maximum(1.0, np.sqrt(self.laplace_eigenvalues(limit)))

    def laplace_eigenvalues(self, limit) -> np.ndarray:
        return sum(k.astype(float) ** 2 for k in self._k_grids(limit)).ravel()

    # representation --------------------------------------------------------
    @property
    def identity(self):
        return np.zeros(self.n)

    def irrep_matrix(self, label, x) -> np.ndarray:
        k = np.array(self.label(label), dtype=float)
        x = np.asarray(x, dtype=float)
        return np.exp(2j * np.pi * (x @ k))[..., None, None]

    def algebra_matrix(self, label, axis: int) -> np.ndarray:
        _check_axis(axis, self.n)
        return np.array([[2j * np.pi * self.label(label)[axis - 1]]])

    def multiply(self, x, y) -> np.ndarray:
        return np.mod(np.asarray(x, float) + np.asarray(y, float), 1.0)

    def inverse_element(self, x) -> np.ndarray:
        return np.mod(-np.asarray(x, float), 1.0)

    def exp_algebra(self, axis: int, t) -> np.ndarray:
        _check_axis(axis, self.n)
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (self.n,))
        out[..., axis - 1] = np.mod(t, 1.0)
        return out

    def geodesic_distance(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        r = np.abs(x - np.round(x))
        return np.sqrt(np.sum(r ** 2, axis=-1))

    # Delta0 ----------------------------------------------------------------
    def delta0(self) -> Delta0:
        labels = []
        for j in range(self.n):
            for sign in (1, -1):
                k = [0] * self.n
                k[j] = sign
                labels.append(tuple(k))
        return Delta0(tuple(labels), tuple((k, 0, 0) for k in labels))

    def rho_squared(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        return 2 * self.n - np.sum(2 * np.cos(2 * np.pi * x), axis=-1)

    # quadrature ------------------------------------------------------------
    def haar_grid(self, band_limit) -> QuadratureGrid:
        return _torus_grid(self.n, self.canonical_limit(band_limit))

    # coefficient data ------------------------------------------------------
    def zeros(self, limit, batch=()) -> np.ndarray:
        b = self.canonical_limit(limit)
        return np.zeros(tuple(batch) + (2 * b + 1,) * self.n, dtype=complex)

    def data_limit(self, data) -> int:
        return (data.shape[-1] - 1) // 2

    def resize(self, data, limit) -> np.ndarray:
        old = self.data_limit(data)
        new = self.canonical_limit(limit)
        batch = data.shape[: data.ndim - self.n]
        out = self.zeros(new, batch)
        c = min(old, new)
        src = (Ellipsis,) + (slice(old - c, old + c + 1),) * self.n
        dst = (Ellipsis,) + (slice(new - c, new + c + 1),) * self.n
        out[dst] = data[src]
        return out

    def get_block(self, data, label, limit):
        return data[(Ellipsis,) + self.label_index(label, limit)][..., None, None]

    def set_block(self, data, label, limit, value):
        value = np.asarray(value)
        data[(Ellipsis,) + self.label_index(label, limit)] = value.reshape(value.shape[:-2]) if value.ndim >= 2 else value

    def map_blocks(self, fn, *datas):
        return fn(*datas)

    def scale_labels(self, data, weights) -> np.ndarray:
        shape = data.shape[data.ndim - self.n :]
        return data * np.asarray(weights).reshape(shape)

    def matmul(self, a, b) -> np.ndarray:
        return a * b

    def opnorms(self, data) -> np.ndarray:
        batch = data.shape[: data.ndim - self.n]
        return np.abs(data).reshape(batch + (-1,))

    def hs_terms(self, data) -> np.ndarray:
        batch = data.shape[: data.ndim - self.n]
        return (np.abs(data) ** 2).reshape(batch + (-1,))

    def batch_shape(self, data) -> tuple:
        return data.shape[: data.ndim - self.n]

    def copy(self, data) -> np.ndarray:
        return data.copy()

    def shift(self, data, k0) -> np.ndarray:
        """Coefficients of ``exp(2 pi i k0.x) * f``: entry ``k`` becomes ``c(k - k0)``.

        The box grows by ``max |k0_j|``; entries shifted in from outside are zero.
        """
        k0 = self.label(k0)
        b = self.data_limit(data)
        g = max(abs(v) for v in k0)
        out = self.resize(data, b + g)
        return np.roll(out, k0, axis=tuple(range(out.ndim - self.n, out.ndim)))

    # transforms ------------------------------------------------------------
    def forward(self, values: np.ndarray, grid: QuadratureGrid, limit=None) -> np.ndarray:
        b = grid.band_limit
        c = b if limit is None else self.canonical_limit(limit)
        if c > b:
            raise ValueError("requested coefficients beyond the grid band limit")
        batch = values.shape[:-1]
        v = values.reshape(batch + grid.shape)
        axes = tuple(range(len(batch), len(batch) + self.n))
        f = np.fft.fftn(v, axes=axes) / grid.size
        f = np.fft.fftshift(f, axes=axes)  # index k + b
        sl = (Ellipsis,) + (slice(b - c, b + c + 1),) * self.n
        return f[sl]

    def inverse(self, data, grid: QuadratureGrid) -> np.ndarray:
        b = grid.band_limit
        c = self.data_limit(data)
        if c > b:
            raise ValueError(f"coefficients up to {c} exceed grid band limit {b}")
        full = self.resize(data, b)
        batch = full.shape[: full.ndim - self.n]
        axes = tuple(range(len(batch), len(batch) + self.n))
        f = np.fft.ifftshift(full, axes=axes)
        v = np.fft.ifftn(f, axes=axes) * grid.size
        return v.reshape(batch + (grid.size,))

    def evaluate(self, data, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        c = self.data_limit(data)
        ks = np.stack([k.ravel() for k in self._k_grids(c)], axis=-1)  # (K, n)
        phases = np.exp(2j * np.pi * points @ ks.T)  # (P, K)
        batch = self.batch_shape(data)
        return np.einsum("pk,...k->...p", phases, data.reshape(batch + (-1,)))


@functools.lru_cache(maxsize=8)
def _torus_grid(n: int, b: int) -> QuadratureGrid:
    m = 2 * b + 1
    if m ** n > MAX_GRID_NODES:
        raise GridTooLarge(f"torus grid for band limit {b} in dimension {n} needs {m ** n} nodes")
    axes = np.meshgrid(*[np.arange(m) / m] * n, indexing="ij")
    nodes = np.stack([a.ravel() for a in axes], axis=-1)
    weights = np.full(m ** n, 1.0 / m ** n)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureGrid(Torus(n), b, nodes, weights, (m,) * n)


# ---------------------------------------------------------------------------
# helpers

Group = Union[SU2, Torus]


def _check_axis(axis, n):
    if not (isinstance(axis, (int, np.integer)) and 1 <= axis <= n):
        raise ValueError(f"axis must be in 1..{n}, got {axis!r}")


def _spectral_norm(blocks: np.ndarray) -> np.ndarray:
    d = blocks.shape[-1]
    if d == 1:
        return np.abs(blocks[..., 0, 0])
    if d == 2:
        # closed form from the singular values of a 2x2 matrix
        fro = np.sum(np.abs(blocks) ** 2, axis=(-2, -1))
        det = np.abs(blocks[..., 0, 0] * blocks[..., 1, 1] - blocks[..., 0, 1] * blocks[..., 1, 0])
        disc = np.sqrt(np.maximum(fro * fro - 4 * det * det, 0.0))
        return np.sqrt((fro + disc) / 2)
    return np.linalg.svd(blocks, compute_uv=False)[..., 0]


def spectral_norm(matrix) -> float | np.ndarray:
    """Largest singular value of a matrix or stack of matrices."""
    return _spectral_norm(np.asarray(matrix))


def parse_group(spec) -> Group:
    """``'su2'`` or ``'t<n>'`` / ``'torus:<n>'``; group objects pass through."""
    if isinstance(spec, (SU2, Torus)):
        return spec
    s = str(spec).strip().lower()
    if s in ("su2", "su(2)", "s3"):
        return SU2()
    if s.startswith("torus:"):
        return Torus(int(s.split(":", 1)[1]))
    if s.startswith("t") and s[1:].isdigit():
        return Torus(int(s[1:]))
    raise ValueError(f"unknown group {spec!r}")


# functional surface ---------------------------------------------------------


def haar_grid(group, band_limit) -> QuadratureGrid:
    group = parse_group(group)
    if band_limit < 0:
        raise ValueError("band limit must be nonnegative")
    return group.haar_grid(band_limit)


def irrep_matrix(group, label, x) -> np.ndarray:
    return parse_group(group).irrep_matrix(label, x)


def casimir_weight(group, label) -> float:
    return parse_group(group).casimir_weight(label)


def delta0_set(group) -> Delta0:
    return parse_group(group).delta0()


def rho_squared(group, x) -> np.ndarray:
    return parse_group(group).rho_squared(x)


def max_delta0_size(group) -> Union[Fraction, int]:
    group = parse_group(group)
    return max(group.label_size(lab) for lab in group.delta0().labels)


def grid_functions_of_delta0(group, grid: QuadratureGrid) -> list[np.ndarray]:
    """Values of ``q_ij = xi0_ij - delta_ij`` at the grid nodes, in ``component_index`` order."""
    group = parse_group(group)
    out = []
    cache = {}
    for lab, i, j in group.delta0().component_index:
        if lab not in cache:
            cache[lab] = group.irrep_matrix(lab, grid.nodes)
        out.append(cache[lab][:, i, j] - (1.0 if i == j else 0.0))
    return out


def as_sequence(x) -> Sequence:
    return x if isinstance(x, (list, tuple)) else [x]


def derivative_values(group, grid: QuadratureGrid, values: np.ndarray, axis: int) -> np.ndarray:
    """Spectral ``D_axis`` of node values ``(..., nodes)`` on ``grid``."""
    group = parse_group(group)
    _check_axis(axis, group.dim)
    data = group.forward(values, grid)
    if isinstance(group, SU2):
        data = [group.algebra_matrix(Spin(t), axis) @ b for t, b in enumerate(data)]
    else:
        b = grid.band_limit
        k = np.arange(-b, b + 1).reshape([-1 if a == axis - 1 else 1 for a in range(group.n)])
        data = data * (2j * np.pi * k)
    return group.inverse(data, grid)


def left_derivative(group, f, axis: int):
    """Left-invariant derivative ``D_axis f``, computed spectrally on the grid of ``f``."""
    values = derivative_values(group, f.grid, f.values, axis)
    return type(f)(f.grid, values, f.band_limit_hint)
