"""Concrete left-invariant operators on SU(2) and the torus.

On SU(2) the basis ``D_1, D_2, D_3`` is orthonormal for the bi-invariant
metric with ``D_3`` generating the diagonal subgroup, so every operator built
from ``D_3`` and ``D_1^2 + D_2^2`` has a diagonal symbol in the Wigner basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .fourier import GridFunction
from .group_backend import SU2, Spin, Torus, left_derivative, magnetic_numbers, parse_group
from .symbols import InvariantSymbol, spectral_multiplier

KINDS = ("VectorField", "Laplacian", "SubLaplacian", "Heat", "XPlusC")


class UnsupportedOperator(ValueError):
    pass


class SingularSymbol(ValueError):
    def __init__(self, message, label=None, m=None):
        super().__init__(message)
        self.label = label
        self.m = m


@dataclass(frozen=True)
class NamedOperator:
    kind: str
    group: object = field(default_factory=SU2)
    axis: int = 3
    c: complex = 0.0

    def __post_init__(self):
        object.__setattr__(self, "group", parse_group(self.group))
        if self.kind not in KINDS:
            raise UnsupportedOperator(f"unknown operator kind {self.kind!r}; expected one of {KINDS}")
        if self.kind in ("SubLaplacian", "Heat", "XPlusC") and not isinstance(self.group, SU2):
            raise UnsupportedOperator(f"{self.kind} is defined on SU(2) only")
        if self.kind in ("VectorField", "XPlusC") and not 1 <= self.axis <= self.group.dim:
            raise UnsupportedOperator(f"axis {self.axis} outside 1..{self.group.dim}")


def _blocks(cutoff, fn) -> list:
    return [np.asarray(fn(Spin(t)), dtype=complex) for t in range(SU2().two(cutoff) + 1)]


def named_symbol(op: NamedOperator, cutoff) -> InvariantSymbol:
    """Symbol of a zoo operator on every label up to ``cutoff``.

    SU(2): ``D_3 -> diag(i m)``, ``L -> -l(l+1) I``, ``L_s -> diag(m^2 - l(l+1))``,
    ``H -> diag(i m + l(l+1) - m^2)``. Torus: ``D_j -> 2 pi i k_j`` and the
    Laplacian normalized to ``-|k|^2``.
    """
    group = op.group
    if isinstance(group, Torus):
        if op.kind == "VectorField":
            return spectral_multiplier(group, lambda k: 2j * np.pi * k[..., op.axis - 1], cutoff)
        if op.kind == "Laplacian":
            return spectral_multiplier(group, lambda k: -np.sum(k.astype(float) ** 2, axis=-1), cutoff)
        raise UnsupportedOperator(f"{op.kind} on {group}")
    if op.kind == "VectorField":
        data = _blocks(cutoff, lambda s: group.algebra_matrix(s, op.axis))
        return InvariantSymbol(group, cutoff, data)
    if op.kind == "XPlusC":
        data = _blocks(cutoff, lambda s: group.algebra_matrix(s, op.axis) + op.c * np.eye(s.dim))
        return InvariantSymbol(group, cutoff, data)
    if op.kind == "Laplacian":
        return spectral_multiplier(group, lambda l: -l * (l + 1), cutoff)
    if op.kind == "SubLaplacian":
        return spectral_multiplier(group, lambda l, m: m ** 2 - l * (l + 1), cutoff)
    return spectral_multiplier(group, lambda l, m: 1j * m + l * (l + 1) - m ** 2, cutoff)


def grid_realization(op: NamedOperator) -> Callable[[GridFunction], GridFunction]:
    """The operator assembled from spectral left derivatives on the grid."""
    group = op.group

    def d(f, j):
        return left_derivative(group, f, j)

    def apply(f: GridFunction) -> GridFunction:
        if op.kind == "VectorField":
            return d(f, op.axis)
        if op.kind == "XPlusC":
            return d(f, op.axis) + f * op.c
        if isinstance(group, Torus):
            out = sum((d(d(f, j), j) for j in range(1, group.n + 1)), f * 0)
            return out * (1 / (4 * np.pi ** 2))
        sub = d(d(f, 1), 1) + d(d(f, 2), 2)
        if op.kind == "SubLaplacian":
            return sub
        if op.kind == "Laplacian":
            return sub + d(d(f, 3), 3)
        return d(f, 3) - sub

    return apply


# ---------------------------------------------------------------------------
# X + c on SU(2)


@dataclass(frozen=True)
class ExceptionalSet:
    """``{i (offset + step q) : q in Z}``, with the members inside ``|Im c| <= window``."""

    offset: Fraction
    step: Fraction
    window: float
    members: tuple  # imaginary parts as Fractions, ascending

    def complex_members(self) -> list[complex]:
        return [1j * float(v) for v in self.members]

    def distance(self, c: complex) -> float:
        c = complex(c)
        q = round((c.imag - float(self.offset)) / float(self.step))
        nearest = float(self.offset) + q * float(self.step)
        return math.hypot(c.real, c.imag - nearest)

    def contains(self, c: complex, tol: float = 1e-9) -> bool:
        return self.distance(c) <= tol


def exceptional_set(axis: int, window: float) -> ExceptionalSet:
    """Values ``c`` for which ``X + c`` fails to be invertible, ``X = D_axis`` on SU(2).

    ``X + c`` is singular exactly when ``-c`` is an eigenvalue of some
    ``sigma_X(xi)``. The eigenvalues are computed label by label up to the
    spin the window can reach and snapped to the half-integer lattice they
    lie on (to 1e-9).
    """
    group = SU2()
    if not 1 <= axis <= 3:
        raise UnsupportedOperator(f"axis {axis} outside 1..3")
    cutoff = Fraction(math.floor(2 * window + 1e-12) + 2, 2)
    found = set()
    for s in group.labels(cutoff):
        eig = np.linalg.eigvals(group.algebra_matrix(s, axis))
        for v in -eig:
            if abs(v.real) > 1e-9:
                raise ArithmeticError("vector field symbol has a non-imaginary eigenvalue")
            twice = round(2 * v.imag)
            if abs(2 * v.imag - twice) > 1e-9:
                raise ArithmeticError(f"eigenvalue {v} off the half-integer lattice")
            if abs(Fraction(twice, 2)) <= window + 1e-12:
                found.add(Fraction(twice, 2))
    return ExceptionalSet(Fraction(0), Fraction(1, 2), float(window), tuple(sorted(found)))


def invert_x_plus_c(axis: int, c: complex, cutoff) -> InvariantSymbol:
    """Symbol of ``(D_axis + c)^{-1}`` up to ``cutoff``; for axis 3 the entries are ``1/(i m + c)``."""
    c = complex(c)
    exc = exceptional_set(axis, abs(c.imag) + 1)
    if exc.contains(c):
        m = Fraction(round(-2 * c.imag), 2)
        raise SingularSymbol(f"c = {c} lies in the exceptional set; i m + c vanishes at (l, m) = ({abs(m)}, {m})",
                             label=abs(m), m=m)
    group = SU2()
    if axis == 3:
        return spectral_multiplier(group, lambda l, m: 1.0 / (1j * m + c), cutoff)
    data = _blocks(cutoff, lambda s: np.linalg.inv(group.algebra_matrix(s, axis) + c * np.eye(s.dim)))
    return InvariantSymbol(group, cutoff, data)


def parametrix_symbol(kind: str, cutoff) -> InvariantSymbol:
    """Exact inverse of the SubLaplacian or Heat symbol off its kernel; zero block at ``l = 0``."""
    if kind not in ("SubLaplacian", "Heat"):
        raise UnsupportedOperator(f"no parametrix for {kind!r}")
    base = named_symbol(NamedOperator(kind), cutoff)
    data = []
    for t, block in enumerate(base.data):
        diag = np.diag(block)
        inv = np.zeros_like(diag) if t == 0 else 1.0 / diag
        data.append(np.diag(inv))
    return InvariantSymbol(base.group, cutoff, data, declared_order=-1.0)


def kernel_projector(group, cutoff) -> InvariantSymbol:
    """Symbol of the projection onto constants."""
    group = parse_group(group)
    if isinstance(group, SU2):
        return spectral_multiplier(group, lambda l: 1.0 if l == 0 else 0.0, cutoff)
    return spectral_multiplier(group, lambda k: np.all(k == 0, axis=-1).astype(float), cutoff)


# ---------------------------------------------------------------------------
# symbols addressed by name from the command line


def _bracket(group):
    if isinstance(group, SU2):
        return lambda l: max(1.0, math.sqrt(l * (l + 1)))
    return lambda k: np.maximum(1.0, np.sqrt(np.sum(k.astype(float) ** 2, axis=-1)))


def zoo_symbol(name: str, group="su2", cutoff=8) -> InvariantSymbol:
    """Symbol for a zoo id.

    ``identity``, ``riesz`` (``i m / <xi>`` on SU(2), ``i k_1 / <k>`` on the
    torus), ``growing`` (``<xi> I``), ``laplacian``, ``sublaplacian``,
    ``heat``, ``d1``..``dn``, ``sublaplacian-parametrix``, ``heat-parametrix``.
    """
    group = parse_group(group)
    bracket = _bracket(group)
    name = name.lower()
    if name == "identity":
        return InvariantSymbol.identity(group, cutoff)
    if name == "growing":
        return spectral_multiplier(group, bracket, cutoff)
    if name == "riesz":
        if isinstance(group, SU2):
            return spectral_multiplier(group, lambda l, m: 1j * m / bracket(l), cutoff)
        return spectral_multiplier(group, lambda k: 1j * k[..., 0] / bracket(k), cutoff)
    simple = {"laplacian": "Laplacian", "sublaplacian": "SubLaplacian", "heat": "Heat"}
    if name in simple:
        return named_symbol(NamedOperator(simple[name], group), cutoff)
    if name.startswith("d") and name[1:].isdigit():
        return named_symbol(NamedOperator("VectorField", group, axis=int(name[1:])), cutoff)
    if name.endswith("-parametrix") and name[: -len("-parametrix")] in ("sublaplacian", "heat"):
        if not isinstance(group, SU2):
            raise UnsupportedOperator("parametrices are defined on SU(2) only")
        return parametrix_symbol(simple[name[: -len("-parametrix")]], cutoff)
    raise UnsupportedOperator(f"unknown zoo id {name!r}")


ZOO_IDS = ("identity", "riesz", "growing", "laplacian", "sublaplacian", "heat", "d1", "d2", "d3",
           "sublaplacian-parametrix", "heat-parametrix")
