"""Difference operators on symbols.

A function ``q`` vanishing at the identity acts on symbols by
``Q sigma = F(q F^{-1} sigma)``. The first-order family uses
``q_ij = xi0_ij - delta_ij`` for ``xi0`` in ``Delta0``; the second-order
operator ``lap_star`` uses ``rho^2``.

Differences of a truncated symbol are exact objects (the product of two
band-limited functions is band-limited), but entries within ``|q|`` of the
input cutoff see the missing tail of the true symbol, so they are marked
untrusted.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .fourier import FourierCoefficients, GridFunction, evaluate, forward, inverse
from .group_backend import SU2, Spin, Torus, grid_functions_of_delta0, parse_group
from .symbols import FullSymbol, InvariantSymbol


class OrderViolation(ValueError):
    pass


class BudgetExhausted(ValueError):
    pass


class NotInDelta0(ValueError):
    pass


@dataclass(frozen=True)
class DifferenceSpec:
    """Ordered product of first-order differences ``D_1 D_2 ... D_k``.

    Each factor is ``(xi0, i, j)`` with zero-based ``i, j``. Factors are kept
    in the order given.
    """

    group: object
    factors: tuple = ()

    def __post_init__(self):
        group = parse_group(self.group)
        object.__setattr__(self, "group", group)
        index = set(group.delta0().component_index)
        canon = []
        for lab, i, j in self.factors:
            entry = (group.label(lab), int(i), int(j))
            if entry not in index:
                raise NotInDelta0(f"{_entry_text(group, entry)} is not a Delta0 component")
            canon.append(entry)
        object.__setattr__(self, "factors", tuple(canon))

    @property
    def order(self) -> int:
        return len(self.factors)

    @property
    def growth(self):
        """Total label growth ``sum |xi0|`` of the factors."""
        return sum((self.group.label_size(lab) for lab, _, _ in self.factors), 0)

    def __str__(self):
        if not self.factors:
            return "id"
        parts, prev, count = [], None, 0
        for f in self.factors + (None,):
            if f == prev:
                count += 1
                continue
            if prev is not None:
                parts.append(_entry_text(self.group, prev) + (f"^{count}" if count > 1 else ""))
            prev, count = f, 1
        return " ".join(parts)

    @classmethod
    def parse(cls, text: str, group=None) -> "DifferenceSpec":
        """Parse ``"su2:1:(2,3)^2 su2:1/2:(1,1)"`` or ``"t3:(0,1,0)"`` (one-based indices)."""
        factors, seen_group = [], group
        for token in text.split():
            m = re.fullmatch(r"([a-z0-9:]+?):(?:([0-9/]+):)?\(([-0-9, ]+)\)(?:\^(\d+))?", token.strip().lower())
            if not m:
                raise ValueError(f"cannot parse difference factor {token!r}")
            g = parse_group(m.group(1))
            if seen_group is not None and parse_group(seen_group) != g:
                raise ValueError("mixed groups in one difference spec")
            seen_group = g
            nums = [int(v) for v in m.group(3).split(",")]
            power = int(m.group(4) or 1)
            if isinstance(g, SU2):
                if m.group(2) is None or len(nums) != 2:
                    raise ValueError(f"SU(2) factor needs 'su2:<spin>:(i,j)', got {token!r}")
                entry = (Spin.of(Fraction(m.group(2))), nums[0] - 1, nums[1] - 1)
            else:
                entry = (g.label(nums), 0, 0)
            factors.extend([entry] * power)
        if seen_group is None:
            raise ValueError("empty difference spec needs an explicit group")
        return cls(seen_group, tuple(factors))


def _entry_text(group, entry) -> str:
    lab, i, j = entry
    if isinstance(group, SU2):
        return f"su2:{Spin.of(lab).l}:({i + 1},{j + 1})"
    return f"{group}:(" + ",".join(str(v) for v in lab) + ")"


@dataclass(frozen=True)
class TruncationBudget:
    """Cutoff bookkeeping: inputs on ``input_cutoff``, outputs to ``output_cutoff``."""

    input_cutoff: object
    output_cutoff: object
    margin: object

    @property
    def exact_cutoff(self):
        """Largest label whose output entry only depends on supplied inputs."""
        return self.input_cutoff - self.margin


# ---------------------------------------------------------------------------
# spatial engine


def _half_up(group, value):
    if isinstance(group, SU2):
        return Fraction(math.ceil(Fraction(value) * 2), 2)
    return int(math.ceil(value))


class DifferenceEngine:
    """Holds ``u = F^{-1} sigma`` on a grid wide enough for products with ``q``.

    ``extra`` is the largest label growth of any ``q`` to be applied and
    ``out_limit`` the largest output label wanted.
    """

    def __init__(self, sigma, extra, out_limit=None):
        group = sigma.group
        self.group = group
        self.sigma = sigma
        self.extra = group.canonical_limit(extra)
        support = sigma.support_limit
        out_limit = support + self.extra if out_limit is None else group.canonical_limit(out_limit)
        self.out_limit = out_limit
        band = max(support, _half_up(group, Fraction(support + self.extra + out_limit) / 2))
        self.grid = group.haar_grid(band)
        coeffs = FourierCoefficients(group, support, sigma.data)
        self.u = inverse(coeffs, self.grid).values

    def apply(self, q_values: np.ndarray, limit=None):
        limit = self.out_limit if limit is None else limit
        return self.group.forward(q_values * self.u, self.grid, limit)

    def delta0_functions(self) -> list[np.ndarray]:
        return grid_functions_of_delta0(self.group, self.grid)

    def rho_squared(self) -> np.ndarray:
        return self.group.rho_squared(self.grid.nodes)


def _q_band(q: GridFunction, tol=1e-12):
    group = q.group
    if q.band_limit_hint is not None:
        return group.canonical_limit(q.band_limit_hint)
    c = forward(q)
    norms = np.asarray(group.opnorms(c.data))
    norms = norms.reshape(-1, norms.shape[-1]).max(axis=0)
    scale = norms.max() if norms.size else 0.0
    sizes = [group.label_size(lab) for lab in group.labels(c.support_limit)]
    live = [s for s, v in zip(sizes, norms) if v > tol * max(scale, 1e-300)]
    return max(live) if live else group.canonical_limit(0)


def _wrap(sigma, data, limit, trusted):
    if isinstance(sigma, FullSymbol):
        return FullSymbol(sigma.group, sigma.grid, limit, data, trusted_limit=trusted)
    return InvariantSymbol(sigma.group, limit, data, trusted_limit=trusted)


def difference_apply(q: GridFunction, sigma, order: int = 0):
    """``F(q F^{-1} sigma)`` on every label the product reaches.

    With ``order >= 1`` the caller asserts ``q`` vanishes at the identity; a
    value ``|q(1)| > 1e-12`` raises :class:`OrderViolation`.
    """
    group = sigma.group
    if q.group != group:
        raise ValueError("q and sigma live on different groups")
    q_hat = forward(q)
    if order >= 1:
        at_one = complex(np.asarray(evaluate(q_hat, group.identity[None, :])).reshape(-1)[0])
        if abs(at_one) > 1e-12:
            raise OrderViolation(f"q(1) = {at_one:.3e}, cannot define a difference of order {order}")
    band = _q_band(q)
    engine = DifferenceEngine(sigma, band)
    q_vals = inverse(q_hat.resized(min(band, q_hat.support_limit)), engine.grid).values
    data = engine.apply(q_vals)
    return _wrap(sigma, data, sigma.support_limit + band, sigma.trusted_limit - band)


def _delta0_entry(group, entry):
    lab, i, j = entry
    canon = (group.label(lab), int(i), int(j))
    if canon not in set(group.delta0().component_index):
        raise NotInDelta0(f"{_entry_text(group, canon)} is not a Delta0 component")
    return canon


def first_difference(entry, sigma):
    """``D_ij`` from ``q_ij = xi0_ij - delta_ij`` for a ``Delta0`` entry ``(xi0, i, j)``."""
    group = sigma.group
    lab, i, j = _delta0_entry(group, entry)
    if isinstance(group, Torus):
        # q = e^{2 pi i k0.x} - 1 shifts coefficients: sigma(k - k0) - sigma(k)
        shifted = group.shift(sigma.data, lab)
        out = shifted - group.resize(sigma.data, sigma.support_limit + 1)
        return _wrap(sigma, out, sigma.support_limit + 1, sigma.trusted_limit - 1)
    growth = group.label_size(lab)
    engine = DifferenceEngine(sigma, growth)
    q = group.irrep_matrix(lab, engine.grid.nodes)[:, i, j] - (1.0 if i == j else 0.0)
    data = engine.apply(q)
    return _wrap(sigma, data, sigma.support_limit + growth, sigma.trusted_limit - growth)


def laplace_difference(sigma):
    """Second-order difference associated with ``rho^2``."""
    group = sigma.group
    if isinstance(group, Torus):
        # 2n sigma - sum_j (sigma(. + e_j) + sigma(. - e_j)), grouped as written
        n = group.n
        pairs = 0.0
        for j in range(n):
            e = [0] * n
            e[j] = 1
            pairs = pairs + (group.shift(sigma.data, tuple(-v for v in e)) + group.shift(sigma.data, tuple(e)))
        out = 2 * n * group.resize(sigma.data, sigma.support_limit + 1) - pairs
        return _wrap(sigma, out, sigma.support_limit + 1, sigma.trusted_limit - 1)
    engine = DifferenceEngine(sigma, 1)
    data = engine.apply(engine.rho_squared())
    return _wrap(sigma, data, sigma.support_limit + 1, sigma.trusted_limit - 1)


def multi_difference(spec: DifferenceSpec, sigma, max_limit=None):
    """``D_1 D_2 ... D_k sigma``; the rightmost factor is applied first."""
    if spec.group != sigma.group:
        raise ValueError("spec and symbol are on different groups")
    if max_limit is not None and sigma.support_limit + spec.growth > sigma.group.canonical_limit(max_limit):
        raise BudgetExhausted(f"{spec} grows support past {max_limit}")
    out = sigma
    for entry in reversed(spec.factors):
        out = first_difference(entry, out)
    return out


def t3_second_difference(sigma):
    """``sigma(k) - (1/6) sum_j (sigma(k + e_j) + sigma(k - e_j))`` on the 3-torus."""
    if not (isinstance(sigma.group, Torus) and sigma.group.n == 3):
        raise ValueError(f"defined on the 3-torus only, got {sigma.group}")
    lap = laplace_difference(sigma)
    return _wrap(sigma, lap.data / 6, lap.support_limit, lap.trusted_limit)


# ---------------------------------------------------------------------------
# batched evaluation for the checkers


def enumerate_specs(group, max_order: int, min_order: int = 0) -> list[DifferenceSpec]:
    """Every product of ``Delta0`` differences with ``min_order <= |alpha| <= max_order``.

    Products of multiplications commute, so one representative per multiset
    of factors is listed (in ``component_index`` order).
    """
    import itertools

    group = parse_group(group)
    index = group.delta0().component_index
    out = []
    for r in range(min_order, max_order + 1):
        for combo in itertools.combinations_with_replacement(range(len(index)), r):
            out.append(DifferenceSpec(group, tuple(index[c] for c in combo)))
    return out


def spec_function(spec: DifferenceSpec, q_table: Sequence[np.ndarray], index_pos: dict) -> np.ndarray:
    vals = 1.0
    for entry in spec.factors:
        vals = vals * q_table[index_pos[entry]]
    return vals


def batched_differences(sigma, specs: Iterable[DifferenceSpec], cutoff, *, lap_powers: int = 0, mapper=map):
    """Per-spec difference data restricted to labels ``<= cutoff``.

    Returns ``(spec_results, lap_result)`` where ``lap_result`` is
    ``lap_star^lap_powers sigma`` (``None`` when ``lap_powers == 0``).
    Requires ``sigma.trusted_limit >= cutoff + growth`` for every request.
    """
    group = sigma.group
    specs = list(specs)
    cutoff = group.canonical_limit(cutoff)
    growth = max([s.growth for s in specs] + [lap_powers * 1])
    need = cutoff + growth
    if sigma.trusted_limit < need:
        raise BudgetExhausted(f"symbol trusted to {sigma.trusted_limit}, need {need} for cutoff {cutoff}")
    engine = DifferenceEngine(sigma, growth, out_limit=cutoff)
    q_table = engine.delta0_functions()
    pos = {e: k for k, e in enumerate(group.delta0().component_index)}

    def one(spec):
        return engine.apply(spec_function(spec, q_table, pos), cutoff)

    results = list(mapper(one, specs))
    lap = engine.apply(engine.rho_squared() ** lap_powers, cutoff) if lap_powers else None
    return results, lap
