"""Finite-range evaluation of Hormander-Mikhlin type symbol conditions.

Each condition is a supremum over labels of a weighted operator norm, e.g.
``<xi>^{|alpha|} |D^alpha sigma(xi)|_op``. Only a truncation can be examined,
so every constant is reported together with the cutoff it was taken over and
its value at a smaller comparison cutoff.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from ._parallel import parallel_map
from .differences import DifferenceSpec, batched_differences, enumerate_specs
from .fourier import label_to_json
from .group_backend import SU2, derivative_values, parse_group
from .symbols import FullSymbol, InvariantSymbol

INSTABILITY_THRESHOLD = 0.25
EXIT_PASS, EXIT_FAIL, EXIT_INCONCLUSIVE = 0, 2, 3


class InsufficientSupport(ValueError):
    pass


@dataclass(frozen=True)
class KappaParams:
    n: int
    kappa: int


def kappa(n: int) -> KappaParams:
    """Smallest even integer strictly larger than ``n / 2``."""
    if int(n) != n or n < 1:
        raise ValueError(f"dimension must be a positive integer, got {n!r}")
    n = int(n)
    return KappaParams(n, 2 * (n // 4 + 1))


@dataclass
class ConditionRecord:
    condition: str
    alpha: str
    order: int
    weight_exponent: float
    constants: dict
    argmax_label: object
    cutoff: object
    beta: str = ""
    argmax_node: Optional[int] = None

    @property
    def constant(self) -> float:
        return self.constants[str(self.cutoff)]


@dataclass
class MultiplierReport:
    kind: str
    group: str
    cutoffs: list
    cap: float
    records: list = field(default_factory=list)
    verdict: str = "pass"
    instability: float = 0.0
    caveat: str = ""
    params: dict = field(default_factory=dict)

    @property
    def cutoff(self):
        return self.cutoffs[-1]

    @property
    def exit_code(self) -> int:
        return {"pass": EXIT_PASS, "fail": EXIT_FAIL, "inconclusive": EXIT_INCONCLUSIVE}[self.verdict]

    def constants(self) -> dict:
        return {(r.condition, r.alpha, r.beta): r.constant for r in self.records}

    def max_constant(self) -> float:
        return max(r.constant for r in self.records)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["cutoffs"] = [str(c) for c in self.cutoffs]
        for rec in out["records"]:
            rec["cutoff"] = str(rec["cutoff"])
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cut_cols = [f"constant@{c}" for c in self.cutoffs]
        w.writerow(["condition", "alpha", "beta", "constant", "argmax_label", "argmax_node"] + cut_cols)
        for r in self.records:
            w.writerow([r.condition, r.alpha, r.beta, repr(float(r.constant)), _label_text(r.argmax_label),
                        "" if r.argmax_node is None else r.argmax_node]
                       + [repr(float(r.constants[str(c)])) for c in self.cutoffs])
        return buf.getvalue()


def _label_text(label) -> str:
    return label if isinstance(label, str) else "(" + ",".join(str(v) for v in label) + ")"


# ---------------------------------------------------------------------------
# shared machinery


def _normalize_cutoffs(group, cutoff=None, cutoffs=None) -> list:
    if cutoffs is None:
        if cutoff is None:
            raise ValueError("give cutoff or cutoffs")
        top = group.canonical_limit(cutoff)
        half = Fraction(group.two(top) // 2, 2) if isinstance(group, SU2) else top // 2
        cutoffs = [half, top] if half < top else [top]
    out = sorted({group.canonical_limit(c) for c in cutoffs})
    return out


def _label_sizes(group, limit) -> np.ndarray:
    if isinstance(group, SU2):
        return np.arange(group.two(limit) + 1) / 2
    b = group.canonical_limit(limit)
    ks = np.meshgrid(*[np.arange(-b, b + 1)] * group.n, indexing="ij")
    return np.max(np.abs(np.stack(ks)), axis=0).ravel().astype(float)


@dataclass
class DifferenceProfile:
    """Per-label norms of ``D^alpha sigma`` (and ``lap_star^k sigma``) up to a cutoff.

    Computing these is the expensive part; checks with different weights
    reuse one profile.
    """

    group: object
    cutoff: object
    specs: list
    norms: np.ndarray  # (specs, labels) or (specs, nodes, labels)
    lap_power: int
    lap_norms: Optional[np.ndarray]
    weights: np.ndarray  # <xi> per label
    sizes: np.ndarray  # label size used for sub-cutoffs
    low_shell_scale: float


def difference_profile(sigma: InvariantSymbol, max_order: int, cutoff, lap_power: int = 0) -> DifferenceProfile:
    group = sigma.group
    cutoff = group.canonical_limit(cutoff)
    specs = enumerate_specs(group, max_order)
    need = cutoff + max([s.growth for s in specs] + [lap_power])
    if sigma.trusted_limit < need:
        raise InsufficientSupport(f"symbol is dense to {sigma.trusted_limit}; cutoff {cutoff} needs {need}")
    results, lap = batched_differences(sigma, specs, cutoff, lap_powers=lap_power, mapper=parallel_map)
    norms = np.stack([np.asarray(group.opnorms(r)) for r in results])
    lap_norms = np.asarray(group.opnorms(lap)) if lap is not None else None
    weights = group.casimir_weights(cutoff).reshape(-1)
    base = np.asarray(group.opnorms(sigma.resized(cutoff).data)).reshape(-1)
    low = base[weights <= 1.0]
    return DifferenceProfile(group, cutoff, specs, norms, lap_power, lap_norms, weights,
                             _label_sizes(group, cutoff), float(low.max()) if low.size else 0.0)


def _sup(values: np.ndarray, sizes: np.ndarray, cutoff) -> tuple[float, int, Optional[int]]:
    """Supremum over labels of size ``<= cutoff``; values ``(labels,)`` or ``(nodes, labels)``."""
    mask = sizes <= float(cutoff) + 1e-12
    v = np.where(mask, values, -np.inf)
    flat = int(np.argmax(v))
    if values.ndim == 1:
        return float(v[flat]), flat, None
    node, lab = np.unravel_index(flat, values.shape)
    return float(v[node, lab]), int(lab), int(node)


def _record(group, name, alpha, order, exponent, values, weights, sizes, cutoffs, beta="") -> ConditionRecord:
    weighted = values * weights ** exponent
    consts = {}
    arg = None
    for c in cutoffs:
        val, lab, node = _sup(weighted, sizes, c)
        consts[str(c)] = val
        arg = (lab, node)
    lab_idx, node = arg
    label = label_to_json(group, group.label_at(lab_idx, cutoffs[-1]))
    return ConditionRecord(name, alpha, order, float(exponent), consts, label, cutoffs[-1], beta, node)


def _finish(report: MultiplierReport, cap: Optional[float], default_scale: float) -> MultiplierReport:
    if cap is None:
        cap = 10.0 * default_scale
    report.cap = float(cap)
    top, prev = report.cutoffs[-1], (report.cutoffs[-2] if len(report.cutoffs) > 1 else None)
    scale = max([r.constants[str(top)] for r in report.records if r.order == 0] + [1.0])
    floor = 1e-10 * scale
    instab = 0.0
    if prev is not None:
        for r in report.records:
            hi, lo = r.constants[str(top)], r.constants[str(prev)]
            if hi > floor:
                instab = max(instab, (hi - lo) / hi)
    report.instability = float(instab)
    if any(r.constant > cap for r in report.records):
        report.verdict = "fail"
    elif instab > INSTABILITY_THRESHOLD:
        report.verdict = "inconclusive"
    else:
        report.verdict = "pass"
    cut_text = ", ".join(str(c) for c in report.cutoffs)
    report.caveat = (f"suprema over labels up to cutoffs {cut_text} only; a finite truncation cannot "
                     f"establish the bounds for all labels")
    return report


def _class_records(profile: DifferenceProfile, cutoffs, exponent_fn, max_order) -> list:
    recs = []
    for spec, vals in zip(profile.specs, profile.norms):
        if spec.order > max_order:
            continue
        name = "sup" if spec.order == 0 else "D^alpha"
        recs.append(_record(profile.group, name, str(spec), spec.order, exponent_fn(spec.order), vals,
                            profile.weights, profile.sizes, cutoffs))
    return recs


# ---------------------------------------------------------------------------
# public checks


def check_hm(sigma, cutoff=None, cap: Optional[float] = None, *, cutoffs=None) -> MultiplierReport:
    """Hormander-Mikhlin conditions with ``kappa`` from the group dimension.

    ``<xi>^kappa |lap_star^{kappa/2} sigma(xi)|_op`` and
    ``<xi>^{|alpha|} |D^alpha sigma(xi)|_op`` for ``|alpha| <= kappa - 1``.
    ``sigma`` may also be a :class:`DifferenceProfile` with enough orders.
    """
    group = sigma.group
    kp = kappa(group.dim)
    cuts = _normalize_cutoffs(group, cutoff, cutoffs)
    profile = sigma if isinstance(sigma, DifferenceProfile) else \
        difference_profile(sigma, kp.kappa - 1, cuts[-1], lap_power=kp.kappa // 2)
    if profile.lap_power != kp.kappa // 2:
        raise ValueError("profile lacks the lap_star power required by kappa")
    recs = _class_records(profile, cuts, lambda r: r, kp.kappa - 1)
    recs.append(_record(group, "lap_star^(kappa/2)", f"lap_star^{kp.kappa // 2}", kp.kappa, kp.kappa,
                        profile.lap_norms, profile.weights, profile.sizes, cuts))
    report = MultiplierReport("hm", str(group), cuts, 0.0, recs, params={"kappa": kp.kappa})
    return _finish(report, cap, profile.low_shell_scale)


def check_class(sigma, m: float, rho: float, max_order: int, cutoff=None, cap: Optional[float] = None, *,
                cutoffs=None) -> MultiplierReport:
    """Symbol class test: ``sup <xi>^{-m + rho |alpha|} |D^alpha sigma(xi)|_op`` for ``|alpha| <= max_order``."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [0, 1]")
    group = sigma.group
    cuts = _normalize_cutoffs(group, cutoff, cutoffs)
    profile = sigma if isinstance(sigma, DifferenceProfile) else difference_profile(sigma, max_order, cuts[-1])
    if max(s.order for s in profile.specs) < max_order:
        raise ValueError("profile computed for fewer difference orders")
    recs = _class_records(profile, cuts, lambda r: -m + rho * r, max_order)
    report = MultiplierReport("class", str(group), cuts, 0.0, recs,
                              params={"m": m, "rho": rho, "max_order": max_order})
    return _finish(report, cap, profile.low_shell_scale)


def smallest_integer_above(x: float) -> int:
    return int(math.floor(x)) + 1


def beta_multi_indices(n: int, max_order: int) -> list[tuple]:
    import itertools

    out = []
    for total in range(max_order + 1):
        for beta in itertools.product(range(total + 1), repeat=n):
            if sum(beta) == total:
                out.append(beta)
    return out


def x_derivative_data(sigma_data, group, grid, beta: tuple):
    """``d_x^beta`` applied to the node dependence of symbol data (rightmost axis first)."""
    data = sigma_data
    for axis in range(len(beta), 0, -1):
        for _ in range(beta[axis - 1]):
            data = _derive_nodes(data, group, grid, axis)
    return data


def _derive_nodes(data, group, grid, axis):
    if isinstance(group, SU2):
        out = []
        for b in data:
            vals = np.moveaxis(b, 0, -1)  # (..., d, d, nodes)
            out.append(np.moveaxis(derivative_values(group, grid, vals, axis), -1, 0))
        return out
    vals = np.moveaxis(data, 0, -1)
    return np.moveaxis(derivative_values(group, grid, vals, axis), -1, 0)


def _check_x_band_limited(sigma: FullSymbol, tol=1e-8):
    group, grid = sigma.group, sigma.grid
    blocks = sigma.data if isinstance(group, SU2) else [sigma.data]
    for b in blocks:
        vals = np.moveaxis(b, 0, -1)
        back = group.inverse(group.forward(vals, grid), grid)
        scale = max(float(np.max(np.abs(vals))), 1e-300)
        if float(np.max(np.abs(back - vals))) > tol * scale:
            raise ValueError("symbol's x-dependence is not band-limited on its grid")


def check_noninvariant(sigma: FullSymbol, p: float, cutoff=None, cap: Optional[float] = None, *,
                       cutoffs=None) -> MultiplierReport:
    """``sup_{x, xi} <xi>^{|alpha|} |d_x^beta D^alpha sigma(x, xi)|_op`` for ``|alpha| <= kappa``, ``|beta| <= l``.

    ``l`` is the smallest integer larger than ``n / p``. Differences act on
    the label, derivatives on the node dependence.
    """
    if not 1 < p < math.inf:
        raise ValueError("p must satisfy 1 < p < infinity")
    group, grid = sigma.group, sigma.grid
    kp = kappa(group.dim)
    l_order = smallest_integer_above(group.dim / p)
    _check_x_band_limited(sigma)
    cuts = _normalize_cutoffs(group, cutoff, cutoffs)
    top = cuts[-1]
    specs = enumerate_specs(group, kp.kappa)
    need = top + max(s.growth for s in specs)
    if sigma.trusted_limit < need:
        raise InsufficientSupport(f"symbol is dense to {sigma.trusted_limit}; cutoff {top} needs {need}")
    diffs, _ = batched_differences(sigma, specs, top, mapper=parallel_map)
    weights = group.casimir_weights(top).reshape(-1)
    sizes = _label_sizes(group, top)
    betas = beta_multi_indices(group.dim, l_order)
    recs = []
    for spec, data in zip(specs, diffs):
        cache = {tuple([0] * group.dim): data}
        for beta in betas:
            if beta not in cache:
                first = next(a for a, v in enumerate(beta) if v)
                parent = list(beta)
                parent[first] -= 1
                cache[beta] = _derive_nodes(cache[tuple(parent)], group, grid, first + 1)
            norms = np.asarray(group.opnorms(cache[beta]))  # (nodes, labels)
            name = "dx^beta D^alpha"
            recs.append(_record(group, name, str(spec), spec.order, spec.order, norms, weights, sizes, cuts,
                                beta=",".join(str(v) for v in beta)))
    base = [r for r in recs if r.order == 0 and set(r.beta.split(",")) == {"0"}]
    scale = base[0].constant if base else 1.0
    report = MultiplierReport("noninvariant", str(group), cuts, 0.0, recs,
                              params={"p": p, "kappa": kp.kappa, "l": l_order})
    return _finish(report, cap, scale)
