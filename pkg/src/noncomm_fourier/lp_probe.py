"""Empirical L^p and W^{p,r} experiments on quadrature grids.

Test functions are drawn coefficient-side (i.i.d. complex normal entries on
every label up to the band limit), so they are band-limited by construction.
At ``p = 2`` every norm is evaluated on the Fourier side through Plancherel,
which is exact; for other ``p`` the grid quadrature is used.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from ._parallel import parallel_map
from .fourier import FourierCoefficients, GridFunction, _fsum_last, forward, inverse, plancherel_norm, random_coefficients
from .group_backend import SU2, parse_group
from .multiplier_check import kappa
from .operators_zoo import NamedOperator, exceptional_set, named_symbol
from .symbols import InvariantSymbol, op_apply, spectral_multiplier


class DegenerateTrial(ValueError):
    pass


def lp_norm(f: GridFunction, p: float):
    """``(sum_nodes w |f|^p)^{1/p}``; ``p = inf`` is the maximum over nodes."""
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    a = np.abs(f.values)
    if math.isinf(p):
        out = a.max(axis=-1)
    else:
        out = _fsum_last(f.grid.weights * a ** p) ** (1.0 / p)
    return float(out) if np.ndim(out) == 0 else out


def bessel_multiplier(group, r: float, limit) -> InvariantSymbol:
    """Symbol of ``(I - L)^{r/2}``, i.e. ``(1 + lambda^2)^{r/2}``."""
    group = parse_group(group)
    lam2 = group.laplace_eigenvalues(limit)
    if isinstance(group, SU2):
        return spectral_multiplier(group, lambda l: (1 + l * (l + 1)) ** (r / 2), limit)
    return InvariantSymbol(group, limit, ((1 + lam2) ** (r / 2)).reshape(group.zeros(limit).shape).astype(complex))


def wpr_norm(f: GridFunction, p: float, r: float):
    """``|| (I - L)^{r/2} f ||_p``."""
    limit = f.band_limit_hint if f.band_limit_hint is not None else f.grid.band_limit
    return lp_norm(op_apply(bessel_multiplier(f.group, r, limit), f), p)


def _coef_apply(sigma: InvariantSymbol, c: FourierCoefficients) -> FourierCoefficients:
    sig = sigma.resized(c.support_limit)
    return FourierCoefficients(c.group, c.support_limit, c.group.matmul(sig.data, c.data))


def _norm(c: FourierCoefficients, p: float, grid, weight: Optional[InvariantSymbol] = None):
    """``|| W f ||_p`` for the function with coefficients ``c`` (``W`` defaults to the identity)."""
    if weight is not None:
        c = _coef_apply(weight, c)
    if p == 2:
        return plancherel_norm(c)
    return lp_norm(inverse(c, grid), p)


@dataclass
class ProbeResult:
    kind: str
    p: float
    band_limits: list
    statistics: list
    trend: float
    trials: int
    seed: int
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["band_limits"] = [str(b) for b in self.band_limits]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["kind", "p", "band_limit", "statistic", "trend", "trials", "seed"])
        for b, s in zip(self.band_limits, self.statistics):
            w.writerow([self.kind, repr(float(self.p)), str(b), repr(float(s)), repr(float(self.trend)),
                        self.trials, self.seed])
        return buf.getvalue()

    def to_gnuplot(self) -> str:
        lines = [f"# {self.kind} p={self.p!r} trend={self.trend!r}"]
        lines += [f"{float(b)!r} {float(s)!r}" for b, s in zip(self.band_limits, self.statistics)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "ProbeResult":
        doc = dict(doc)
        doc["band_limits"] = [Fraction(b) for b in doc["band_limits"]]
        return cls(**doc)


def fit_trend(band_limits: Sequence, statistics: Sequence) -> float:
    """Least-squares slope of log statistic against log band limit."""
    b = np.array([float(v) for v in band_limits])
    s = np.array(statistics, dtype=float)
    ok = (b > 0) & (s > 0)
    if ok.sum() < 2:
        return 0.0
    return float(np.polyfit(np.log(b[ok]), np.log(s[ok]), 1)[0])


def _trial_rngs(seed: int, n_bands: int, trials: int) -> list[list[np.random.Generator]]:
    """One generator per (band, trial), split from the master seed."""
    bands = np.random.SeedSequence(seed).spawn(n_bands)
    return [[np.random.default_rng(s) for s in b.spawn(trials)] for b in bands]


def _draw(group, limit, rng, exclude_trivial) -> FourierCoefficients:
    for _ in range(100):
        c = random_coefficients(group, limit, rng, exclude_trivial=exclude_trivial)
        if plancherel_norm(c) > 0:
            return c
    raise DegenerateTrial("could not draw a nonzero test function")


def _ratio_max(ratios) -> float:
    vals = [r for r in ratios if np.isfinite(r)]
    return max(vals) if vals else 0.0


def opnorm_lower_bound(sigma: InvariantSymbol, p: float, band_limits: Sequence, trials: int = 8,
                       seed: int = 0) -> ProbeResult:
    """Max over seeded random ``phi`` of ``||Op(sigma) phi||_p / ||phi||_p`` per band limit."""
    group = sigma.group
    bands = [group.canonical_limit(b) for b in band_limits]
    if max(bands) > sigma.support_limit:
        raise ValueError(f"symbol stored up to {sigma.support_limit}, probe needs {max(bands)}")
    rngs = _trial_rngs(seed, len(bands), trials)
    stats = []
    for b, band_rngs in zip(bands, rngs):
        grid = group.haar_grid(b) if p != 2 else None

        def one(rng, b=b, grid=grid):
            c = _draw(group, b, rng, False)
            return _norm(_coef_apply(sigma, c), p, grid) / _norm(c, p, grid)

        stats.append(_ratio_max(parallel_map(one, band_rngs)))
    return ProbeResult("opnorm", float(p), bands, stats, fit_trend(bands, stats), trials, seed,
                       {"group": str(group)})


@dataclass(frozen=True)
class SubElliptic:
    op: str = "SubLaplacian"


@dataclass(frozen=True)
class XPlusC:
    axis: int = 3
    c: complex = 1.0


def _unit_probes(group, limit, exclude_trivial):
    """Single-entry coefficients ``e_{i0}``, one batch per label: extremal for diagonal symbols.

    The batch for a label holds one probe per row and is supported up to that label only.
    """
    out = []
    for lab in group.labels(limit):
        if exclude_trivial and group.label_size(lab) == 0:
            continue
        d = group.irrep_dim(lab)
        c = FourierCoefficients.zeros(group, group.label_size(lab), batch=(d,))
        block = np.zeros((d, d, d), complex)
        block[np.arange(d), np.arange(d), 0] = 1.0
        c[lab] = block
        out.append(c)
    return out


def _max_ratio(values) -> float:
    flat = np.concatenate([np.atleast_1d(np.asarray(v, float)) for v in values]) if values else np.zeros(0)
    flat = flat[np.isfinite(flat)]
    return float(flat.max()) if flat.size else 0.0


def apriori_ratio(kind: Union[SubElliptic, XPlusC], p: float, band_limits: Sequence, trials: int = 8,
                  seed: int = 0, extremal_limit=None) -> ProbeResult:
    """Ratio of the two sides of an a priori estimate, maximized over trials.

    ``SubElliptic``: ``||u||_{W^{p,r}} / ||L_s u||_p`` with ``r = 1 - |1/p - 1/2|``
    and ``u`` orthogonal to constants.
    ``XPlusC``: ``||f||_p / ||(X + c) f||_{W^{p,r}}`` with ``r = kappa |1/p - 1/2|``.

    Besides the random draws, unit coefficients on each (label, row) up to
    ``extremal_limit`` are tried (all labels at ``p = 2``, spin 2 otherwise).
    """
    if not 1 < p < math.inf:
        raise ValueError("p must satisfy 1 < p < infinity")
    group = SU2()
    bands = [group.canonical_limit(b) for b in band_limits]
    gap = abs(1 / p - 0.5)
    if isinstance(kind, SubElliptic):
        r = 1 - gap
        exclude = True
        sym = named_symbol(NamedOperator(kind.op), max(bands))
        bessel = bessel_multiplier(group, r, max(bands))

        def ratio(c, grid):
            return _norm(c, p, grid, bessel) / _norm(_coef_apply(sym, c), p, grid)
    elif isinstance(kind, XPlusC):
        if exceptional_set(kind.axis, abs(complex(kind.c).imag) + 1).contains(kind.c):
            raise ValueError(f"c = {kind.c} lies in the exceptional set")
        r = kappa(3).kappa * gap
        exclude = False
        sym = named_symbol(NamedOperator("XPlusC", axis=kind.axis, c=kind.c), max(bands))
        bessel = bessel_multiplier(group, r, max(bands))

        def ratio(c, grid):
            return _norm(c, p, grid) / _norm(_coef_apply(sym, c), p, grid, bessel)
    else:
        raise TypeError(f"unknown a priori kind {kind!r}")
    if extremal_limit is None:
        extremal_limit = max(bands) if p == 2 else Fraction(2)
    rngs = _trial_rngs(seed, len(bands), trials)
    stats = []
    for b, band_rngs in zip(bands, rngs):
        grid = group.haar_grid(b) if p != 2 else None
        draws = [_draw(group, b, rng, exclude) for rng in band_rngs]
        probes = list(_unit_probes(group, min(b, group.canonical_limit(extremal_limit)), exclude))
        stats.append(_max_ratio(parallel_map(lambda c: ratio(c, grid), draws + probes)))
    params = {"kind": type(kind).__name__, "r": r}
    if isinstance(kind, XPlusC):
        params.update(axis=kind.axis, c=[complex(kind.c).real, complex(kind.c).imag])
    return ProbeResult("apriori", float(p), bands, stats, fit_trend(bands, stats), trials, seed, params)


def subelliptic_oracle(limit) -> float:
    """``max sqrt(1 + l(l+1)) / (l(l+1) - m^2)`` over ``1/2 <= l <= limit``."""
    best = 0.0
    for two_l in range(1, SU2().two(limit) + 1):
        l = two_l / 2
        for two_m in range(-two_l, two_l + 1, 2):
            m = two_m / 2
            best = max(best, math.sqrt(1 + l * (l + 1)) / (l * (l + 1) - m * m))
    return best


def power_iteration_norm(sigma: InvariantSymbol, band_limit=None, iters: int = 200, seed: int = 0,
                         tol: float = 1e-10) -> float:
    """L^2 operator norm of ``Op(sigma)`` by power iteration on ``A^* A``, run on the grid."""
    group = sigma.group
    band = sigma.support_limit if band_limit is None else group.canonical_limit(band_limit)
    grid = group.haar_grid(band)
    rng = np.random.default_rng(seed)
    adj = sigma.adjoint()
    f = inverse(random_coefficients(group, band, rng), grid)
    est = 0.0
    for _ in range(iters):
        nrm = math.sqrt(float(np.sum(grid.weights * np.abs(f.values) ** 2)))
        f = GridFunction(grid, f.values / nrm, band)
        g = op_apply(sigma, f)
        new = math.sqrt(float(np.sum(grid.weights * np.abs(g.values) ** 2)))
        f = op_apply(adj, g)
        if abs(new - est) <= tol * max(new, 1e-300):
            est = new
            break
        est = new
    return est
