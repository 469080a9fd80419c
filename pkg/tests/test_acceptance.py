"""Acceptance suite: one PASS/FAIL line per criterion, printed even when pytest captures output."""

from __future__ import annotations

import os
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from noncomm_fourier.differences import difference_apply, first_difference, laplace_difference, t3_second_difference
from noncomm_fourier.fourier import GridFunction, forward, grid_function, grid_l2_norm, inverse, plancherel_norm, random_coefficients
from noncomm_fourier.group_backend import SU2, Torus, haar_grid
from noncomm_fourier.lp_probe import SubElliptic, apriori_ratio, subelliptic_oracle
from noncomm_fourier.multiplier_check import check_class, check_hm, difference_profile, kappa
from noncomm_fourier.operators_zoo import NamedOperator, exceptional_set, grid_realization, invert_x_plus_c, named_symbol, zoo_symbol
from noncomm_fourier.symbols import FullSymbol, InvariantSymbol, op_apply, symbol_of

B = 8
SEED = 20240611
ZERO = 1e-10


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
        assert ok, detail

    return emit


def corpus(group, count=50):
    rng = np.random.default_rng(SEED)
    return [random_coefficients(group, B, rng) for _ in range(count)]


def rel(a, b):
    return float(np.max(np.abs(a - b))) / max(float(np.max(np.abs(b))), 1e-300)


def test_criterion_01_round_trip(verdict):
    start = time.perf_counter()
    worst = 0.0
    for group in (SU2(), Torus(3)):
        grid = haar_grid(group, B)
        for c in corpus(group):
            f = inverse(c, grid)
            worst = max(worst, (forward(f) - c).max_abs() / c.max_abs())
            g = GridFunction(grid, f.values, B)
            worst = max(worst, rel(inverse(forward(g), grid).values, g.values))
    elapsed = time.perf_counter() - start
    verdict(1, worst <= 1e-9 and elapsed < 30,
            f"worst relative round-trip error {worst:.2e} (tol 1e-9), {elapsed:.1f}s (limit 30s)")


def test_criterion_02_plancherel(verdict):
    worst = 0.0
    for group in (SU2(), Torus(3)):
        grid = haar_grid(group, B)
        for c in corpus(group):
            a, b = plancherel_norm(c), grid_l2_norm(inverse(c, grid))
            worst = max(worst, abs(a - b) / b)
    verdict(2, worst <= 1e-9, f"worst relative |l2 - L2| {worst:.2e} (tol 1e-9)")


def _su2_orthogonality():
    su2 = SU2()
    grid = haar_grid(su2, B)
    cols, dims = [], []
    for lab in su2.labels(B):
        d = lab.dim
        cols.append(su2.irrep_matrix(lab, grid.nodes).reshape(grid.size, d * d))
        dims += [d] * (d * d)
    v = np.concatenate(cols, axis=1)
    gram = (np.conj(v).T * grid.weights) @ v
    expected = np.diag(1.0 / np.array(dims, float))
    orth = float(np.max(np.abs(gram - expected)))
    unit = 0.0
    for lab in su2.labels(B):
        u = su2.irrep_matrix(lab, grid.nodes)
        unit = max(unit, float(np.max(np.abs(u @ np.conj(np.swapaxes(u, -1, -2)) - np.eye(lab.dim)))))
    return orth, unit


def _torus_orthogonality():
    """Integrals of e^{2 pi i m.x} for every difference m = k - k' of labels with |k|_inf <= B."""
    t3 = Torus(3)
    grid = haar_grid(t3, B)
    m = np.arange(-2 * B, 2 * B + 1)
    e = [np.exp(2j * np.pi * np.outer(m, grid.nodes[:, j])) for j in range(3)]
    gram = np.einsum("ap,bp,cp,p->abc", e[0], e[1], e[2], grid.weights, optimize=True)
    expected = np.zeros_like(gram)
    expected[2 * B, 2 * B, 2 * B] = 1.0
    orth = float(np.max(np.abs(gram - expected)))
    ks = np.stack(np.meshgrid(*[np.arange(-B, B + 1)] * 3, indexing="ij"), -1).reshape(-1, 3)
    vals = np.exp(2j * np.pi * grid.nodes[:200] @ ks.T)
    unit = float(np.max(np.abs(np.abs(vals) - 1.0)))
    return orth, unit


def test_criterion_03_orthogonality_unitarity(verdict):
    o1, u1 = _su2_orthogonality()
    o2, u2 = _torus_orthogonality()
    ok = max(o1, o2) <= 1e-10 and max(u1, u2) <= 1e-12
    verdict(3, ok, f"orthogonality SU(2) {o1:.1e} / T^3 {o2:.1e} (tol 1e-10); "
                   f"unitarity SU(2) {u1:.1e} / T^3 {u2:.1e} (tol 1e-12)")


def test_criterion_04_torus_closed_forms(verdict):
    rng = np.random.default_rng(SEED)
    worst_apply, lap_exact, t3_exact = 0.0, True, True
    for n in (1, 2, 3):
        t = Torus(n)
        c = random_coefficients(t, 4, rng)
        sigma = InvariantSymbol(t, 4, c.data)
        for j in range(n):
            for sign in (1, -1):
                k0 = [0] * n
                k0[j] = sign
                q = grid_function(t, 1, lambda x, k0=k0: np.exp(2j * np.pi * x @ np.array(k0, float)) - 1)
                got = difference_apply(q, sigma, order=1)
                shift = t.shift(sigma.data, tuple(k0)) - t.resize(sigma.data, 5)
                worst_apply = max(worst_apply, float(np.max(np.abs(got.data - shift))) / sigma.max_abs())
                assert np.array_equal(first_difference((tuple(k0), 0, 0), sigma).data, shift)
        lap = laplace_difference(sigma).data
        pairs = 0.0
        for j in range(n):
            e = np.eye(n, dtype=int)[j]
            pairs = pairs + (t.shift(sigma.data, tuple(-e)) + t.shift(sigma.data, tuple(e)))
        formula = 2 * n * t.resize(sigma.data, 5) - pairs
        lap_exact &= bool(np.array_equal(lap, formula))
        if n == 3:
            t3_exact = bool(np.array_equal(t3_second_difference(sigma).data, lap / 6))
    ok = worst_apply <= 1e-12 and lap_exact and t3_exact
    verdict(4, ok, f"difference_apply vs shifts {worst_apply:.1e} (tol 1e-12); laplace formula exact={lap_exact}; "
                   f"t3 = lap/6 exact={t3_exact}")


def test_criterion_05_kappa(verdict):
    got = {n: kappa(n).kappa for n in (1, 3, 8)}
    verdict(5, got == {1: 2, 3: 2, 8: 6}, f"kappa(1), kappa(3), kappa(8) = {got[1]}, {got[3]}, {got[8]}")


def test_criterion_06_exceptional_set(verdict):
    exc = exceptional_set(3, 4)
    expected = tuple(Fraction(k, 2) for k in range(-8, 9))
    su2 = SU2()
    grid = haar_grid(su2, B)
    inv = invert_x_plus_c(3, 1.0, B)
    x_plus_1 = grid_realization(NamedOperator("XPlusC", axis=3, c=1.0))
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(5):
        f = GridFunction(grid, inverse(random_coefficients(su2, B, rng), grid).values, B)
        worst = max(worst, rel(x_plus_1(op_apply(inv, f)).values, f.values))
    ok = exc.members == expected and worst <= 1e-9
    verdict(6, ok, f"exceptional set in |Im c| <= 4 has {len(exc.members)} members, equal to i/2 Z: "
                   f"{exc.members == expected}; (X+1) inverse residual {worst:.1e} (tol 1e-9)")


def test_criterion_07_parametrix_class(verdict):
    start = time.perf_counter()
    sigma = zoo_symbol("sublaplacian-parametrix", SU2(), 32 + 2)
    profile = difference_profile(sigma, 2, 32)
    half = check_class(profile, -1, 0.5, 2, cutoffs=[8, 16, 32])
    one = check_class(profile, -1, 1.0, 2, cutoffs=[8, 16, 32])
    elapsed = time.perf_counter() - start
    finite = all(np.isfinite(r.constant) for r in half.records)
    floor = ZERO * max(1.0, max(r.constant for r in half.records if r.order == 0))

    def variation(rec):
        hi, lo = rec.constants["32"], rec.constants["16"]
        return abs(hi - lo) / hi if hi > floor else 0.0

    worst = max(variation(r) for r in half.records)
    growth = max(r.constants["32"] / r.constants["16"] - 1 for r in one.records if r.constants["16"] > floor)
    ok = finite and worst < 0.10 and growth > 0.5 and elapsed < 300
    verdict(7, ok, f"rho=1/2 max variation 16->32 {worst:.3f} (limit 0.10, verdict {half.verdict}); "
                   f"rho=1 max growth {growth:.3f} (needs > 0.5); {elapsed:.1f}s (limit 300s)")


def test_criterion_08_hm(verdict):
    su2 = SU2()
    ident = check_hm(InvariantSymbol.identity(su2, 16 + 2), 16)
    diff_max = max(r.constant for r in ident.records if r.order > 0)
    riesz = check_hm(zoo_symbol("riesz", su2, 32 + 2), cutoffs=[8, 16, 32])
    floor = ZERO * max(1.0, max(r.constant for r in riesz.records if r.order == 0))
    var = 0.0
    for r in riesz.records:
        vals = [r.constants[c] for c in ("8", "16", "32")]
        for lo, hi in zip(vals, vals[1:]):
            if hi > floor:
                var = max(var, abs(hi - lo) / hi)
    growing = check_hm(zoo_symbol("growing", su2, 32 + 2), cutoffs=[16, 32])
    c16 = max(r.constants["16"] for r in growing.records)
    c32 = max(r.constants["32"] for r in growing.records)
    ok = (ident.verdict == "pass" and diff_max <= ZERO and var < 0.10 and growing.verdict == "fail"
          and c32 / c16 > 1.8)
    verdict(8, ok, f"identity {ident.verdict}, max difference constant {diff_max:.1e} (zero <= 1e-10); "
                   f"Riesz max variation over 8/16/32 {var:.3f} (limit 0.10); growing {growing.verdict} at 32 "
                   f"(constant {c32:.1f} vs cap {growing.cap:g}, x{c32 / c16:.2f} from 16)")


def test_criterion_09_subelliptic_probe(verdict):
    res = apriori_ratio(SubElliptic(), 2, [8, 16, 32], trials=8, seed=0)
    err = max(abs(s - subelliptic_oracle(b)) for b, s in zip(res.band_limits, res.statistics))
    s = res.statistics
    nonincreasing = all(b <= a + 1e-12 for a, b in zip(s, s[1:]))
    stable = abs(s[-1] - s[-2]) <= 1e-12 * s[-1]
    ok = res.params["r"] == 1 and err <= 1e-12 and nonincreasing and stable
    verdict(9, ok, f"statistics {[round(v, 15) for v in s]} vs oracle sqrt(7); max error {err:.1e} (tol 1e-12); "
                   f"nonincreasing={nonincreasing}, stable={stable}")


def test_criterion_10_quantization(verdict):
    rng = np.random.default_rng(SEED)
    su2 = SU2()
    worst = 0.0
    for group, limit, count in ((su2, 4, 10), (Torus(1), 6, 3), (Torus(2), 4, 3), (Torus(3), 3, 4)):
        for _ in range(count):
            c = random_coefficients(group, limit, rng)
            sigma = InvariantSymbol(group, limit, c.data)
            back = symbol_of(lambda f: op_apply(sigma, f), group, limit)
            worst = max(worst, (back - sigma).max_abs() / sigma.max_abs())
    # x-dependent symbols a(x) sigma(xi), a band-limited to spin 1/2, on a grid one half step wider
    grid = haar_grid(su2, Fraction(5, 2))
    for _ in range(5):
        c = random_coefficients(su2, 2, rng)
        coef = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        a = 1 + np.einsum("pij,ij->p", su2.irrep_matrix(Fraction(1, 2), grid.nodes), coef)
        full = FullSymbol.from_invariant(InvariantSymbol(su2, 2, c.data), grid, a)
        back = symbol_of(lambda f: op_apply(full, f), su2, 2, grid)
        scale = max(float(np.max(np.abs(b))) for b in full.data)
        worst = max(worst, max(float(np.max(np.abs(x - y))) for x, y in zip(back.data, full.data)) / scale)
    named = 0.0
    for kind in ("VectorField", "Laplacian", "SubLaplacian", "Heat"):
        op = NamedOperator(kind)
        expected = named_symbol(op, 4)
        got = symbol_of(grid_realization(op), su2, 4)
        named = max(named, (got - expected).max_abs() / expected.max_abs())
    ok = worst <= 1e-9 and named <= 1e-9
    verdict(10, ok, f"25 random symbols recovered to {worst:.1e}; named D3/L/Ls/H vs grid on l <= 4 {named:.1e} "
                    f"(tol 1e-9)")


RUNS = [
    ("check-class", ["check", "class", "--zoo", "sublaplacian-parametrix", "--m", "-1", "--rho", "0.5",
                     "--cutoffs", "8,16,32"], "check-class.csv"),
    ("check-hm", ["check", "hm", "--zoo", "riesz", "--cutoffs", "8,16,32"], "check-hm.csv"),
    ("probe-apriori", ["probe", "apriori", "--kind", "subelliptic", "--p", "2", "--bands", "8,16,32",
                       "--seed", "7"], "probe-apriori.csv"),
    ("probe-opnorm", ["probe", "opnorm", "--zoo", "riesz", "--p", "3", "--bands", "4,8", "--seed", "7"],
     "probe-opnorm.csv"),
]


def test_criterion_11_determinism(verdict, tmp_path):
    mismatched = []
    for name, argv, csv_name in RUNS:
        outputs = []
        for threads in ("1", "4"):
            out_dir = tmp_path / f"{name}-{threads}"
            env = dict(os.environ, NONCOMM_FOURIER_THREADS=threads)
            proc = subprocess.run([sys.executable, "-m", "noncomm_fourier", *argv, "--out-dir", str(out_dir)],
                                  env=env, capture_output=True, text=True)
            assert proc.returncode in (0, 2, 3), proc.stderr
            outputs.append((out_dir / csv_name).read_bytes())
        if outputs[0] != outputs[1]:
            mismatched.append(name)
    verdict(11, not mismatched, f"{len(RUNS)} CLI runs byte-identical between 1 and 4 threads; "
                                f"mismatches: {mismatched or 'none'}")
