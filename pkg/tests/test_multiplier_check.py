from __future__ import annotations

import csv
import io
import json
from fractions import Fraction

import numpy as np
import pytest

from noncomm_fourier.differences import first_difference
from noncomm_fourier.group_backend import SU2, Torus, haar_grid
from noncomm_fourier.multiplier_check import (
    InsufficientSupport,
    beta_multi_indices,
    check_class,
    check_hm,
    check_noninvariant,
    difference_profile,
    kappa,
    smallest_integer_above,
    x_derivative_data,
)
from noncomm_fourier.operators_zoo import zoo_symbol
from noncomm_fourier.symbols import FullSymbol, InvariantSymbol

ZERO = 1e-10


@pytest.mark.parametrize("n,k", [(1, 2), (2, 2), (3, 2), (4, 4), (7, 4), (8, 6)])
def test_kappa(n, k):
    assert kappa(n).kappa == k
    assert k > n / 2 and k % 2 == 0 and k - 2 <= n / 2


@pytest.mark.parametrize("bad", [0, -1, 1.5])
def test_kappa_rejects(bad):
    with pytest.raises(ValueError):
        kappa(bad)


def test_smallest_integer_above():
    assert smallest_integer_above(3 / 2) == 2
    assert smallest_integer_above(1.0) == 2
    assert smallest_integer_above(3 / 4) == 1


def test_beta_multi_indices():
    assert beta_multi_indices(3, 1) == [(0, 0, 0), (0, 0, 1), (0, 1, 0), (1, 0, 0)]
    assert len(beta_multi_indices(3, 2)) == 10


# --- check_hm -----------------------------------------------------------------


def test_identity_passes_hm(su2):
    report = check_hm(InvariantSymbol.identity(su2, 6), 4)
    assert report.verdict == "pass" and report.exit_code == 0
    assert report.params == {"kappa": 2}
    assert report.cutoffs == [2, 4]
    for r in report.records:
        if r.order == 0:
            assert r.constant == pytest.approx(1.0, abs=1e-12)
        else:
            assert r.constant <= ZERO
    names = {r.alpha for r in report.records}
    assert "lap_star^1" in names and len(report.records) == 1 + 13 + 1


def test_riesz_is_stable(su2):
    report = check_hm(zoo_symbol("riesz", su2, 10), cutoffs=[4, 8])
    assert report.verdict == "pass"
    assert report.instability < 0.1


def test_growing_fails():
    t3 = Torus(3)
    report = check_hm(zoo_symbol("growing", t3, 18), 16)
    assert report.verdict == "fail" and report.exit_code == 2
    assert report.max_constant() > report.cap == 10.0


def test_insufficient_support(su2):
    with pytest.raises(InsufficientSupport):
        check_hm(InvariantSymbol.identity(su2, 4), 4)


def test_scaling_covariance(su2):
    sigma = zoo_symbol("riesz", su2, 6)
    a = check_hm(sigma, 4, cap=100)
    b = check_hm(sigma * (3 - 4j), 4, cap=100)
    for ra, rb in zip(a.records, b.records):
        for c in ra.constants:
            assert rb.constants[c] == pytest.approx(5 * ra.constants[c], rel=1e-12, abs=1e-12)


def test_monotone_in_cutoff_and_cap(su2):
    sigma = zoo_symbol("growing", su2, 9)
    report = check_hm(sigma, cutoffs=[2, 4, 8])
    for r in report.records:
        vals = [r.constants[str(c)] for c in report.cutoffs]
        assert vals == sorted(vals)
    verdicts = [check_hm(sigma, cutoffs=[4, 8], cap=cap).verdict for cap in (1, 10, 1e6)]
    order = {"fail": 0, "inconclusive": 1, "pass": 2}
    assert [order[v] for v in verdicts] == sorted(order[v] for v in verdicts)
    assert verdicts[0] == "fail"


def test_default_cap_uses_unit_shell(su2):
    sigma = zoo_symbol("growing", su2, 4)
    assert check_hm(sigma, 2).cap == pytest.approx(10.0)
    assert check_hm(sigma * 3, 2).cap == pytest.approx(30.0)


# --- check_class --------------------------------------------------------------


def test_class_identity(su2):
    report = check_class(InvariantSymbol.identity(su2, 6), 0, 1, 2, 4)
    assert report.verdict == "pass"
    assert all(r.constant <= ZERO for r in report.records if r.order > 0)


def test_class_shares_profile(su2):
    sigma = zoo_symbol("sublaplacian-parametrix", su2, 6)
    profile = difference_profile(sigma, 2, 4)
    for rho in (0.5, 1.0):
        a = check_class(profile, -1, rho, 2, cutoffs=[2, 4])
        b = check_class(sigma, -1, rho, 2, cutoffs=[2, 4])
        assert a.to_csv() == b.to_csv()


def test_class_rejects_rho(su2):
    with pytest.raises(ValueError):
        check_class(InvariantSymbol.identity(su2, 3), 0, 1.5, 1, 1)


def test_class_order_zero_with_weight():
    """sup <k>^{-1} |<k>| = 1 exactly for the growing symbol with m = 1."""
    t1 = Torus(1)
    report = check_class(zoo_symbol("growing", t1, 10), 1, 1, 0, 8)
    assert report.records[0].constant == pytest.approx(1.0, abs=1e-12)


def test_report_outputs(su2):
    report = check_hm(InvariantSymbol.identity(su2, 3), 2)
    rows = list(csv.reader(io.StringIO(report.to_csv())))
    assert rows[0] == ["condition", "alpha", "beta", "constant", "argmax_label", "argmax_node", "constant@1", "constant@2"]
    assert len(rows) == len(report.records) + 1
    doc = json.loads(report.to_json())
    assert doc["verdict"] == "pass" and doc["cutoffs"] == ["1", "2"]
    assert "cutoff" in doc["caveat"]


# --- check_noninvariant -------------------------------------------------------


def _half_spin_factor(grid):
    return 2 + SU2().irrep_matrix(Fraction(1, 2), grid.nodes)[:, 0, 0].real


def test_noninvariant_x_independent(su2):
    grid = haar_grid(su2, 1)
    full = FullSymbol.from_invariant(zoo_symbol("riesz", su2, 4), grid)
    report = check_noninvariant(full, 2, cutoffs=[1, 2])
    assert report.params == {"p": 2, "kappa": 2, "l": 2}
    for r in report.records:
        if r.beta != "0,0,0":
            assert r.constant <= ZERO
    assert report.verdict != "fail"  # cutoff 2 is pre-asymptotic, stability may be flagged


def test_noninvariant_matches_finite_differences(su2):
    grid = haar_grid(su2, 1)
    a = _half_spin_factor(grid)
    full = FullSymbol.from_invariant(InvariantSymbol.identity(su2, 3), grid, a)
    report = check_noninvariant(full, 4, cutoffs=[1])
    assert report.params["l"] == 1
    consts = report.constants()

    def a_at(x):
        return 2 + su2.irrep_matrix(Fraction(1, 2), x)[:, 0, 0].real

    h = 1e-5
    for axis, beta in [(1, "1,0,0"), (2, "0,1,0"), (3, "0,0,1")]:
        plus = su2.multiply(grid.nodes, su2.exp_algebra(axis, h))
        minus = su2.multiply(grid.nodes, su2.exp_algebra(axis, -h))
        fd = np.max(np.abs(a_at(plus) - a_at(minus)) / (2 * h))
        assert consts[("dx^beta D^alpha", "id", beta)] == pytest.approx(fd, rel=1e-6)
    assert consts[("dx^beta D^alpha", "id", "0,0,0")] == pytest.approx(np.max(np.abs(a)), rel=1e-12)


def test_x_derivative_commutes_with_difference(su2):
    grid = haar_grid(su2, 1)
    rng = np.random.default_rng(9)
    c = InvariantSymbol(su2, 2, [rng.normal(size=(t + 1, t + 1)) + 0j for t in range(5)])
    full = FullSymbol.from_invariant(c, grid, _half_spin_factor(grid))
    entry = (1, 0, 1)
    one = first_difference(entry, FullSymbol(su2, grid, 2, x_derivative_data(full.data, su2, grid, (1, 0, 0))))
    two = x_derivative_data(first_difference(entry, full).data, su2, grid, (1, 0, 0))
    for a, b in zip(one.data, two):
        assert np.max(np.abs(a - b)) <= 1e-9


def test_noninvariant_errors(su2):
    grid = haar_grid(su2, 1)
    full = FullSymbol.from_invariant(InvariantSymbol.identity(su2, 3), grid)
    for p in (1, np.inf, 0.5):
        with pytest.raises(ValueError):
            check_noninvariant(full, p, 1)
    rough = FullSymbol.from_invariant(InvariantSymbol.identity(su2, 3), grid,
                                      np.random.default_rng(0).normal(size=grid.size))
    with pytest.raises(ValueError, match="band-limited"):
        check_noninvariant(rough, 2, 1)


def test_noninvariant_torus():
    t1 = Torus(1)
    grid = haar_grid(t1, 2)
    a = 2 + np.sin(2 * np.pi * grid.nodes[:, 0])
    full = FullSymbol.from_invariant(zoo_symbol("riesz", t1, 10), grid, a)
    report = check_noninvariant(full, 2, cutoffs=[4, 8])
    assert report.params == {"p": 2, "kappa": 2, "l": 1}
    consts = report.constants()
    # sup |d/dx a| = 2 pi, |riesz| -> 1 on the shell |k| = 8
    assert consts[("dx^beta D^alpha", "id", "1")] == pytest.approx(2 * np.pi, rel=1e-9)
