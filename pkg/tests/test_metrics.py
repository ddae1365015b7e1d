import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from helpers import random_gamma
from tractalign.curves import grid
from tractalign.exceptions import EmptySet, GridMismatch, PairMismatch, TooFewProfiles
from tractalign.metrics import (REPORT_COLUMNS, compare_alignments,
                                directed_hausdorff, hausdorff, profile_variability,
                                warp_profile)


def naive_hausdorff(X, Y):
    X, Y = np.reshape(X, (-1, 3)), np.reshape(Y, (-1, 3))

    def directed(A, B):
        return max(min(np.sqrt(np.sum((a - b) ** 2)) for b in B) for a in A)

    return max(directed(X, Y), directed(Y, X))


points = arrays(np.float64, st.tuples(st.integers(1, 12), st.just(3)),
                elements=st.floats(-100, 100, allow_nan=False, allow_infinity=False))


# -- Hausdorff --------------------------------------------------------------

def test_hausdorff_examples():
    X = np.random.default_rng(0).normal(size=(20, 3))
    assert hausdorff(X, X) == 0
    assert hausdorff([[0, 0, 0]], [[3, 4, 0]]) == 5
    asym_x, asym_y = [[0, 0, 0], [1, 0, 0]], [[0, 0, 0]]
    assert directed_hausdorff(asym_x, asym_y) == 1
    assert directed_hausdorff(asym_y, asym_x) == 0
    assert hausdorff(asym_x, asym_y) == 1


def test_hausdorff_pools_fiber_points():
    bundle = np.random.default_rng(1).normal(size=(4, 10, 3))
    assert hausdorff(bundle, bundle[::-1]) == 0
    assert hausdorff(bundle, bundle.reshape(-1, 3)) == 0


def test_hausdorff_empty():
    with pytest.raises(EmptySet):
        hausdorff(np.zeros((0, 3)), [[0, 0, 0]])
    with pytest.raises(EmptySet):
        hausdorff([[0, 0, 0]], [])


@settings(max_examples=60, deadline=None)
@given(points, points)
def test_hausdorff_matches_naive(X, Y):
    assert hausdorff(X, Y) == naive_hausdorff(X, Y)


@settings(max_examples=60, deadline=None)
@given(points, points, points)
def test_hausdorff_metric_axioms(X, Y, Z):
    assert hausdorff(X, X) == 0
    assert hausdorff(X, Y) == hausdorff(Y, X)
    assert hausdorff(X, Z) <= hausdorff(X, Y) + hausdorff(Y, Z) + 1e-12


# -- profiles ---------------------------------------------------------------

def test_warp_profile_identity():
    p = np.random.default_rng(2).normal(size=100)
    np.testing.assert_allclose(warp_profile(p, grid(100)), p, atol=1e-12)


def test_warp_constant_profile():
    g = random_gamma(np.random.default_rng(3))
    np.testing.assert_allclose(warp_profile(np.full(100, 0.4), g), 0.4, atol=1e-15)


def test_warp_linear_by_square():
    t = grid(100)
    out = warp_profile(t, t ** 2)
    assert np.abs(out - t ** 2).max() < 1e-3
    assert out[0] == 0 and out[-1] == 1


def test_warp_profile_grid_mismatch():
    with pytest.raises(GridMismatch):
        warp_profile(np.zeros(50), grid(100))


def test_variability_examples():
    p = np.random.default_rng(4).normal(size=30)
    assert profile_variability([p, p, p]) == 0
    a, b = 0.3, 0.7
    assert profile_variability([np.full(30, a), np.full(30, b)]) == pytest.approx(
        abs(a - b) / np.sqrt(2), abs=1e-15)


def test_variability_needs_two():
    with pytest.raises(TooFewProfiles):
        profile_variability(np.zeros((1, 10)))


def test_variability_drops_when_shifts_are_undone():
    # Bump profiles with shifted peaks; undoing the shift with the matching
    # warp lines the bumps up.
    t = grid(200)
    rng = np.random.default_rng(5)
    shifts = rng.uniform(-0.1, 0.1, size=8)
    bump = lambda s: 0.3 + 0.4 * np.exp(-((s - 0.5) / 0.08) ** 2)
    before = np.array([bump(t - c) for c in shifts])
    # gamma moves t=0.5 to 0.5 + c, piecewise linear
    after = np.array([warp_profile(p, np.interp(t, [0, 0.5, 1], [0, 0.5 + c, 1]))
                      for p, c in zip(before, shifts)])
    assert profile_variability(after) < 0.5 * profile_variability(before)


# -- report -----------------------------------------------------------------

def _pairs(rng, n):
    return [(f"p{i}", "cst", rng.normal(size=(3, 5, 3)), rng.normal(size=(3, 5, 3)))
            for i in range(n)]


def test_identical_inputs_zero_difference():
    pairs = _pairs(np.random.default_rng(6), 4)
    report = compare_alignments(pairs, pairs)
    assert len(report.rows) == 4
    assert all(r.difference == 0 for r in report.rows)
    s = report.summary()["cst"]
    assert s["n"] == 4 and s["difference_mean"] == 0 and s["difference_sd"] == 0


def test_soft_copies_of_template_are_closer():
    rigid = _pairs(np.random.default_rng(7), 5)
    soft = [(i, n, t.copy(), t) for i, n, _, t in rigid]
    report = compare_alignments(rigid, soft)
    assert all(r.soft_hausdorff == 0 and r.difference < 0 for r in report.rows)


def test_summary_by_tract():
    rng = np.random.default_rng(8)
    rigid = [(f"p{i}", tract, rng.normal(size=(2, 4, 3)), rng.normal(size=(2, 4, 3)))
             for i, tract in enumerate(["a", "b", "a"])]
    report = compare_alignments(rigid, rigid)
    summary = report.summary()
    assert report.tracts() == ["a", "b"]
    assert summary["a"]["n"] == 2 and summary["b"]["n"] == 1
    assert summary["b"]["rigid_sd"] == 0
    vals = [r.rigid_hausdorff for r in report.rows if r.tract_name == "a"]
    assert summary["a"]["rigid_mean"] == pytest.approx(np.mean(vals))
    assert summary["a"]["rigid_sd"] == pytest.approx(np.std(vals, ddof=1))


def test_pair_mismatch():
    pairs = _pairs(np.random.default_rng(9), 3)
    with pytest.raises(PairMismatch):
        compare_alignments(pairs, pairs[:2])
    with pytest.raises(PairMismatch):
        compare_alignments(pairs, pairs[::-1])


def test_csv(tmp_path):
    pairs = _pairs(np.random.default_rng(10), 3)
    soft = [(i, n, t + 0.01, t) for i, n, _, t in pairs]
    report = compare_alignments(pairs, soft)
    report.write_csv(tmp_path / "r.csv")
    with open(tmp_path / "r.csv") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == REPORT_COLUMNS
    assert len(rows) == 4
    for row, r in zip(rows[1:], report.rows):
        assert row[0] == r.pair_id
        assert float(row[2]) == r.rigid_hausdorff
        assert float(row[4]) == r.difference
