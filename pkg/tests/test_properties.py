"""Property-based checks of the module invariants."""

from __future__ import annotations

import math

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from maximal_lab import ResolvedSet, Verdict, decompose_convex, entropy_number, is_equally_spaced
from maximal_lab.conditions import classify
from maximal_lab.counterexamples import besicovitch_family, circle_union_fraction
from maximal_lab.spherical import FrequencyCutoff, beta0, lorentz_norm
from oracles import brute_force_cover, circle_fraction_sampled

FAST = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])

point_sets = st.lists(st.floats(1.0, 2.0, allow_nan=False), min_size=0, max_size=10, unique=True)
deltas = st.floats(1e-3, 1.0)


def finite(points, cert=1e-9):
    x = np.array(sorted(points), dtype=float)
    return ResolvedSet(x, x.copy(), cert)


@FAST
@given(point_sets, deltas)
def test_greedy_equals_brute_force(points, delta):
    assert entropy_number(finite(points), delta) == brute_force_cover(points, delta)


@FAST
@given(point_sets, deltas, st.sampled_from([2.0, 4.0]))
def test_scale_covariance(points, delta, c):
    assert entropy_number(finite([c * p for p in points]), c * delta) == entropy_number(finite(points), delta)


@FAST
@given(point_sets, deltas, deltas)
def test_monotone_in_delta(points, d1, d2):
    lo, hi = sorted((d1, d2))
    assert entropy_number(finite(points), lo) >= entropy_number(finite(points), hi)


@FAST
@given(st.lists(st.floats(0.0, 1e4), min_size=1, max_size=50), st.integers(0, 14))
def test_cutoff_telescoping(xs, J):
    rho = np.array(xs)
    total = sum(FrequencyCutoff(j)(rho) for j in range(J + 1))
    assert np.max(np.abs(total - beta0(rho * 2.0**-J))) < 1e-12


values = st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=60)


@FAST
@given(values, st.floats(1.1, 3.0), st.floats(0.1, 10.0))
def test_lorentz_homogeneity(vals, p, c):
    v = np.array(vals)
    w = np.linspace(0.5, 1.5, v.size)
    for q in (p, 2 * p, math.inf):
        a = lorentz_norm(c * v, p, q, weights=w).value
        b = lorentz_norm(v, p, q, weights=w).value
        assert math.isclose(a, c * b, rel_tol=1e-9)


@FAST
@given(values, st.floats(1.1, 3.0), st.floats(1.01, 5.0))
def test_lorentz_ordering(vals, p, qfac):
    v = np.array(vals)
    w = np.linspace(0.5, 1.5, v.size)
    weak = lorentz_norm(v, p, math.inf, weights=w).value
    mid = lorentz_norm(v, p, p * qfac, weights=w).value
    strong = lorentz_norm(v, p, p, weights=w).value
    assert weak <= mid * (1 + 1e-12) and mid <= strong * (1 + 1e-12)


@st.composite
def convex_sequences(draw):
    """Decreasing points above 1 whose gaps decrease: 1 + cumulative sums of a decreasing gap list."""
    n = draw(st.integers(2, 60))
    g0 = draw(st.floats(1e-3, 0.05))
    ratio = draw(st.floats(0.7, 0.99))
    gaps = g0 * ratio ** np.arange(n)
    gaps = gaps[gaps >= 1e-5]  # keep every gap well above the certification scale
    return 1.0 + 0.01 + np.concatenate([[0.0], np.cumsum(gaps[::-1])])


@FAST
@given(convex_sequences())
def test_decomposition_partitions_convex_sequences(pts):
    res = ResolvedSet(np.sort(pts), np.sort(pts), 1e-7, 0)
    dec = decompose_convex(res)
    got = dec.all_points()
    assert np.array_equal(np.sort(got), np.sort(pts))
    n_sets = 0
    for mu, fam in dec.families.items():
        for J in fam:
            n_sets += 1
            assert is_equally_spaced(J.points, J.width, 2.0)
    assert dec.endpoint_set.size <= 2 * n_sets


@FAST
@given(st.lists(st.floats(0.1, 10.0), min_size=4, max_size=30))
def test_classify_invariants(vals):
    running = np.maximum.accumulate(np.array(vals))
    depths = np.arange(1, running.size + 1)
    trend, verdict = classify(depths, running)
    if verdict is Verdict.FAILS:
        assert trend >= 0.1
    if verdict is Verdict.HOLDS:
        rel = np.abs(np.diff(running[-3:])) / running[-3:-1]
        assert np.all(rel < 1e-3)
    assert classify(depths, running) == (trend, verdict)


@settings(max_examples=12, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(0.5, 1.5), st.floats(-3e-3, 3e-3), st.floats(-3e-3, 3e-3))
def test_circle_union_fraction_matches_sampling(phi, t, dx, dy):
    fam = besicovitch_family(3)
    x = np.array([-t * math.cos(phi) + dx, -t * math.sin(phi) + dy])
    exact = circle_union_fraction(fam, x[None, :], np.array([t]))[0]
    sampled = circle_fraction_sampled(lambda px, py: fam.contains(np.column_stack([px, py])).any(axis=1),
                                      x[0], x[1], t, 400_000)
    assert abs(exact - sampled) < 2.5e-5
