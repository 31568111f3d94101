from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate, special

from maximal_lab import standard_sets
from maximal_lab.spherical import (FrequencyCutoff, MaximalField, QuadratureError, RadialProfile,
                                   adaptive_integral, ball_indicator_mean, band_ratio, beta0,
                                   lorentz_norm, lp_norm, maximal_field, multiplier_decay,
                                   radial_weights, sphere_hat, sphere_hat_bessel, spherical_mean_radial,
                                   weak_type_ratio_probe)
from oracles import cap_fraction_direct, sphere_mean_mc


@pytest.mark.parametrize("d", [2, 3, 5])
def test_constant_profile_mean_is_one(d):
    one = RadialProfile.constant()
    for t, r in [(0.3, 0.0), (1.0, 0.5), (2.0, 3.0)]:
        assert spherical_mean_radial(one, d, t, r) == pytest.approx(1.0, abs=1e-10)


def test_ball_at_origin_step():
    g = RadialProfile.indicator(1.0)
    assert spherical_mean_radial(g, 3, 0.9, 0.0) == 1.0
    assert spherical_mean_radial(g, 3, 1.1, 0.0) == 0.0


def test_monte_carlo_example():
    g = RadialProfile.indicator(1.0)
    val = spherical_mean_radial(g, 3, 1.0, 1.5)
    mc, se = sphere_mean_mc(g, 3, 1.0, 1.5, 10**6, seed=7)
    assert abs(val - mc) <= 3 * se
    # exact value: the cap cos(theta) >= 1.125 / 1.5 has normalized area (1 - 0.75) / 2
    assert val == pytest.approx(0.125, rel=1e-9)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_cap_measure_matches_direct_integration(d):
    for eps, t, r in [(0.1, 1.0, 1.02), (0.05, 0.98, 1.0), (0.3, 1.2, 1.0)]:
        exact = float(ball_indicator_mean(eps, d, t, r))
        assert exact == pytest.approx(cap_fraction_direct(eps, d, t, r), abs=2e-5)
        quad = spherical_mean_radial(RadialProfile.indicator(eps), d, t, r)
        assert quad == pytest.approx(exact, abs=1e-10)


def test_adaptive_integral_and_error():
    val, err = adaptive_integral(np.sin, 0.0, math.pi)
    assert val == pytest.approx(2.0, abs=1e-12) and err < 1e-8
    with pytest.raises(QuadratureError):
        adaptive_integral(lambda x: (x > 1 / math.pi).astype(float), 0.0, 1.0, rtol=1e-14, atol=0.0)


def test_maximal_field_basics():
    one = RadialProfile.constant()
    r = np.linspace(0.1, 1.0, 5)
    fld = maximal_field(one, 3, standard_sets("lacunary"), 0.05, r, t_range=(0.5, 2.0))
    assert np.allclose(fld.values, 1.0)
    g = RadialProfile.indicator(0.2)
    small = maximal_field(g, 3, standard_sets("explicit", points=[1.0]), 0.01, r)
    big = maximal_field(g, 3, standard_sets("explicit", points=[0.9, 1.0]), 0.01, r)
    assert np.all(big.values >= small.values)
    for i, ri in enumerate(r):
        assert small.values[i] == pytest.approx(spherical_mean_radial(g, 3, 1.0, float(ri)))


def test_lorentz_shell_indicator():
    r = np.linspace(0, 3, 3001)
    w = radial_weights(r, 3)
    vals = ((r >= 1) & (r <= 2)).astype(float)
    v = float(np.sum(w[vals > 0]))
    for p in (1.2, 1.5, 2.0):
        assert lorentz_norm(vals, p, math.inf, weights=w).value == pytest.approx(v ** (1 / p))


def test_lorentz_pp_is_lp():
    r = np.linspace(0, 40, 200001)
    w = radial_weights(r, 2)
    vals = np.exp(-r)
    direct, _ = integrate.quad(lambda s: np.exp(-1.5 * s) * 2 * math.pi * s, 0, np.inf)
    est = lorentz_norm(vals, 1.5, 1.5, weights=w).value
    assert est == pytest.approx(direct ** (1 / 1.5), rel=0.01)
    assert est == pytest.approx(lp_norm(vals, w, 1.5), rel=1e-12)


def test_lorentz_homogeneity_and_ordering():
    rng = np.random.default_rng(3)
    vals, w = rng.exponential(size=500), rng.uniform(0.1, 1, 500)
    base = lorentz_norm(vals, 1.5, 3.0, weights=w).value
    assert lorentz_norm(2.5 * vals, 1.5, 3.0, weights=w).value == pytest.approx(2.5 * base)
    weak = lorentz_norm(vals, 1.5, math.inf, weights=w).value
    strong = lorentz_norm(vals, 1.5, 1.5, weights=w).value
    assert weak <= base <= strong
    assert lorentz_norm(np.zeros(4), 1.5).value == 0.0


def test_maximal_field_lorentz_entry():
    fld = MaximalField(np.array([1.0, 2.0]), np.array([0.5, 0.25]), np.zeros(0), 2, weights=np.ones(2))
    assert lorentz_norm(fld, 2.0).value == pytest.approx(max(0.5, 0.25 * math.sqrt(2)))


def test_sphere_hat_values():
    assert sphere_hat(4, 0.0) == 1.0
    for rho in (1.0, 10.0, 50.0):
        assert sphere_hat(3, rho) == pytest.approx(math.sin(rho) / rho, abs=1e-8)
        assert sphere_hat(2, rho) == pytest.approx(special.j0(rho), abs=1e-8)
        assert sphere_hat_bessel(3, rho) == pytest.approx(math.sin(rho) / rho, abs=1e-12)


def test_sphere_hat_d2_envelope():
    for R in (10.0, 100.0, 1000.0):
        rho = np.linspace(R, 2 * R, 4001)
        peak = max(abs(sphere_hat(2, float(x))) for x in rho[::40])
        env = math.sqrt(2 / (math.pi * R))
        assert env / 2 <= peak <= 2 * env


def test_multiplier_decay_bands():
    rows3 = multiplier_decay(3, range(4, 13))
    assert band_ratio(rows3) < 4
    rows2 = multiplier_decay(2, range(4, 13))
    assert band_ratio(rows2) < 4
    quad = multiplier_decay(3, [4, 5], step=0.05, method="quadrature")
    bess = multiplier_decay(3, [4, 5], step=0.05)
    for a, b in zip(quad, bess):
        assert a["M_j"] == pytest.approx(b["M_j"], abs=1e-8)


def test_second_bump_gives_same_band():
    def linear_bump(xi):
        return np.clip(2.0 - np.abs(np.asarray(xi, dtype=float)), 0.0, 1.0)

    assert band_ratio(multiplier_decay(3, range(4, 13), bump=linear_bump)) < 4


def test_cutoff_telescoping():
    rho = np.random.default_rng(1).uniform(0, 5000, 1000)
    for J in (3, 8, 12):
        total = sum(FrequencyCutoff(j)(rho) for j in range(J + 1))
        assert np.max(np.abs(total - beta0(rho * 2.0**-J))) < 1e-12
    assert beta0(0.5) == 1.0 and beta0(2.5) == 0.0


def test_small_ball_probe_thresholds():
    eps = [1e-2, 1e-3, 1e-4]
    lac = weak_type_ratio_probe(standard_sets("lacunary"), 2, 1.5, eps)
    assert lac["slope"] < 0.02
    # the full interval in the plane has threshold p = d/(d-1) = 2
    for p in (1.3, 1.8):
        assert weak_type_ratio_probe(standard_sets("full"), 2, p, eps)["slope"] > 0.05
    assert weak_type_ratio_probe(standard_sets("full"), 2, 2.2, eps)["slope"] < 0.02
    with pytest.raises(ValueError):
        weak_type_ratio_probe(standard_sets("full"), 2, 1.5, [0.3])
