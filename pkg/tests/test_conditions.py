from __future__ import annotations

import math

import numpy as np
import pytest

from maximal_lab import (Exponents, TrendPolicy, Verdict, check_carleson, check_Cp_inf, check_Cpq,
                         check_logbound, check_prop12, make_weights, profile, standard_sets)
from maximal_lab.conditions import classify, tail_estimate

RAW = TrendPolicy(extrapolate_tails=False)


@pytest.fixture(scope="module")
def profiles():
    return {
        "lacunary": profile(standard_sets("lacunary"), 2, 20),
        "full": profile(standard_sets("full"), 2, 20),
        "E1": profile(standard_sets("power", alpha=1.0), 2, 20),
    }


def test_exponents_validation():
    e = Exponents(3, 1.25)
    assert e.p_conj == pytest.approx(5.0, rel=1e-15)
    assert e.p_d == 1.5
    for bad in [(1, 1.5), (2, 1.0), (2, 1.5, 1.2)]:
        with pytest.raises(ValueError):
            Exponents(*bad)


def test_weights_closed_form():
    w = make_weights(1.5, 1.0)
    assert w.Z == pytest.approx(math.pi**2 / 6, rel=1e-14)
    j = np.arange(5)
    assert np.allclose(w.omega(j), (math.pi**2 / 6 * (1 + j) ** 2) ** (1 / 3), rtol=1e-14)
    assert w.omega(0) == pytest.approx((math.pi**2 / 6) ** (1 / 3))
    for p, eps in [(1.2, 0.05), (1.5, 0.1), (1.9, 2.0)]:
        partial, tail = make_weights(p, eps).certified_sum()
        assert abs(partial + tail - 1) < 1e-9
    with pytest.raises(ValueError):
        make_weights(1.5, 0.0)


def test_lacunary_holds_everywhere(profiles):
    prof = profiles["lacunary"]
    e = Exponents(2, 1.4, 1.4)
    v = check_Cpq(prof, e)
    expected = (1 / (1 - 2.0 ** (-(1 / e.p_conj) * 1.4))) ** (1 / 1.4)
    assert v.verdict is Verdict.HOLDS
    assert v.truncated_value == pytest.approx(expected, rel=1e-6)
    assert check_Cp_inf(prof, Exponents(2, 1.4)).truncated_value == 1.0
    assert check_Cp_inf(prof, Exponents(2, 1.4)).verdict is Verdict.HOLDS
    assert check_prop12(prof, Exponents(2, 1.4)).verdict is Verdict.HOLDS
    assert check_carleson(prof, Exponents(3, 1.5)).verdict is Verdict.HOLDS
    for variant in ("eq113", "eq114"):
        # running sup starts at n = 4 and the factor 2^-n L^(1/2) log L decreases, so it is flat
        assert check_logbound(prof, Exponents(3, 1.5), variant).verdict is Verdict.HOLDS


def test_full_interval_fails(profiles):
    prof = profiles["full"]
    assert check_Cpq(prof, Exponents(2, 1.4, 1.4)).verdict is Verdict.FAILS
    assert check_prop12(prof, Exponents(2, 1.4)).verdict is Verdict.FAILS
    assert check_carleson(profile(standard_sets("full"), 3, 20), Exponents(3, 1.5)).verdict is Verdict.FAILS


def test_power_set_cp_inf(profiles):
    prof = profiles["E1"]
    crit = 1 + 1 / (1 * 2)
    assert check_Cp_inf(prof, Exponents(2, crit)).verdict is Verdict.HOLDS
    assert check_Cp_inf(prof, Exponents(2, crit - 0.05)).verdict is Verdict.FAILS


def test_cpq_approaches_cp_inf(profiles):
    prof = profiles["E1"]
    target = check_Cp_inf(prof, Exponents(2, 1.5), RAW).truncated_value
    vals = [check_Cpq(prof, Exponents(2, 1.5, q), RAW).truncated_value for q in (8, 16, 32)]
    assert vals[0] >= vals[1] >= vals[2] >= target * (1 - 1e-12)
    assert vals[2] <= 1.1 * target


def test_cpq_monotone_in_q(profiles):
    prof = profiles["lacunary"]
    for q1, q2 in [(1.4, 2.0), (2.0, 8.0)]:
        a = check_Cpq(prof, Exponents(2, 1.4, q1), RAW)
        b = check_Cpq(prof, Exponents(2, 1.4, q2), RAW)
        assert b.truncated_value <= a.truncated_value
        if a.verdict is Verdict.HOLDS:
            assert b.verdict is Verdict.HOLDS


def test_prop12_reduces_to_weight_series(profiles):
    prof = profiles["lacunary"]
    e = Exponents(2, 1.5)
    w = make_weights(1.5, 0.1)
    v = check_prop12(prof, e, w, RAW)
    direct = math.fsum(w.omega(j) ** 1.5 * 2.0 ** (-j * 1.5 / 3.0) for j in range(prof.n_max + 1))
    assert v.truncated_value ** 1.5 == pytest.approx(direct, rel=1e-9)


def test_prop12_eps_sweep_reports_all(profiles):
    v = check_prop12(profiles["lacunary"], Exponents(2, 1.5), eps_sweep=(0.5, 0.2, 0.1, 0.05))
    assert [r["eps"] for r in v.details["sweep"]] == [0.5, 0.2, 0.1, 0.05]


def test_logbound_log_set():
    prof = profile(standard_sets("log", beta=0.5), 3, 20)
    assert check_logbound(prof, Exponents(3, 1.5), "eq114").verdict is Verdict.FAILS
    with pytest.raises(ValueError):
        check_logbound(prof, Exponents(3, 1.5), "eq999")


def test_determinism(profiles):
    e = Exponents(2, 1.5, 2.0)
    for check in (check_Cpq, check_prop12):
        assert check(profiles["E1"], e).as_dict() == check(profiles["E1"], e).as_dict()


def test_classify_rules():
    depths = list(range(1, 21))
    assert classify(depths, [1.0] * 20)[1] is Verdict.HOLDS
    assert classify(depths, [float(n) for n in depths])[1] is Verdict.FAILS
    wobble = [1.0 + 0.01 * (n % 2) for n in depths]
    assert classify(depths, wobble)[1] is Verdict.INCONCLUSIVE
    assert classify([], [])[1] is Verdict.INCONCLUSIVE
    assert classify([1, 2, 3], [1, 2, math.inf])[1] is Verdict.FAILS


def test_tail_estimate_geometric_and_power():
    n = np.arange(30)
    geo = 0.5**n
    assert tail_estimate(geo) == pytest.approx(0.5**29, rel=1e-6)
    pw = (n + 1.0) ** -3.0
    exact = math.fsum((m + 1.0) ** -3.0 for m in range(30, 200000))
    assert tail_estimate(pw) == pytest.approx(exact, rel=1e-3)
    assert tail_estimate((n + 1.0) ** -0.5) is None
