"""Truncated evaluators for the endpoint conditions on entropy profiles.

Every evaluator computes a running value v(T) over truncation depths T and
hands the sequence to :func:`classify`, which applies the trend policy.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy.special import zeta

from .entropy import EntropyProfile


class Verdict(str, Enum):
    HOLDS = "Holds"
    FAILS = "Fails"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class TrendPolicy:
    """Fails: log-log slope of v(T) in T over the last doubling of T >= fail_slope.
    Holds: relative change of v over each of the last two levels < hold_rel."""

    fail_slope: float = 0.1
    hold_rel: float = 1e-3
    extrapolate_tails: bool = True


PAPER_DEFAULTS = TrendPolicy()


@dataclass(frozen=True)
class Exponents:
    d: int
    p: float
    q: float = math.inf

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("d must be >= 2")
        if not self.p > 1:
            raise ValueError("p must exceed 1")
        if self.q < self.p:
            raise ValueError("q must be >= p")

    @property
    def p_conj(self) -> float:
        return self.p / (self.p - 1)

    @property
    def p_d(self) -> float:
        return self.d / (self.d - 1)


@dataclass
class ConditionVerdict:
    condition_id: str
    truncated_value: float
    trend: float
    verdict: Verdict
    witness: object = None
    depths: list = field(default_factory=list)
    values: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["verdict"] = self.verdict.value
        d["witness"] = list(self.witness) if isinstance(self.witness, tuple) else self.witness
        return d

    def report(self) -> dict:
        """The JSON verdict report {condition, value, trend, verdict, witness}."""
        return {"condition": self.condition_id, "value": self.truncated_value, "trend": self.trend,
                "verdict": self.verdict.value,
                "witness": list(self.witness) if isinstance(self.witness, tuple) else self.witness}


def classify(depths, values, policy: TrendPolicy = PAPER_DEFAULTS) -> tuple[float, Verdict]:
    depths = np.asarray(depths, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return math.nan, Verdict.INCONCLUSIVE
    if not np.isfinite(values[-1]):
        return math.inf, Verdict.FAILS
    t_max = depths[-1]
    earlier = np.nonzero(depths <= t_max / 2)[0]
    if earlier.size == 0 or values.size < 3:
        return math.nan, Verdict.INCONCLUSIVE
    i0 = earlier[-1]
    if values[i0] <= 0 or values[-1] <= 0:
        return math.nan, Verdict.INCONCLUSIVE
    trend = math.log(values[-1] / values[i0]) / math.log(t_max / depths[i0])
    if trend >= policy.fail_slope:
        return trend, Verdict.FAILS
    rel = np.abs(np.diff(values[-3:])) / np.abs(values[-3:-1])
    if np.all(rel < policy.hold_rel):
        return trend, Verdict.HOLDS
    return trend, Verdict.INCONCLUSIVE


def tail_estimate(terms: np.ndarray, first_index: int = 0) -> Optional[float]:
    """Extrapolated remainder of a positive series from its last terms.

    Fits log t_n = a + b n - s log n to the last half of the terms (at least
    six). A clearly geometric fit (b < -1e-3) is summed directly; otherwise a
    pure power law is refitted and summed with the Hurwitz zeta function.
    Returns None when the fitted model is not summable.
    """
    terms = np.asarray(terms, dtype=float)
    m = max(6, terms.size // 2)
    if terms.size < 6 or np.any(terms[-m:] <= 0):
        return None
    idx = np.arange(first_index, first_index + terms.size, dtype=float)[-m:] + 1.0
    y = np.log(terms[-m:])
    n_last = idx[-1]
    A = np.vstack([np.ones_like(idx), idx, np.log(idx)]).T
    (a, b, c), *_ = np.linalg.lstsq(A, y, rcond=None)
    if b < -1e-3:
        n = n_last + np.arange(1, int(min(1e6, 60 / -b)) + 2)
        return float(np.sum(np.exp(a + b * n + c * np.log(n))))
    c, a = np.polyfit(np.log(idx), y, 1)
    s = -c
    if s <= 1 + 1e-6:
        return None
    return float(math.exp(a) * zeta(s, n_last + 1))


def _series_values(terms: np.ndarray, policy: TrendPolicy, first_index: int = 0) -> tuple[list, list]:
    """Running partial sums (with extrapolated tails) at each truncation depth."""
    depths, values = [], []
    partial = np.cumsum(terms)
    # a series whose full-depth tail is not summable is reported as raw partial sums
    extrapolate = policy.extrapolate_tails and tail_estimate(terms, first_index) is not None
    for T in range(terms.size):
        v = partial[T]
        if extrapolate and T >= 7:
            tail = tail_estimate(terms[: T + 1], first_index)
            if tail is not None:
                v += tail
        depths.append(T + first_index)
        values.append(float(v))
    return depths, values


# --- weights --------------------------------------------------------------

@dataclass(frozen=True)
class WeightSequence:
    """omega_j = (Z_eps (1 + j)^(1 + eps))^(1/p') with Z_eps = zeta(1 + eps)."""

    p: float
    eps: float

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.p <= 1:
            raise ValueError("p must exceed 1")

    @property
    def p_conj(self) -> float:
        return self.p / (self.p - 1)

    @property
    def Z(self) -> float:
        return float(zeta(1 + self.eps))

    def omega(self, j) -> np.ndarray:
        j = np.asarray(j, dtype=float)
        return (self.Z * (1 + j) ** (1 + self.eps)) ** (1 / self.p_conj)

    def certified_sum(self, J: int = 1000) -> tuple[float, float]:
        """(partial sum of omega_j^-p' for j < J, exact remainder via Hurwitz zeta)."""
        j = np.arange(J)
        partial = math.fsum((self.omega(j) ** (-self.p_conj)).tolist())
        tail = float(zeta(1 + self.eps, J + 1)) / self.Z
        return partial, tail


def make_weights(p: float, eps: float = 0.1) -> WeightSequence:
    w = WeightSequence(p, eps)
    partial, tail = w.certified_sum()
    if partial + tail > 1 + 1e-9:
        raise ArithmeticError(f"weight sum {partial + tail!r} exceeds 1")
    return w


# --- conditions -----------------------------------------------------------

def _periodic_or_ks(prof: EntropyProfile, extra: int) -> range:
    if prof.periodic:
        return range(0, 1)
    k0, k1 = prof.k_window
    return range(k0 - extra, k1 + 1)


def check_Cpq(prof: EntropyProfile, e: Exponents, policy: TrendPolicy = PAPER_DEFAULTS) -> ConditionVerdict:
    """sup_j (sum_n N(E^(j+n), 2^j)^(q/p) 2^(-n(d-1)q/p'))^(1/q)."""
    if math.isinf(e.q):
        raise ValueError("use check_Cp_inf for q = inf")
    d, p, q, pc = e.d, e.p, e.q, e.p_conj
    n = np.arange(prof.n_max + 1)
    best = None
    for j in _periodic_or_ks(prof, prof.n_max):
        Ns = np.array([prof.N(j + int(m), int(m)) for m in n], dtype=float)
        terms = Ns ** (q / p) * 2.0 ** (-n * (d - 1) * q / pc)
        depths, sums = _series_values(terms, policy)
        values = [s ** (1 / q) for s in sums]
        if best is None or values[-1] > best[1][-1]:
            best = (depths, values, j)
    if best is None:
        return ConditionVerdict("cpq", math.nan, math.nan, Verdict.INCONCLUSIVE, None)
    depths, values, j = best
    trend, verdict = classify(depths, values, policy)
    return ConditionVerdict("cpq", values[-1], trend, verdict, (j,), depths, values,
                            {"p": p, "q": q, "d": d})


def check_Cp_inf(prof: EntropyProfile, e: Exponents, policy: TrendPolicy = PAPER_DEFAULTS) -> ConditionVerdict:
    """sup_(k,n) N(E^k, 2^(k-n))^(1/p) 2^(-n(d-1)/p'), as a running sup in n."""
    d, p, pc = e.d, e.p, e.p_conj
    running, witness = 0.0, None
    depths, values = [], []
    for n in range(prof.n_max + 1):
        for k in prof.ks:
            v = prof.N(k, n) ** (1 / p) * 2.0 ** (-n * (d - 1) / pc)
            if v > running:
                running, witness = v, (k, n)
        depths.append(n)
        values.append(running)
    trend, verdict = classify(depths, values, policy)
    return ConditionVerdict("cpinf", running, trend, verdict, witness, depths, values, {"p": p, "d": d})


def check_prop12(prof: EntropyProfile, e: Exponents, w: WeightSequence | None = None,
                 policy: TrendPolicy = PAPER_DEFAULTS,
                 eps_sweep: tuple[float, ...] | None = None) -> ConditionVerdict:
    """A_0^p = sup_k sum_j omega_j^p N(E^(k+j), 2^k) 2^(-j(d-1)p/p')."""
    if eps_sweep:
        results = [check_prop12(prof, e, make_weights(e.p, eps), policy) for eps in eps_sweep]
        order = {Verdict.HOLDS: 0, Verdict.INCONCLUSIVE: 1, Verdict.FAILS: 2}
        best = min(results, key=lambda r: (order[r.verdict], r.truncated_value))
        best.details["sweep"] = [{"eps": r.details["eps"], "A0": r.truncated_value,
                                  "verdict": r.verdict.value} for r in results]
        return best
    w = w or make_weights(e.p)
    d, p, pc = e.d, e.p, e.p_conj
    j = np.arange(prof.n_max + 1)
    weights = w.omega(j) ** p * 2.0 ** (-j * (d - 1) * p / pc)
    best = None
    for k in _periodic_or_ks(prof, prof.n_max):
        Ns = np.array([prof.N(k + int(m), int(m)) for m in j], dtype=float)
        depths, sums = _series_values(weights * Ns, policy)
        values = [s ** (1 / p) for s in sums]
        if best is None or values[-1] > best[1][-1]:
            best = (depths, values, k)
    depths, values, k = best
    trend, verdict = classify(depths, values, policy)
    return ConditionVerdict("prop12", values[-1], trend, verdict, (k,), depths, values,
                            {"p": p, "d": d, "eps": w.eps})


def check_carleson(prof: EntropyProfile, e: Exponents, L_max: int | None = None,
                   policy: TrendPolicy = PAPER_DEFAULTS) -> ConditionVerdict:
    """sup over intervals I of |I|^-1 sum over the tent T(I) of N 2^-n n^(1/(d-1)).

    Periodic profiles: every block row is identical, so the average over I
    is the column sum up to |I| and all integer lengths are scanned.
    Otherwise dyadic lengths at every integer position in the window.
    """
    d = e.d
    L_max = min(L_max or prof.n_max, prof.n_max)
    n = np.arange(1, L_max + 1)
    wn = 2.0 ** (-n) * n ** (1 / (d - 1))
    depths, values = [], []
    running, witness = 0.0, None
    if prof.periodic:
        terms = np.array([prof.N(0, int(m)) for m in n], dtype=float) * wn
        # positive terms: the sup over lengths is the full partial sum, and
        # stability is judged on the tail-extrapolated sums
        depths, values = _series_values(terms, policy, first_index=1)
        running, witness = float(np.sum(terms)), (0, L_max)
    else:
        k0, k1 = prof.k_window
        col = {k: np.array([prof.N(k, int(m)) for m in n], dtype=float) * wn
               for k in range(k0 - L_max, k1 + L_max + 1)}
        L = 1
        while L <= L_max:
            for x in range(k0 - L + 1, k1 + 1):
                v = sum(float(np.sum(col[k][:L])) for k in range(x, x + L)) / L
                if v > running:
                    running, witness = v, (x, L)
            depths.append(L)
            values.append(running)
            L *= 2
    trend, verdict = classify(depths, values, policy)
    return ConditionVerdict("carleson", running, trend, verdict, witness, depths, values,
                            {"d": d, "L_max": L_max})


def check_logbound(prof: EntropyProfile, e: Exponents, variant: str = "eq114",
                   policy: TrendPolicy = PAPER_DEFAULTS, n_min: int = 4) -> ConditionVerdict:
    """sup_(k, n>=4) N 2^-n (n log 2)^(1/(d-1)), times log(n log 2) for eq114."""
    if variant not in ("eq113", "eq114"):
        raise ValueError("variant must be eq113 or eq114")
    d = e.d
    running, witness = 0.0, None
    depths, values = [], []
    for n in range(n_min, prof.n_max + 1):
        L = n * math.log(2)
        factor = 2.0 ** (-n) * L ** (1 / (d - 1))
        if variant == "eq114":
            factor *= math.log(L)
        for k in prof.ks:
            v = prof.N(k, n) * factor
            if v > running:
                running, witness = v, (k, n)
        depths.append(n)
        values.append(running)
    trend, verdict = classify(depths, values, policy)
    return ConditionVerdict(variant, running, trend, verdict, witness, depths, values, {"d": d})


CHECKS = {
    "cpq": check_Cpq,
    "cpinf": check_Cp_inf,
    "prop12": check_prop12,
    "carleson": check_carleson,
    "eq113": lambda prof, e, policy=PAPER_DEFAULTS: check_logbound(prof, e, "eq113", policy),
    "eq114": lambda prof, e, policy=PAPER_DEFAULTS: check_logbound(prof, e, "eq114", policy),
}
