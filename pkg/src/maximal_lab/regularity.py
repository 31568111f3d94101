"""Equally spaced sets and the dyadic gap-class decomposition of convex blocks.

A block E^k = {t_1 > t_2 > ...} whose gaps t_nu - t_(nu+1) are monotone splits
into runs J_mu of points whose gap lies in [2^(k-mu), 2^(k-mu+1)). Each run is
equally spaced with width 2^(k-mu) and deviation 2; the endpoints of the runs
form the sparse set D^k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .conditions import (PAPER_DEFAULTS, ConditionVerdict, Exponents, TrendPolicy, Verdict,
                         WeightSequence, classify, make_weights, _series_values)
from .dilation_set import DilationSet, ResolvedSet, block
from .entropy import EntropyProfile, entropy_number

DEVIATION = 2.0
C1_STABILITY = 0.10


class ConvexityError(ValueError):
    """The block is not a monotone sequence with monotone gaps."""

    def __init__(self, triple):
        self.triple = tuple(float(t) for t in triple)
        super().__init__(f"gaps not monotone at points {self.triple}")


def is_equally_spaced(points, width: float, C: float) -> bool:
    """Every point's nearest-neighbour distance lies in [width/C, C*width]."""
    pts = np.sort(np.asarray(points, dtype=float))
    if pts.size == 0:
        raise ValueError("points must be nonempty")
    if pts.size == 1:
        return True
    gaps = np.diff(pts)
    nn = np.minimum(np.concatenate([[np.inf], gaps]), np.concatenate([gaps, [np.inf]]))
    return bool(np.all(nn >= width / C) and np.all(nn <= C * width))


@dataclass
class EquallySpacedSet:
    points: np.ndarray
    width: float
    deviation: float = DEVIATION
    mu: int = 0
    is_tail: bool = False
    tail_interval: tuple[float, float] | None = None

    @property
    def endpoints(self) -> tuple[float, float]:
        if self.tail_interval is not None:
            return self.tail_interval
        return float(self.points.min()), float(self.points.max())

    @property
    def card(self) -> int:
        """Number of points; a tail counts as the width-spaced set filling its interval."""
        if self.tail_interval is not None:
            a, b = self.tail_interval
            return int(math.ceil((b - a) / self.width)) + 1
        return int(self.points.size)

    def check(self) -> bool:
        if self.is_tail:
            return True
        return is_equally_spaced(self.points, self.width, self.deviation)


@dataclass
class EquallySpacedDecomposition:
    k: int
    families: dict[int, list[EquallySpacedSet]]
    uniform_deviation: float = DEVIATION
    certified_resolution: float = 0.0
    n_input_points: int = 0

    @property
    def endpoint_set(self) -> np.ndarray:
        ends = [e for fam in self.families.values() for J in fam for e in J.endpoints]
        return np.unique(np.array(ends, dtype=float))

    def endpoint_resolved(self) -> ResolvedSet:
        pts = self.endpoint_set
        return ResolvedSet(pts, pts.copy(), self.certified_resolution, self.k)

    def cards(self) -> dict[int, int]:
        return {mu: sum(J.card for J in fam) for mu, fam in sorted(self.families.items())}

    def all_points(self) -> np.ndarray:
        pts = [J.points for fam in self.families.values() for J in fam if not J.is_tail]
        return np.sort(np.concatenate(pts)) if pts else np.zeros(0)

    def summary(self) -> list[dict]:
        rows = []
        for mu, fam in sorted(self.families.items()):
            for J in fam:
                a, b = J.endpoints
                rows.append({"mu": mu, "width": J.width, "card": J.card, "a": a, "b": b,
                             "tail": J.is_tail})
        return rows


def check_convex(pts_desc: np.ndarray, rtol: float = 1e-6) -> None:
    """Raise ConvexityError unless the gaps of a decreasing sequence are monotone."""
    if pts_desc.size < 3:
        return
    gaps = pts_desc[:-1] - pts_desc[1:]
    dg = np.diff(gaps)
    tol = rtol * np.maximum(gaps[:-1], gaps[1:])
    if np.all(dg <= tol) or np.all(dg >= -tol):
        return
    # report the first triple breaking the dominant direction
    sign = 1 if np.sum(dg > tol) < np.sum(dg < -tol) else -1
    bad = np.nonzero(sign * dg > tol)[0][0]
    raise ConvexityError(pts_desc[bad: bad + 3])


def decompose_convex(res: ResolvedSet, k: int | None = None) -> EquallySpacedDecomposition:
    """Split a resolved convex block into dyadic gap classes.

    Materialized points plus the top t* of the tail interval are enumerated in
    decreasing order; t_nu joins class mu when 2^(k-mu) <= t_nu - t_(nu+1) < 2^(k-mu+1).
    The tail interval becomes one set at the deepest certified class.
    """
    k = res.k if k is None else k
    tails = res.intervals
    if len(tails) > 1:
        raise ConvexityError(tuple(x for iv in tails[:2] for x in iv)[:3])
    pts = list(res.points.tolist())
    tail = tails[0] if tails else None
    if tail is not None:
        if pts and tail[1] > min(pts):
            raise ConvexityError((tail[0], tail[1], min(pts)))
        pts.append(tail[1])
    desc = np.sort(np.array(pts, dtype=float))[::-1]
    check_convex(desc)
    scale = 2.0**k
    mu_cert = int(math.floor(math.log2(scale / res.certified_resolution))) + 6
    families: dict[int, list[EquallySpacedSet]] = {}

    def add(mu, members, **kw):
        families.setdefault(mu, []).append(
            EquallySpacedSet(np.array(members), scale * 2.0**-mu, DEVIATION, mu, **kw))

    if desc.size:
        gaps = desc[:-1] - desc[1:]
        # 2^(k-mu) <= gap < 2^(k-mu+1)  <=>  mu = ceil(log2(2^k / gap))
        mus = np.ceil(np.log2(scale / gaps)).astype(int) if gaps.size else np.zeros(0, int)
        # guard the ceiling against rounding at exact powers of two
        mus = np.where(scale * 2.0 ** -mus.astype(float) > gaps, mus + 1, mus)
        mus = np.where(scale * 2.0 ** (1 - mus.astype(float)) <= gaps, mus - 1, mus)
        mus = np.minimum(mus, mu_cert)
        # without a tail the last point has no successor and joins the final run
        n_members = gaps.size if tail is not None else desc.size
        classes = np.append(mus, mus[-1] if mus.size else 1) if tail is None else mus
        run_start = 0
        for i in range(1, n_members + 1):
            if i == n_members or classes[i] != classes[run_start]:
                add(int(classes[run_start]), desc[run_start:i])
                run_start = i
    if tail is not None:
        a, b = tail
        mu_tail = max(mu_cert, max(families) if families else 1)
        add(mu_tail, np.array([b]), is_tail=True, tail_interval=(a, b))
    return EquallySpacedDecomposition(k, families, DEVIATION, res.certified_resolution,
                                      int(res.points.size))


def decompose_set(dset: DilationSet, k: int, n_max: int) -> EquallySpacedDecomposition:
    return decompose_convex(block(dset, k, 2.0 ** (k - n_max) / 4), k)


def _decomps_for(prof: EntropyProfile, decomps) -> dict[int, EquallySpacedDecomposition]:
    if isinstance(decomps, EquallySpacedDecomposition):
        return {decomps.k: decomps}
    return dict(decomps)


def _dec_for_block(prof, decs, k):
    if prof.periodic:
        return next(iter(decs.values()))
    return decs.get(k)


def endpoint_entropy(dec: EquallySpacedDecomposition, n_max: int) -> np.ndarray:
    """N(D^k, 2^(k-j)) for j = 0..n_max."""
    res = dec.endpoint_resolved()
    return np.array([entropy_number(res, 2.0 ** (dec.k - j), check=False) for j in range(n_max + 1)])


def C1_series(dec: EquallySpacedDecomposition, prof: EntropyProfile, k: int | None = None) -> list[float]:
    """Running max over mu <= n of card(J_mu) / N(E^k, 2^(k-mu)), for n = 1..n_max."""
    k = dec.k if k is None else k
    running, out = 0.0, []
    for mu in range(1, prof.n_max + 1):
        c = sum(J.card for J in dec.families.get(mu, []) if not J.is_tail)
        running = max(running, c / prof.N(k, mu))
        out.append(running)
    return out


def C1_tilde_series(dec: EquallySpacedDecomposition, prof: EntropyProfile, k: int | None = None) -> list[float]:
    """Running max over n of sum_(mu>=n) 2^-mu card(J_mu) / (2^-n N(E^k, 2^(k-n)))."""
    k = dec.k if k is None else k
    cards = dec.cards()
    mus = np.array(sorted(cards))
    weighted = np.array([2.0 ** -float(m) * cards[m] for m in mus])
    # suffix sums over mu >= n
    suffix = np.cumsum(weighted[::-1])[::-1]
    running, out = 0.0, []
    for n in range(1, prof.n_max + 1):
        i = np.searchsorted(mus, n)
        lhs = float(suffix[i]) if i < mus.size else 0.0
        running = max(running, lhs / (2.0**-n * prof.N(k, n)))
        out.append(running)
    return out


def _stable(series: list[float], rel: float = C1_STABILITY) -> bool:
    if len(series) < 2:
        return False
    half = series[len(series) // 2 - 1]
    return half > 0 and abs(series[-1] / half - 1) < rel


def check_R_p(decomps, e: Exponents, w: WeightSequence | None, prof: EntropyProfile,
              policy: TrendPolicy = PAPER_DEFAULTS) -> ConditionVerdict:
    """Part (b): C_0 from endpoint entropies; part (c): the smallest C_1 in the cardinality bound."""
    decs = _decomps_for(prof, decomps)
    w = w or make_weights(e.p)
    d, p, pc = e.d, e.p, e.p_conj
    j = np.arange(prof.n_max + 1)
    wts = w.omega(j) ** p * 2.0 ** (-j * (d - 1) * p / pc)
    ks = [0] if prof.periodic else list(prof.ks)
    ep_cache = {kk: endpoint_entropy(dec, prof.n_max) for kk, dec in decs.items()}
    best_b = None
    for k in ks:
        Ns = []
        for jj in j:
            kk = 0 if prof.periodic else k + int(jj)
            Ns.append(ep_cache[kk][jj] if kk in ep_cache else 1)
        depths, sums = _series_values(wts * np.array(Ns, dtype=float), policy)
        vals = [s ** (1 / p) for s in sums]
        if best_b is None or vals[-1] > best_b[1][-1]:
            best_b = (depths, vals, k)
    depths, vals, kb = best_b
    trend, vb = classify(depths, vals, policy)
    c1_by_k = {k: C1_series(dec, prof, k) for k, dec in decs.items()}
    c1 = max(c1_by_k.values(), key=lambda s: s[-1])
    c1_ok = _stable(c1)
    verdict = (Verdict.HOLDS if vb == Verdict.HOLDS and c1_ok
               else Verdict.FAILS if vb == Verdict.FAILS else Verdict.INCONCLUSIVE)
    return ConditionVerdict("R_p", vals[-1], trend, verdict, (kb,), depths, vals,
                            {"C0": vals[-1], "C0_verdict": vb.value, "C1": c1[-1], "C1_series": c1,
                             "C1_stable": c1_ok, "p": p, "d": d, "eps": w.eps})


def check_R_tilde(decomps, e: Exponents, w: WeightSequence | None, prof: EntropyProfile,
                  policy: TrendPolicy = PAPER_DEFAULTS) -> ConditionVerdict:
    decs = _decomps_for(prof, decomps)
    series = {k: C1_tilde_series(dec, prof, k) for k, dec in decs.items()}
    kbest = max(series, key=lambda k: series[k][-1])
    s = series[kbest]
    ok = _stable(s)
    depths = list(range(1, prof.n_max + 1))
    trend, _ = classify(depths, s, policy)
    verdict = Verdict.HOLDS if ok else (Verdict.FAILS if trend >= policy.fail_slope else Verdict.INCONCLUSIVE)
    return ConditionVerdict("R_tilde", s[-1], trend, verdict, (kbest,), depths, s,
                            {"C1": s[-1], "C1_stable": ok})


def endpoint_slope(dec: EquallySpacedDecomposition, n_max: int) -> float:
    """Least-squares slope of log2 N(D^k, 2^(k-j)) over the upper 60% of levels."""
    Ns = endpoint_entropy(dec, n_max)
    j = np.arange(max(4, round(0.4 * n_max)), n_max + 1)
    return float(np.polyfit(j, np.log2(Ns[j].astype(float)), 1)[0])
