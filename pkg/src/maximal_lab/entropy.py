"""Covering numbers N(E^k, 2^(k-n)), entropy profiles and the critical exponent p(E)."""

from __future__ import annotations

import csv
import io
import math
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from .dilation_set import DilationSet, ResolvedSet, block

N_MIN = 4


class CertificationError(ValueError):
    """Requested scale is finer than the set was resolved for."""


def entropy_number(resolved: ResolvedSet, delta: float, check: bool = True) -> int:
    """Minimal number of closed length-``delta`` intervals covering the resolved union.

    Greedy sweep: each cover starts at the leftmost uncovered coordinate.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if check and delta < 4 * resolved.certified_resolution * (1 - 1e-12):
        raise CertificationError(
            f"delta={delta:g} below 4*delta_cert={4 * resolved.certified_resolution:g}; re-resolve")
    if resolved.empty:
        return 1
    lo = resolved.lo.tolist()
    hi = resolved.hi.tolist()
    n_items = len(lo)
    count = 0
    i = 0
    x = lo[0]
    while True:
        if hi[i] - x > delta:
            # whole covers strictly inside a long interval
            m = math.ceil((hi[i] - x) / delta) - 1
            count += m
            x += m * delta
        count += 1
        end = x + delta
        j = bisect_right(hi, end, i)
        if j >= n_items:
            return count
        i = j
        x = end if lo[j] <= end else lo[j]


@dataclass
class EntropyProfile:
    """Table of N(E^k, 2^(k-n)) for k in ``k_window`` and 0 <= n <= n_max.

    For dyadic-periodic sets one row serves every k.
    """

    d: int
    n_max: int
    k_window: tuple[int, int]
    table: np.ndarray  # shape (k1 - k0 + 1, n_max + 1), integer
    periodic: bool = False
    set_info: dict = field(default_factory=dict)

    def N(self, k: int, n: int) -> int:
        if not 0 <= n <= self.n_max:
            raise IndexError(f"level {n} outside 0..{self.n_max}")
        if self.periodic:
            return int(self.table[0, n])
        k0, k1 = self.k_window
        if not k0 <= k <= k1:
            return 1  # outside the window the block is empty
        return int(self.table[k - k0, n])

    def has_block(self, k: int) -> bool:
        return self.periodic or self.k_window[0] <= k <= self.k_window[1]

    @property
    def ks(self) -> range:
        return range(self.k_window[0], self.k_window[1] + 1)

    def rows(self):
        for k in self.ks:
            for n in range(self.n_max + 1):
                yield k, n, self.N(k, n)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "n", "N"])
        for row in self.rows():
            w.writerow(row)
        return buf.getvalue()

    def truncated(self, n_max: int) -> EntropyProfile:
        """Same profile cut at a smaller n_max."""
        if n_max > self.n_max:
            raise ValueError("cannot extend a profile")
        return EntropyProfile(self.d, n_max, self.k_window, self.table[:, : n_max + 1].copy(),
                              self.periodic, dict(self.set_info))


def block_row(dset: DilationSet, k: int, n_max: int) -> tuple[np.ndarray, ResolvedSet]:
    """N(E^k, 2^(k-n)) for n = 0..n_max from a single finest resolution."""
    res = block(dset, k, 2.0 ** (k - n_max) / 4)
    row = np.array([entropy_number(res, 2.0 ** (k - n)) for n in range(n_max + 1)], dtype=np.int64)
    return row, res


def profile(dset: DilationSet, d: int, n_max: int, k_window: tuple[int, int] | None = None) -> EntropyProfile:
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if d < 2:
        raise ValueError("d must be >= 2")
    if dset.periodic:
        row, _ = block_row(dset, 0, n_max)
        return EntropyProfile(d, n_max, (0, 0), row[None, :], True, dset.describe())
    if k_window is None:
        if isinstance(dset.k_range, str):
            raise ValueError("k_window required for non-periodic sets without a k_range")
        k_window = tuple(dset.k_range)
    k0, k1 = k_window
    rows = [block_row(dset, k, n_max)[0] for k in range(k0, k1 + 1)]
    return EntropyProfile(d, n_max, (k0, k1), np.vstack(rows), False, dset.describe())


@dataclass
class CriticalExponentEstimate:
    p_estimate: float
    sup_ratio: float
    slope_fit: float
    residual: float
    converged: bool
    witness: tuple[int, int] | None = None

    def as_dict(self) -> dict:
        return {"p_estimate": self.p_estimate, "sup_ratio": self.sup_ratio,
                "slope_fit": self.slope_fit, "residual": self.residual,
                "converged": self.converged,
                "witness": list(self.witness) if self.witness else None}


def _fit(ns: np.ndarray, logs: np.ndarray) -> tuple[float, float]:
    if ns.size < 2:
        return 0.0, 0.0
    A = np.vstack([ns, np.ones_like(ns)]).T
    coef, *_ = np.linalg.lstsq(A, logs, rcond=None)
    resid = logs - A @ coef
    return float(coef[0]), float(np.sqrt(np.mean(resid**2)))


def critical_exponent(prof: EntropyProfile, n_min: int = N_MIN) -> CriticalExponentEstimate:
    """p(E) = 1 + dim/(d-1), with dim the asymptotic log-slope of N in n.

    ``sup_ratio`` is the raw sup of log2 N / n over n >= n_min; it is biased
    upward by the additive constant in log N, so the estimate uses the slope
    fitted over the upper 60% of the levels; ``converged`` compares it with
    the fit over every level >= n_min.
    """
    d = prof.d
    n_lo = max(n_min, round(0.4 * prof.n_max))
    ns = np.arange(n_lo, prof.n_max + 1, dtype=float)
    if np.all(prof.table == 1):
        return CriticalExponentEstimate(1.0, 0.0, 0.0, 0.0, True, None)
    sup_ratio, witness = 0.0, None
    for k in prof.ks:
        for n in range(max(n_min, 1), prof.n_max + 1):
            r = math.log2(prof.N(k, n)) / n
            if r > sup_ratio:
                sup_ratio, witness = r, (k, n)
    # slope: worst block (largest fitted slope) across the window
    wide = np.arange(min(n_min, n_lo), prof.n_max + 1, dtype=float)
    slope, resid, slope_wide = 0.0, 0.0, 0.0
    for k in prof.ks:
        s, r = _fit(ns, np.log2([prof.N(k, int(n)) for n in ns]))
        if s >= slope:
            slope, resid = s, r
            slope_wide = _fit(wide, np.log2([prof.N(k, int(n)) for n in wide]))[0]
    slope = max(slope, 0.0)
    converged = abs(slope - slope_wide) < 0.05
    p = 1.0 + slope / (d - 1)
    return CriticalExponentEstimate(p, sup_ratio, slope, resid, converged, witness)
