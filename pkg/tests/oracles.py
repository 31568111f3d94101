"""Independent reference implementations used only by the tests."""

from __future__ import annotations

import itertools
import math

import numpy as np


def brute_force_cover(points, delta: float) -> int:
    """Smallest number of closed length-delta intervals covering a finite set, by exhaustion.

    An optimal cover can always slide each interval right until its left end is a
    point, so it suffices to try every subset of points as left ends.
    """
    pts = sorted(set(float(p) for p in points))
    if not pts:
        return 1
    for size in range(1, len(pts) + 1):
        for starts in itertools.combinations(pts, size):
            if all(any(s <= x <= s + delta for s in starts) for x in pts):
                return size
    return len(pts)


def dp_cover(points, delta: float) -> int:
    """Minimal cover of a finite set by dynamic programming over sorted points (O(n^2) window scan)."""
    x = np.unique(np.asarray(points, dtype=float))
    if x.size == 0:
        return 1
    best = np.zeros(x.size + 1, dtype=np.int64)
    j = 0
    for i in range(1, x.size + 1):
        # the last cover holds points j..i-1; the leftmost admissible j minimizes best[j]
        while x[i - 1] - x[j] > delta:
            j += 1
        best[i] = int(best[j:i].min()) + 1
    return int(best[-1])


def discretize(lo, hi, step: float) -> np.ndarray:
    """Points of the items [lo_i, hi_i], with intervals sampled at spacing <= step."""
    out = []
    for a, b in zip(lo, hi):
        m = max(1, int(math.ceil((b - a) / step)))
        out.append(np.linspace(a, b, m + 1) if b > a else np.array([a]))
    return np.concatenate(out) if out else np.zeros(0)


def sphere_mean_mc(g, d: int, t: float, r: float, n: int, seed: int) -> tuple[float, float]:
    """Average of g(|r e1 + t w|) over uniform w on the sphere, with its standard error."""
    rng = np.random.default_rng(seed)
    w = rng.standard_normal((n, d))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    x = t * w
    x[:, 0] += r
    v = g(np.linalg.norm(x, axis=1))
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(n))


def cap_fraction_direct(eps: float, d: int, t: float, r: float, m: int = 200_001) -> float:
    """Normalized sphere measure of {|r e1 + t w| <= eps} by direct integration in theta."""
    th = np.linspace(0.0, math.pi, m)
    dens = np.sin(th) ** (d - 2)
    inside = (r * r + t * t - 2 * r * t * np.cos(th)) <= eps * eps
    return float(np.trapezoid(dens * inside, th) / np.trapezoid(dens, th))


def circle_fraction_sampled(inside, cx: float, cy: float, t: float, m: int = 2_000_000) -> float:
    """Fraction of the circle of radius t about (cx, cy) on which inside(x, y) holds."""
    phi = (np.arange(m) + 0.5) * (2 * math.pi / m)
    return float(np.mean(inside(cx + t * np.cos(phi), cy + t * np.sin(phi))))
