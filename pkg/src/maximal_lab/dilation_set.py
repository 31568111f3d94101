"""Dilation sets E in (0, inf) and their dyadic blocks E^k = E & [2^k, 2^(k+1)).

A set is stored in one of four representations. ``block`` turns any of them
into a :class:`ResolvedSet`: a finite sorted list of points and closed
intervals that is faithful for covering counts at scales >= 4 * delta_cert.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np

# materialized points are kept while their gap to the next point is at least
# this fraction of delta_cert; the remainder collapses into one tail interval
GAP_FRACTION = 1.0 / 64.0
MAX_MATERIALIZED = 20_000_000


class ResolutionError(ValueError):
    """A set could not be resolved to the requested certified resolution."""


@dataclass(frozen=True)
class ResolvedSet:
    """Sorted, pairwise disjoint items inside one dyadic block.

    ``lo[i] == hi[i]`` marks a point. Interval items are either cells that
    meet the true set (IFS cells, generator tails) or subsets of its closure.
    """

    lo: np.ndarray
    hi: np.ndarray
    certified_resolution: float
    k: int = 0

    def __post_init__(self):
        if self.lo.shape != self.hi.shape:
            raise ValueError("lo/hi shape mismatch")
        if self.certified_resolution <= 0:
            raise ValueError("certified_resolution must be positive")

    def __len__(self) -> int:
        return int(self.lo.size)

    @property
    def empty(self) -> bool:
        return self.lo.size == 0

    @property
    def points(self) -> np.ndarray:
        return self.lo[self.lo == self.hi]

    @property
    def intervals(self) -> list[tuple[float, float]]:
        mask = self.hi > self.lo
        return list(zip(self.lo[mask].tolist(), self.hi[mask].tolist()))

    def scaled(self, c: float, k: int | None = None) -> ResolvedSet:
        return ResolvedSet(self.lo * c, self.hi * c, self.certified_resolution * c,
                           self.k if k is None else k)

    def contains(self, t: float, slack: float = 0.0) -> bool:
        i = np.searchsorted(self.hi, t - slack, side="left")
        return bool(i < self.lo.size and self.lo[i] - slack <= t)

    def sample_points(self) -> np.ndarray:
        """Point set used for sups over E: every point plus both ends of every interval."""
        return np.unique(np.concatenate([self.lo, self.hi]))


def _make_resolved(items: list[tuple[float, float]], delta_cert: float, k: int) -> ResolvedSet:
    if not items:
        z = np.zeros(0)
        return ResolvedSet(z, z.copy(), delta_cert, k)
    arr = np.array(sorted(items), dtype=float)
    lo, hi = arr[:, 0], arr[:, 1]
    # merge touching/overlapping items
    keep_lo, keep_hi = [lo[0]], [hi[0]]
    for a, b in zip(lo[1:], hi[1:]):
        if a <= keep_hi[-1]:
            keep_hi[-1] = max(keep_hi[-1], b)
        else:
            keep_lo.append(a)
            keep_hi.append(b)
    return ResolvedSet(np.array(keep_lo), np.array(keep_hi), delta_cert, k)


@dataclass(frozen=True)
class ExplicitFinite:
    points: tuple[float, ...]

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        if any(p <= 0 for p in pts):
            raise ValueError("points must be positive")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError("points must be strictly increasing")
        object.__setattr__(self, "points", pts)


@dataclass(frozen=True)
class MonotoneGenerator:
    """Strictly decreasing t_nu -> limit, nu = nu_start, nu_start + 1, ...

    ``tail_index_fn(delta)`` returns the smallest nu with t_nu - limit < delta.
    ``limit_in_set`` says whether the limit itself belongs to the set.
    """

    point_fn: Callable[[np.ndarray], np.ndarray]
    limit: float
    tail_index_fn: Callable[[float], int]
    nu_start: int = 1
    limit_in_set: bool = True
    name: str = "generator"

    def tail_index(self, delta: float) -> int:
        nu = max(int(self.tail_index_fn(delta)), self.nu_start)
        if nu >= 2**53:
            raise ResolutionError(f"{self.name}: tail index beyond float range at delta={delta:g}")
        # certify against float evaluation: t_nu - L < delta <= t_{nu-1} - L
        while nu > self.nu_start and self._dist(nu - 1) < delta:
            nu -= 1
        steps = 0
        while self._dist(nu) >= delta:
            nu += 1
            steps += 1
            if steps > 10_000:
                raise ResolutionError(f"{self.name}: tail_index_fn does not converge at delta={delta:g}")
        return nu

    def _dist(self, nu: int) -> float:
        return float(self.point_fn(np.array([float(nu)]))[0] - self.limit)

    def _gap(self, nu: int) -> float:
        t = self.point_fn(np.array([float(nu), float(nu + 1)]))
        return float(t[0] - t[1])

    def gap_index(self, eps: float, upper: int) -> int:
        """Smallest nu in [nu_start, upper] with t_nu - t_{nu+1} < eps (gaps decrease)."""
        lo, hi = self.nu_start, upper
        if self._gap(lo) < eps:
            return lo
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self._gap(mid) < eps:
                hi = mid
            else:
                lo = mid
        return hi


@dataclass(frozen=True)
class CantorIFS:
    """Attractor of x -> a + (b - a) * (offset + ratio * (x - a) / (b - a))."""

    base: tuple[float, float]
    ratio: float
    offsets: tuple[float, ...]
    depth: int | None = None

    def __post_init__(self):
        a, b = self.base
        if not (0 < a < b):
            raise ValueError("base must be a positive interval")
        if not (0 < self.ratio <= 0.5):
            raise ValueError("ratio must lie in (0, 1/2]")
        offs = tuple(sorted(float(o) for o in self.offsets))
        if not offs or offs[0] < 0 or offs[-1] > 1 - self.ratio + 1e-12:
            raise ValueError("offsets must lie in [0, 1 - ratio]")
        if any(o2 - o1 < self.ratio - 1e-12 for o1, o2 in zip(offs, offs[1:])):
            raise ValueError("first-level cells overlap")
        object.__setattr__(self, "offsets", offs)

    @property
    def tiles_base(self) -> bool:
        """True when the cells tile the base interval, i.e. the attractor is all of it."""
        m = len(self.offsets)
        return (abs(m * self.ratio - 1) < 1e-12
                and all(abs(o - i * self.ratio) < 1e-12 for i, o in enumerate(self.offsets)))

    def depth_for(self, delta_cert: float) -> int:
        a, b = self.base
        m = 0
        while self.ratio**m * (b - a) >= delta_cert / 4:
            m += 1
        return m

    def cells(self, depth: int) -> np.ndarray:
        """Left ends of the depth-m cells, as fractions of the base length."""
        left = np.zeros(1)
        offs = np.asarray(self.offsets)
        for level in range(depth):
            left = (left[:, None] + offs[None, :] * self.ratio**level).ravel()
        return np.sort(left)

    def dimension(self) -> float:
        return math.log(len(self.offsets)) / math.log(1 / self.ratio)


@dataclass(frozen=True)
class DyadicPeriodic:
    """E = union over k of 2^k * base, with base contained in [1, 2)."""

    base: Union[ExplicitFinite, MonotoneGenerator, CantorIFS]


Representation = Union[ExplicitFinite, MonotoneGenerator, CantorIFS, DyadicPeriodic]


@dataclass(frozen=True)
class DilationSet:
    representation: Representation
    k_range: tuple[int, int] | str = "all"
    name: str = "custom"
    params: dict = field(default_factory=dict, compare=False)

    @property
    def periodic(self) -> bool:
        return isinstance(self.representation, DyadicPeriodic)

    def describe(self) -> dict:
        return {"name": self.name, **self.params,
                "k_range": self.k_range if isinstance(self.k_range, str) else list(self.k_range)}


def _resolve_finite(points: Sequence[float], k: int, delta_cert: float) -> ResolvedSet:
    lo, hi = 2.0**k, 2.0 ** (k + 1)
    pts = [p for p in points if lo <= p < hi]
    return _make_resolved([(p, p) for p in pts], delta_cert, k)


def _resolve_generator(gen: MonotoneGenerator, delta_cert: float, k: int) -> ResolvedSet:
    eps = delta_cert / 4
    raw = min(max(int(gen.tail_index_fn(eps)), gen.nu_start), 2**52)
    nu_star = gen.gap_index(delta_cert * GAP_FRACTION, raw)
    if nu_star >= raw:
        nu_star = gen.tail_index(eps)
    count = nu_star - gen.nu_start
    if count > MAX_MATERIALIZED:
        raise ResolutionError(f"{gen.name}: {count} points needed at delta_cert={delta_cert:g}")
    nus = np.arange(gen.nu_start, nu_star, dtype=float)
    pts = gen.point_fn(nus) if nus.size else np.zeros(0)
    t_star = float(gen.point_fn(np.array([float(nu_star)]))[0])
    lo_edge, hi_edge = 2.0**k, 2.0 ** (k + 1)
    items = [(p, p) for p in pts.tolist() if lo_edge <= p < hi_edge]
    tail_lo = gen.limit
    if lo_edge <= t_star < hi_edge:
        items.append((max(tail_lo, lo_edge), t_star))
    return _make_resolved(items, delta_cert, k)


def _resolve_ifs(ifs: CantorIFS, delta_cert: float, k: int) -> ResolvedSet:
    a, b = ifs.base
    if ifs.tiles_base:
        items = [(a, b)]
    else:
        depth = ifs.depth if ifs.depth is not None else ifs.depth_for(delta_cert)
        cell = ifs.ratio**depth * (b - a)
        if ifs.depth is not None and cell >= delta_cert / 4:
            raise ResolutionError(
                f"IFS depth {depth} gives cells of length {cell:g}; need < {delta_cert / 4:g}")
        if len(ifs.offsets) ** depth > MAX_MATERIALIZED:
            raise ResolutionError(f"IFS depth {depth} too large")
        left = a + (b - a) * ifs.cells(depth)
        items = list(zip(left.tolist(), (left + cell).tolist()))
    lo_edge, hi_edge = 2.0**k, 2.0 ** (k + 1)
    items = [(max(x, lo_edge), min(y, hi_edge)) for x, y in items if y >= lo_edge and x < hi_edge]
    return _make_resolved(items, delta_cert, k)


def _resolve_base(base, delta_cert: float) -> ResolvedSet:
    if isinstance(base, ExplicitFinite):
        return _resolve_finite(base.points, 0, delta_cert)
    if isinstance(base, MonotoneGenerator):
        return _resolve_generator(base, delta_cert, 0)
    if isinstance(base, CantorIFS):
        return _resolve_ifs(base, delta_cert, 0)
    raise TypeError(f"unsupported base {type(base).__name__}")


def block(dset: DilationSet, k: int, delta_cert: float) -> ResolvedSet:
    """Resolve E^k to certified resolution ``delta_cert``."""
    if delta_cert <= 0:
        raise ValueError("delta_cert must be positive")
    if not isinstance(dset.k_range, str):
        k0, k1 = dset.k_range
        if not k0 <= k <= k1:
            raise ValueError(f"block index {k} outside k_range {dset.k_range}")
    rep = dset.representation
    if isinstance(rep, DyadicPeriodic):
        scale = 2.0**k
        return _resolve_base(rep.base, delta_cert / scale).scaled(scale, k)
    if isinstance(rep, ExplicitFinite):
        return _resolve_finite(rep.points, k, delta_cert)
    if isinstance(rep, MonotoneGenerator):
        return _resolve_generator(rep, delta_cert, k)
    if isinstance(rep, CantorIFS):
        return _resolve_ifs(rep, delta_cert, k)
    raise TypeError(f"unsupported representation {type(rep).__name__}")


# --- named sets -----------------------------------------------------------

def _power_generator(alpha: float) -> MonotoneGenerator:
    def tail(delta: float) -> int:
        # nu^-alpha < delta  <=>  nu > delta^(-1/alpha)
        x = delta ** (-1.0 / alpha)
        return int(min(math.floor(x) + 1, 2.0**62))

    return MonotoneGenerator(
        point_fn=lambda nu: 1.0 + nu ** (-alpha),
        limit=1.0,
        tail_index_fn=tail,
        nu_start=2,  # nu = 1 gives 2, which sits in the next block
        limit_in_set=True,
        name=f"E({alpha:g})",
    )


def _log_generator(beta: float) -> MonotoneGenerator:
    def tail(delta: float) -> int:
        # log(2 + nu)^-beta < delta  <=>  nu > exp(delta^(-1/beta)) - 2
        y = delta ** (-1.0 / beta)
        if y > 43.0:
            return 2**62
        return max(1, int(math.floor(math.exp(y) - 2)) + 1)

    return MonotoneGenerator(
        point_fn=lambda nu: 1.0 + np.log(2.0 + nu) ** (-beta),
        limit=1.0,
        tail_index_fn=tail,
        nu_start=1,
        limit_in_set=False,
        name=f"E~({beta:g})",
    )


def standard_sets(name: str, **params) -> DilationSet:
    """Named dilation sets: power, log, cantor, middle_third, middle_halves, lacunary, full."""
    if name == "power":
        alpha = float(params.get("alpha", 1.0))
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        return DilationSet(DyadicPeriodic(_power_generator(alpha)), "all", "power", {"alpha": alpha})
    if name == "log":
        beta = float(params.get("beta", 1.0))
        if beta <= 0:
            raise ValueError("beta must be positive")
        return DilationSet(DyadicPeriodic(_log_generator(beta)), "all", "log", {"beta": beta})
    if name in ("cantor", "middle_third", "middle_halves"):
        defaults = {
            "middle_third": (1 / 3, (0.0, 2 / 3), (1.0, 2.0)),
            "middle_halves": (1 / 4, (0.0, 3 / 4), (1.0, 5 / 3)),
            "cantor": (1 / 3, (0.0, 2 / 3), (1.0, 2.0)),
        }[name]
        ratio = float(params.get("ratio", defaults[0]))
        offsets = tuple(params.get("offsets", defaults[1]))
        base = tuple(params.get("base", defaults[2]))
        depth = params.get("depth")
        if ratio <= 0:
            raise ValueError("ratio must be positive")
        ifs = CantorIFS(base, ratio, offsets, None if depth is None else int(depth))
        if base[1] > 2.0 or base[0] < 1.0:
            raise ValueError("periodic Cantor base must sit inside [1, 2]")
        return DilationSet(DyadicPeriodic(ifs), "all", "cantor",
                           {"ratio": ratio, "offsets": list(offsets), "base": list(base), "depth": depth})
    if name == "lacunary":
        return DilationSet(DyadicPeriodic(ExplicitFinite((1.0,))), "all", "lacunary", {})
    if name == "full":
        return DilationSet(DyadicPeriodic(CantorIFS((1.0, 2.0), 0.5, (0.0, 0.5))), "all", "full", {})
    if name == "explicit":
        pts = tuple(sorted(float(p) for p in params["points"]))
        ef = ExplicitFinite(pts)
        k_range = params.get("k_range")
        if k_range is None or k_range == "all":
            k_range = (math.floor(math.log2(pts[0])), math.floor(math.log2(pts[-1])))
        return DilationSet(ef, tuple(k_range), "explicit", {"points": list(pts)})
    raise ValueError(f"unknown set name {name!r}")


def load_descriptor(source: Union[str, Path, dict]) -> DilationSet:
    """Build a set from a JSON descriptor (path, JSON text or parsed dict)."""
    if isinstance(source, dict):
        desc = source
    else:
        text = str(source)
        p = Path(text)
        desc = json.loads(p.read_text()) if not text.lstrip().startswith("{") and p.exists() else json.loads(text)
    kind = desc.get("type")
    if kind is None:
        raise ValueError("set descriptor needs a 'type'")
    params = {k: v for k, v in desc.items() if k != "type" and v is not None}
    if kind == "cantor" and "offsets" in params and "ratio" not in params:
        raise ValueError("cantor descriptor with offsets needs a ratio")
    return standard_sets(kind, **params)
