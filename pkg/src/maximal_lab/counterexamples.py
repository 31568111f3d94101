"""Two planar counterexamples.

* A sum of weighted small disks along a base-4 Cantor set whose translated
  unit-circle maximal function over the middle-halves Cantor set is large on a
  fixed region while the function stays small in L^(3/2).
* A family of thin rectangles with Kakeya-type overlap, translated along a
  dense dilation set, which defeats restricted weak type (2, 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dilation_set import DilationSet, ResolvedSet, block, standard_sets
from .entropy import entropy_number
from .spherical import lorentz_norm

DEFAULT_SEED = 20240601


def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


# --- grid fields ----------------------------------------------------------

@dataclass
class GridField2D:
    """Values on the lattice origin + (i*h, j*h); ``values[j, i]`` sits at x = x0 + i h, y = y0 + j h."""

    origin: tuple[float, float]
    h: float
    values: np.ndarray

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("spacing must be positive")
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or not np.all(np.isfinite(self.values)):
            raise ValueError("values must be a finite 2-D array")

    @property
    def extent(self) -> tuple[float, float, float, float]:
        ny, nx = self.values.shape
        x0, y0 = self.origin
        return x0, x0 + (nx - 1) * self.h, y0, y0 + (ny - 1) * self.h

    @classmethod
    def from_function(cls, fn, box: tuple[float, float, float, float], h: float) -> GridField2D:
        x0, x1, y0, y1 = box
        xs = x0 + h * np.arange(int(math.floor((x1 - x0) / h)) + 1)
        ys = y0 + h * np.arange(int(math.floor((y1 - y0) / h)) + 1)
        X, Y = np.meshgrid(xs, ys)
        return cls((x0, y0), h, fn(X, Y))

    def sample(self, x, y) -> np.ndarray:
        """Bilinear interpolation; raises if any point leaves the grid."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ex0, ex1, ey0, ey1 = self.extent
        tol = 1e-12 * self.h
        if np.any(x < ex0 - tol) or np.any(x > ex1 + tol) or np.any(y < ey0 - tol) or np.any(y > ey1 + tol):
            raise ValueError("circle exits the field domain")
        ny, nx = self.values.shape
        fx = np.clip((x - ex0) / self.h, 0, nx - 1)
        fy = np.clip((y - ey0) / self.h, 0, ny - 1)
        i = np.minimum(np.floor(fx).astype(int), nx - 2)
        j = np.minimum(np.floor(fy).astype(int), ny - 2)
        u, v = fx - i, fy - j
        V = self.values
        return ((1 - u) * (1 - v) * V[j, i] + u * (1 - v) * V[j, i + 1]
                + (1 - u) * v * V[j + 1, i] + u * v * V[j + 1, i + 1])

    def lp_norm(self, p: float) -> float:
        return float((np.sum(np.abs(self.values) ** p) * self.h**2) ** (1 / p))


def modified_maximal(f: GridField2D, E0, x, M: int | None = None) -> float:
    """sup over r in E0 of the unit-circle average of f centred at x + r e1 (trapezoid, M nodes)."""
    radii = E0.sample_points() if isinstance(E0, ResolvedSet) else np.atleast_1d(np.asarray(E0, float))
    M = M or max(256, int(math.ceil(2 * math.pi / f.h)))
    phi = 2 * math.pi * np.arange(M) / M
    cx = x[0] + radii[:, None] + np.cos(phi)[None, :]
    cy = x[1] + np.sin(phi)[None, :] + np.zeros_like(cx)
    return float(np.max(f.sample(cx, cy).mean(axis=1)))


# --- the Cantor test function ----------------------------------------------

def cantor_points(level: int) -> np.ndarray:
    """Sum_{j=1..level} c_j 4^-j with c_j in {0, 1}: 2^level points."""
    pts = np.zeros(1)
    for j in range(1, level + 1):
        pts = np.concatenate([pts, pts + 4.0**-j])
    return np.sort(pts)


def middle_halves_points(depth: int) -> np.ndarray:
    """Left ends 1 + sum_{j<=depth} b_j 4^-j, b_j in {0, 2}, of the middle-halves Cantor set."""
    ifs = standard_sets("middle_halves").representation.base
    a, b = ifs.base
    return a + (b - a) * ifs.cells(depth)


@dataclass
class CantorTestFunction:
    """f = sum_{i=1..N} 4^i chi(union over c in C_i of B(-c e1, a 4^-i))."""

    N: int
    a: float = 1 / 16
    components: list = field(init=False)

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if not 0 < self.a < 0.25:
            raise ValueError("a must lie in (0, 1/4)")
        self.components = [(i, 4.0**i, np.sort(-cantor_points(i)), self.a * 4.0**-i) for i in range(1, self.N + 1)]

    def disks(self):
        """(level, weight, centre x-coordinates, radius) per level; centres lie on the e1 axis."""
        return self.components

    def __call__(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape)
        for _, w, cx, rho in self.components:
            out += w * self._in_level(x, y, cx, rho)
        return out

    @staticmethod
    def _in_level(x, y, cx, rho) -> np.ndarray:
        # level-i disks are pairwise disjoint, so only the nearest centre matters
        j = np.clip(np.searchsorted(cx, x), 1, cx.size - 1) if cx.size > 1 else np.zeros(np.shape(x), int)
        best = np.full(np.broadcast(x, y).shape, np.inf)
        for jj in ((j - 1, j) if cx.size > 1 else (j,)):
            best = np.minimum(best, (x - cx[jj]) ** 2 + y**2)
        return (best <= rho * rho).astype(float)

    def norm(self, p: float = 1.5, grid_h: float | None = None) -> float:
        """||f||_p by telescoping over levels, each disk integrated on its own relative grid.

        f^p = sum_i [(F_i)^p - (F_(i-1))^p] with F_i the partial sum up to level i;
        the i-th increment lives on the level-i disks. ``grid_h`` is the spacing
        used at level N; level i uses grid_h * 4^(N-i).
        """
        h_N = grid_h if grid_h is not None else self.a * 4.0**-self.N / 16
        total = 0.0
        for i, w, cx, rho in self.components:
            h = h_N * 4.0 ** (self.N - i)
            m = max(2, int(math.ceil(rho / h)))
            g = (np.arange(-m, m) + 0.5) / m  # cell midpoints in units of rho
            X, Y = np.meshgrid(g, g)
            inside = X**2 + Y**2 <= 1
            ux, uy = X[inside] * rho, Y[inside] * rho
            for c in cx:
                px, py = ux + c, uy
                lower = np.zeros_like(px)
                for i2, w2, cx2, rho2 in self.components[: i - 1]:
                    lower += w2 * self._in_level(px, py, cx2, rho2)
                inc = (lower + w) ** p - lower**p
                total += math.pi * rho * rho * float(inc.mean())
        return total ** (1 / p)

    def norm_disjoint(self, p: float = 1.5) -> float:
        """Norm if all disks were disjoint: (sum_i 2^i pi a^2 4^(-2i) 4^(ip))^(1/p)."""
        s = sum(2.0**i * math.pi * (self.a * 4.0**-i) ** 2 * 4.0 ** (i * p) for i in range(1, self.N + 1))
        return s ** (1 / p)

    def rasterize(self, box, h: float) -> GridField2D:
        return GridField2D.from_function(self, box, h)


def _circle_disk_fraction(D: np.ndarray, rho: float, t: float = 1.0) -> np.ndarray:
    """Fraction of the circle of radius t lying in a disk of radius rho at centre distance D."""
    with np.errstate(invalid="ignore", divide="ignore"):
        c = (D * D + t * t - rho * rho) / (2 * D * t)
    frac = np.arccos(np.clip(c, -1.0, 1.0)) / math.pi
    frac = np.where(np.abs(D - t) >= rho, 0.0, frac)
    return np.where(D + t <= rho, 1.0, frac)


def cantor_maximal(f: CantorTestFunction, radii: np.ndarray, xs: np.ndarray, chunk: int = 64) -> np.ndarray:
    """Exact sup over radii of the unit-circle average of f centred at x + r e1."""
    out = np.empty(len(xs))
    for s in range(0, len(xs), chunk):
        x = xs[s: s + chunk]
        acc = np.zeros((x.shape[0], radii.size))
        for _, w, cx, rho in f.components:
            ccx = x[:, 0, None, None] + radii[None, :, None] - cx[None, None, :]
            D = np.hypot(ccx, x[:, 1, None, None])
            acc += w * _circle_disk_fraction(D, rho).sum(axis=2)
        out[s: s + chunk] = acc.max(axis=1)
    return out


# centres x whose shifted unit circles cross the e1 axis within ~0.1 rad of vertical,
# where the misalignment of the Cantor digits is tangential to the circle
PROBE_BOX = (-2.0, -1.0, 0.995, 1.0)


def cantor_counterexample(N: int, a: float = 1 / 16, grid_h: float | None = None,
                          samples: int = 4096, seed: int = DEFAULT_SEED, c_level: float = 0.25) -> dict:
    if not 1 <= N <= 7:
        raise ValueError("N must lie in 1..7")
    f = CantorTestFunction(N, a)
    rho_N = a * 4.0**-N
    grid_h = grid_h if grid_h is not None else rho_N / 16
    if grid_h > rho_N / 4:
        raise ValueError(f"grid_h={grid_h:g} does not resolve the finest disk radius {rho_N:g}")
    fnorm = f.norm(1.5, grid_h)
    radii = middle_halves_points(N + 2)
    x0, x1, y0, y1 = PROBE_BOX
    rng = _rng(seed)
    xs = np.column_stack([rng.uniform(x0, x1, samples), rng.uniform(y0, y1, samples)])
    vals = cantor_maximal(f, radii, xs)
    # the field is even in x2, so the mirrored box doubles every level set
    cell = 2 * (x1 - x0) * (y1 - y0) / samples
    weak = lorentz_norm(vals, 1.5, math.inf, weights=np.full(samples, cell)).value
    big = float(np.sum(vals > c_level * N) * cell)
    return {"N": N, "a": a, "grid_h": grid_h, "seed": seed, "samples": samples,
            "probe_box": list(PROBE_BOX), "E0_depth": N + 2,
            "f_norm_3_2": fnorm, "f_norm_disjoint": f.norm_disjoint(1.5),
            "weak_norm_lower": weak, "ratio": weak / fnorm,
            "measure_above_cN": big, "c": c_level, "max_value": float(vals.max())}


def sumset_max_gap(m: int) -> float:
    """Largest gap of E0 + C at depth m (both truncated to m base-4 digits)."""
    s = np.unique(np.add.outer(middle_halves_points(m), cantor_points(m)).ravel())
    return float(np.max(np.diff(s)))


def loglog_slope(xs, ys) -> float:
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


# --- the rectangle family ---------------------------------------------------

@dataclass
class RectangleFamily:
    """Rectangles (centre, angle, half-length, half-width) with long side along angle."""

    n: int
    centers: np.ndarray  # (m, 2)
    angles: np.ndarray  # (m,)
    half_length: float
    half_width: float
    labels: np.ndarray  # direction index l: angle = l 2^-n

    def __len__(self):
        return int(self.angles.size)

    @property
    def directions(self) -> np.ndarray:
        return np.column_stack([np.cos(self.angles), np.sin(self.angles)])

    def contains(self, pts: np.ndarray) -> np.ndarray:
        """(P, m) boolean: point p inside rectangle m."""
        d = pts[:, None, :] - self.centers[None, :, :]
        u = self.directions
        along = d[..., 0] * u[:, 0] + d[..., 1] * u[:, 1]
        across = -d[..., 0] * u[:, 1] + d[..., 1] * u[:, 0]
        return (np.abs(along) <= self.half_length) & (np.abs(across) <= self.half_width)

    def corners(self) -> np.ndarray:
        u = self.directions
        v = np.column_stack([-u[:, 1], u[:, 0]])
        L, W = self.half_length, self.half_width
        signs = [(1, 1), (-1, 1), (-1, -1), (1, -1)]
        return np.stack([self.centers + s * L * u + q * W * v for s, q in signs], axis=1)

    def bbox(self) -> tuple[float, float, float, float]:
        c = self.corners().reshape(-1, 2)
        return float(c[:, 0].min()), float(c[:, 0].max()), float(c[:, 1].min()), float(c[:, 1].max())

    def translated(self, shifts: np.ndarray) -> RectangleFamily:
        return RectangleFamily(self.n, self.centers + shifts, self.angles.copy(), self.half_length,
                               self.half_width, self.labels.copy())


def _keich_offset(slope: float, n: int) -> float:
    """-sum_k (k/n) eps_k 2^-k over the first n binary digits of the slope."""
    s, out = slope, 0.0
    for k in range(1, n + 1):
        s *= 2
        eps = int(s >= 1)
        s -= eps
        out -= (k / n) * eps * 2.0**-k
    return out


def besicovitch_family(n: int) -> RectangleFamily:
    """2^n rectangles 2^(-n-3) x 2^(-2n-6) along angles l 2^-n, l < 2^n, with Kakeya overlap.

    Built at unit length: directions are split into the sectors [0, pi/4) and
    [pi/4, 1), and in each sector a direction of relative slope s is a segment
    from (0, a(s)) with a(s) the digit-weighted offset above. The picture is
    then scaled by 2^(-n-3) and centred at the origin.
    """
    if not 3 <= n <= 8:
        raise ValueError("n must lie in 3..8")
    m = 2**n
    labels = np.arange(m)
    angles = labels * 2.0**-n
    centers = np.zeros((m, 2))
    half_w_unit = 2.0 ** (-n - 4)
    for l, th in zip(labels, angles):
        base = 0.0 if th < math.pi / 4 else math.pi / 4
        rel = th - base
        a = _keich_offset(math.tan(rel), n)
        u = np.array([math.cos(rel), math.sin(rel)])
        c_local = np.array([0.0, a]) + 0.5 * u  # unit-length segment from (0, a)
        cb, sb = math.cos(base), math.sin(base)
        centers[l] = [cb * c_local[0] - sb * c_local[1], sb * c_local[0] + cb * c_local[1]]
    scale = 2.0 ** (-n - 3)
    fam = RectangleFamily(n, centers * scale, angles, 0.5 * scale, half_w_unit * scale, labels)
    x0, x1, y0, y1 = fam.bbox()
    fam.centers -= np.array([(x0 + x1) / 2, (y0 + y1) / 2])
    return fam


def union_area(fam: RectangleFamily, samples: int = 1_000_000, seed: int = DEFAULT_SEED,
               chunk: int = 100_000) -> dict:
    """Monte Carlo area of the union with a 95% binomial confidence interval."""
    x0, x1, y0, y1 = fam.bbox()
    box = (x1 - x0) * (y1 - y0)
    rng = _rng(seed)
    hits = 0
    done = 0
    while done < samples:
        k = min(chunk, samples - done)
        pts = np.column_stack([rng.uniform(x0, x1, k), rng.uniform(y0, y1, k)])
        hits += int(np.count_nonzero(fam.contains(pts).any(axis=1)))
        done += k
    p = hits / samples
    half = 1.96 * math.sqrt(max(p * (1 - p), 1.0 / samples) / samples)
    return {"area": p * box, "ci_low": max(p - half, 0.0) * box, "ci_high": (p + half) * box,
            "samples": samples, "seed": seed, "sum_of_areas": len(fam) * 4 * fam.half_length * fam.half_width}


def _separated(c1, c2) -> bool:
    """Separating-axis test for two convex quadrilaterals given by their corners."""
    for poly in (c1, c2):
        for i in range(4):
            e = poly[(i + 1) % 4] - poly[i]
            axis = np.array([-e[1], e[0]])
            p1, p2 = c1 @ axis, c2 @ axis
            if p1.max() < p2.min() or p2.max() < p1.min():
                return True
    return False


def rectangles_disjoint(fam: RectangleFamily) -> bool:
    corners = fam.corners()
    # bounding-circle prefilter, then SAT on close pairs
    r = math.hypot(fam.half_length, fam.half_width)
    d = np.linalg.norm(fam.centers[:, None, :] - fam.centers[None, :, :], axis=2)
    close = np.argwhere(np.triu(d < 2 * r, k=1))
    return all(_separated(corners[i], corners[j]) for i, j in close)


def _interval_intersect(a, b):
    lo = np.maximum(a[..., 0], b[..., 0])
    hi = np.minimum(a[..., 1], b[..., 1])
    return np.stack([lo, np.maximum(lo, hi)], axis=-1)


def circle_union_fraction(fam: RectangleFamily, x: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Exact fraction of the circle |y - x| = t inside the union of the rectangles.

    x: (P, 2) centres, t: (P,) radii. Angles are measured from the direction
    of the family's centre, so every relevant arc lies well inside (-pi, pi).
    """
    P = x.shape[0]
    ref = np.arctan2(-x[:, 1], -x[:, 0])  # direction to the origin
    u = fam.directions
    d = x[:, None, :] - fam.centers[None, :, :]
    px = d[..., 0] * u[:, 0] + d[..., 1] * u[:, 1]  # circle centre in rectangle frame
    py = -d[..., 0] * u[:, 1] + d[..., 1] * u[:, 0]
    T = t[:, None]
    L, W = fam.half_length, fam.half_width
    # |px + T cos psi| <= L  and  |py + T sin psi| <= W, psi the angle in the rectangle frame
    clo = np.clip((-L - px) / T, -1, 1)
    chi = np.clip((L - px) / T, -1, 1)
    slo = np.clip((-W - py) / T, -1, 1)
    shi = np.clip((W - py) / T, -1, 1)
    a1, a2 = np.arccos(chi), np.arccos(clo)  # cos in range: psi in [a1, a2] or [-a2, -a1]
    b1, b2 = np.arcsin(slo), np.arcsin(shi)  # sin in range: psi in [b1, b2] or [pi-b2, pi-b1]
    cos_sets = [np.stack([a1, a2], -1), np.stack([-a2, -a1], -1)]
    sin_sets = [np.stack([b1, b2], -1), np.stack([math.pi - b2, math.pi - b1], -1),
                np.stack([-math.pi - b2, -math.pi - b1], -1)]
    pieces = []
    for cs in cos_sets:
        for ss in sin_sets:
            iv = _interval_intersect(cs, ss)
            # rectangle frame -> global angle -> relative to ref, wrapped to (-pi, pi]
            shift = fam.angles[None, :] - ref[:, None]
            lo = np.mod(iv[..., 0] + shift + math.pi, 2 * math.pi) - math.pi
            pieces.append(np.stack([lo, lo + (iv[..., 1] - iv[..., 0])], -1))
    iv = np.concatenate(pieces, axis=1)  # (P, K, 2)
    length = iv[..., 1] - iv[..., 0]
    iv = np.where((length > 0)[..., None], iv, np.inf)
    order = np.argsort(iv[..., 0], axis=1)
    iv = np.take_along_axis(iv, order[..., None], axis=1)
    starts, ends = iv[..., 0], iv[..., 1]
    valid = np.isfinite(starts)
    ends = np.where(valid, ends, -np.inf)
    prev_end = np.maximum.accumulate(np.concatenate([np.full((P, 1), -np.inf), ends[:, :-1]], axis=1), axis=1)
    contrib = np.where(valid, np.maximum(0.0, ends - np.maximum(starts, prev_end)), 0.0)
    return contrib.sum(axis=1) / (2 * math.pi)


def restricted_weak_type_probe(dset: DilationSet, n: int, B_target: float | None = None, stride: int = 10,
                               per_rect: int = 64, seed: int = DEFAULT_SEED, t_offsets: int = 4,
                               area_samples: int = 400_000) -> dict:
    """Lower bound for ||M_E chi_A||_(2,inf) / ||chi_A||_(2,1) from translated Kakeya rectangles."""
    delta = 2.0 ** (-2 * n)
    res = block(dset, 0, delta / 4)
    Ncov = entropy_number(res, delta)
    B = Ncov * n / 2.0 ** (2 * n)
    report = {"n": n, "N_cover": Ncov, "B": B, "B_target": B_target, "stride": stride, "seed": seed,
              "per_rect": per_rect}
    if B < 1 or (B_target is not None and B < B_target):
        report["status"] = "construction inapplicable"
        return report
    fam = besicovitch_family(n)
    area = union_area(fam, area_samples, seed)
    # the dyadic intervals of length 2^-2n meeting E^0, and one element of E in each
    lo = np.floor(res.lo / delta).astype(np.int64)
    hi = np.floor(res.hi / delta).astype(np.int64)
    idx = np.unique(np.concatenate([np.arange(a, b + 1) for a, b in zip(lo, hi)]))
    idx = idx[idx < 2 * 2 ** (2 * n)]
    chosen = idx[::stride]
    anchors = np.array([_first_in(res, i * delta, (i + 1) * delta) for i in chosen])
    ls = np.arange(0, len(fam), stride)
    rng = _rng(seed)
    rects, values = [], []
    u = fam.directions
    for l in ls:
        perp = np.array([-u[l, 1], u[l, 0]])
        for a in anchors:
            c = fam.centers[l] + a * perp
            s = rng.uniform(-1, 1, (per_rect, 2))
            pts = c + s[:, :1] * fam.half_length * u[l] + s[:, 1:] * fam.half_width * perp
            rects.append((l, a, c))
            # radii near the tangent distance to the home rectangle, snapped into E
            best = np.zeros(per_rect)
            for q in range(-t_offsets, t_offsets + 1):
                t = _nearest_in(res, a + q * fam.half_width / 2)
                best = np.maximum(best, circle_union_fraction(fam, pts, np.full(per_rect, t)))
            values.append(best)
    values = np.array(values)
    translated = RectangleFamily(n, np.array([r[2] for r in rects]), fam.angles[[r[0] for r in rects]],
                                 fam.half_length, fam.half_width, np.array([r[0] for r in rects]))
    disjoint = rectangles_disjoint(translated)
    rect_area = 4 * fam.half_length * fam.half_width
    weights = np.full(values.size, rect_area / per_rect)
    weak = lorentz_norm(values.ravel(), 2.0, math.inf, weights=weights).value
    chiA = math.sqrt(area["area"])  # ||chi_A||_(2,1) = |A|^(1/2) in the q-normalized quasinorm
    alpha0 = 2.0**-n / (16 * math.pi * 2)
    passing = float(np.mean(np.mean(values > alpha0, axis=1) >= 1 / 20))
    report.update({"status": "ok", "rectangles": len(rects), "disjoint": disjoint,
                   "area": area, "weak_norm_lower": weak, "chiA_norm_2_1": chiA,
                   "chiA_norm_2_1_upper": math.sqrt(area["ci_high"]), "ratio": weak / chiA,
                   "sqrt_B": math.sqrt(B), "alpha0": alpha0, "fraction_rects_passing": passing})
    return report


def _first_in(res: ResolvedSet, a: float, b: float) -> float:
    i = int(np.searchsorted(res.hi, a, side="left"))
    if i >= res.lo.size or res.lo[i] > b:
        return a
    return float(max(res.lo[i], a))


def _nearest_in(res: ResolvedSet, t: float) -> float:
    i = int(np.searchsorted(res.hi, t, side="left"))
    if i < res.lo.size and res.lo[i] <= t:
        return t
    cands = []
    if i < res.lo.size:
        cands.append(float(res.lo[i]))
    if i > 0:
        cands.append(float(res.hi[i - 1]))
    return min(cands, key=lambda c: abs(c - t))
