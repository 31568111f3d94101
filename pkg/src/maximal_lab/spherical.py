"""Spherical means of radial functions, maximal fields, Lorentz norms and the multiplier decay."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .dilation_set import DilationSet, ResolvedSet, block

GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(16)
PANEL_CAP = 2**18
QUAD_RTOL = 1e-8


class QuadratureError(RuntimeError):
    def __init__(self, residual: float, message: str = "quadrature did not converge"):
        self.residual = residual
        super().__init__(f"{message} (estimated error {residual:.3g})")


def sphere_constant(d: int) -> float:
    """Gamma(d/2) / (sqrt(pi) Gamma((d-1)/2)): normalizes the sin^(d-2) polar density."""
    return math.exp(special.gammaln(d / 2) - special.gammaln((d - 1) / 2)) / math.sqrt(math.pi)


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere in R^d."""
    return 2 * math.pi ** (d / 2) / math.gamma(d / 2)


def ball_volume(d: int, radius: float = 1.0) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * radius**d


# --- quadrature -----------------------------------------------------------

def _composite_gl(f: Callable[[np.ndarray], np.ndarray], a: float, b: float, panels: int) -> float:
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = (mid[:, None] + half[:, None] * GL_NODES[None, :]).ravel()
    fx = f(x).reshape(panels, -1)
    return float(np.sum(half * (fx @ GL_WEIGHTS)))


def adaptive_integral(f, a: float, b: float, breaks: Sequence[float] = (), min_panels: int = 1,
                      rtol: float = QUAD_RTOL, atol: float = 1e-14) -> tuple[float, float]:
    """Composite 16-point Gauss-Legendre with panel doubling on each piece between breaks.

    Returns (value, error estimate); raises QuadratureError past the panel cap.
    """
    pts = sorted({a, b, *[x for x in breaks if a < x < b]})
    total, err = 0.0, 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi - lo <= 0:
            continue
        n = max(1, int(math.ceil(min_panels * (hi - lo) / (b - a))))
        prev = _composite_gl(f, lo, hi, n)
        while True:
            n *= 2
            cur = _composite_gl(f, lo, hi, n)
            e = abs(cur - prev)
            if e <= max(rtol * abs(cur), atol):
                break
            if n >= PANEL_CAP:
                raise QuadratureError(e)
            prev = cur
        total += cur
        err += e
    return total, err


# --- radial profiles ------------------------------------------------------

@dataclass
class RadialProfile:
    """A radial function g(|x|) with the radii where it may jump or kink."""

    fn: Callable[[np.ndarray], np.ndarray]
    r_max: float = math.inf
    breakpoints: tuple[float, ...] = ()
    grid: np.ndarray | None = None
    label: str = "g"

    def __post_init__(self):
        if self.grid is not None:
            g = np.asarray(self.grid, dtype=float)
            if g.ndim != 1 or g.size < 2 or np.any(np.diff(g) <= 0):
                raise ValueError("grid must be strictly increasing")
            self.grid = g

    def __call__(self, u):
        return self.fn(np.asarray(u, dtype=float))

    @classmethod
    def constant(cls, c: float = 1.0) -> RadialProfile:
        return cls(lambda u: np.full_like(u, c, dtype=float), label=f"const({c:g})")

    @classmethod
    def indicator(cls, R: float, R0: float = 0.0) -> RadialProfile:
        """chi_[R0, R] (a ball for R0 = 0, a shell otherwise)."""
        return cls(lambda u: ((u >= R0) & (u <= R)).astype(float), R, (R0, R) if R0 > 0 else (R,),
                   label=f"chi[{R0:g},{R:g}]")

    @classmethod
    def from_samples(cls, r, values) -> RadialProfile:
        r = np.asarray(r, dtype=float)
        v = np.asarray(values, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError("profile values must be finite")
        return cls(lambda u: np.interp(u, r, v, right=0.0), float(r[-1]), tuple(r.tolist()), r,
                   label="samples")


def _theta_breaks(g: RadialProfile, t: float, r: float) -> list[float]:
    """Polar angles where |r e1 + t w| crosses a breakpoint of g."""
    out = []
    lo, hi = abs(r - t), r + t
    for b in g.breakpoints:
        if lo < b < hi:
            c = (r * r + t * t - b * b) / (2 * r * t)
            out.append(math.acos(min(1.0, max(-1.0, c))))
    return out


def spherical_mean_radial(g: RadialProfile, d: int, t: float, r: float,
                          rtol: float = QUAD_RTOL, return_error: bool = False):
    """Average of g(|x|) over the sphere of radius t centred at a point of norm r."""
    if d < 2:
        raise ValueError("d must be >= 2")
    if t <= 0 or r < 0:
        raise ValueError("need t > 0 and r >= 0")
    if r == 0:
        val = float(g(np.array([t]))[0])
        return (val, 0.0) if return_error else val
    c = sphere_constant(d)

    def integrand(th):
        u = np.sqrt(np.maximum(r * r + t * t - 2 * r * t * np.cos(th), 0.0))
        w = np.sin(th) ** (d - 2) if d > 2 else 1.0
        return g(u) * w

    val, err = adaptive_integral(integrand, 0.0, math.pi, _theta_breaks(g, t, r), rtol=rtol)
    return (c * val, c * err) if return_error else c * val


def sphere_mc_mean(g: RadialProfile, d: int, t: float, r: float, n: int = 10**6,
                   seed: int | np.random.SeedSequence = 0) -> tuple[float, float]:
    """Monte Carlo oracle: mean and standard error of g over uniform sphere samples."""
    rng = np.random.Generator(np.random.Philox(seed))
    chunk = 200_000
    s = s2 = 0.0
    done = 0
    while done < n:
        m = min(chunk, n - done)
        w = rng.standard_normal((m, d))
        w /= np.linalg.norm(w, axis=1, keepdims=True)
        x = t * w
        x[:, 0] += r
        v = g(np.linalg.norm(x, axis=1))
        s += float(v.sum())
        s2 += float((v * v).sum())
        done += m
    mean = s / n
    var = max(s2 / n - mean * mean, 0.0)
    return mean, math.sqrt(var / n)


def ball_indicator_mean(eps: float, d: int, t, r):
    """Exact sphere average of chi_B(0, eps): the normalized measure of a polar cap."""
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        c0 = (r * r + t * t - eps * eps) / (2 * r * t)
    c0 = np.where(r == 0, np.where(t <= eps, -np.inf, np.inf), c0)
    c0c = np.clip(c0, -1.0, 1.0)
    # fraction of S^(d-1) with cos(theta) >= c0
    half = 0.5 * special.betainc((d - 1) / 2, 0.5, 1 - c0c * c0c)
    frac = np.where(c0c >= 0, half, 1 - half)
    return np.where(c0 >= 1, 0.0, np.where(c0 <= -1, 1.0, frac))


# --- maximal fields -------------------------------------------------------

@dataclass
class MaximalField:
    r: np.ndarray
    values: np.ndarray
    E_trunc: np.ndarray
    d: int
    weights: np.ndarray | None = None  # radial volume weights; trapezoid cells if None
    lower_bound: bool = True

    def volume_weights(self) -> np.ndarray:
        if self.weights is not None:
            return self.weights
        return radial_weights(self.r, self.d)

    def to_csv(self) -> str:
        lines = ["r,value"] + [f"{a:.17g},{b:.17g}" for a, b in zip(self.r, self.values)]
        return "\n".join(lines) + "\n"


def radial_weights(r: np.ndarray, d: int) -> np.ndarray:
    """Trapezoid cell volumes |S^(d-1)| r^(d-1) dr on a radial grid."""
    r = np.asarray(r, dtype=float)
    if r.size == 1:
        return np.zeros(1)
    edges = np.concatenate([[r[0]], 0.5 * (r[:-1] + r[1:]), [r[-1]]])
    return sphere_area(d) * (edges[1:] ** d - edges[:-1] ** d) / d


def truncate_set(dset: DilationSet, t_lo: float, t_hi: float, t_resolution: float) -> np.ndarray:
    """Finite sample of E in [t_lo, t_hi]: points plus intervals stepped at t_resolution."""
    t_lo = max(t_lo, t_resolution)
    k0, k1 = math.floor(math.log2(t_lo)), math.floor(math.log2(t_hi))
    out = []
    for k in range(k0, k1 + 1):
        if not dset.periodic and not isinstance(dset.k_range, str):
            if not dset.k_range[0] <= k <= dset.k_range[1]:
                continue
        res = block(dset, k, min(t_resolution, 2.0**k / 4))
        out.append(res.points)
        for a, b in res.intervals:
            out.append(np.append(np.arange(a, b, t_resolution), b))
    if not out:
        return np.zeros(0)
    ts = np.unique(np.concatenate(out))
    return ts[(ts >= t_lo) & (ts <= t_hi)]


def maximal_field(g: RadialProfile, d: int, dset: DilationSet, t_resolution: float | None,
                  r_grid, t_range: tuple[float, float] | None = None) -> MaximalField:
    """sup over the truncated set of |A_t g(r)| at each grid radius (a lower bound of M_E g)."""
    r_grid = np.asarray(r_grid, dtype=float)
    if t_resolution is None:
        t_resolution = float(np.min(np.diff(r_grid))) / 8 if r_grid.size > 1 else 1e-3
    if t_range is None:
        R = g.r_max if math.isfinite(g.r_max) else float(r_grid[-1])
        t_range = (max(t_resolution, float(r_grid[0]) - R), float(r_grid[-1]) + R)
    ts = truncate_set(dset, *t_range, t_resolution)
    vals = np.zeros_like(r_grid)
    for i, r in enumerate(r_grid):
        best = 0.0
        for t in ts:
            if math.isfinite(g.r_max) and abs(t - r) > g.r_max and r > 0:
                continue  # sphere misses the support
            best = max(best, abs(spherical_mean_radial(g, d, float(t), float(r))))
        vals[i] = best
    return MaximalField(r_grid, vals, ts, d)


# --- Lorentz norms --------------------------------------------------------

@dataclass
class LorentzEstimate:
    p: float
    q: float
    value: float
    alpha: np.ndarray = field(default_factory=lambda: np.zeros(0))
    distribution: np.ndarray = field(default_factory=lambda: np.zeros(0))


def lorentz_norm(fld, p: float, q: float = math.inf, d: int | None = None,
                 weights=None) -> LorentzEstimate:
    """L^(p,q) quasinorm of sampled data from its exact step distribution function.

    ``fld`` is a MaximalField or an array of values (then ``weights`` are the
    sample volumes). With lambda the distribution function,
    ||f||_(p,q) = (q * int_0^inf (a lambda(a)^(1/p))^q da/a)^(1/q),
    which gives ||f||_(p,p) = ||f||_p and ||f||_(p,inf) = sup a lambda(a)^(1/p).
    """
    if isinstance(fld, MaximalField):
        vals, w = np.abs(fld.values), fld.volume_weights()
    else:
        vals = np.abs(np.asarray(fld, dtype=float))
        w = np.asarray(weights, dtype=float) if weights is not None else np.ones_like(vals)
    mask = (vals > 0) & (w > 0)
    if not np.any(mask):
        return LorentzEstimate(p, q, 0.0)
    v, w = vals[mask], w[mask]
    order = np.argsort(-v, kind="stable")
    v, w = v[order], w[order]
    levels, first = np.unique(-v, return_index=True)
    lv = -levels  # distinct values, descending
    W = np.cumsum(w)
    last = np.append(first[1:], v.size) - 1
    lam = W[last]  # lambda(a) for a just below lv[i]
    if math.isinf(q):
        value = float(np.max(lv * lam ** (1 / p)))
    else:
        nxt = np.append(lv[1:], 0.0)
        value = float((q * np.sum(lam ** (q / p) * (lv**q - nxt**q) / q)) ** (1 / q))
    return LorentzEstimate(p, q, value, lv, lam)


def lp_norm(values, weights, p: float) -> float:
    return float(np.sum(np.abs(values) ** p * weights) ** (1 / p))


# --- small-ball probe -----------------------------------------------------

def _nearest_in(res: ResolvedSet, x: np.ndarray) -> np.ndarray:
    """Per x: the candidates of the resolved set nearest to x (left and right)."""
    lo, hi = res.lo, res.hi
    i = np.searchsorted(lo, x, side="right") - 1
    inside = (i >= 0) & (x <= hi[np.clip(i, 0, None)])
    left = np.where(i >= 0, np.minimum(hi[np.clip(i, 0, None)], x), -np.inf)
    j = np.clip(i + 1, 0, lo.size - 1)
    right = np.where(i + 1 < lo.size, lo[j], np.inf)
    return np.where(inside, x, left), np.where(inside, x, right)


def small_ball_field(dset: DilationSet, d: int, eps: float, k: int = 0,
                     oversample: int = 16) -> MaximalField:
    """Maximal field of chi_B(0, eps) near the block E^k, computed exactly per radius.

    For fixed r the cap measure is unimodal in t with peak at sqrt(r^2 - eps^2),
    so the sup over the set is attained at the nearest set elements on either side.
    """
    res = block(dset, k, eps / oversample)
    h = eps / oversample
    items = np.stack([res.lo, res.hi], axis=1) if len(res) else np.zeros((0, 2))
    idx = [np.arange(math.floor((a - eps) / h), math.ceil((b + eps) / h) + 1) for a, b in items]
    lattice = np.unique(np.concatenate(idx)) if idx else np.zeros(0, dtype=int)
    r = lattice * h
    r = r[r > eps]
    tstar = np.sqrt(r * r - eps * eps)
    left, right = _nearest_in(res, tstar)
    vals = np.zeros_like(r)
    for cand in (left, right):
        ok = np.isfinite(cand)
        vals[ok] = np.maximum(vals[ok], ball_indicator_mean(eps, d, cand[ok], r[ok]))
    w = sphere_area(d) * r ** (d - 1) * h
    return MaximalField(r, vals, res.points, d, weights=w)


def weak_type_ratio_probe(dset: DilationSet, d: int, p: float, eps_list: Sequence[float],
                          k: int = 0) -> dict:
    """R(eps) = ||M chi_B(eps)||_(p,inf) / ||chi_B(eps)||_p over the block E^k, and its log-slope."""
    rows = []
    for eps in eps_list:
        if not 0 < eps < 0.25:
            raise ValueError("ball radii must lie in (0, 1/4)")
        fld = small_ball_field(dset, d, eps, k)
        weak = lorentz_norm(fld, p, math.inf).value
        fnorm = ball_volume(d, eps) ** (1 / p)
        rows.append({"eps": eps, "weak_norm": weak, "f_norm": fnorm, "ratio": weak / fnorm})
    x = np.log([1 / r["eps"] for r in rows])
    y = np.log([r["ratio"] for r in rows])
    slope = float(np.polyfit(x, y, 1)[0]) if len(rows) > 1 else 0.0
    return {"d": d, "p": p, "block": k, "rows": rows, "slope": slope, "lower_bound": True}


# --- frequency side -------------------------------------------------------

def _psi(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def beta0(xi):
    """Smooth radial bump: 1 on |xi| <= 1, 0 on |xi| >= 2."""
    a = np.abs(np.asarray(xi, dtype=float))
    num = _psi(2.0 - a)
    return num / (num + _psi(a - 1.0))


@dataclass(frozen=True)
class FrequencyCutoff:
    j: int
    bump: Callable = beta0

    def __call__(self, xi):
        if self.j == 0:
            return self.bump(xi)
        xi = np.asarray(xi, dtype=float)
        return self.bump(xi * 2.0**-self.j) - self.bump(xi * 2.0 ** (1 - self.j))


def sphere_hat(d: int, rho: float, rtol: float = 1e-12) -> float:
    """Fourier transform of normalized surface measure on S^(d-1) at |xi| = rho, by quadrature."""
    if rho < 0:
        raise ValueError("rho must be >= 0")
    if rho == 0:
        return 1.0

    def integrand(th):
        w = np.sin(th) ** (d - 2) if d > 2 else 1.0
        return np.cos(rho * np.cos(th)) * w

    panels = max(4, int(math.ceil(rho / math.pi)))  # about one panel per oscillation
    val, _ = adaptive_integral(integrand, 0.0, math.pi, min_panels=panels, rtol=rtol, atol=1e-15)
    return sphere_constant(d) * val


def sphere_hat_bessel(d: int, rho) -> np.ndarray:
    """Gamma(d/2) (2/rho)^nu J_nu(rho), nu = (d-2)/2: the vectorized closed form."""
    rho = np.asarray(rho, dtype=float)
    nu = (d - 2) / 2
    with np.errstate(invalid="ignore", divide="ignore"):
        v = math.gamma(d / 2) * (2.0 / rho) ** nu * special.jv(nu, rho)
    return np.where(rho == 0, 1.0, v)


def multiplier_decay(d: int, j_range: Sequence[int], step: float = 0.01, bump: Callable = beta0,
                     method: str = "bessel") -> list[dict]:
    """M_j = sup over [2^(j-1), 2^(j+1)] of |sigma_hat * beta_j| and M_j 2^(j(d-1)/2)."""
    rows = []
    for j in j_range:
        if j < 4:
            raise ValueError("j must be >= 4")
        rho = np.arange(2.0 ** (j - 1), 2.0 ** (j + 1) + step, step)
        if method == "bessel":
            sh = sphere_hat_bessel(d, rho)
        elif method == "quadrature":
            sh = np.array([sphere_hat(d, float(x), rtol=1e-10) for x in rho])
        else:
            raise ValueError("method must be bessel or quadrature")
        m = np.abs(sh * FrequencyCutoff(j, bump)(rho))
        i = int(np.argmax(m))
        rows.append({"j": j, "M_j": float(m[i]), "rho_at_sup": float(rho[i]),
                     "scaled": float(m[i] * 2.0 ** (j * (d - 1) / 2))})
    return rows


def band_ratio(rows: list[dict]) -> float:
    s = [r["scaled"] for r in rows]
    return max(s) / min(s)
