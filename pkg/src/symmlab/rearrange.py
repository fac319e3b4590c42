"""Distribution functions, rearrangements and symmetrization deficits of P1 functions.

For a P1 function the measure J(t) of {u > t} is piecewise quadratic in t
with knots at the distinct nodal values, so it is represented exactly: on the
knot interval [k_m, k_{m+1}) we store J(k_m + tau) = C0 + C1 tau + C2 tau^2.
Every other level quantity (I(t), the decreasing rearrangement, integrals of
Borel functions of u) is derived from this representation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import constants
from .quadrature import DUNAVANT7_POINTS, DUNAVANT7_WEIGHTS

U_SHARP, U_STAR, V, GRAD = "u_sharp", "u_star", "v", "grad"
PROFILE_KINDS = (U_SHARP, U_STAR, V, GRAD)

_GL2 = np.array([-1.0, 1.0]) / math.sqrt(3.0)


class ProfileError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Exact distribution function
# ---------------------------------------------------------------------------

class Distribution:
    """Exact J(t) = |{u > t}| for nodal values ``u`` on ``mesh`` (right continuous).

    Coefficients are built for u / 2^k with 2^k near max |u|; the power-of-two
    scaling is exact and keeps the quadratic coefficients representable for
    tiny or huge data.
    """

    def __init__(self, mesh, u):
        u = np.asarray(u, dtype=float)
        peak = float(np.max(np.abs(u))) if u.size else 0.0
        self._scale = float(2.0 ** np.frexp(peak)[1]) if peak > 0 else 1.0
        u = u / self._scale
        knots = np.unique(u)
        raw_knots = knots * self._scale
        vt = np.sort(u[mesh.triangles], axis=1)
        area = mesh.areas
        L = knots.size
        idx = np.searchsorted(knots, vt)  # exact: every value is a knot
        C0 = np.zeros(L)
        C1 = np.zeros(L)
        C2 = np.zeros(L)
        # full triangles above each interval: a triangle counts fully for t < v1
        full = np.bincount(idx[:, 0], area, minlength=L + 1)
        # intervals m < i1 receive area; cumulative from the top
        C0 += np.cumsum(full[::-1])[::-1][1:L + 1] if L else 0.0
        v1, v2, v3 = vt.T
        i1, i2, i3 = idx.T
        width = np.append(np.diff(knots), 1.0)
        # lower piece on [v1, v2): A (1 - (t - v1)^2 / ((v3 - v1)(v2 - v1)))
        self._add_pieces(C0, C1, C2, knots, width, area, i1, i2, v1, v3 - v1, v2 - v1, lower=True)
        # upper piece on [v2, v3): A (v3 - t)^2 / ((v3 - v1)(v3 - v2))
        self._add_pieces(C0, C1, C2, knots, width, area, i2, i3, v3, v3 - v1, v3 - v2, lower=False)
        self._width = width
        self._kn = knots
        self.knots = raw_knots
        self.C = np.stack([C0, C1, C2], axis=1)  # in the local variable of each interval
        self.total = float(np.sum(area))
        self.u_min = float(raw_knots[0])
        self.u_max = float(raw_knots[-1])
        # flat triangles contribute atoms of the distribution
        flat = v1 == v3
        self.atoms = np.bincount(i1[flat], area[flat], minlength=L)

    @staticmethod
    def _add_pieces(C0, C1, C2, knots, width, area, lo, hi, anchor, span1, span2, lower):
        # coefficients in the local variable x = (t - k_m) / width_m in [0, 1);
        # every ratio below is at most 1 in magnitude, so nothing over- or underflows
        n = hi - lo
        keep = n > 0
        if not np.any(keep):
            return
        lo, n, anchor, A = lo[keep], n[keep], anchor[keep], area[keep]
        span1, span2 = span1[keep], span2[keep]
        tri = np.repeat(np.arange(lo.size), n)
        offs = np.arange(tri.size) - np.repeat(np.cumsum(n) - n, n)
        m = lo[tri] + offs
        d = knots[m] - anchor[tri]  # signed offset of the interval start from the anchor
        s1, s2, At = span1[tri], span2[tri], A[tri]
        q0 = At * (d / s1) * (d / s2)
        q1 = 2.0 * At * (d / s1) * (width[m] / s2)
        q2 = At * (width[m] / s1) * (width[m] / s2)
        if lower:
            # A - A (d + tau)^2 / (s1 s2)
            c0, c1, c2 = At - q0, -q1, -q2
        else:
            # A (d + tau)^2 / (s1 s2) with d = k_m - v3 <= 0
            c0, c1, c2 = q0, q1, q2
        L = C0.size
        C0 += np.bincount(m, c0, minlength=L)
        C1 += np.bincount(m, c1, minlength=L)
        C2 += np.bincount(m, c2, minlength=L)

    def interval(self, t):
        """Knot-interval index of t (-1 below the minimum)."""
        return np.searchsorted(self._kn, np.asarray(t, dtype=float) / self._scale, side="right") - 1

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        m = self.interval(t)
        mc = np.clip(m, 0, self.knots.size - 1)
        tau = (t / self._scale - self._kn[mc]) / self._width[mc]
        c = self.C[mc]
        val = c[..., 0] + tau * (c[..., 1] + tau * c[..., 2])
        val = np.where(m < 0, self.total, val)
        val = np.where(t >= self.u_max, 0.0, val)
        val = np.clip(val, 0.0, self.total)
        return float(val) if val.ndim == 0 else val

    def _density_scaled(self, t):
        # -dJ/d(t / scale)
        t = np.asarray(t, dtype=float)
        m = np.clip(self.interval(t), 0, self.knots.size - 1)
        tau = (t / self._scale - self._kn[m]) / self._width[m]
        c = self.C[m]
        out = -(c[..., 1] + 2.0 * tau * c[..., 2]) / self._width[m]
        return np.where((t < self.u_min) | (t >= self.u_max), 0.0, out)

    def density(self, t):
        """-dJ/dt on the absolutely continuous part."""
        return self._density_scaled(t) / self._scale

    def integrate(self, g, lo, hi, breaks=()):
        """Integral of g(u) over {lo < u <= hi} (vectorized g, smooth between ``breaks``).

        Two-point Gauss on every knot interval, split at ``breaks``; exact when g
        is affine between breaks.  Atoms at knots in (lo, hi] are added.
        """
        k = self.knots
        pts = np.union1d(k[(k > lo) & (k < hi)], np.asarray(breaks, dtype=float))
        pts = pts[(pts > lo) & (pts < hi)]
        edges = np.concatenate([[max(lo, self.u_min)], pts, [min(hi, self.u_max)]])
        edges = edges[edges >= max(lo, self.u_min)]
        a, b = edges[:-1], edges[1:]
        ok = b > a
        a, b = a[ok], b[ok]
        # Gauss points in the local variable of each knot interval, where -dJ/dx
        # is bounded by the triangle areas (near-atoms stay finite)
        m = np.clip(self.interval(0.5 * a + 0.5 * b), 0, self.knots.size - 1)
        k0, wid = self._kn[m], self._width[m]
        xa = (a / self._scale - k0) / wid
        xb = (b / self._scale - k0) / wid
        mid, half = 0.5 * (xa + xb), 0.5 * (xb - xa)
        x = mid[:, None] + half[:, None] * _GL2[None, :]
        c = self.C[m]
        dens = -(c[:, 1:2] + 2.0 * x * c[:, 2:3])
        t = (k0[:, None] + x * wid[:, None]) * self._scale
        total = float(np.sum(half[:, None] * g(t) * dens))
        at = (k > lo) & (k <= hi) & (self.atoms > 0)
        if np.any(at):
            total += float(np.sum(g(k[at]) * self.atoms[at]))
        return total

    def inverse(self, s):
        """u^#(s) = sup{t : J(t) > s} by bisection inside the bracketing knot interval."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        Jk = self(self.knots)
        # J is nonincreasing: the answer lies in the interval whose J range covers s
        out = np.empty_like(s)
        for i, si in enumerate(s):
            if si >= self.total:
                out[i] = 0.0
                continue
            if si < 0:
                out[i] = self.u_max
                continue
            m = int(np.searchsorted(-Jk, -si, side="left")) - 1
            if m < 0:
                out[i] = self.u_min
                continue
            lo = self.knots[m]
            hi = self.knots[m + 1] if m + 1 < self.knots.size else self.u_max
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if self(mid) > si:
                    lo = mid
                else:
                    hi = mid
            out[i] = lo
        return out


# ---------------------------------------------------------------------------
# Radial profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Function of the volume coordinate s in [0, volume], piecewise linear on ``s``."""

    s: np.ndarray
    values: np.ndarray
    kind: str
    volume: float
    N: int = 2

    def __post_init__(self):
        s = np.array(self.s, dtype=float)
        v = np.array(self.values, dtype=float)
        if self.kind not in PROFILE_KINDS:
            raise ProfileError(f"unknown profile kind {self.kind!r}")
        if s.shape != v.shape or s.ndim != 1 or s.size < 2:
            raise ProfileError("s and values must be matching 1-d arrays")
        if np.any(np.diff(s) <= 0):
            raise ProfileError("s grid must be strictly increasing")
        s.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "values", v)

    def __call__(self, s):
        out = np.interp(s, self.s, self.values, left=self.values[0], right=0.0)
        return float(out) if np.ndim(out) == 0 else out

    @property
    def radius(self):
        return (self.volume / constants.omega(self.N)) ** (1.0 / self.N)

    def is_nonincreasing(self):
        return bool(np.all(np.diff(self.values) <= 0))

    def slopes(self):
        return np.diff(self.values) / np.diff(self.s)

    def at_points(self, x, center=(0.0, 0.0)):
        """Evaluate as a radial function of x (s = omega_N |x - center|^N)."""
        d = np.asarray(x, dtype=float) - np.asarray(center, dtype=float)
        r = np.sqrt(np.sum(d * d, axis=-1))
        return self(constants.omega(self.N) * r ** self.N)

    def integral(self):
        """Exact integral over [0, volume] (trapezoid rule on the piecewise-linear data)."""
        return float(np.sum(0.5 * (self.values[1:] + self.values[:-1]) * np.diff(self.s)))

    def with_kind(self, kind):
        return RadialProfile(self.s, self.values, kind, self.volume, self.N)


def write_profile(path, profile):
    lines = [f"# kind={profile.kind} volume={profile.volume!r}"]
    lines += ["%.17g %.17g" % (a, b) for a, b in zip(profile.s, profile.values)]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_profile(path, N=2):
    with open(path) as fh:
        head = fh.readline().strip()
        data = np.loadtxt(fh, ndmin=2)
    fields = dict(item.split("=", 1) for item in head.lstrip("# ").split())
    return RadialProfile(data[:, 0], data[:, 1], fields["kind"], float(fields["volume"]), N)


# ---------------------------------------------------------------------------
# Level curve data
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LevelCurveData:
    """Level quantities of u on ``t_grid``: J = |{u > t}|, I = int_{u>t} f(u), K = I^alpha J^beta."""

    t_grid: np.ndarray
    J: np.ndarray
    I: Optional[np.ndarray]
    K: Optional[np.ndarray]
    dist: Distribution
    alpha: Optional[float] = None
    beta: Optional[float] = None
    N: int = 2

    @property
    def total(self):
        return self.dist.total

    @property
    def M(self):
        return self.dist.u_max


def distribution_curve(u, n_levels=256, *, nl=None, p=None, N=2):
    """Exact level data of the P1 function ``u`` (a MeshFunction).

    Levels are nodal-value quantiles together with every breakpoint of f
    below max u.  I and K need ``nl`` (and ``p`` for K).
    """
    if n_levels < 64:
        raise ValueError("n_levels must be at least 64")
    vals = np.asarray(u.values, dtype=float)
    if np.any(vals < 0):
        raise ValueError("distribution_curve expects u >= 0")
    dist = Distribution(u.mesh, vals)
    M = dist.u_max
    t = np.quantile(vals, np.linspace(0.0, 1.0, n_levels))
    extra = [0.0, M]
    if nl is not None:
        extra += [b for b in nl.breakpoints if b < M]
    t = np.union1d(t, extra)
    J = dist(t)
    I = K = alpha = beta = None
    if nl is not None:
        I = level_integral_curve(dist, nl, t)
        if p is not None:
            alpha, beta = constants.exponents(p, N)
            with np.errstate(divide="ignore", invalid="ignore"):
                K = np.where(J > 0, I ** alpha * np.where(J > 0, J, 1.0) ** beta, 0.0)
    return LevelCurveData(t, J, I, K, dist, alpha, beta, N)


def level_integral_curve(dist, nl, t):
    """I(t) = integral of f(u) over {u > t} for every level in ``t`` (exact)."""
    t = np.asarray(t, dtype=float)
    order = np.argsort(t)
    ts = t[order]
    edges = np.concatenate([ts, [max(dist.u_max, ts[-1])]])
    seg = np.array([dist.integrate(nl, a, b, nl.breakpoints) if b > a else 0.0
                    for a, b in zip(edges[:-1], edges[1:])])
    tail = np.cumsum(seg[::-1])[::-1]
    out = np.empty_like(t)
    out[order] = tail
    return out


def decreasing_rearrangement(lcd, samples_per_interval=3):
    """u^# on [0, |Omega|] as a piecewise-linear profile through exact graph points.

    Points (J(t), t) are taken at every knot and ``samples_per_interval`` interior
    levels of each knot interval; right-continuity of J and monotone
    construction make the result nonincreasing exactly.
    """
    dist = lcd.dist
    k = dist.knots
    frac = np.arange(1, samples_per_interval + 1) / (samples_per_interval + 1)
    inner = (k[:-1, None] + (k[1:] - k[:-1])[:, None] * frac[None, :]).ravel()
    t = np.unique(np.concatenate([k, inner]))
    s = dist(t)
    # graph of a nonincreasing function: keep strictly decreasing s (largest t wins on ties)
    t_desc, s_desc = t[::-1], s[::-1]
    s_pts = np.concatenate([[0.0], s_desc])
    t_pts = np.concatenate([[dist.u_max], t_desc])
    run = np.maximum.accumulate(s_pts)
    keep = np.concatenate([[True], s_pts[1:] > run[:-1]])
    s_pts, t_pts = s_pts[keep], t_pts[keep]
    # extend to the full volume: u^# vanishes past the support
    if s_pts[-1] < dist.total:
        s_pts = np.append(s_pts, dist.total)
        t_pts = np.append(t_pts, min(dist.u_min, t_pts[-1]))
    t_pts = np.minimum.accumulate(t_pts)
    return RadialProfile(s_pts, t_pts, U_SHARP, dist.total, lcd.N)


def schwarz_evaluate(profile, x):
    """u*(x) = u^#(omega_N |x|^N); zero outside the ball of volume |Omega|."""
    if profile.kind not in (U_SHARP, U_STAR):
        raise ProfileError("schwarz_evaluate needs a u_sharp profile")
    return profile.at_points(x)


def grad_p_norm_radial(profile, p, N=2):
    """Integral of |grad u*|^p for piecewise-linear u^#.

    With |grad u*| = |du^#/ds| kappa_N s^{(N-1)/N}, each interval integrates to
    |d|^p kappa^p [s^{q+1}/(q+1)] with q = p(N-1)/N.
    """
    if not profile.is_nonincreasing():
        raise ProfileError("profile must be nonincreasing")
    d = np.abs(profile.slopes())
    q = p * (N - 1) / N
    s = profile.s
    seg = (s[1:] ** (q + 1) - s[:-1] ** (q + 1)) / (q + 1)
    return float(constants.kappa(N) ** p * np.sum(d ** p * seg))


def ps_deficit(u, p, profile=None, energy=None, N=2):
    """Relative energy excess int |grad u|^p / int |grad u*|^p - 1.

    ``u`` must vanish on the boundary: otherwise u^# has a cusp at s = |Omega|
    and the symmetrized energy is not comparable (it diverges for p >= 2).
    """
    from .solver import dirichlet_energy_p

    if np.any(np.asarray(u.values)[u.mesh.boundary_mask] != 0):
        raise ProfileError("ps_deficit needs u = 0 on the boundary")

    if profile is None:
        profile = decreasing_rearrangement(distribution_curve(u))
    den = grad_p_norm_radial(profile, p, N)
    if not den > 0:
        raise ZeroDivisionError("symmetrized energy vanishes")
    num = dirichlet_energy_p(u, p) if energy is None else energy
    return num / den - 1.0


def gradient_smallness(profile, delta, N=2, total=None):
    """|{0 < u* < max, |grad u*| <= delta}| / total.

    Within an interval |grad u*| grows like s^{(N-1)/N}, so the set is an
    explicit initial segment of each interval.
    """
    if total is None:
        total = profile.volume
    v = profile.values
    s = profile.s
    d = np.abs(profile.slopes())
    kap = constants.kappa(N)
    top, bottom = v[0], 0.0
    # intervals where the profile is strictly between 0 and its max
    inside = (np.maximum(v[1:], v[:-1]) > bottom) & (np.minimum(v[1:], v[:-1]) < top)
    flat_top = (v[1:] == top) & (v[:-1] == top)
    flat_bottom = (v[1:] == bottom) & (v[:-1] == bottom)
    inside &= ~flat_top & ~flat_bottom
    with np.errstate(divide="ignore"):
        s_cut = np.where(d > 0, (delta / (kap * np.where(d > 0, d, 1.0))) ** (N / (N - 1)), np.inf)
    meas = np.clip(np.minimum(s_cut, s[1:]) - s[:-1], 0.0, None)
    return float(min(1.0, np.sum(meas[inside]) / total))


# ---------------------------------------------------------------------------
# Translation-minimized L1 asymmetry
# ---------------------------------------------------------------------------

def _asym_objective(mesh, uq, profile, int_u, int_us):
    x = mesh.nodes[mesh.triangles]
    pts = np.einsum("qk,mkd->mqd", DUNAVANT7_POINTS, x)
    w = mesh.areas[:, None] * DUNAVANT7_WEIGHTS[None, :]
    om = constants.omega(profile.N)

    def f(x0):
        d = pts + np.asarray(x0)[None, None, :]
        us = profile(om * np.einsum("mqd,mqd->mq", d, d) ** (profile.N / 2))
        return int_u + int_us - 2.0 * float(np.sum(w * np.minimum(uq, us)))

    return f


def l1_asymmetry(u, profile, span=None, return_shift=False):
    """min over x0 of the integral of |u(x) - u*(x + x0)|.

    Uses the identity |a - b| = a + b - 2 min(a, b) for a, b >= 0; the search is a
    5 x 5 grid around minus the barycenter of u followed by pattern search at
    three scales.
    """
    mesh = u.mesh
    vals = np.asarray(u.values, dtype=float)
    uT = vals[mesh.triangles]
    int_u = float(np.sum(mesh.areas * uT.mean(axis=1)))
    if int_u <= 0:
        return (0.0, np.zeros(2)) if return_shift else 0.0
    uq = uT @ DUNAVANT7_POINTS.T
    int_us = profile.integral()
    obj = _asym_objective(mesh, uq, profile, int_u, int_us)
    cxy = mesh.nodes[mesh.triangles].mean(axis=1)
    bary = np.sum((mesh.areas * uT.mean(axis=1))[:, None] * cxy, axis=0) / int_u
    x0 = -bary
    if span is None:
        span = 0.1 * profile.radius
    best = obj(x0)
    grid = np.linspace(-span, span, 5)
    for dx in grid:
        for dy in grid:
            cand = x0 + np.array([dx, dy])
            val = obj(cand)
            if val < best:
                best, xb = val, cand
    x0 = xb if "xb" in locals() else x0
    dirs = np.array([[1, 0], [-1, 0], [0, 1], [0, -1], [1, 1], [1, -1], [-1, 1], [-1, -1]], float)
    step = span / 2
    for _ in range(3):
        for _ in range(12):
            moved = False
            for d in dirs:
                cand = x0 + step * d
                val = obj(cand)
                if val < best:
                    best, x0, moved = val, cand, True
                    break
            if not moved:
                break
        step /= 4
    best = max(best, 0.0)
    return (best, x0) if return_shift else best
