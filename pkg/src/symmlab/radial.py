"""Radial solution of the symmetrized problem in the volume coordinate.

Given u^# on [0, A] and f, the radial solution on the ball of volume A is

    v(xi0) = kappa^{-alpha} * int_{xi0}^{A} xi^{beta-1} G(xi)^{alpha-1} d xi,
    G(xi)  = int_0^xi f(u^#(s)) ds,

with alpha = p/(p-1), beta = (p-N)/(N(p-1)).  G is computed exactly (f is
piecewise affine and u^# piecewise linear).  The outer integral uses 8-point
Gauss-Legendre per interval, except on the first interval where the weight
xi^{alpha+beta-2} is integrated by Gauss-Jacobi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from . import constants
from .rearrange import GRAD, U_SHARP, U_STAR, V, RadialProfile


class RadialError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SymmetrizedSolution:
    v_profile: RadialProfile
    grad_profile: RadialProfile
    p: float
    N: int
    volume: float
    G: np.ndarray          # inner integral at the v grid
    u_values: np.ndarray   # u^# resampled on the v grid
    f_slope: np.ndarray    # per-interval affine data of f(u^#): value at left end, slope in s
    f_left: np.ndarray


def _augment(profile, nl):
    """Grid of ``profile`` refined where u^# crosses a breakpoint of f."""
    s, u = profile.s, profile.values
    extra = []
    for tau in nl.breakpoints:
        # crossings strictly inside an interval
        a, b = u[:-1], u[1:]
        hit = np.flatnonzero((a > tau) & (b < tau))
        if hit.size:
            w = (a[hit] - tau) / (a[hit] - b[hit])
            extra.append(s[hit] + w * (s[hit + 1] - s[hit]))
    if not extra:
        return s.copy(), u.copy()
    s2 = np.union1d(s, np.concatenate(extra))
    return s2, np.interp(s2, s, u)


def _inner(s, u, nl):
    """Exact G at the grid and the affine data of f(u^#) on each interval."""
    mid = 0.5 * (u[1:] + u[:-1])
    k = nl.piece_index(mid)
    a, b = nl.a[k], nl.b[k]
    f_left = a + b * u[:-1]
    f_right = a + b * u[1:]
    ds = np.diff(s)
    G = np.concatenate([[0.0], np.cumsum(0.5 * (f_left + f_right) * ds)])
    slope = (f_right - f_left) / ds
    return G, f_left, slope


def solve_symmetrized(u_sharp, nl, p, N=2, n_gauss=8):
    """Radial solution v with data f(u^#) on the ball of volume |Omega|."""
    if u_sharp.kind not in (U_SHARP, U_STAR):
        raise RadialError("solve_symmetrized needs a u_sharp profile")
    if not u_sharp.is_nonincreasing():
        raise RadialError("u^# must be nonincreasing")
    if not p > 1:
        raise RadialError("p must exceed 1")
    alpha, beta = constants.exponents(p, N)
    if alpha + beta - 1 <= 0:
        raise RadialError("outer integral diverges at the origin for these exponents")
    s, u = _augment(u_sharp, nl)
    G, f_left, slope = _inner(s, u, nl)
    if s[0] != 0.0:
        raise RadialError("profile must start at s = 0")
    kap = constants.kappa(N)
    xg, wg = roots_legendre(n_gauss)
    # interval j: integrand xi^{beta-1} G(xi)^{alpha-1}, G(xi) = G_j + f_j x + c_j x^2/2, x = xi - s_j
    a0, b0 = s[:-1], s[1:]
    half = 0.5 * (b0 - a0)
    xi = (a0 + b0)[:, None] / 2 + half[:, None] * xg[None, :]
    x = xi - a0[:, None]
    Gx = G[:-1, None] + f_left[:, None] * x + 0.5 * slope[:, None] * x * x
    seg = half * np.sum(wg[None, :] * xi ** (beta - 1) * np.maximum(Gx, 0.0) ** (alpha - 1), axis=1)
    # first interval: G = xi (f0 + c xi/2), so integrand = xi^{alpha+beta-2} (f0 + c xi/2)^{alpha-1}
    xj, wj = roots_jacobi(n_gauss, 0.0, alpha + beta - 2)
    L = s[1]
    xi1 = 0.5 * L * (xj + 1.0)
    smooth = np.maximum(f_left[0] + 0.5 * slope[0] * xi1, 0.0) ** (alpha - 1)
    seg[0] = (0.5 * L) ** (alpha + beta - 1) * np.sum(wj * smooth)
    v = kap ** (-alpha) * np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    v = np.minimum.accumulate(v)
    vol = u_sharp.volume
    om = constants.omega(N)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = (s / om) ** (1.0 / N)
        mean = np.where(s > 0, G / np.where(s > 0, s, 1.0), f_left[0])
        grad = (r / N) ** (1.0 / (p - 1)) * mean ** (1.0 / (p - 1))
    grad[0] = 0.0
    vp = RadialProfile(s, v, V, vol, N)
    gp = RadialProfile(s, grad, GRAD, vol, N)
    return SymmetrizedSolution(vp, gp, p, N, vol, G, u, slope, f_left)


def inner_integral(sol, s):
    """G(s) = integral of f(u^#) over [0, s]."""
    grid = sol.v_profile.s
    s = np.asarray(s, dtype=float)
    j = np.clip(np.searchsorted(grid, s, side="right") - 1, 0, grid.size - 2)
    x = s - grid[j]
    return sol.G[j] + sol.f_left[j] * x + 0.5 * sol.f_slope[j] * x * x


def grad_v(sol, r):
    """|grad v| at radius r: (r/N)^{1/(p-1)} times the ball mean of f(u^#) to the 1/(p-1)."""
    R = sol.v_profile.radius
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(r > R * (1 + 1e-12)):
        raise RadialError(f"radius outside [0, {R:g}]")
    N, p = sol.N, sol.p
    s = np.minimum(constants.omega(N) * r ** N, sol.volume)
    with np.errstate(divide="ignore", invalid="ignore"):
        mean = np.where(s > 0, inner_integral(sol, s) / np.where(s > 0, s, 1.0), 0.0)
    out = np.where(r > 0, (r / N) ** (1.0 / (p - 1)) * mean ** (1.0 / (p - 1)), 0.0)
    return float(out) if out.ndim == 0 else out


def talenti_gap(sol, u_star):
    """(min, sup) of v - u* and |v - u*| on the union of both grids."""
    s = np.union1d(sol.v_profile.s, u_star.s)
    d = sol.v_profile(s) - u_star(s)
    return float(d.min()), float(np.max(np.abs(d)))


def talenti_bound_constant(N, p, M_f, m_f, sigma):
    """Constant N(p-1)/(p sigma m_f) + N(p-1) M_f^{1/(p-1)} / (p kappa_N^{p/(p-1)})."""
    for name, val in (("M_f", M_f), ("m_f", m_f), ("sigma", sigma)):
        if not val > 0:
            raise ValueError(f"{name} must be positive")
    kap = constants.kappa(N)
    return N * (p - 1) / (p * sigma * m_f) + N * (p - 1) * M_f ** (1.0 / (p - 1)) / (p * kap ** (p / (p - 1)))


def grad_energy(sol):
    """Integral of |grad v|^p over the ball, from the gradient profile (trapezoid in s)."""
    g = sol.grad_profile.values ** sol.p
    return float(np.sum(0.5 * (g[1:] + g[:-1]) * np.diff(sol.grad_profile.s)))


def exact_ball_value(p, N, volume=None):
    """v(0) for f = 1: (p-1)/p N^{-1/(p-1)} R^{p/(p-1)} on the ball of the given volume."""
    if volume is None:
        volume = constants.omega(N)
    R = (volume / constants.omega(N)) ** (1.0 / N)
    return (p - 1) / p * N ** (-1.0 / (p - 1)) * R ** (p / (p - 1))


def flat_profile(volume, value=1.0, n=65, N=2):
    """Linear profile from ``value`` at 0 to 0 at ``volume`` (useful for f = const oracles)."""
    s = np.linspace(0.0, volume, n)
    return RadialProfile(s, value * (1 - s / volume), U_SHARP, volume, N)
