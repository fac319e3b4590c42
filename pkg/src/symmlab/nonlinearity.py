"""Piecewise-affine nonlinearities f(t) with exact antiderivative and bounds.

``f`` is stored as breakpoints ``0 = t_0 < t_1 < ... < t_{k-1}`` and one affine
piece ``a_i + b_i t`` on each ``[t_i, t_{i+1})`` (the last piece extends to
infinity).  Values at a breakpoint are right limits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .verdict import FAIL, INCOMPLETE, PASS, Verdict


class HypothesisError(ValueError):
    """The nonlinearity violates a structural hypothesis (for example m_f <= 0)."""


class NonlinearityError(ValueError):
    """Malformed nonlinearity description."""


@dataclass(frozen=True)
class FBounds:
    M: float
    m_f: float
    M_f: float
    nl: "Nonlinearity"

    def F_at(self, t):
        return self.nl.antiderivative(t)


class Nonlinearity:
    """Piecewise-affine f >= 0 with optional comparison pair (phi, s)."""

    def __init__(self, breakpoints, a, b=None, phi=None, s=None, spec=None):
        t = np.asarray(breakpoints, dtype=float)
        a = np.asarray(a, dtype=float)
        b = np.zeros_like(a) if b is None else np.asarray(b, dtype=float)
        if t.ndim != 1 or t.size == 0 or t[0] != 0.0:
            raise NonlinearityError("breakpoints must start at 0")
        if np.any(np.diff(t) <= 0):
            raise NonlinearityError("breakpoints must be strictly increasing")
        if a.shape != t.shape or b.shape != t.shape:
            raise NonlinearityError("one (a, b) pair per piece is required")
        if np.any(b[-1:] < 0):
            raise NonlinearityError("last piece must be nondecreasing to keep f >= 0 at infinity")
        # f >= 0 on every piece: check both ends (right end as a left limit)
        ends = np.append(t[1:], t[-1])
        if np.any(a + b * t < 0) or np.any(a + b * ends < 0):
            raise NonlinearityError("f must be nonnegative on [0, inf)")
        if phi is not None:
            if not isinstance(phi, Nonlinearity):
                raise NonlinearityError("phi must be a Nonlinearity")
            if np.any(phi.b != 0):
                raise NonlinearityError("phi must be piecewise constant")
            if np.any(np.diff(phi.a) > 0):
                raise NonlinearityError("phi must be nonincreasing")
            if s is None or not s > 0:
                raise NonlinearityError("comparison exponent s must be positive")
        elif s is not None:
            raise NonlinearityError("s given without phi")
        for arr in (t, a, b):
            arr.setflags(write=False)
        self.t, self.a, self.b = t, a, b
        self.phi = phi
        self.s = None if s is None else float(s)
        self.spec = spec if spec is not None else self._default_spec()
        # F at each breakpoint
        widths = np.diff(t)
        seg = a[:-1] * widths + 0.5 * b[:-1] * (t[1:] ** 2 - t[:-1] ** 2)
        self._F0 = np.concatenate([[0.0], np.cumsum(seg)])

    def _default_spec(self):
        if self.t.size == 1 and self.b[0] == 0:
            return f"const:{self.a[0]!r}"
        if self.t.size == 1:
            return f"affine:{self.a[0]!r},{self.b[0]!r}"
        if np.all(self.b == 0):
            return "step:" + ":".join(f"{v!r}@{x!r}" for v, x in zip(self.a, self.t))
        return "pw:" + ":".join(f"{u!r},{v!r}@{x!r}" for u, v, x in zip(self.a, self.b, self.t))

    def __repr__(self):
        extra = "" if self.phi is None else f", phi={self.phi.spec!r}, s={self.s!r}"
        return f"Nonlinearity({self.spec!r}{extra})"

    def __eq__(self, other):
        return (isinstance(other, Nonlinearity) and np.array_equal(self.t, other.t)
                and np.array_equal(self.a, other.a) and np.array_equal(self.b, other.b)
                and self.phi == other.phi and self.s == other.s)

    def __hash__(self):
        return hash((self.t.tobytes(), self.a.tobytes(), self.b.tobytes(), self.s))

    # -- structure -------------------------------------------------------------

    @property
    def breakpoints(self):
        """Interior breakpoints t_1, ..., t_{k-1} (where f may jump or kink)."""
        return self.t[1:]

    @property
    def n_pieces(self):
        return self.t.size

    @property
    def is_constant(self):
        return self.t.size == 1 and self.b[0] == 0

    def piece_index(self, t):
        """Index of the piece active at ``t`` (right-continuous)."""
        return np.clip(np.searchsorted(self.t, t, side="right") - 1, 0, self.t.size - 1)

    def with_comparison(self, phi, s):
        return Nonlinearity(self.t, self.a, self.b, phi, s, self.spec)

    # -- evaluation ------------------------------------------------------------

    def __call__(self, t):
        return eval_f(self, t)

    def left_limit(self, t):
        t = np.asarray(t, dtype=float)
        k = np.clip(np.searchsorted(self.t, t, side="left") - 1, 0, self.t.size - 1)
        return self.a[k] + self.b[k] * t

    def antiderivative(self, t):
        return antiderivative(self, t)

    def piece_moments(self, k, lo, hi):
        """Exact integrals of f, t f(t) and F over [lo, hi] inside piece ``k``."""
        a, b = self.a[k], self.b[k]
        d1 = hi - lo
        d2 = (hi ** 2 - lo ** 2) / 2
        d3 = (hi ** 3 - lo ** 3) / 3
        f_int = a * d1 + b * d2
        tf_int = a * d2 + b * d3
        # F(t) = F(t_k) + a (t - t_k) + b (t^2 - t_k^2)/2 on the piece
        tk = self.t[k]
        c0 = self._F0[k] - a * tk - b * tk ** 2 / 2
        F_int = c0 * d1 + a * d2 + b * d3 / 2
        return f_int, tf_int, F_int


def eval_f(nl, t):
    """f(t) with the right-limit convention at breakpoints."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("f is only defined for t >= 0")
    k = nl.piece_index(t)
    out = nl.a[k] + nl.b[k] * t
    return float(out) if out.ndim == 0 else out


def antiderivative(nl, t):
    """F(t) = integral of f over [0, t], exact for piecewise-affine f."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("F is only defined for t >= 0")
    k = nl.piece_index(t)
    tk = nl.t[k]
    out = nl._F0[k] + nl.a[k] * (t - tk) + 0.5 * nl.b[k] * (t ** 2 - tk ** 2)
    return float(out) if out.ndim == 0 else out


def _range_extrema(nl, lo, hi):
    """Inf and sup of f over [lo, hi], one-sided limits included."""
    vals = []
    for k in range(nl.n_pieces):
        start = nl.t[k]
        end = nl.t[k + 1] if k + 1 < nl.n_pieces else np.inf
        if start > hi or end <= lo:
            continue
        x0, x1 = max(start, lo), min(end, hi)
        vals.append(nl.a[k] + nl.b[k] * x0)
        vals.append(nl.a[k] + nl.b[k] * x1)
    return min(vals), max(vals)


def bounds(nl, M):
    """Exact ``m_f = inf_(0, M] f`` and ``M_f = sup_[0, M] f``.

    Raises HypothesisError if m_f <= 0.
    """
    if not M > 0:
        raise ValueError("M must be positive")
    m_f, M_f = _range_extrema(nl, 0.0, float(M))
    if not m_f > 0:
        raise HypothesisError(f"hypothesis m_f > 0 violated: inf of f over (0, {M:g}] is {m_f:g}")
    return FBounds(float(M), float(m_f), float(M_f), nl)


def check_hypotheses(nl, p, N, M):
    """Verdict on the growth condition phi <= f <= ((N p - s)/(N - p)) phi for p < N.

    For p >= N no comparison pair is needed.  Otherwise f is affine and phi
    constant between consecutive breakpoints of either, so checking both
    one-sided limits at every breakpoint in [0, M] is exhaustive.
    """
    if p <= 1:
        raise ValueError("p must exceed 1")
    if p >= N:
        return Verdict("hypotheses", PASS, reason="p >= N: no comparison pair required")
    if nl.phi is None:
        return Verdict("hypotheses", INCOMPLETE, reason="p < N and no comparison pair (phi, s) given")
    s = nl.s
    factor = (N * p - s) / (N - p)
    pts = np.union1d(nl.t, nl.phi.t)
    pts = np.union1d(pts[pts <= M], [float(M)])
    worst, worst_t = np.inf, None
    checks = [(pts[pts > 0], nl.left_limit, nl.phi.left_limit), (pts[pts < M], nl.__call__, nl.phi.__call__)]
    for tt, fv, pv in checks:
        if tt.size == 0:
            continue
        f = np.atleast_1d(fv(tt))
        ph = np.atleast_1d(pv(tt))
        slack = np.minimum(f - ph, factor * ph - f)
        slack = np.where(ph < 0, -np.inf, slack)
        i = int(np.argmin(slack))
        if slack[i] < worst:
            worst, worst_t = float(slack[i]), float(tt[i])
    detail = {"upper_factor": factor, "s": s, "min_slack": worst, "t_worst": worst_t}
    if worst >= 0:
        return Verdict("hypotheses", PASS, margin=worst, detail=detail)
    return Verdict("hypotheses", FAIL, margin=worst, detail=detail,
                   reason=f"comparison condition fails at t={worst_t:g}")


def sigma(p, N, s=None):
    """Exponent 1 + p/(N(p-1)) for p >= N, or s/(N(p-1)) for p < N."""
    if p <= 1:
        raise ValueError("p must exceed 1")
    if p >= N:
        return 1.0 + p / (N * (p - 1.0))
    if s is None:
        raise ValueError("p < N requires the comparison exponent s")
    if not s > 0:
        raise ValueError("s must be positive")
    return s / (N * (p - 1.0))


def parse(spec, phi=None, s=None):
    """Parse ``const:c``, ``affine:a,b``, ``step:v0@t0:v1@t1:...`` or ``pw:a,b@t:...``."""
    if isinstance(spec, Nonlinearity):
        return spec if phi is None else spec.with_comparison(phi, s)
    if isinstance(phi, str):
        phi = parse(phi)
    try:
        kind, _, body = spec.strip().partition(":")
        kind = kind.strip().lower()
        if kind == "const":
            nl = Nonlinearity([0.0], [float(body)], spec=spec, phi=phi, s=s)
        elif kind == "affine":
            a, b = (float(v) for v in body.split(","))
            nl = Nonlinearity([0.0], [a], [b], spec=spec, phi=phi, s=s)
        elif kind in ("step", "pw"):
            ts, aa, bb = [], [], []
            for item in body.split(":"):
                val, _, thr = item.partition("@")
                if not thr:
                    raise NonlinearityError(f"missing '@threshold' in {item!r}")
                ts.append(float(thr))
                if kind == "step":
                    aa.append(float(val))
                    bb.append(0.0)
                else:
                    u, v = (float(x) for x in val.split(","))
                    aa.append(u)
                    bb.append(v)
            nl = Nonlinearity(ts, aa, bb, spec=spec, phi=phi, s=s)
        else:
            raise NonlinearityError(f"unknown nonlinearity kind {kind!r}")
    except NonlinearityError:
        raise
    except ValueError as exc:
        raise NonlinearityError(f"cannot parse nonlinearity {spec!r}: {exc}") from exc
    return nl
