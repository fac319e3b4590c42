"""Exact integration of f(u), F(u), u f(u) for P1 functions u and piecewise-affine f.

On a triangle where no breakpoint of f lies strictly between the nodal
extremes, f(u) is affine and F(u), u f(u) are quadratic, so the edge-midpoint
rule is exact.  Triangles crossed by a breakpoint are clipped into level bands
(in barycentric coordinates) and each band is fan-triangulated and integrated
with its own affine piece.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# edge midpoints in barycentric coordinates, weight 1/3 each
_MID = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])

# 7-point degree-5 rule (Dunavant) on the reference triangle, barycentric points
_a1, _b1 = 0.0597158717897698204, 0.470142064105115090
_a2, _b2 = 0.797426985353087322, 0.101286507323456339
DUNAVANT7_POINTS = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [_a1, _b1, _b1], [_b1, _a1, _b1], [_b1, _b1, _a1],
    [_a2, _b2, _b2], [_b2, _a2, _b2], [_b2, _b2, _a2],
])
DUNAVANT7_WEIGHTS = np.array([0.225] + [0.132394152788506181] * 3 + [0.125939180544827153] * 3)


@dataclass(frozen=True)
class LevelIntegrals:
    """Integrals over the mesh of f(u), F(u) and u f(u), plus the split count."""

    int_f: float
    int_F: float
    int_uf: float
    n_split: int


def _clip(poly, lam_u, level, keep_above):
    """Sutherland-Hodgman clip of a barycentric polygon against u >= level (or <=)."""
    out = []
    n = len(poly)
    if n == 0:
        return out
    vals = [float(np.dot(q, lam_u)) - level for q in poly]
    if not keep_above:
        vals = [-v for v in vals]
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        va, vb = vals[i], vals[(i + 1) % n]
        if va >= 0:
            out.append(a)
        if (va >= 0) != (vb >= 0):
            w = va / (va - vb)
            out.append(a + w * (b - a))
    return out


def _band_pieces(uT, nl):
    """Barycentric sub-triangles of one triangle with their active piece index."""
    lo, hi = uT.min(), uT.max()
    cuts = nl.breakpoints[(nl.breakpoints > lo) & (nl.breakpoints < hi)]
    edges = np.concatenate([[lo], cuts, [hi]])
    base = [np.eye(3)[k] for k in range(3)]
    out = []
    for j in range(len(edges) - 1):
        poly = base
        if j > 0:
            poly = _clip(poly, uT, edges[j], True)
        if j < len(edges) - 2:
            poly = _clip(poly, uT, edges[j + 1], False)
        if len(poly) < 3:
            continue
        k = int(nl.piece_index(0.5 * (edges[j] + edges[j + 1])))
        for m in range(1, len(poly) - 1):
            tri = np.array([poly[0], poly[m], poly[m + 1]])
            frac = abs(np.linalg.det(tri))
            if frac > 0:
                out.append((tri, frac, k))
    return out


def _split_mask(mesh, u, nl):
    uT = u[mesh.triangles]
    lo, hi = uT.min(axis=1), uT.max(axis=1)
    bp = nl.breakpoints
    if bp.size == 0:
        return np.zeros(len(uT), dtype=bool), uT
    crossed = np.any((bp[None, :] > lo[:, None]) & (bp[None, :] < hi[:, None]), axis=1)
    return crossed, uT


def _piece_values(nl, k, x):
    """f, F and t f(t) at points x inside piece k (arrays broadcast)."""
    a, b = nl.a[k], nl.b[k]
    f = a + b * x
    tk = nl.t[k]
    F = nl._F0[k] + a * (x - tk) + 0.5 * b * (x ** 2 - tk ** 2)
    return f, F, x * f


def level_integrals(mesh, u, nl):
    """Exact integrals of f(u), F(u), u f(u) over the mesh for nodal values ``u``."""
    u = np.asarray(u, dtype=float)
    crossed, uT = _split_mask(mesh, u, nl)
    area = mesh.areas
    keep = ~crossed
    # non-crossed: piece from the triangle mean (strictly inside the value range)
    k = nl.piece_index(uT[keep].mean(axis=1))
    xq = uT[keep] @ _MID.T  # (m, 3) values at edge midpoints
    f, F, uf = _piece_values(nl, k[:, None], xq)
    w = area[keep][:, None] / 3.0
    tot = np.array([np.sum(w * f), np.sum(w * F), np.sum(w * uf)])
    for t in np.flatnonzero(crossed):
        for tri, frac, kk in _band_pieces(uT[t], nl):
            xq = (_MID @ tri) @ uT[t]
            f, F, uf = _piece_values(nl, kk, xq)
            wt = area[t] * frac / 3.0
            tot += wt * np.array([f.sum(), F.sum(), uf.sum()])
    return LevelIntegrals(float(tot[0]), float(tot[1]), float(tot[2]), int(crossed.sum()))


def load_vector(mesh, u, nl):
    """Vector b_i = integral of f(u) phi_i, exact for P1 ``u`` and piecewise-affine f."""
    u = np.asarray(u, dtype=float)
    crossed, uT = _split_mask(mesh, u, nl)
    area = mesh.areas
    keep = np.flatnonzero(~crossed)
    k = nl.piece_index(uT[keep].mean(axis=1))
    xq = uT[keep] @ _MID.T
    f = nl.a[k][:, None] + nl.b[k][:, None] * xq  # (m, 3)
    # local load: sum_q w f(x_q) lambda_i(x_q)
    loc = (area[keep][:, None] / 3.0) * (f @ _MID)
    b = np.bincount(mesh.triangles[keep].ravel(), loc.ravel(), minlength=mesh.n_nodes)
    for t in np.flatnonzero(crossed):
        locT = np.zeros(3)
        for tri, frac, kk in _band_pieces(uT[t], nl):
            lam = _MID @ tri
            fq = nl.a[kk] + nl.b[kk] * (lam @ uT[t])
            locT += area[t] * frac / 3.0 * (fq @ lam)
        np.add.at(b, mesh.triangles[t], locT)
    return b


def p1_load_vector(mesh, g):
    """Vector b_i = integral of g_h phi_i for the P1 interpolant g_h of nodal ``g``."""
    g = np.asarray(g, dtype=float)
    gT = g[mesh.triangles]
    loc = (mesh.areas[:, None] / 12.0) * (gT + gT.sum(axis=1, keepdims=True))
    return np.bincount(mesh.triangles.ravel(), loc.ravel(), minlength=mesh.n_nodes)


def quad7(mesh, fun):
    """Integrate ``fun(xy) -> values`` over the mesh with the 7-point degree-5 rule."""
    x = mesh.nodes[mesh.triangles]  # (m, 3, 2)
    pts = np.einsum("qk,mkd->mqd", DUNAVANT7_POINTS, x)
    vals = np.asarray(fun(pts.reshape(-1, 2))).reshape(pts.shape[:2])
    return float(np.sum(mesh.areas * (vals @ DUNAVANT7_WEIGHTS)))
