"""Planar star-shaped domains, their isoperimetric deficit, and polar ring meshes.

Domains are stored as dense counterclockwise polygons.  Meshes are built by
joining scaled copies of the boundary ("rings") around the star center, so
every target domain gets a deterministic, conforming P1 triangulation
without a general-purpose mesher.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from . import constants

MIN_BOUNDARY_VERTICES = 16
DEFAULT_BOUNDARY_VERTICES = 4096


class GeometryError(ValueError):
    """Invalid domain parameters or a domain the mesher cannot handle."""


def _shoelace(xy):
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _perimeter(xy):
    return float(np.sum(np.hypot(*(np.roll(xy, -1, axis=0) - xy).T)))


def _segments_intersect(xy):
    """Brute-force check for a pair of non-adjacent crossing edges."""
    n = len(xy)
    a = xy
    b = np.roll(xy, -1, axis=0)
    for i in range(n):
        j = np.arange(i + 2, n)
        if i == 0:
            j = j[j != n - 1]
        if j.size == 0:
            continue
        p, r = a[i], b[i] - a[i]
        q, s = a[j], b[j] - a[j]
        rxs = r[0] * s[:, 1] - r[1] * s[:, 0]
        qp = q - p
        t = (qp[:, 0] * s[:, 1] - qp[:, 1] * s[:, 0])
        u = (qp[:, 0] * r[1] - qp[:, 1] * r[0])
        ok = np.abs(rxs) > 0
        t = np.where(ok, t / np.where(ok, rxs, 1.0), -1.0)
        u = np.where(ok, u / np.where(ok, rxs, 1.0), -1.0)
        if np.any(ok & (t >= 0) & (t <= 1) & (u >= 0) & (u <= 1)):
            return True
    return False


def _star_shaped_about(xy, c):
    """True if polar angles around ``c`` increase strictly through one full turn."""
    d = xy - np.asarray(c, dtype=float)
    if np.any(np.hypot(d[:, 0], d[:, 1]) == 0.0):
        return False
    ang = np.arctan2(d[:, 1], d[:, 0])
    step = np.diff(np.concatenate([ang, ang[:1]]))
    step = np.mod(step, 2 * np.pi)
    return bool(np.all(step > 0) and np.all(step < np.pi) and abs(step.sum() - 2 * np.pi) < 1e-9)


@dataclass(frozen=True, eq=False)
class Domain:
    """A simply connected planar domain bounded by a counterclockwise polygon.

    ``area``, ``perimeter`` and ``iso_deficit`` are computed once from the vertex
    list.  ``trace_constant`` is an optional user-supplied Poincaré trace constant;
    it is never derived from the geometry.
    """

    boundary: np.ndarray
    center: tuple = (0.0, 0.0)
    trace_constant: Optional[float] = None
    label: str = "polygon"
    area: float = field(init=False)
    perimeter: float = field(init=False)
    iso_deficit: float = field(init=False)

    def __post_init__(self):
        xy = np.array(self.boundary, dtype=float)
        if xy.ndim != 2 or xy.shape[1] != 2 or len(xy) < 3:
            raise GeometryError("boundary must be an (n, 2) vertex array with n >= 3")
        a = _shoelace(xy)
        if a == 0.0 or not np.isfinite(a):
            raise GeometryError("degenerate boundary polygon (zero area)")
        if a < 0:
            xy = xy[::-1].copy()
            a = -a
        c = tuple(float(v) for v in self.center)
        if not _star_shaped_about(xy, c) and _segments_intersect(xy):
            raise GeometryError("boundary polygon is self-intersecting")
        if self.trace_constant is not None and not self.trace_constant > 0:
            raise GeometryError("trace_constant must be positive when given")
        xy.setflags(write=False)
        object.__setattr__(self, "boundary", xy)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "area", a)
        object.__setattr__(self, "perimeter", _perimeter(xy))
        object.__setattr__(self, "iso_deficit", iso_deficit(self))

    @property
    def n_vertices(self):
        return len(self.boundary)

    def is_star_shaped(self):
        return _star_shaped_about(self.boundary, self.center)

    def inradius(self):
        """Distance from the star center to the boundary polygon."""
        c = np.asarray(self.center)
        a = self.boundary
        b = np.roll(a, -1, axis=0)
        ab = b - a
        t = np.clip(np.einsum("ij,ij->i", c - a, ab) / np.einsum("ij,ij->i", ab, ab), 0.0, 1.0)
        proj = a + t[:, None] * ab
        return float(np.min(np.hypot(*(proj - c).T)))

    def scaled(self, factor):
        """Dilate about the origin; the deficit is unchanged."""
        c = tuple(factor * v for v in self.center)
        tc = None if self.trace_constant is None else self.trace_constant
        return Domain(self.boundary * factor, c, tc, self.label)

    def translated(self, shift):
        shift = np.asarray(shift, dtype=float)
        c = tuple(np.asarray(self.center) + shift)
        return Domain(self.boundary + shift, c, self.trace_constant, self.label)

    def with_trace_constant(self, value):
        return Domain(self.boundary, self.center, value, self.label)


def iso_deficit(domain, N=2):
    """Isoperimetric deficit P / (kappa_N |Omega|^((N-1)/N)) - 1 of a planar domain."""
    return domain.perimeter / (constants.kappa(N) * domain.area ** ((N - 1) / N)) - 1.0


def make_regular_polygon(n, radius=1.0, center=(0.0, 0.0), label=None):
    """Regular n-gon inscribed in the circle of the given radius."""
    if n < 3:
        raise GeometryError("a polygon needs at least 3 vertices")
    if not radius > 0:
        raise GeometryError("radius must be positive")
    th = 2 * np.pi * np.arange(n) / n
    xy = np.column_stack([radius * np.cos(th), radius * np.sin(th)]) + np.asarray(center, float)
    return Domain(xy, center, label=label or f"regular_{n}gon")


def make_disk(radius=1.0, n_boundary=DEFAULT_BOUNDARY_VERTICES, center=(0.0, 0.0)):
    """Disk approximated by the inscribed regular polygon with ``n_boundary`` vertices."""
    if n_boundary < MIN_BOUNDARY_VERTICES:
        raise GeometryError(
            f"n_boundary={n_boundary} too coarse; need at least {MIN_BOUNDARY_VERTICES}")
    return make_regular_polygon(n_boundary, radius, center, label="disk")


def make_ellipse(a, b, n=DEFAULT_BOUNDARY_VERTICES, center=(0.0, 0.0)):
    if not (a > 0 and b > 0):
        raise GeometryError("ellipse semi-axes must be positive")
    if n < MIN_BOUNDARY_VERTICES:
        raise GeometryError(f"n={n} too coarse; need at least {MIN_BOUNDARY_VERTICES}")
    th = 2 * np.pi * np.arange(n) / n
    xy = np.column_stack([a * np.cos(th), b * np.sin(th)]) + np.asarray(center, float)
    return Domain(xy, center, label="ellipse")


def make_perturbed_ball(radius, amplitude, mode, n=DEFAULT_BOUNDARY_VERTICES,
                        center=(0.0, 0.0)):
    """Star-shaped curve r(theta) = radius * (1 + amplitude * cos(mode * theta)).

    The bound ``|amplitude| < 1/mode**2`` keeps the curve convex (hence simple
    and star-shaped) for every radius.
    """
    if not radius > 0:
        raise GeometryError("radius must be positive")
    if mode < 2:
        raise GeometryError("mode must be >= 2")
    if not abs(amplitude) < 1.0 / mode ** 2:
        raise GeometryError(
            f"|amplitude| must be below 1/mode^2 = {1.0 / mode ** 2:g} to stay star-shaped")
    if n < MIN_BOUNDARY_VERTICES:
        raise GeometryError(f"n={n} too coarse; need at least {MIN_BOUNDARY_VERTICES}")
    th = 2 * np.pi * np.arange(n) / n
    r = radius * (1.0 + amplitude * np.cos(mode * th))
    xy = np.column_stack([r * np.cos(th), r * np.sin(th)]) + np.asarray(center, float)
    return Domain(xy, center, label="perturbed_ball")


def make_square(side=1.0, center=(0.0, 0.0)):
    if not side > 0:
        raise GeometryError("side must be positive")
    h = side / 2
    xy = np.array([[-h, -h], [h, -h], [h, h], [-h, h]]) + np.asarray(center, float)
    return Domain(xy, center, label="square")


# ---------------------------------------------------------------------------
# Mesh
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming triangulation with positively oriented triangles.

    ``boundary_edges`` are ordered head-to-tail around the single boundary loop,
    with the domain on their left, so ``boundary_normals`` point outward.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray = field(init=False)
    boundary_edge_triangles: np.ndarray = field(init=False)
    boundary_normals: np.ndarray = field(init=False)
    boundary_nodes: np.ndarray = field(init=False)
    h: float = field(init=False)

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        tri = np.array(self.triangles, dtype=np.int64)
        if nodes.ndim != 2 or nodes.shape[1] != 2:
            raise GeometryError("nodes must be (n, 2)")
        if tri.ndim != 2 or tri.shape[1] != 3:
            raise GeometryError("triangles must be (m, 3)")
        if tri.min() < 0 or tri.max() >= len(nodes):
            raise GeometryError("triangle index out of range")
        p0, p1, p2 = nodes[tri[:, 0]], nodes[tri[:, 1]], nodes[tri[:, 2]]
        det = (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1]) - (p1[:, 1] - p0[:, 1]) * (p2[:, 0] - p0[:, 0])
        if np.any(det <= 0):
            raise GeometryError(f"{int(np.sum(det <= 0))} triangles are not positively oriented")

        edges = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
        owner = np.tile(np.arange(len(tri)), 3)
        key = np.sort(edges, axis=1)
        _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
        inv = inv.ravel()
        if np.any(counts > 2):
            raise GeometryError("non-manifold edge shared by more than two triangles")
        bmask = counts[inv] == 1
        bedges, bowner = edges[bmask], owner[bmask]
        # order the boundary edges into one loop
        nxt = {int(a): k for k, a in enumerate(bedges[:, 0])}
        if len(nxt) != len(bedges):
            raise GeometryError("boundary is not a simple loop")
        order = [0]
        while True:
            k = nxt.get(int(bedges[order[-1], 1]))
            if k is None:
                raise GeometryError("boundary loop is open")
            if k == 0:
                break
            order.append(k)
            if len(order) > len(bedges):
                raise GeometryError("boundary loop is inconsistent")
        if len(order) != len(bedges):
            raise GeometryError("boundary consists of more than one loop")
        bedges, bowner = bedges[order], bowner[order]
        d = nodes[bedges[:, 1]] - nodes[bedges[:, 0]]
        length = np.hypot(d[:, 0], d[:, 1])
        normals = np.column_stack([d[:, 1], -d[:, 0]]) / length[:, None]
        allk = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
        el = nodes[allk[:, 1]] - nodes[allk[:, 0]]
        for name, val in (
            ("nodes", nodes), ("triangles", tri), ("boundary_edges", bedges),
            ("boundary_edge_triangles", bowner), ("boundary_normals", normals),
            ("boundary_nodes", bedges[:, 0].copy()),
        ):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "h", float(np.max(np.hypot(el[:, 0], el[:, 1]))))

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @cached_property
    def areas(self):
        p0, p1, p2 = (self.nodes[self.triangles[:, k]] for k in range(3))
        return 0.5 * ((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
                      - (p1[:, 1] - p0[:, 1]) * (p2[:, 0] - p0[:, 0]))

    @cached_property
    def area(self):
        return float(np.sum(self.areas))

    @cached_property
    def basis_gradients(self):
        """Gradients of the three barycentric functions on each triangle, shape (m, 3, 2)."""
        x = self.nodes[self.triangles]
        # gradient of lambda_i is rot90 of the opposite edge over 2|T|
        e0 = x[:, 2] - x[:, 1]
        e1 = x[:, 0] - x[:, 2]
        e2 = x[:, 1] - x[:, 0]
        g = np.stack([e0, e1, e2], axis=1)
        g = np.stack([-g[..., 1], g[..., 0]], axis=-1)
        return g / (2.0 * self.areas[:, None, None])

    @cached_property
    def boundary_edge_lengths(self):
        d = self.nodes[self.boundary_edges[:, 1]] - self.nodes[self.boundary_edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    @cached_property
    def boundary_mask(self):
        m = np.zeros(self.n_nodes, dtype=bool)
        m[self.boundary_nodes] = True
        return m

    @cached_property
    def mass_diagonal(self):
        """Lumped P1 mass per node."""
        return np.bincount(self.triangles.ravel(), np.repeat(self.areas / 3.0, 3),
                           minlength=self.n_nodes)

    def boundary_polygon(self):
        return self.nodes[self.boundary_nodes]

    def angles(self):
        """Interior angles (degrees) of every triangle, shape (m, 3)."""
        x = self.nodes[self.triangles]
        out = np.empty((self.n_triangles, 3))
        for k in range(3):
            a = x[:, (k + 1) % 3] - x[:, k]
            b = x[:, (k + 2) % 3] - x[:, k]
            cosang = np.einsum("ij,ij->i", a, b) / (np.hypot(*a.T) * np.hypot(*b.T))
            out[:, k] = np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0)))
        return out

    def min_angle(self):
        return float(self.angles().min())


def _arclength_sampler(xy):
    seg = np.hypot(*(np.roll(xy, -1, axis=0) - xy).T)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    closed = np.vstack([xy, xy[:1]])

    def at(frac):
        s = np.mod(np.asarray(frac, dtype=float), 1.0) * total
        k = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(xy) - 1)
        w = ((s - cum[k]) / seg[k])[:, None]
        return closed[k] * (1 - w) + closed[k + 1] * w

    return at, cum / total


def _outer_fractions(xy, target, corner_deg=15.0):
    """Arc-length fractions of the outer ring; sharp corners are always included."""
    at, vfrac = _arclength_sampler(xy)
    d_prev = xy - np.roll(xy, 1, axis=0)
    d_next = np.roll(xy, -1, axis=0) - xy
    turn = np.degrees(np.abs(np.arctan2(
        d_prev[:, 0] * d_next[:, 1] - d_prev[:, 1] * d_next[:, 0],
        np.einsum("ij,ij->i", d_prev, d_next))))
    corners = np.flatnonzero(turn > corner_deg)
    if corners.size == 0:
        n = max(8, int(math.ceil(1.0 / target)))
        return np.arange(n) / n
    cf = vfrac[corners]
    ends = np.concatenate([cf[1:], [cf[0] + 1.0]])
    out = []
    for a, b in zip(cf, ends):
        m = max(1, int(math.ceil((b - a) / target)))
        out.append(a + (b - a) * np.arange(m) / m)
    return np.mod(np.concatenate(out), 1.0)


def _zip_rings(ia, fa, ib, fb, pts):
    """Triangulate the annulus between an inner ring (ia, fa) and an outer ring (ib, fb).

    Fractions are the shared angular parameter; the shorter admissible diagonal
    is taken at each step.
    """
    na, nb = len(ia), len(ib)
    j0 = int(np.argmin(np.abs(((fb - fa[0] + 0.5) % 1.0) - 0.5)))
    ib = np.roll(ib, -j0)
    tris = []

    def orient(t):
        a, b, c = pts[t[0]], pts[t[1]], pts[t[2]]
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    i = j = 0
    while i < na or j < nb:
        a0, a1 = ia[i % na], ia[(i + 1) % na]
        b0, b1 = ib[j % nb], ib[(j + 1) % nb]
        cand_a = (a0, b0, a1)
        cand_b = (a0, b0, b1)
        if i == na:
            pick = cand_b
        elif j == nb:
            pick = cand_a
        else:
            la = np.hypot(*(pts[a1] - pts[b0]))
            lb = np.hypot(*(pts[b1] - pts[a0]))
            pick = cand_a if la <= lb else cand_b
            if orient(pick) <= 0:
                pick = cand_b if pick is cand_a else cand_a
        tris.append(pick)
        if pick is cand_a:
            i += 1
        else:
            j += 1
    return tris


def _smooth(nodes, tri, fixed, sweeps):
    """Laplacian smoothing of free nodes; a sweep that inverts any triangle is undone."""
    n = len(nodes)
    e = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    e = np.unique(np.sort(e, axis=1), axis=0)
    deg = np.bincount(e.ravel(), minlength=n).astype(float)
    free = ~fixed
    for _ in range(sweeps):
        acc = np.zeros_like(nodes)
        np.add.at(acc, e[:, 0], nodes[e[:, 1]])
        np.add.at(acc, e[:, 1], nodes[e[:, 0]])
        trial = nodes.copy()
        trial[free] = acc[free] / deg[free, None]
        p0, p1, p2 = trial[tri[:, 0]], trial[tri[:, 1]], trial[tri[:, 2]]
        det = (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1]) - (p1[:, 1] - p0[:, 1]) * (p2[:, 0] - p0[:, 0])
        if np.any(det <= 0):
            break
        nodes = trial
    return nodes


def triangulate(domain, h, smooth_sweeps=3):
    """Polar ring triangulation of a star-shaped domain with target edge length ``h``.

    Ring ``k`` is the boundary scaled by ``k/n_rings`` about the star center.
    Outer-ring nodes lie on ``domain.boundary`` (sharp corners included).
    Tangential spacing is reduced by sqrt(R_min/R_max) to balance the radial
    stretching of elongated domains.
    """
    if not h > 0:
        raise GeometryError("h must be positive")
    if not domain.is_star_shaped():
        raise GeometryError("triangulate requires a domain star-shaped about its center")
    r_in = domain.inradius()
    if not h < r_in:
        raise GeometryError(f"h={h:g} must be smaller than the in-radius {r_in:g}")
    c = np.asarray(domain.center, dtype=float)
    xy = domain.boundary
    R = np.hypot(*(xy - c).T)
    r_max, r_min = float(R.max()), r_in
    n_rings = max(2, int(math.ceil(r_max / h)))
    h_t = h * math.sqrt(r_min / r_max)
    at, _ = _arclength_sampler(xy)
    P = domain.perimeter

    pts = [c[None, :]]
    rings = []
    start = 1
    for k in range(1, n_rings + 1):
        rho = k / n_rings
        if k == n_rings:
            frac = _outer_fractions(xy, h_t / P)
        else:
            m = max(6, int(round(rho * P / h_t)))
            frac = (np.arange(m) + 0.5 * (k % 2)) / m
        frac = np.sort(np.mod(frac, 1.0))
        ring_pts = c + rho * (at(frac) - c)
        idx = np.arange(start, start + len(frac))
        start += len(frac)
        pts.append(ring_pts)
        rings.append((idx, frac))
    nodes = np.vstack(pts)

    tris = []
    idx1, _ = rings[0]
    for j in range(len(idx1)):
        tris.append((0, idx1[j], idx1[(j + 1) % len(idx1)]))
    for (ia, fa), (ib, fb) in zip(rings[:-1], rings[1:]):
        tris.extend(_zip_rings(ia, fa, ib, fb, nodes))
    tri = np.array(tris, dtype=np.int64)

    fixed = np.zeros(len(nodes), dtype=bool)
    fixed[rings[-1][0]] = True
    if smooth_sweeps:
        nodes = _smooth(nodes, tri, fixed, smooth_sweeps)
    return Mesh(nodes, tri)


def domain_from_mesh(mesh, label="mesh"):
    """Domain whose boundary is the boundary loop of ``mesh``."""
    xy = mesh.boundary_polygon()
    c = tuple(np.mean(mesh.nodes, axis=0))
    return Domain(xy, c, label=label)


# ---------------------------------------------------------------------------
# Text formats
# ---------------------------------------------------------------------------

def _fmt(x):
    return "%.17g" % x


def write_mesh(path, mesh):
    flags = mesh.boundary_mask.astype(int)
    lines = [f"nodes {mesh.n_nodes}"]
    lines += [f"{_fmt(x)} {_fmt(y)} {b}" for (x, y), b in zip(mesh.nodes, flags)]
    lines.append(f"triangles {mesh.n_triangles}")
    lines += [f"{i} {j} {k}" for i, j, k in mesh.triangles]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mesh(path):
    with open(path) as fh:
        lines = [ln.split() for ln in fh if ln.strip()]
    if lines[0][0] != "nodes":
        raise GeometryError(f"{path}: expected 'nodes <count>' header")
    n = int(lines[0][1])
    nodes = np.array([[float(a), float(b)] for a, b, _ in lines[1:n + 1]])
    if lines[n + 1][0] != "triangles":
        raise GeometryError(f"{path}: expected 'triangles <count>' header")
    m = int(lines[n + 1][1])
    tri = np.array([[int(v) for v in ln] for ln in lines[n + 2:n + 2 + m]], dtype=np.int64)
    return Mesh(nodes, tri)


def write_domain(path, domain):
    lines = [f"vertices {domain.n_vertices}"]
    lines += [f"{_fmt(x)} {_fmt(y)}" for x, y in domain.boundary]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_domain(path, center=None, trace_constant=None, label="polygon"):
    with open(path) as fh:
        lines = [ln.split() for ln in fh if ln.strip()]
    if lines[0][0] != "vertices":
        raise GeometryError(f"{path}: expected 'vertices <count>' header")
    n = int(lines[0][1])
    xy = np.array([[float(a), float(b)] for a, b in lines[1:n + 1]])
    if center is None:
        center = tuple(xy.mean(axis=0))
    return Domain(xy, center, trace_constant, label)
