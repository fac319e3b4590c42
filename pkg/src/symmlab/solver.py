"""P1 finite elements for -div(|grad w|^{p-2} grad w) = g with zero boundary values.

The discrete problem is the minimization of the convex energy

    E(w) = sum_T |T| (1/p) (|grad w|^2 + eps^2)^{p/2} - b . w

over nodal vectors vanishing on the boundary.  Each step solves a linear system
with the exact Hessian of the regularized density (symmetric positive definite
for every p > 1), followed by Armijo backtracking.  ``eps`` is driven down on a
continuation schedule; for p = 2 a single unregularized stage is used.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import quadrature
from .nonlinearity import bounds, eval_f

log = logging.getLogger(__name__)

EPS_SCHEDULE = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)


class SolverError(RuntimeError):
    """Raised when an iteration fails to reach its tolerance."""

    def __init__(self, message, optimality=None):
        super().__init__(message)
        self.optimality = optimality


@dataclass(frozen=True, eq=False)
class MeshFunction:
    """Nodal values of a P1 function on ``mesh`` together with solver diagnostics."""

    mesh: object
    values: np.ndarray
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.mesh.n_nodes,):
            raise ValueError("one value per mesh node is required")
        if not np.all(np.isfinite(v)):
            raise ValueError("mesh function has non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def max(self):
        return float(self.values.max())


@dataclass(frozen=True, eq=False)
class GradientField:
    vectors: np.ndarray
    norms: np.ndarray

    @property
    def zero_set(self):
        """Triangles on which the gradient vanishes exactly."""
        return self.norms == 0.0


def gradient_field(u):
    """Exact per-triangle gradient of the P1 interpolant."""
    mesh = u.mesh
    uT = u.values[mesh.triangles]
    g = np.einsum("mk,mkd->md", uT, mesh.basis_gradients)
    # constant data gives exact zeros rather than rounding noise
    flat = np.ptp(uT, axis=1) == 0
    g[flat] = 0.0
    return GradientField(g, np.hypot(g[:, 0], g[:, 1]))


def dirichlet_energy_p(u, p):
    """Sum over triangles of |T| |grad u|^p."""
    gf = gradient_field(u)
    return float(np.sum(u.mesh.areas * gf.norms ** p))


def boundary_flux(u, p):
    """Sum over boundary edges of length * |grad u|^{p-1} from the adjacent triangle."""
    gf = gradient_field(u)
    mesh = u.mesh
    return float(np.sum(mesh.boundary_edge_lengths * gf.norms[mesh.boundary_edge_triangles] ** (p - 1)))


def boundary_grad_sup(u):
    """Max of |grad u| over triangles adjacent to the boundary."""
    gf = gradient_field(u)
    return float(gf.norms[u.mesh.boundary_edge_triangles].max())


def pohozaev_residual(u, p, nl, y=(0.0, 0.0), N=2):
    """N int F(u) + ((p-N)/p) int u f(u) - ((p-1)/p) int_bdry |grad u|^p <x - y, nu>.

    Interior integrals are exact for the P1 function u.  The boundary term uses
    the adjacent-triangle gradient and the edge midpoint for <x - y, nu>.
    """
    mesh = u.mesh
    li = quadrature.level_integrals(mesh, u.values, nl)
    gf = gradient_field(u)
    e = mesh.boundary_edges
    mid = 0.5 * (mesh.nodes[e[:, 0]] + mesh.nodes[e[:, 1]]) - np.asarray(y, dtype=float)
    xn = np.einsum("ij,ij->i", mid, mesh.boundary_normals)
    bterm = np.sum(mesh.boundary_edge_lengths * gf.norms[mesh.boundary_edge_triangles] ** p * xn)
    return float(N * li.int_F + (p - N) / p * li.int_uf - (p - 1) / p * bterm)


# ---------------------------------------------------------------------------
# Inner solver
# ---------------------------------------------------------------------------

class _Problem:
    """Energy, gradient and Hessian of the regularized functional on interior nodes."""

    def __init__(self, mesh, p):
        self.mesh = mesh
        self.p = p
        self.G = mesh.basis_gradients  # (m, 3, 2)
        self.area = mesh.areas
        self.free = np.flatnonzero(~mesh.boundary_mask)
        tri = mesh.triangles
        self.rows = np.repeat(tri, 3, axis=1).ravel()
        self.cols = np.tile(tri, (1, 3)).ravel()

    def grads(self, w):
        return np.einsum("mk,mkd->md", w[self.mesh.triangles], self.G)

    def energy(self, w, b, eps):
        g = self.grads(w)
        z = np.einsum("md,md->m", g, g)
        return float(np.sum(self.area * (z + eps * eps) ** (self.p / 2)) / self.p - b @ w)

    def gradient_and_hessian(self, w, b, eps):
        p = self.p
        g = self.grads(w)
        z = np.einsum("md,md->m", g, g) + eps * eps
        a = z ** ((p - 2) / 2)
        c = (p - 2) * z ** ((p - 4) / 2) if p != 2 else np.zeros_like(z)
        flux = (self.area * a)[:, None] * g
        loc = np.einsum("mkd,md->mk", self.G, flux)
        grad = np.bincount(self.mesh.triangles.ravel(), loc.ravel(), minlength=self.mesh.n_nodes) - b
        GG = np.einsum("mid,mjd->mij", self.G, self.G)
        Gg = np.einsum("mid,md->mi", self.G, g)
        H = (self.area * a)[:, None, None] * GG + (self.area * c)[:, None, None] * Gg[:, :, None] * Gg[:, None, :]
        n = self.mesh.n_nodes
        Hm = sp.csr_matrix((H.ravel(), (self.rows, self.cols)), shape=(n, n))
        return grad, Hm


def _newton(prob, w, b, eps, tol, max_iter, history):
    """Damped Newton iterations at fixed eps; returns (w, optimality, iterations)."""
    free = prob.free
    E = prob.energy(w, b, eps)
    history.append(E)
    opt = np.inf
    for it in range(1, max_iter + 1):
        grad, H = prob.gradient_and_hessian(w, b, eps)
        Hf = H[free][:, free].tocsc()
        step = np.zeros_like(w)
        step[free] = -spla.spsolve(Hf, grad[free])
        opt = float(np.max(np.abs(step))) if free.size else 0.0
        if opt <= tol:
            return w, opt, it
        slope = float(grad[free] @ step[free])
        if slope >= 0:
            # the Hessian is SPD, so this only happens through rounding at convergence
            return w, opt, it
        t = 1.0
        while True:
            trial = w + t * step
            Et = prob.energy(trial, b, eps)
            if Et <= E + 1e-4 * t * slope:
                break
            t *= 0.5
            if t < 1e-12:
                # no decrease representable in floating point: accept only near the tolerance
                if opt > 1e3 * tol:
                    raise SolverError(f"line search stalled at eps={eps:g} "
                                      f"(optimality {opt:.3e})", optimality=opt)
                return w, opt, it
        if Et >= E:
            # energy is flat at rounding level: the step is numerical noise
            if opt > 1e3 * tol:
                raise SolverError(f"stagnation at eps={eps:g} (optimality {opt:.3e})", optimality=opt)
            return w, opt, it
        w, E = trial, Et
        history.append(E)
    raise SolverError(f"Newton iteration did not converge at eps={eps:g} "
                      f"(optimality {opt:.3e} > {tol:.1e})", optimality=opt)


def solve_fixed_rhs(mesh, p, g=None, tol=1e-10, *, load=None, w0=None, eps_schedule=None,
                    max_iter=100):
    """Minimize (1/p) int |grad w|^p - int g w over P1 functions vanishing on the boundary.

    ``g`` is a nodal vector (or scalar) integrated as its P1 interpolant; a
    precomputed load vector may be passed as ``load`` instead.  The returned
    ``info`` lists the eps schedule, iteration counts, final optimality (max
    norm of the last Newton step) and the energy history per stage.
    """
    if not p > 1:
        raise ValueError("p must exceed 1")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if load is None:
        if g is None:
            raise ValueError("either g or load is required")
        g = np.broadcast_to(np.asarray(g, dtype=float), (mesh.n_nodes,))
        if np.any(g < 0):
            raise ValueError("g must be nonnegative")
        load = quadrature.p1_load_vector(mesh, g)
    b = np.asarray(load, dtype=float).copy()
    b[mesh.boundary_mask] = 0.0
    prob = _Problem(mesh, p)
    free = prob.free
    info = {"p": p, "tol": tol}
    if not np.any(b):
        return MeshFunction(mesh, np.zeros(mesh.n_nodes), dict(info, iterations=0, optimality=0.0,
                                                                eps_schedule=[], energy_history=[]))
    if eps_schedule is None:
        eps_schedule = (0.0,) if p == 2 else EPS_SCHEDULE
    if w0 is None:
        # linear solve, then the best multiple of it for the p-energy
        lap = _Problem(mesh, 2.0)
        _, K = lap.gradient_and_hessian(np.zeros(mesh.n_nodes), b, 0.0)
        w = np.zeros(mesh.n_nodes)
        w[free] = spla.spsolve(K[free][:, free].tocsc(), b[free])
        if p != 2:
            gw = prob.grads(w)
            A = float(np.sum(mesh.areas * np.einsum("md,md->m", gw, gw) ** (p / 2)))
            B = float(b @ w)
            w *= (B / A) ** (1.0 / (p - 1))
    else:
        w = np.array(w0, dtype=float)
        w[mesh.boundary_mask] = 0.0
    stages = []
    total = 0
    opt = np.inf
    for k, eps in enumerate(eps_schedule):
        last = k == len(eps_schedule) - 1
        stage_tol = tol if last else max(tol, 1e-6)
        hist = []
        w, opt, its = _newton(prob, w, b, eps, stage_tol, max_iter, hist)
        total += its
        stages.append({"eps": eps, "iterations": its, "optimality": opt, "energy_history": hist})
        if np.any(np.diff(hist) > 1e-12 * (1 + np.abs(hist[:-1]))):
            raise SolverError("energy increased during line search", optimality=opt)
    info.update(iterations=total, optimality=opt, eps_final=float(eps_schedule[-1]),
                eps_schedule=[float(e) for e in eps_schedule], stages=stages,
                energy=stages[-1]["energy_history"][-1])
    return MeshFunction(mesh, w, info)


def solve_semilinear(mesh, p, nl, tol=1e-9, max_outer=200, omega=0.5, w0=None):
    """Damped fixed point u <- (1 - omega) u + omega S(f(u)) for -Delta_p u = f(u).

    ``S`` is ``solve_fixed_rhs`` with the exact load vector of f(u).  The
    iteration starts from the solution with constant data sup f, stops when
    ``max |S(f(u)) - u| <= tol`` and halves omega whenever that residual grows.
    """
    if not 0 < omega <= 1:
        raise ValueError("omega must lie in (0, 1]")
    inner_tol = 0.1 * tol
    if nl.phi is None and nl.n_pieces == 1 and nl.b[0] == 0:
        u = solve_fixed_rhs(mesh, p, float(nl.a[0]), tol=inner_tol)
        info = dict(u.info, outer_iterations=1, outer_residual=0.0, omega=omega)
        return MeshFunction(mesh, np.maximum(u.values, 0.0), info)
    if not eval_f(nl, 0.0) > 0:
        raise ValueError("f(0+) must be positive for a nontrivial solution")

    if w0 is None:
        g0 = float(eval_f(nl, 0.0))
        u = solve_fixed_rhs(mesh, p, g0, tol=inner_tol).values
        M_f = bounds(nl, max(float(u.max()), 1e-300)).M_f if u.max() > 0 else g0
        u = solve_fixed_rhs(mesh, p, M_f, tol=inner_tol).values
    else:
        u = np.array(w0, dtype=float)
    u = np.maximum(u, 0.0)
    res_hist = []
    w_eps = (EPS_SCHEDULE[-1],) if p != 2 else (0.0,)
    prev = None
    for k in range(1, max_outer + 1):
        b = quadrature.load_vector(mesh, u, nl)
        su = solve_fixed_rhs(mesh, p, load=b, tol=inner_tol, w0=u if prev is not None else None,
                             eps_schedule=None if prev is None else w_eps)
        prev = su
        s = su.values
        r = float(np.max(np.abs(s - u)))
        res_hist.append(r)
        if r <= tol:
            u = s
            break
        if len(res_hist) > 1 and r > res_hist[-2]:
            omega = max(0.5 * omega, 1e-3)
        u = (1 - omega) * u + omega * s
    else:
        raise SolverError(f"Picard iteration did not converge in {max_outer} steps "
                          f"(last residual {res_hist[-1]:.3e})", optimality=res_hist[-1])
    clipped = float(-min(u.min(), 0.0))
    u = np.maximum(u, 0.0)
    info = dict(prev.info, outer_iterations=len(res_hist), outer_residual=res_hist[-1],
                omega=omega, residual_history=res_hist, clipped_negative=clipped)
    return MeshFunction(mesh, u, info)


def write_solution(path, u, mesh_path):
    lines = [f"mesh {mesh_path}"]
    lines += ["%.17g" % v for v in u.values]
    for key in sorted(u.info):
        val = u.info[key]
        if isinstance(val, (int, float, str)):
            lines.append(f"# {key} {val!r}" if isinstance(val, float) else f"# {key} {val}")
        elif key == "eps_schedule":
            lines.append(f"# {key} " + ",".join("%g" % e for e in val))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_solution(path, mesh=None):
    """Return (mesh_path, values, info).  Comment values are parsed as floats where possible."""
    with open(path) as fh:
        rows = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not rows[0].startswith("mesh "):
        raise ValueError(f"{path}: expected 'mesh <file>' header")
    mesh_path = rows[0][5:]
    vals, info = [], {}
    for ln in rows[1:]:
        if ln.startswith("#"):
            key, _, val = ln[1:].strip().partition(" ")
            try:
                info[key] = float(val)
            except ValueError:
                info[key] = val
        else:
            vals.append(float(ln))
    return mesh_path, np.array(vals), info
