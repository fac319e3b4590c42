"""End-to-end case execution: mesh, solve, rearrange, compare, report."""

from __future__ import annotations

import concurrent.futures as cf
import csv
import io
import json
import logging
import math
import os
from dataclasses import dataclass

import numpy as np

from . import config as cfgmod
from . import constants, deficits, geometry, nonlinearity, quadrature, radial, rearrange, solver
from .verdict import FAIL, INCONCLUSIVE, PASS, SKIPPED, Verdict

log = logging.getLogger(__name__)

CSV_COLUMNS = ["case", "p", "N", "delta_omega", "D", "E_u", "M_delta", "sup_gap", "l1_asym",
               *deficits.VERDICT_NAMES, "error"]


class CaseError(RuntimeError):
    """A case failed; the message carries the case id."""


def build_domain(cfg):
    n = cfg.n_boundary
    tc = cfg.trace_constant
    if cfg.domain == "disk":
        d = geometry.make_disk(cfg.radius, n)
    elif cfg.domain == "ellipse":
        if cfg.eccentricity is not None:
            a, b = cfg.eccentricity, 1.0 / cfg.eccentricity
        else:
            a, b = cfg.a, cfg.b
        d = geometry.make_ellipse(a, b, n)
    elif cfg.domain == "perturbed_ball":
        d = geometry.make_perturbed_ball(cfg.radius, cfg.amplitude, cfg.mode, n)
    elif cfg.domain == "square":
        d = geometry.make_square(cfg.side)
    else:
        d = geometry.domain_from_mesh(geometry.read_mesh(cfg.mesh_file))
    return d if tc is None else d.with_trace_constant(tc)


def build_nonlinearity(cfg):
    return nonlinearity.parse(cfg.f, phi=cfg.phi, s=cfg.s)


def build_meshes(cfg, domain):
    if cfg.domain == "mesh_file":
        m = geometry.read_mesh(cfg.mesh_file)
        return m, None
    return geometry.triangulate(domain, cfg.h), geometry.triangulate(domain, cfg.h / math.sqrt(2.0))


def solve(cfg, mesh, nl):
    return solver.solve_semilinear(mesh, cfg.p, nl, tol=cfg.tol_solver, omega=cfg.omega)


def _rel(a, b):
    return abs(a - b) / abs(b) if b != 0 else math.inf


def _diagnostics(u, nl, p, N, center):
    li = quadrature.level_integrals(u.mesh, u.values, nl)
    flux = solver.boundary_flux(u, p)
    poh = solver.pohozaev_residual(u, p, nl, center, N)
    scale = N * abs(li.int_F) + abs(p - N) / p * abs(li.int_uf)
    return li, flux, _rel(flux, li.int_f), poh, abs(poh) / scale


def analyze(cfg, domain, mesh, u, mesh_fine=None, u_fine=None):
    """Compute every quantity and verdict of a case from solved mesh functions."""
    p, N = cfg.p, cfg.N
    nl = build_nonlinearity(cfg)
    M = u.max
    fb = nonlinearity.bounds(nl, M)
    hyp = nonlinearity.check_hypotheses(nl, p, N, M)
    area = mesh.area
    li, flux, flux_rel, poh, poh_rel = _diagnostics(u, nl, p, N, domain.center)
    D = deficits.D_from_integrals(li.int_f, li.int_F, li.int_uf, p, N, area)
    if u_fine is not None:
        _, _, flux_rel_f, _, poh_rel_f = _diagnostics(u_fine, nl, p, N, domain.center)
        D_fine = deficits.compute_D(u_fine, nl, p, N, mesh_fine.area)
        delta_D = D - D_fine
    else:
        flux_rel_f = poh_rel_f = D_fine = math.nan
        delta_D = 0.0
    lcd = rearrange.distribution_curve(u, cfg.n_levels, nl=nl, p=p, N=N)
    prof = rearrange.decreasing_rearrangement(lcd)
    sol = radial.solve_symmetrized(prof, nl, p, N)
    min_gap, sup_gap = radial.talenti_gap(sol, prof)
    e_u = solver.dirichlet_energy_p(u, p)
    e_us = rearrange.grad_p_norm_radial(prof, p, N)
    E_u = e_u / e_us - 1.0
    dstar = deficits.default_delta(D, p, N)
    M_delta = rearrange.gradient_smallness(prof, dstar, N, lcd.total)
    asym, shift = rearrange.l1_asymmetry(u, prof, return_shift=True)
    grad_sup = solver.boundary_grad_sup(u)
    sig = nonlinearity.sigma(p, N, nl.s) if (p >= N or nl.s is not None) else math.nan
    C = radial.talenti_bound_constant(N, p, fb.M_f, fb.m_f, sig) if math.isfinite(sig) else math.nan
    K = lcd.K
    K_inc = float(np.max(np.diff(K))) if K is not None else math.nan
    eps = cfg.eps_pipeline * M
    tol_D = max(cfg.tol_D, abs(delta_D))
    hyp_ok = hyp.status == PASS

    verdicts = [deficits.check_D_nonneg(D, delta_D, hyp_ok),
                deficits.check_D_vs_deficit(D, domain.iso_deficit, grad_sup, area,
                                            domain.trace_constant, p, N, tol_D)]
    if not hyp_ok or not math.isfinite(C):
        reason = f"hypotheses {hyp.status}"
        verdicts += [Verdict("talenti_pointwise", SKIPPED, reason=reason),
                     Verdict("talenti_linf", SKIPPED, reason=reason)]
    elif D < -tol_D:
        reason = "D negative beyond tolerance"
        verdicts += [Verdict("talenti_pointwise", INCONCLUSIVE, reason=reason),
                     Verdict("talenti_linf", INCONCLUSIVE, reason=reason)]
    else:
        verdicts += list(deficits.check_talenti(sup_gap, min_gap, D, C, p, N, eps, tol_D))
    verdicts += [
        deficits.check_energy_gap(e_u, e_us, sup_gap, fb.M_f, area, p, eps),
        deficits.check_grad_energy_bound(e_us, M, fb.M_f, area, eps),
        deficits.check_diagnostic("divergence_identity", flux_rel, flux_rel_f, cfg.tol_diag),
        deficits.check_diagnostic("pohozaev", poh_rel, poh_rel_f, cfg.tol_diag),
    ]
    quantities = {
        "delta_omega": domain.iso_deficit, "area_domain": domain.area, "area_mesh": area,
        "perimeter": domain.perimeter,
        "D": D, "D_fine": D_fine, "D_two_resolution_delta": delta_D,
        "E_u": E_u, "energy_u": e_u, "energy_ustar": e_us,
        "M_delta": M_delta, "M_delta_threshold": dstar,
        "sup_gap": sup_gap, "min_gap": min_gap, "l1_asym": asym,
        "l1_shift_x": float(shift[0]), "l1_shift_y": float(shift[1]),
        "M": M, "m_f": fb.m_f, "M_f": fb.M_f, "grad_sup_boundary": grad_sup,
        "sigma": sig, "talenti_constant": C,
        "int_f": li.int_f, "int_F": li.int_F, "int_uf": li.int_uf,
        "boundary_flux": flux, "flux_mismatch": flux_rel, "flux_mismatch_fine": flux_rel_f,
        "pohozaev_residual": poh, "pohozaev_relative": poh_rel, "pohozaev_relative_fine": poh_rel_f,
        "K_max_increase": K_inc, "v0": float(sol.v_profile.values[0]),
        "eps_pipeline_abs": eps, "tol_D_abs": tol_D,
        "mesh_h": mesh.h, "n_nodes": mesh.n_nodes, "n_triangles": mesh.n_triangles,
        "outer_iterations": u.info.get("outer_iterations"),
        "clipped_negative": u.info.get("clipped_negative", 0.0),
    }
    inputs = dict(cfg.to_dict())
    inputs.pop("output_dir", None)
    inputs["hypotheses"] = hyp.status
    inputs["f_convention"] = "right-continuous at breakpoints"
    report = deficits.DeficitReport(inputs, quantities, verdicts)
    return report, {"lcd": lcd, "profile": prof, "sym": sol}


def _case_dir(cfg):
    return os.path.join(cfg.output_dir, cfg.case) if cfg.output_dir else None


def _solver_info(u):
    keep = ("iterations", "optimality", "eps_schedule", "outer_iterations", "outer_residual",
            "omega", "clipped_negative")
    return {k: u.info[k] for k in keep if k in u.info}


def run_case(cfg, write=True):
    """Run one case; returns the report.  Errors are re-raised with the case id."""
    try:
        domain = build_domain(cfg)
        nl = build_nonlinearity(cfg)
        # reject m_f <= 0 before any solve: the solution lies below sup over a generous range
        nonlinearity.bounds(nl, _a_priori_max(cfg, domain, nl))
        mesh, mesh_f = build_meshes(cfg, domain)
        u = solve(cfg, mesh, nl)
        u_f = solve(cfg, mesh_f, nl) if mesh_f is not None else None
        if write and cfg.output_dir:
            u = solver.MeshFunction(mesh, u.values, _solver_info(u))
            if u_f is not None:
                u_f = solver.MeshFunction(mesh_f, u_f.values, _solver_info(u_f))
        report, extra = analyze(cfg, domain, mesh, u, mesh_f, u_f)
    except (nonlinearity.HypothesisError, solver.SolverError, geometry.GeometryError,
            cfgmod.ConfigError, ValueError) as exc:
        raise CaseError(f"case {cfg.case}: {exc}") from exc
    if write and cfg.output_dir:
        write_case(cfg, mesh, u, mesh_f, u_f, report, extra)
    return report


def _a_priori_max(cfg, domain, nl):
    """Upper estimate of max u: the ball comparison radius scaled for data sup f near 0."""
    R = max(np.hypot(*(domain.boundary - np.asarray(domain.center)).T))
    g = float(nl(0.0))
    return max(radial.exact_ball_value(cfg.p, cfg.N, constants.omega(cfg.N) * R ** cfg.N)
               * g ** (1.0 / (cfg.p - 1)), 1e-12)


def write_case(cfg, mesh, u, mesh_f, u_f, report, extra):
    d = _case_dir(cfg)
    os.makedirs(d, exist_ok=True)
    with open(os.path.join(d, "config.toml"), "w") as fh:
        fh.write(cfg.replace(output_dir=None).dumps() if cfg.output_dir else cfg.dumps())
    geometry.write_mesh(os.path.join(d, "mesh.txt"), mesh)
    solver.write_solution(os.path.join(d, "solution.txt"), u, "mesh.txt")
    if mesh_f is not None:
        geometry.write_mesh(os.path.join(d, "mesh_fine.txt"), mesh_f)
        solver.write_solution(os.path.join(d, "solution_fine.txt"), u_f, "mesh_fine.txt")
    rearrange.write_profile(os.path.join(d, "u_sharp.txt"), extra["profile"])
    rearrange.write_profile(os.path.join(d, "v.txt"), extra["sym"].v_profile)
    rearrange.write_profile(os.path.join(d, "grad_v.txt"), extra["sym"].grad_profile)
    with open(os.path.join(d, "report.json"), "w") as fh:
        fh.write(report.to_json())


def reload_case(case_dir):
    """Re-analyze a saved case from its mesh and solution files (no solve)."""
    cfg = cfgmod.load(os.path.join(case_dir, "config.toml"))
    domain = build_domain(cfg)

    def load(name):
        mpath, vals, info = solver.read_solution(os.path.join(case_dir, name))
        mesh = geometry.read_mesh(os.path.join(case_dir, mpath))
        return mesh, solver.MeshFunction(mesh, vals, info)

    mesh, u = load("solution.txt")
    mesh_f = u_f = None
    if os.path.exists(os.path.join(case_dir, "solution_fine.txt")):
        mesh_f, u_f = load("solution_fine.txt")
    u = solver.MeshFunction(mesh, u.values, {k: _num(v) for k, v in u.info.items()})
    report, _ = analyze(cfg, domain, mesh, u, mesh_f, u_f)
    return report


def _num(v):
    if isinstance(v, float) and v.is_integer() and abs(v) < 2 ** 53:
        return int(v)
    return v


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------

@dataclass
class FamilyResult:
    rows: list
    fit: deficits.FitResult
    reports: list

    def csv_text(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([_fmt(r[c]) for c in CSV_COLUMNS])
        return buf.getvalue()

    def gnuplot_text(self):
        lines = ["# delta_omega asymmetry"]
        for r in self.rows:
            if not r["error"]:
                lines.append("%.17g %.17g" % (r["delta_omega"], r["l1_asym"]))
        return "\n".join(lines) + "\n"


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def _row(cfg, report=None, error=None):
    row = {c: None for c in CSV_COLUMNS}
    row.update(case=cfg.case, p=cfg.p, N=cfg.N, error=error or "")
    if report is not None:
        q = report.quantities
        for k in ("delta_omega", "D", "E_u", "M_delta", "sup_gap", "l1_asym"):
            row[k] = q[k]
        for v in report.verdicts:
            row[v.name] = v.status
    else:
        for k in deficits.VERDICT_NAMES:
            row[k] = "ERROR"
    return row


def _run_isolated(cfg):
    try:
        return run_case(cfg), None
    except Exception as exc:  # crash isolation: one failing member never aborts the sweep
        return None, f"{type(exc).__name__}: {exc}"


def worker_count(n_tasks):
    env = os.environ.get("SYMMLAB_THREADS")
    cap = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(cap, n_tasks))


def sweep_configs(base, key, values):
    if not values:
        raise ValueError("empty sweep list")
    out = []
    for v in values:
        tag = f"{key}{v:g}" if isinstance(v, (int, float)) else f"{key}{v}"
        out.append(base.replace(**{key: v, "case": f"{base.case}_{tag}"}))
    return out


def run_many(cfgs):
    n = worker_count(len(cfgs))
    if n == 1:
        return [_run_isolated(c) for c in cfgs]
    with cf.ProcessPoolExecutor(max_workers=n) as ex:
        return list(ex.map(_run_isolated, cfgs))


def run_family(base, key, values, write=True):
    cfgs = sweep_configs(base, key, values)
    results = run_many(cfgs)
    rows, reports = [], []
    for c, (rep, err) in zip(cfgs, results):
        rows.append(_row(c, rep, err))
        reports.append(rep)
    ok = [r for r in reports if r is not None]
    if not ok:
        raise CaseError("all family members failed: " + "; ".join(r["error"] for r in rows))
    floor = max(1e-3 * r.quantities["M"] * r.quantities["area_mesh"] for r in ok)
    pts = [(r.quantities["delta_omega"], r.quantities["l1_asym"]) for r in ok]
    try:
        fit = deficits.fit_stability_exponent(pts, noise_floor=floor)
    except ValueError as exc:
        fit = deficits.FitResult(None, None, None, INCONCLUSIVE, len(pts), reason=str(exc))
    res = FamilyResult(rows, fit, reports)
    if write and base.output_dir:
        os.makedirs(base.output_dir, exist_ok=True)
        stem = os.path.join(base.output_dir, f"{base.case}_{key}")
        with open(stem + ".csv", "w") as fh:
            fh.write(res.csv_text())
        with open(stem + ".dat", "w") as fh:
            fh.write(res.gnuplot_text())
        with open(stem + "_fit.json", "w") as fh:
            fh.write(json.dumps(dict(fit.to_dict(), noise_floor=floor), indent=2, sort_keys=True) + "\n")
    return res


# ---------------------------------------------------------------------------
# Standard battery
# ---------------------------------------------------------------------------

BATTERY_DOMAINS = (
    ("disk", {"domain": "disk"}),
    ("square", {"domain": "square"}),
    ("ellipse1.1", {"domain": "ellipse", "eccentricity": 1.1, "trace_constant": 10.0}),
    ("ellipse1.2", {"domain": "ellipse", "eccentricity": 1.2, "trace_constant": 10.0}),
    ("ellipse1.4", {"domain": "ellipse", "eccentricity": 1.4, "trace_constant": 10.0}),
    ("pball0.025", {"domain": "perturbed_ball", "amplitude": 0.025, "mode": 3}),
    ("pball0.05", {"domain": "perturbed_ball", "amplitude": 0.05, "mode": 3}),
    ("pball0.1", {"domain": "perturbed_ball", "amplitude": 0.1, "mode": 3}),
)
BATTERY_P = (1.5, 2.0, 3.0)


def step_threshold(p, N=2):
    """Jump level of the battery step nonlinearity: 40% of the unit-ball maximum for f = 1."""
    return 0.4 * (p - 1) / p * N ** (-1.0 / (p - 1))


def battery_configs(h=0.05, output_dir=None):
    out = []
    for name, dom in BATTERY_DOMAINS:
        for p in BATTERY_P:
            for fname, f in (("const", "const:1.0"), ("step", f"step:2.0@0:1.0@{step_threshold(p)!r}")):
                extra = {"phi": f, "s": 1.0} if p < 2 else {}
                out.append(cfgmod.CaseConfig(case=f"{name}_p{p:g}_{fname}", p=p, f=f, h=h,
                                             output_dir=output_dir, **dom, **extra))
    return out


def run_battery(h=0.05, output_dir=None):
    cfgs = battery_configs(h, output_dir)
    return list(zip(cfgs, run_many(cfgs)))
