"""Closed-form oracle suite and a small invariant battery."""

from __future__ import annotations

import math

import numpy as np

from . import deficits, geometry, nonlinearity, radial, rearrange, solver
from .verdict import FAIL, compare


def _abs_check(name, value, target, tol):
    err = abs(value - target)
    return compare(name, err, "<=", tol, detail={"value": value, "target": target})


def oracle_square_deficit():
    d = geometry.make_square()
    return _abs_check("square_iso_deficit", d.iso_deficit, 2 / math.sqrt(math.pi) - 1, 1e-12)


def oracle_triangle_deficit():
    d = geometry.make_regular_polygon(3)
    target = 3 * math.sqrt(3) / (2 * math.sqrt(math.pi * 3 * math.sqrt(3) / 4)) - 1
    return _abs_check("triangle_iso_deficit", d.iso_deficit, target, 1e-12)


def oracle_torricelli(h=0.05):
    m = geometry.triangulate(geometry.make_disk(), h)
    f = nonlinearity.parse("const:1.0")
    u = solver.solve_semilinear(m, 2.0, f)
    r2 = np.sum(m.nodes ** 2, axis=1)
    err = float(np.max(np.abs(u.values - (1 - r2) / 4)))
    energy = solver.dirichlet_energy_p(u, 2.0)
    D = deficits.compute_D(u, f, 2.0, 2, m.area)
    return [
        compare("torricelli_max_error", err, "<=", 2e-3),
        _abs_check("torricelli_energy_rel", energy / (math.pi / 8), 1.0, 1e-2),
        compare("torricelli_abs_D", abs(D), "<=", 1e-3),
    ]


def oracle_p3_radial(h=0.05):
    p = 3.0
    target = radial.exact_ball_value(p, 2)
    m = geometry.triangulate(geometry.make_disk(), h)
    u = solver.solve_semilinear(m, p, nonlinearity.parse("const:1.0"))
    sol = radial.solve_symmetrized(radial.flat_profile(math.pi, 1.0, 257), nonlinearity.parse("const:1.0"), p)
    return [
        _abs_check("p3_discrete_center", u.max, target, 5e-3),
        _abs_check("p3_radial_formula", float(sol.v_profile.values[0]), target, 1e-6),
    ]


def oracle_cone_distribution(h=0.05):
    m = geometry.triangulate(geometry.make_disk(), h)
    r = np.hypot(m.nodes[:, 0], m.nodes[:, 1])
    dist = rearrange.Distribution(m, np.maximum(1.0 - r, 0.0))
    out = []
    for t in (0.0, 0.25, 0.5):
        # mesh tolerance: the polygonal area defect is O(h^2)
        out.append(_abs_check(f"cone_J_{t:g}", dist(t), math.pi * (1 - t) ** 2, 2 * h * h * math.pi))
    return out


def invariant_checks(h=0.07):
    """D >= 0, comparison and Polya-Szego on one non-ball case."""
    d = geometry.make_ellipse(1.2, 1 / 1.2)
    m = geometry.triangulate(d, h)
    f = nonlinearity.parse("const:1.0")
    u = solver.solve_semilinear(m, 2.0, f)
    D = deficits.compute_D(u, f, 2.0, 2, m.area)
    lcd = rearrange.distribution_curve(u, nl=f, p=2.0)
    prof = rearrange.decreasing_rearrangement(lcd)
    sol = radial.solve_symmetrized(prof, f, 2.0)
    mn, _ = radial.talenti_gap(sol, prof)
    E = rearrange.ps_deficit(u, 2.0, prof)
    return [
        compare("ellipse_D_nonneg", D, ">=", 0.0),
        compare("ellipse_talenti_pointwise", mn, ">=", 0.0, tol=1e-6 * u.max),
        compare("ellipse_polya_szego", E, ">=", 0.0, tol=1e-6),
        compare("ellipse_K_monotone", float(np.max(np.diff(lcd.K))), "<=", 0.0, tol=1e-12),
    ]


def run_selftest():
    out = [oracle_square_deficit(), oracle_triangle_deficit()]
    out += oracle_torricelli()
    out += oracle_p3_radial()
    out += oracle_cone_distribution()
    out += invariant_checks()
    return out


def format_results(results):
    lines = [v.line() for v in results]
    n_fail = sum(v.status == FAIL for v in results)
    lines.append(f"selftest: {len(results) - n_fail}/{len(results)} passed")
    return "\n".join(lines) + "\n"
