"""Command-line entry point.

    symmlab solve   --config case.toml
    symmlab verify  --config case.toml
    symmlab family  --config case.toml --sweep eccentricity=1.05,1.1,1.2
    symmlab selftest [--output FILE]
    symmlab radial eval --s 0.5 --config case.toml

Exit status: 0 when every verdict is PASS, SKIPPED or MARGINAL; 1 when any
verdict fails; 2 on configuration or runtime errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import config as cfgmod
from . import geometry, pipeline, radial, rearrange, selftest, solver
from .verdict import FAIL

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


def _parser():
    ap = argparse.ArgumentParser(prog="symmlab", description=__doc__.split("\n\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("solve", "verify"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True)
    sp = sub.add_parser("family")
    sp.add_argument("--config", required=True)
    sp.add_argument("--sweep", required=True, help="key=v1,v2,...")
    sp = sub.add_parser("selftest")
    sp.add_argument("--output", help="also write the result lines to this file")
    sp = sub.add_parser("radial")
    rs = sp.add_subparsers(dest="radial_command", required=True)
    ev = rs.add_parser("eval")
    ev.add_argument("--s", type=float, required=True, help="volume coordinate")
    ev.add_argument("--config", required=True)
    return ap


def _cmd_solve(args):
    cfg = cfgmod.load(args.config)
    domain = pipeline.build_domain(cfg)
    nl = pipeline.build_nonlinearity(cfg)
    mesh, _ = pipeline.build_meshes(cfg, domain)
    u = pipeline.solve(cfg, mesh, nl)
    if cfg.output_dir:
        d = os.path.join(cfg.output_dir, cfg.case)
        os.makedirs(d, exist_ok=True)
        geometry.write_mesh(os.path.join(d, "mesh.txt"), mesh)
        u = solver.MeshFunction(mesh, u.values, pipeline._solver_info(u))
        solver.write_solution(os.path.join(d, "solution.txt"), u, "mesh.txt")
    print(f"case {cfg.case}: nodes={mesh.n_nodes} max_u={u.max!r} "
          f"outer_iterations={u.info.get('outer_iterations')}")
    return EXIT_OK


def _cmd_verify(args):
    cfg = cfgmod.load(args.config)
    report = pipeline.run_case(cfg)
    print(f"case {cfg.case}")
    for v in report.verdicts:
        print("  " + v.line())
    return EXIT_FAIL if report.any_fail else EXIT_OK


def _cmd_family(args):
    cfg = cfgmod.load(args.config)
    key, values = cfgmod.parse_sweep(args.sweep)
    res = pipeline.run_family(cfg, key, values)
    sys.stdout.write(res.csv_text())
    print("fit: " + json.dumps(res.fit.to_dict(), sort_keys=True))
    bad = any(r[k] in (FAIL, "ERROR") for r in res.rows for k in pipeline.deficits.VERDICT_NAMES)
    return EXIT_FAIL if bad or res.fit.status == FAIL else EXIT_OK


def _cmd_selftest(args):
    results = selftest.run_selftest()
    text = selftest.format_results(results)
    sys.stdout.write(text)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    return EXIT_FAIL if any(v.status == FAIL for v in results) else EXIT_OK


def _cmd_radial(args):
    cfg = cfgmod.load(args.config)
    domain = pipeline.build_domain(cfg)
    nl = pipeline.build_nonlinearity(cfg)
    mesh, _ = pipeline.build_meshes(cfg, domain)
    u = pipeline.solve(cfg, mesh, nl)
    prof = rearrange.decreasing_rearrangement(rearrange.distribution_curve(u, cfg.n_levels))
    sol = radial.solve_symmetrized(prof, nl, cfg.p, cfg.N)
    s = args.s
    if not 0 <= s <= prof.volume:
        raise ValueError(f"s must lie in [0, {prof.volume!r}]")
    r = (s / np.pi) ** 0.5
    print(f"s={s!r} u_sharp={prof(s)!r} v={sol.v_profile(s)!r} grad_v={radial.grad_v(sol, r)!r}")
    return EXIT_OK


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"solve": _cmd_solve, "verify": _cmd_verify, "family": _cmd_family,
                "selftest": _cmd_selftest, "radial": _cmd_radial}
    try:
        return handlers[args.command](args)
    except (cfgmod.ConfigError, pipeline.CaseError, OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
