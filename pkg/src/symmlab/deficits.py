"""The Pohozaev-type deficit D, inequality verdicts and the per-case report.

D = (N(p-1)/(kappa^{p/(p-1)} p)) |Omega|^{(p-N)/(N(p-1))} (int f(u))^{p/(p-1)}
    - N int F(u) - ((p-N)/p) int u f(u)

vanishes for radial solutions on balls.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import constants, quadrature
from .verdict import (FAIL, INCONCLUSIVE, MARGINAL, PASS, SKIPPED, Verdict, compare)

VERDICT_NAMES = (
    "D_nonneg", "D_vs_deficit", "talenti_pointwise", "talenti_linf",
    "energy_gap", "grad_energy_bound", "divergence_identity", "pohozaev",
)


def D_from_integrals(int_f, int_F, int_uf, p, N, area):
    alpha, beta = constants.exponents(p, N)
    kap = constants.kappa(N)
    first = N * (p - 1) / (kap ** alpha * p) * area ** beta * int_f ** alpha
    return first - N * int_F - (p - N) / p * int_uf


def compute_D(u, nl, p, N, area):
    """D for the P1 function ``u`` with the exact level-split integrals."""
    li = quadrature.level_integrals(u.mesh, u.values, nl)
    return D_from_integrals(li.int_f, li.int_F, li.int_uf, p, N, area)


def default_delta(D, p, N):
    """Threshold D^{1/(2N(p-1)+1)} used for the gradient-smallness measure."""
    return max(D, 0.0) ** (1.0 / (2 * N * (p - 1) + 1))


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------

def check_D_nonneg(D, delta_two_res, hypotheses_ok=True):
    """D >= -max(1e-6, |D(h) - D(h/sqrt 2)|); holding margins below the delta are MARGINAL."""
    if not hypotheses_ok:
        return Verdict("D_nonneg", SKIPPED, reason="structural hypotheses not certified")
    tol = max(1e-6, abs(delta_two_res))
    return compare("D_nonneg", D, ">=", 0.0, tol=tol, noise=abs(delta_two_res),
                   detail={"two_resolution_delta": delta_two_res})


def check_D_vs_deficit(D, delta_omega, grad_sup, area, C_omega, p, N, tol_D):
    """D <= |grad u|_{inf, bdry}^p (2^{1/(p-1)} N + 9 N^3 C) |Omega| sqrt(delta)."""
    if C_omega is None:
        return Verdict("D_vs_deficit", SKIPPED, reason="trace constant not supplied")
    if delta_omega > 1:
        return Verdict("D_vs_deficit", SKIPPED, reason="requires delta_omega <= 1",
                       detail={"delta_omega": delta_omega})
    rhs = grad_sup ** p * (2 ** (1.0 / (p - 1)) * N + 9 * N ** 3 * C_omega) * area * math.sqrt(max(delta_omega, 0.0))
    v = compare("D_vs_deficit", D, "<=", rhs, tol=tol_D,
                detail={"trace_constant": C_omega, "grad_sup": grad_sup, "delta_omega": delta_omega})
    ratio = rhs / D if D > 0 else math.inf
    return Verdict(v.name, v.status, v.relation, v.lhs, v.rhs, v.tol, v.margin,
                   detail=dict(v.detail, ratio=ratio))


def check_talenti(sup_gap, min_gap, D, C_bound, p, N, eps_pipeline, tol_D=0.0):
    """Pointwise comparison v >= u* and the explicit sup bound, as two verdicts."""
    if D < -tol_D:
        raise ValueError(f"D = {D:g} is negative beyond tolerance; inputs are inconsistent")
    expo = p / (N * (p - 1) + p)
    rhs = C_bound * max(D, 0.0) ** expo
    v1 = compare("talenti_pointwise", min_gap, ">=", 0.0, tol=eps_pipeline)
    v2 = compare("talenti_linf", sup_gap, "<=", rhs, tol=eps_pipeline,
                 detail={"constant": C_bound, "exponent": expo})
    return v1, v2


def check_energy_gap(energy_u, energy_ustar, sup_gap, M_f, area, p, eps_pipeline):
    """int |grad u|^p - int |grad u*|^p <= p M_f |Omega| sup |v - u*|."""
    return compare("energy_gap", energy_u - energy_ustar, "<=", p * M_f * area * sup_gap,
                   tol=eps_pipeline, detail={"energy_u": energy_u, "energy_ustar": energy_ustar})


def check_grad_energy_bound(energy_ustar, M, M_f, area, eps_pipeline):
    """int |grad u*|^p <= M M_f |Omega|."""
    return compare("grad_energy_bound", energy_ustar, "<=", M * M_f * area, tol=eps_pipeline)


def check_diagnostic(name, rel_h, rel_fine, tol):
    """Relative residual of a discrete identity: small, and not growing under refinement.

    PASS when the coarse residual is below ``tol`` and the fine one is no larger;
    a residual below ``tol`` that grows under refinement is MARGINAL.
    """
    detail = {"relative_residual_h": rel_h, "relative_residual_fine": rel_fine,
              "refinement_ratio": rel_h / rel_fine if rel_fine > 0 else math.inf}
    v = compare(name, rel_h, "<=", tol, detail=detail)
    if v.status == PASS and rel_fine > rel_h:
        return Verdict(name, MARGINAL, v.relation, v.lhs, v.rhs, v.tol, v.margin,
                       reason="residual grows under refinement", detail=detail)
    return v


# ---------------------------------------------------------------------------
# Family fits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FitResult:
    slope: Optional[float]
    intercept: Optional[float]
    r2: Optional[float]
    status: str
    n_used: int
    reason: Optional[str] = None

    def to_dict(self):
        return {"slope": self.slope, "intercept": self.intercept, "r2": self.r2,
                "status": self.status, "n_used": self.n_used, "reason": self.reason}


def fit_stability_exponent(results, noise_floor=0.0, min_members=5):
    """Least-squares fit of log(asymmetry) against log(delta_omega).

    ``results`` is a list of (delta_omega, asymmetry).  Members at or below
    ``noise_floor`` (or with delta_omega <= 0) are excluded; if fewer than
    two remain the fit is INCONCLUSIVE.  A positive slope is reported as PASS.
    """
    results = list(results)
    if len(results) < min_members:
        raise ValueError(f"need at least {min_members} family members, got {len(results)}")
    d = np.array([r[0] for r in results], dtype=float)
    a = np.array([r[1] for r in results], dtype=float)
    use = (d > 0) & (a > noise_floor)
    if use.sum() < 2:
        return FitResult(None, None, None, INCONCLUSIVE, int(use.sum()),
                         reason="asymmetries at the noise floor")
    x, y = np.log(d[use]), np.log(a[use])
    if np.ptp(x) == 0:
        return FitResult(None, None, None, INCONCLUSIVE, int(use.sum()), reason="no spread in delta")
    if d[use].max() / d[use].min() < 10:
        reason = "delta_omega spans less than one decade"
    else:
        reason = None
    A = np.column_stack([x, np.ones_like(x)])
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + icpt)
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss if ss > 0 else 1.0
    status = PASS if slope > 0 else FAIL
    return FitResult(float(slope), float(icpt), r2, status, int(use.sum()), reason)


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------

@dataclass
class DeficitReport:
    inputs: dict
    quantities: dict
    verdicts: list = field(default_factory=list)

    def verdict(self, name):
        for v in self.verdicts:
            if v.name == name:
                return v
        raise KeyError(name)

    @property
    def any_fail(self):
        return any(v.status == FAIL for v in self.verdicts)

    @property
    def all_ok(self):
        return all(v.ok for v in self.verdicts)

    def to_dict(self):
        q = {k: (repr(v) if isinstance(v, float) and not math.isfinite(v) else v)
             for k, v in self.quantities.items()}
        return {"inputs": self.inputs, "quantities": q,
                "verdicts": [v.to_dict() for v in self.verdicts]}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"
