import json
import math

import pytest

from symmlab import deficits
from symmlab.verdict import FAIL, INCONCLUSIVE, MARGINAL, PASS, SKIPPED, compare


def test_D_vanishes_on_ball_torsion():
    # u = (1-r^2)/4, f = 1: int f = pi, int F = int u f = pi/8
    assert deficits.D_from_integrals(math.pi, math.pi / 8, math.pi / 8, 2.0, 2, math.pi) == pytest.approx(0, abs=1e-15)


def test_D_vanishes_on_ball_general_p():
    for p in (1.5, 3.0):
        m = (p - 1) / p * 2 ** (-1 / (p - 1))
        int_u = 2 * math.pi * m * (0.5 - 1 / (p / (p - 1) + 2))  # int of m (1 - r^{p/(p-1)})
        assert deficits.D_from_integrals(math.pi, int_u, int_u, p, 2, math.pi) == pytest.approx(0, abs=1e-14)


def test_default_delta():
    assert deficits.default_delta(1.0, 2.0, 2) == 1.0
    assert deficits.default_delta(-1.0, 2.0, 2) == 0.0
    assert deficits.default_delta(0.2 ** 5, 2.0, 2) == pytest.approx(0.2)


def test_check_D_nonneg_statuses():
    assert deficits.check_D_nonneg(1e-3, 1e-5).status == PASS
    assert deficits.check_D_nonneg(-1e-3, 1e-5).status == FAIL
    assert deficits.check_D_nonneg(1e-6, 1e-5).status == MARGINAL
    assert deficits.check_D_nonneg(-1e-3, 0, hypotheses_ok=False).status == SKIPPED


def test_check_D_vs_deficit():
    assert deficits.check_D_vs_deficit(0.1, 0.1, 1.0, 1.0, None, 2, 2, 1e-6).status == SKIPPED
    assert deficits.check_D_vs_deficit(0.1, 1.5, 1.0, 1.0, 10, 2, 2, 1e-6).status == SKIPPED
    v = deficits.check_D_vs_deficit(0.1, 0.01, 0.5, math.pi, 10.0, 2.0, 2, 1e-6)
    rhs = 0.25 * (4 + 720) * math.pi * 0.1
    assert v.status == PASS and v.rhs == pytest.approx(rhs) and v.detail["ratio"] == pytest.approx(rhs / 0.1)


def test_check_talenti_rejects_negative_D():
    with pytest.raises(ValueError):
        deficits.check_talenti(0.1, 0.0, -1.0, 1.0, 2.0, 2, 1e-3, 1e-6)
    v1, v2 = deficits.check_talenti(0.01, -1e-4, 0.01, 1.0, 2.0, 2, 1e-3)
    assert v1.status == PASS and v2.rhs == pytest.approx(0.01 ** 0.5)


def test_diagnostic_marginal_when_growing():
    assert deficits.check_diagnostic("x", 0.01, 0.005, 0.25).status == PASS
    assert deficits.check_diagnostic("x", 0.01, 0.02, 0.25).status == MARGINAL
    assert deficits.check_diagnostic("x", 0.5, 0.2, 0.25).status == FAIL


def test_fit():
    pts = [(d, 0.3 * d ** 0.5) for d in (1e-3, 3e-3, 1e-2, 3e-2, 1e-1)]
    fit = deficits.fit_stability_exponent(pts)
    assert fit.status == PASS and fit.slope == pytest.approx(0.5) and fit.r2 == pytest.approx(1.0)
    assert deficits.fit_stability_exponent(pts, noise_floor=1.0).status == INCONCLUSIVE
    with pytest.raises(ValueError):
        deficits.fit_stability_exponent(pts[:4])


def test_compare_nonfinite_is_fail():
    assert compare("x", math.nan, "<=", 1.0).status == FAIL


def test_report_json():
    r = deficits.DeficitReport({"case": "a"}, {"D": 0.5, "bad": math.inf},
                               [compare("D_nonneg", 0.5, ">=", 0.0)])
    d = json.loads(r.to_json())
    assert d["quantities"]["bad"] == "inf" and r.all_ok and not r.any_fail
    assert r.verdict("D_nonneg").status == PASS
