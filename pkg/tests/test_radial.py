import math

import numpy as np
import pytest

from symmlab import radial
from symmlab.nonlinearity import parse


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 4.0])
def test_ball_closed_form(p):
    sol = radial.solve_symmetrized(radial.flat_profile(math.pi, 1.0, 129), parse("const:1.0"), p)
    r = np.sqrt(sol.v_profile.s / math.pi)
    exact = radial.exact_ball_value(p, 2) * (1 - r ** (p / (p - 1)))
    np.testing.assert_allclose(sol.v_profile.values, exact, atol=1e-12)
    for rr in (0.25, 0.5, 0.9):
        assert radial.grad_v(sol, rr) == pytest.approx((rr / 2) ** (1 / (p - 1)), rel=1e-10)


def test_exact_ball_value():
    assert radial.exact_ball_value(2.0, 2) == pytest.approx(0.25)
    assert radial.exact_ball_value(2.0, 2, volume=4 * math.pi) == pytest.approx(1.0)


def test_grad_v_domain():
    sol = radial.solve_symmetrized(radial.flat_profile(math.pi, 1.0), parse("const:1.0"), 2.0)
    assert radial.grad_v(sol, 0.0) == 0.0
    with pytest.raises(radial.RadialError):
        radial.grad_v(sol, 1.5)


def test_talenti_gap_zero_on_exact_profile():
    prof = radial.flat_profile(math.pi, 1.0, 257)
    sol = radial.solve_symmetrized(prof, parse("const:1.0"), 2.0)
    mn, sup = radial.talenti_gap(sol, sol.v_profile.with_kind("u_sharp"))
    assert abs(mn) < 1e-12 and abs(sup) < 1e-12


def test_talenti_constant_frozen():
    assert radial.talenti_bound_constant(2, 2.0, 1.0, 1.0, 2.0) == pytest.approx(0.5795774715, rel=1e-9)


def test_grad_energy_of_ball():
    sol = radial.solve_symmetrized(radial.flat_profile(math.pi, 1.0, 257), parse("const:1.0"), 2.0)
    assert radial.grad_energy(sol) == pytest.approx(math.pi / 8, rel=1e-6)
