import math

import numpy as np
import pytest

from symmlab import geometry, quadrature
from symmlab.nonlinearity import parse


@pytest.fixture(scope="module")
def disk():
    return geometry.triangulate(geometry.make_disk(), 0.05)


def test_dunavant_rule_weights_and_exactness(disk):
    assert sum(quadrature.DUNAVANT7_WEIGHTS) == pytest.approx(1.0, abs=1e-15)
    area = quadrature.quad7(disk, lambda xy: np.ones(len(xy)))
    assert area == pytest.approx(disk.area, rel=1e-13)
    # degree 4 polynomial on the unit square: the degree-5 rule is exact
    sq = geometry.triangulate(geometry.make_square(), 0.1)
    val = quadrature.quad7(sq, lambda xy: (xy[:, 0] + 0.5) ** 2 * (xy[:, 1] + 0.5) ** 2)
    assert val == pytest.approx(1 / 9, rel=1e-12)


def test_level_integrals_constant_f(disk):
    r2 = np.sum(disk.nodes ** 2, axis=1)
    u = (1 - r2) / 4
    li = quadrature.level_integrals(disk, u, parse("const:1.0"))
    assert li.int_f == pytest.approx(disk.area, rel=1e-13)
    assert li.int_F == pytest.approx(li.int_uf, rel=1e-13)
    assert li.int_uf == pytest.approx(math.pi / 8, rel=5e-3)


def test_split_quadrature_step(disk):
    # u = 1 - r^2, f = 2 for u < 0.3, 1 above: {u >= 0.3} is r^2 <= 0.7
    u = 1 - np.sum(disk.nodes ** 2, axis=1)
    li = quadrature.level_integrals(disk, u, parse("step:2.0@0:1.0@0.3"))
    exact = 2 * (math.pi - 0.7 * math.pi) + 0.7 * math.pi
    assert li.int_f == pytest.approx(exact, rel=2e-3)
    assert li.n_split > 0


def test_load_vector_sums_to_integral(disk):
    u = 1 - np.sum(disk.nodes ** 2, axis=1)
    nl = parse("step:2.0@0:1.0@0.3")
    b = quadrature.load_vector(disk, u, nl)
    assert b.sum() == pytest.approx(quadrature.level_integrals(disk, u, nl).int_f, rel=1e-12)


def test_p1_load_vector_consistent_mass(disk):
    g = np.ones(disk.n_nodes)
    assert quadrature.p1_load_vector(disk, g).sum() == pytest.approx(disk.area, rel=1e-13)
