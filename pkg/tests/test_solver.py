import math

import numpy as np
import pytest

from symmlab import geometry, radial, solver
from symmlab.nonlinearity import parse


@pytest.fixture(scope="module")
def disk():
    return geometry.triangulate(geometry.make_disk(), 0.05)


def test_torricelli(disk):
    u = solver.solve_semilinear(disk, 2.0, parse("const:1.0"))
    exact = (1 - np.sum(disk.nodes ** 2, axis=1)) / 4
    assert np.max(np.abs(u.values - exact)) < 2e-4
    assert solver.dirichlet_energy_p(u, 2.0) == pytest.approx(math.pi / 8, rel=2e-3)
    assert np.all(u.values[disk.boundary_mask] == 0)


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_general_p_center(disk, p):
    u = solver.solve_semilinear(disk, p, parse("const:1.0"))
    assert u.max == pytest.approx(radial.exact_ball_value(p, 2), abs=1e-3)


def test_scaling_in_rhs(disk):
    p = 3.0
    u1 = solver.solve_fixed_rhs(disk, p, np.ones(disk.n_nodes))
    u8 = solver.solve_fixed_rhs(disk, p, 8 * np.ones(disk.n_nodes))
    np.testing.assert_allclose(u8.values, 8 ** (1 / (p - 1)) * u1.values, rtol=1e-6, atol=1e-10)


def test_energy_monotone_history(disk):
    u = solver.solve_fixed_rhs(disk, 1.5, np.ones(disk.n_nodes))
    for st in u.info["stages"]:
        h = np.asarray(st["energy_history"])
        if h.size < 2:
            continue
        assert np.all(np.diff(h) <= 1e-14 * np.abs(h[:-1]).max())


def test_step_nonlinearity_fixed_point(disk):
    u = solver.solve_semilinear(disk, 2.0, parse("step:2.0@0:1.0@0.1"))
    assert u.info["outer_residual"] <= 1e-9
    assert 0.25 < u.max < 0.5


def test_flux_and_pohozaev_small(disk):
    nl = parse("const:1.0")
    u = solver.solve_semilinear(disk, 2.0, nl)
    assert solver.boundary_flux(u, 2.0) == pytest.approx(disk.area, rel=0.03)
    assert abs(solver.pohozaev_residual(u, 2.0, nl)) < 0.05
    assert solver.boundary_grad_sup(u) == pytest.approx(0.5, rel=0.05)


def test_solution_roundtrip(tmp_path, disk):
    u = solver.solve_semilinear(disk, 2.0, parse("const:1.0"))
    u = solver.MeshFunction(disk, u.values, {"iterations": 3})
    solver.write_solution(tmp_path / "s.txt", u, "mesh.txt")
    mpath, vals, info = solver.read_solution(tmp_path / "s.txt")
    assert mpath == "mesh.txt" and np.array_equal(vals, u.values) and info["iterations"] == 3


def test_values_read_only(disk):
    u = solver.MeshFunction(disk, np.zeros(disk.n_nodes))
    with pytest.raises(ValueError):
        u.values[0] = 1.0
