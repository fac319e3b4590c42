import math

import numpy as np
import pytest

from symmlab import geometry
from symmlab.constants import kappa, omega
from symmlab.geometry import GeometryError


def test_constants():
    assert omega(2) == pytest.approx(math.pi)
    assert omega(3) == pytest.approx(4 * math.pi / 3)
    assert kappa(2) == pytest.approx(2 * math.sqrt(math.pi))


def test_square_and_triangle_deficit_closed_form():
    assert geometry.make_square().iso_deficit == pytest.approx(2 / math.sqrt(math.pi) - 1, abs=1e-14)
    tri = geometry.make_regular_polygon(3)
    side = math.sqrt(3)
    expected = 3 * side / (2 * math.sqrt(math.pi * math.sqrt(3) / 4 * side ** 2)) - 1
    assert tri.iso_deficit == pytest.approx(expected, abs=1e-14)
    assert tri.iso_deficit == pytest.approx(0.286074, abs=1e-6)


def test_deficit_scale_and_translation_invariant():
    d = geometry.make_ellipse(1.5, 0.7, n=512)
    assert d.scaled(3.0).iso_deficit == pytest.approx(d.iso_deficit, rel=1e-12)
    assert d.translated((2.0, -1.0)).iso_deficit == pytest.approx(d.iso_deficit, rel=1e-12)


def test_disk_deficit_nearly_zero_and_positive():
    d = geometry.make_disk()
    assert 0 <= d.iso_deficit < 1e-6
    assert d.area == pytest.approx(math.pi, rel=1e-6)


def test_orientation_normalized():
    d = geometry.make_square()
    flipped = geometry.Domain(d.boundary[::-1].copy())
    assert flipped.area == pytest.approx(1.0)


def test_rejects_bad_domains():
    with pytest.raises(GeometryError):
        geometry.Domain(np.array([[0, 0], [1, 1], [1, 0], [0, 1]], float))  # bow tie
    with pytest.raises(GeometryError):
        geometry.make_perturbed_ball(1.0, 0.2, 3)  # loses star shape
    with pytest.raises(GeometryError):
        geometry.make_disk(n_boundary=8)


@pytest.mark.parametrize("dom", [geometry.make_disk(), geometry.make_square(),
                                 geometry.make_ellipse(2.0, 0.5),
                                 geometry.make_perturbed_ball(1.0, 0.1, 3)])
def test_mesh_quality(dom):
    m = geometry.triangulate(dom, 0.08)
    assert np.all(m.areas > 0)
    assert m.min_angle() > 20.0
    assert m.area == pytest.approx(dom.area, rel=1e-2)
    # boundary loop closes and normals point outward
    mid = 0.5 * (m.nodes[m.boundary_edges[:, 0]] + m.nodes[m.boundary_edges[:, 1]])
    assert np.all(np.sum((mid - np.asarray(dom.center)) * m.boundary_normals, axis=1) > 0)


def test_mesh_area_converges_second_order():
    d = geometry.make_disk()
    e1 = abs(geometry.triangulate(d, 0.1).area - math.pi)
    e2 = abs(geometry.triangulate(d, 0.05).area - math.pi)
    assert e1 / e2 > 3.0


def test_mesh_roundtrip(tmp_path):
    m = geometry.triangulate(geometry.make_ellipse(1.2, 0.8), 0.1)
    geometry.write_mesh(tmp_path / "m.txt", m)
    m2 = geometry.read_mesh(tmp_path / "m.txt")
    assert np.array_equal(m.nodes, m2.nodes)
    assert np.array_equal(m.triangles, m2.triangles)
    d = geometry.domain_from_mesh(m)
    assert d.area == pytest.approx(m.area, rel=1e-12)


def test_domain_roundtrip(tmp_path):
    d = geometry.make_perturbed_ball(1.0, 0.05, 4, n=256)
    geometry.write_domain(tmp_path / "d.txt", d)
    assert geometry.read_domain(tmp_path / "d.txt").iso_deficit == d.iso_deficit


def test_triangulate_rejects_coarse_h():
    with pytest.raises(GeometryError):
        geometry.triangulate(geometry.make_ellipse(2.0, 0.1), 0.5)
