import math

import pytest

from symmlab import nonlinearity as nlm
from symmlab.nonlinearity import HypothesisError, NonlinearityError


def test_step_values_right_continuous():
    f = nlm.parse("step:2.0@0:1.0@0.1")
    assert f(0.05) == 2.0 and f(0.1) == 1.0 and f.left_limit(0.1) == 2.0
    assert f.antiderivative(0.5) == pytest.approx(0.6)
    assert list(f.breakpoints) == [0.1] and f.n_pieces == 2


def test_affine_and_piecewise():
    g = nlm.parse("affine:1,0.5")
    assert g(2.0) == 2.0 and g.antiderivative(2.0) == pytest.approx(3.0)
    h = nlm.parse("pw:1,0@0:2,1@0.5")
    assert (h(0.4), h(0.5), h(1.0)) == (1.0, 2.5, 3.0)
    assert h.antiderivative(1.0) == pytest.approx(1.875)


def test_constant():
    f = nlm.parse("const:3.0")
    assert f.is_constant and f(10.0) == 3.0 and f.antiderivative(2.0) == pytest.approx(6.0)


def test_bounds_include_one_sided_limits():
    b = nlm.bounds(nlm.parse("step:2.0@0:1.0@0.1"), 0.5)
    assert (b.m_f, b.M_f) == (1.0, 2.0)


def test_bounds_reject_nonpositive_infimum():
    with pytest.raises(HypothesisError):
        nlm.bounds(nlm.parse("affine:0,1"), 1.0)


@pytest.mark.parametrize("spec", ["foo:1", "step:1@0.5", "const:x", ""])
def test_parse_errors(spec):
    with pytest.raises(NonlinearityError):
        nlm.parse(spec)


def test_hypotheses():
    f = nlm.parse("step:2.0@0:1.0@0.1")
    assert nlm.check_hypotheses(f, 2.0, 2, 0.5).status == "PASS"
    assert nlm.check_hypotheses(f, 1.5, 2, 0.5).status == "INCOMPLETE"
    fc = nlm.parse("step:2.0@0:1.0@0.1", phi="step:2.0@0:1.0@0.1", s=1.0)
    assert nlm.check_hypotheses(fc, 1.5, 2, 0.5).status == "PASS"


def test_sigma():
    assert nlm.sigma(2, 2) == 2.0
    assert nlm.sigma(3, 2) == 1.75
    assert nlm.sigma(1.5, 2, 1.0) == 1.0
    assert nlm.sigma(4, 2) == pytest.approx(1 + 4 / 6)


def test_equality_and_hash():
    a, b = nlm.parse("const:1.0"), nlm.parse("const:1.0")
    assert a == b and hash(a) == hash(b)
    assert a != nlm.parse("const:2.0")
