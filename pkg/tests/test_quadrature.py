import numpy as np
import pytest
from numpy.testing import assert_allclose

from gampcs import gauss_hermite, gauss_panels


@pytest.mark.parametrize("builder,args", [
    (gauss_hermite, (121,)),
    (gauss_hermite, (31,)),
    (gauss_panels, (1e-6,)),
    (gauss_panels, (0.5,)),
])
def test_rule_contract(builder, args):
    rule = builder(*args)
    assert abs(rule.w.sum() - 1.0) <= 1e-12
    assert_allclose(rule.z, -rule.z[::-1], atol=1e-12)
    assert rule.count == rule.z.size == rule.w.size


def test_gaussian_moments():
    for rule in (gauss_hermite(61), gauss_panels(1e-3)):
        assert_allclose(rule.integrate(rule.z**2), 1.0, rtol=1e-12)
        assert_allclose(rule.integrate(rule.z**4), 3.0, rtol=1e-11)
        assert_allclose(rule.integrate(np.ones_like(rule.z)), 1.0, rtol=1e-12)


def test_panels_resolve_narrow_feature():
    """A bump of width w contributes w/sqrt(1+w^2) to the Gaussian average;
    the graded rule must capture it even when w is a millionth."""
    for w in (1e-2, 1e-4, 1e-6):
        rule = gauss_panels(w)
        got = rule.integrate(np.exp(-0.5 * rule.z**2 / w**2))
        assert_allclose(got, w / np.sqrt(1.0 + w**2), rtol=1e-12)


def test_hermite_misses_narrow_feature():
    """The global polynomial rule cannot see features far below its node
    spacing; this blindness is why the graded rule exists."""
    rule = gauss_hermite(121)
    w = 1e-6
    got = rule.integrate(np.exp(-0.5 * rule.z**2 / w**2))
    assert abs(got / (w / np.sqrt(1 + w**2)) - 1.0) > 0.5


def test_builder_validation():
    with pytest.raises(ValueError):
        gauss_hermite(1)
    with pytest.raises(ValueError):
        gauss_panels(0.0)
    with pytest.raises(ValueError):
        gauss_panels(1e-3, order=1)
