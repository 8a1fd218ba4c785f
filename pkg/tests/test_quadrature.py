import numpy as np
import pytest
from scipy.special import i0

from src.core.errors import DomainError, InvalidParam
from src.dist3.distribution import CanonicalGamma3
from src.dist3.quadrature import (bessel_i0_series, cone_lt_closed_form, cylinder_lt_closed_form,
                                  density_mass, quadrature_cone_lt, quadrature_cylinder_lt)

CONE_POINTS = [
    (0.0, 0.0, -1.0),
    (0.3, 0.0, -1.0),
    (0.2, -0.4, -1.5),
    (0.0, 0.5, -0.8),
    (-0.6, 0.6, -2.0),
]


@pytest.mark.parametrize("p", [0.0, 0.5, 1.0, 2.5])
@pytest.mark.parametrize("t", CONE_POINTS)
def test_cone_quadrature_matches_closed_form(p, t):
    exact = cone_lt_closed_form(p, t)
    assert quadrature_cone_lt(p, t) == pytest.approx(exact, rel=1e-6)


@pytest.mark.parametrize("t", CONE_POINTS[:4])
def test_cylinder_quadrature_matches_closed_form(t):
    assert quadrature_cylinder_lt(t) == pytest.approx(cylinder_lt_closed_form(t), rel=1e-8)


def test_arguments_outside_the_cone_diverge():
    with pytest.raises(DomainError):
        cone_lt_closed_form(1.0, (0.0, 0.0, 1.0))
    with pytest.raises(DomainError):
        quadrature_cone_lt(1.0, (1.0, 0.0, -0.5))
    with pytest.raises(DomainError):
        quadrature_cylinder_lt((0.0, 0.0, 0.0))
    with pytest.raises(InvalidParam):
        quadrature_cone_lt(-1.0, (0.0, 0.0, -1.0))


def test_bessel_series():
    z = np.array([0.0, 0.5, 3.0, 12.0])
    np.testing.assert_allclose(bessel_i0_series(z), i0(z), rtol=1e-14)


@pytest.mark.parametrize("a", [0.5, 0.7])
def test_density_integrates_to_one(a):
    assert density_mass(CanonicalGamma3(a)) == pytest.approx(1.0, abs=1e-6)
