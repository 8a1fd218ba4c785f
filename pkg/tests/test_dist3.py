import math

import numpy as np
import pytest

from src.classify3.classify_service import marginal_params_1d
from src.core.errors import InvalidParam, OutOfDomain
from src.dist3.distribution import (CanonicalGamma3, case2_laplace, density, in_domain, in_omega_a, marginal_laplace_1d,
                                    laplace_closed_form, laplace_gradient)
from src.dist3.samplers import iter_samples, sample_case2, sample_interior, sample_surface


def test_closed_form_value():
    expected = math.exp(-1.0) * 0.75 ** -4
    assert laplace_closed_form(CanonicalGamma3(0.5), (0.0, 0.0, 0.5)) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(1.16268, abs=1e-5)


def test_closed_form_at_origin():
    for a in (0.3, 0.5, 1.0):
        assert laplace_closed_form(CanonicalGamma3(a), np.zeros(3)) == 1.0


def test_out_of_domain():
    g = CanonicalGamma3(0.5)
    assert not in_domain(0.5, (0.0, 0.0, 2.0))
    with pytest.raises(OutOfDomain):
        laplace_closed_form(g, (0.0, 0.0, 2.0))
    with pytest.raises(OutOfDomain):
        laplace_closed_form(g, (2.0, 0.0, 0.0))


def test_parameter_range():
    with pytest.raises(InvalidParam):
        CanonicalGamma3(0.0)
    with pytest.raises(InvalidParam):
        CanonicalGamma3(1.2)
    assert CanonicalGamma3(-1.0).is_surface


def test_gradient_matches_finite_differences():
    g = CanonicalGamma3(0.6)
    s = np.array([0.1, -0.05, 0.2])
    h = 1e-6
    fd = np.array([
        (laplace_closed_form(g, s + h * e) - laplace_closed_form(g, s - h * e)) / (2 * h)
        for e in np.eye(3)
    ])
    np.testing.assert_allclose(laplace_gradient(g, s), fd, rtol=1e-7)


def test_gradient_at_origin_is_mean_zero():
    np.testing.assert_allclose(laplace_gradient(CanonicalGamma3(0.5), np.zeros(3)), np.zeros(3), atol=1e-15)


def test_density_support():
    g = CanonicalGamma3(0.5)
    # the vertex of Omega_a is at x3 = -1/a
    assert density(g, (0.0, 0.0, -3.0)) == 0.0
    assert density(g, (5.0, 0.0, 0.0)) == 0.0
    assert density(g, (0.0, 0.0, 0.0)) > 0.0
    values = density(g, np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -3.0]]))
    assert values.shape == (2,)
    with pytest.raises(InvalidParam):
        density(CanonicalGamma3(1.0), (0.0, 0.0, 0.0))


def test_density_vanishes_continuously_at_the_cone():
    g = CanonicalGamma3(0.5)
    # at x3 = 0 the boundary of Omega_a sits at x1 = 2
    values = [density(g, (2.0 - eps, 0.0, 0.0)) for eps in (1e-2, 1e-4, 1e-6, 1e-8)]
    assert all(v > 0.0 for v in values)
    assert values == sorted(values, reverse=True)
    assert values[-1] < 2e-3 * values[0]
    assert density(g, (2.0, 0.0, 0.0)) == 0.0


def test_case2_laplace_is_a_product():
    components = [marginal_params_1d(b) for b in (0.5, 0.0, 1.0)]
    s = np.array([0.1, 0.2, -0.1])
    expected = np.prod([c.laplace(v) for c, v in zip(components, s)])
    assert case2_laplace(components, np.eye(3), s) == pytest.approx(expected, rel=1e-14)
    P = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    assert case2_laplace(components, P, s[[1, 0, 2]]) == pytest.approx(expected, rel=1e-14)


def test_case2_laplace_matches_one_dimensional_transforms():
    bs = (0.5, 0.0, -0.5)
    components = [marginal_params_1d(b) for b in bs]
    s = np.array([0.3, -0.2, 0.4])
    expected = math.prod(float(marginal_laplace_1d(b, v)) for b, v in zip(bs, s))
    assert case2_laplace(components, np.eye(3), s) == pytest.approx(expected, rel=1e-14)
    assert float(marginal_laplace_1d(0.0, 1.0)) == pytest.approx(math.exp(0.5))
    # b * Gamma(1/b^2) - 1/b has transform exp(-s/b) (1 - b s)^(-1/b^2)
    assert float(marginal_laplace_1d(0.5, 0.4)) == pytest.approx(math.exp(-0.8) * 0.8 ** -4, rel=1e-12)


def test_interior_sampler_is_deterministic():
    g = CanonicalGamma3(0.6)
    first = sample_interior(g, 1000, seed=3)
    np.testing.assert_array_equal(first, sample_interior(g, 1000, seed=3))
    assert not np.array_equal(first, sample_interior(g, 1000, seed=4))


def test_worker_count_does_not_change_draws():
    g = CanonicalGamma3(0.6)
    n = 140_000  # spans several blocks
    np.testing.assert_array_equal(sample_interior(g, n, seed=9, workers=1),
                                  sample_interior(g, n, seed=9, workers=4))


def test_stream_matches_batch():
    blocks = list(iter_samples(1500, seed=5, a=0.6))
    np.testing.assert_array_equal(np.concatenate(blocks), sample_interior(CanonicalGamma3(0.6), 1500, seed=5))
    surface = np.concatenate(list(iter_samples(800, seed=5, a=1.0)))
    np.testing.assert_array_equal(surface, sample_surface(1.0, 800, seed=5))
    with pytest.raises(InvalidParam):
        iter_samples(10)


def test_interior_samples_lie_in_omega():
    x = sample_interior(CanonicalGamma3(0.6), 20_000, seed=1)
    assert in_omega_a(0.6, x).all()


def test_surface_samples_lie_on_the_cone():
    x = sample_surface(1.0, 5000, seed=2)
    np.testing.assert_allclose(x[:, 0] ** 2 + x[:, 1] ** 2, (x[:, 2] + 1.0) ** 2, rtol=1e-10, atol=1e-10)
    with pytest.raises(InvalidParam):
        sample_surface(0.5, 10)


def test_case2_sampler_shape():
    components = [marginal_params_1d(b) for b in (0.5, 0.0, 1.0)]
    x = sample_case2(components, np.eye(3), 2000, seed=1)
    assert x.shape == (2000, 3)
    with pytest.raises(InvalidParam):
        sample_case2(components[:2], np.eye(3), 10)


def test_case2_sampler_third_moments():
    components = [marginal_params_1d(b) for b in (0.5, 0.0, -0.5)]
    x = sample_case2(components, np.eye(3), 200_000, seed=6)
    for k, target in enumerate((1.0, 0.0, -1.0)):
        cubes = x[:, k] ** 3
        sigma = cubes.std() / math.sqrt(len(cubes))
        assert abs(cubes.mean() - target) <= 5 * sigma
        assert abs(x[:, k].mean()) <= 5 / math.sqrt(len(cubes))


@pytest.mark.slow
def test_interior_sample_moments():
    x = sample_interior(CanonicalGamma3(0.6), 1_000_000, seed=11)
    np.testing.assert_allclose(x.mean(axis=0), np.zeros(3), atol=0.004)
    np.testing.assert_allclose(np.cov(x, rowvar=False), np.eye(3), atol=0.006)
    assert np.mean(x[:, 2] ** 3) == pytest.approx(1.2, abs=0.02)


@pytest.mark.slow
def test_interior_sample_laplace():
    g = CanonicalGamma3(0.6)
    x = sample_interior(g, 1_000_000, seed=12)
    for s in [(0.0, 0.0, 0.1), (0.1, -0.1, 0.15), (-0.1, 0.05, -0.1), (0.05, 0.05, 0.0), (0.0, -0.1, 0.05)]:
        values = np.exp(x @ np.array(s))
        sigma = values.std() / math.sqrt(len(values))
        assert abs(values.mean() - laplace_closed_form(g, s)) <= 4 * sigma


@pytest.mark.slow
def test_surface_sample_moments():
    x = sample_surface(1.0, 1_000_000, seed=13)
    np.testing.assert_allclose(x[:, 0] ** 2 + x[:, 1] ** 2, (x[:, 2] + 1.0) ** 2, rtol=1e-10, atol=1e-10)
    np.testing.assert_allclose(x.mean(axis=0), np.zeros(3), atol=0.005)
    np.testing.assert_allclose(np.cov(x, rowvar=False), np.eye(3), atol=0.01)
    assert np.mean(x[:, 2] ** 3) == pytest.approx(2.0, abs=0.08)
