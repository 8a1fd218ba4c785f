import numpy as np
import pytest

from src.config.settings import Tolerances, VerifyConfig
from src.core.tensor import MeixnerSpec, canonical_tensor
from src.dist3.distribution import CanonicalGamma3, laplace_closed_form
from src.dist3.samplers import sample_interior
from src.moments.moment_service import MomentTable, laplace_radius
from src.verify import verify_service
from src.verify.verify_service import (CONE_ARGUMENTS, cone_quadrature_deviation, cylinder_quadrature_deviation,
                                       full_suite, laplace_z_scores, marginal_section_deviation, moment_z_scores,
                                       pde_residual, random_domain_points, series_pde_residual,
                                       taylor_vs_closed_form)

TOL = Tolerances()


@pytest.fixture
def small_config():
    return VerifyConfig(profile="quick", seed=17, samples=20_000, pde_points=5, workers=2)


@pytest.mark.parametrize("a", [0.3, 0.6, 0.9])
def test_pde_residual_at_origin_and_nearby(a):
    points = np.vstack([np.zeros(3), random_domain_points(a, 19, 0.05, seed=1)])
    result = pde_residual(a, points)
    assert result.analytic < 1e-12
    assert result.finite_difference < 1e-7


def test_perturbed_exponent_breaks_the_system():
    result = pde_residual(0.5, np.zeros((1, 3)), exponent_scale=1.01)
    # grad log phi at 0 picks up 0.01 / a in the third coordinate
    assert result.analytic == pytest.approx(0.02, rel=1e-9)
    assert result.analytic > 1e-3


def test_random_points_are_in_the_domain():
    points = random_domain_points(0.9, 30, 0.5, seed=2)
    assert points.shape == (30, 3)
    assert np.abs(points).max() <= 0.5


def test_taylor_vs_closed_form():
    cmp = taylor_vs_closed_form(0.5, 6, 0.02)
    assert cmp.deviation < 1e-9
    assert cmp.raw_deviation < 1e-9
    assert cmp.grid_radius == pytest.approx(0.02)


def test_taylor_check_detects_a_perturbed_target():
    clean = taylor_vs_closed_form(0.5, 8, 0.005)
    assert clean.deviation <= TOL.symbolic_vs_float
    perturbed = taylor_vs_closed_form(0.5, 8, 0.005, perturbation=10 * TOL.symbolic_vs_float)
    assert perturbed.deviation > TOL.symbolic_vs_float


def test_degree_zero_taylor_is_within_its_bound():
    cmp = taylor_vs_closed_form(0.9, 0)
    assert cmp.deviation == 0.0
    assert cmp.raw_deviation > 0.0


def test_series_pde_residual_shrinks_with_degree(canonical_spec):
    tbl = MomentTable(canonical_spec)
    rng = np.random.default_rng(4)
    points = rng.uniform(-1.0, 1.0, (5, 3)) * laplace_radius(canonical_spec) / 4.0
    low = series_pde_residual(tbl, points, 4)
    high = series_pde_residual(tbl, points, 10)
    assert high <= 1e-6
    assert high < low


def test_canonical_suite_passes(small_config):
    report = full_suite(0.5, small_config)
    failed = [c.name for c in report.ordered() if c.passed is False]
    assert report.passed, failed
    assert report.checks["classify3.classification"].details['variant'] == "CaseI"
    assert report.checks["dist3.density_mass"].passed
    assert report.checks["quadrature.cone"].passed


def test_surface_suite_skips_density(small_config):
    report = full_suite(1.0, small_config)
    assert report.checks["dist3.density_mass"].skipped
    assert report.checks["dist3.sampler_support"].passed


def test_b_family_fails_and_skips_dependents(tampered, small_config):
    report = full_suite(MeixnerSpec.normalized(tampered), small_config)
    assert not report.passed
    assert report.checks["core.lcc"].passed
    assert report.checks["integrability.necessary_conditions"].passed is False
    for name in ("moments.bound", "chaos.meixner1", "dist3", "quadrature"):
        assert report.checks[name].skipped
        assert report.checks[name].reason == "integrability obstruction"


def test_case_two_suite_passes(diagonal, small_config):
    report = full_suite(diagonal, small_config)
    failed = [c.name for c in report.ordered() if c.passed is False]
    assert report.passed, failed
    assert "dist3.case2_taylor" in report.checks


def test_report_is_deterministic(small_config):
    first = full_suite(canonical_tensor(0.6), small_config).to_dict()
    second = full_suite(canonical_tensor(0.6), small_config).to_dict()
    assert first == second
    assert "wall_time" not in first['checks'][0]
    assert first['seed'] == 17


def test_timings_are_opt_in(small_config):
    report = full_suite(0.5, small_config)
    payload = report.to_dict(include_timings=True)
    assert all('wall_time' in c for c in payload['checks'])


@pytest.mark.parametrize("a", [0.3, 0.6, 1.0])
def test_marginal_section_check_detects_a_perturbed_target(a):
    assert marginal_section_deviation(a) <= TOL.exact_identity
    assert marginal_section_deviation(a, perturbation=10 * TOL.exact_identity) > TOL.exact_identity


def test_quadrature_checks_detect_perturbed_targets():
    exponents, arguments = (0.0, 1.0), CONE_ARGUMENTS[:3]
    assert cone_quadrature_deviation(exponents, arguments) <= TOL.quadrature_rel
    assert cone_quadrature_deviation(exponents, arguments, 10 * TOL.quadrature_rel) > TOL.quadrature_rel
    assert cylinder_quadrature_deviation() <= TOL.cylinder_rel
    assert cylinder_quadrature_deviation(perturbation=10 * TOL.cylinder_rel) > TOL.cylinder_rel


def test_sampler_z_scores_detect_shifted_targets():
    a = 0.6
    g = CanonicalGamma3(a)
    x = sample_interior(g, 20_000, seed=21)
    third = {(2, 2, 2): 2 * a}
    assert max(moment_z_scores(x, third).values()) <= TOL.monte_carlo_sigmas + 1.0

    cubes = x[:, 2] ** 3
    se = cubes.std(ddof=1) / np.sqrt(len(cubes))
    shifted = {(2, 2, 2): 2 * a + 10 * TOL.monte_carlo_sigmas * se}
    assert moment_z_scores(x, shifted)['third_222'] > TOL.monte_carlo_sigmas

    s = np.array([0.0, 0.05, 0.1])
    values = np.exp(x @ s)
    se = values.std(ddof=1) / np.sqrt(len(values))
    clean = laplace_z_scores(x, s[None, :], lambda p: laplace_closed_form(g, p))
    assert clean['laplace_0'] <= TOL.monte_carlo_sigmas + 1.0
    shifted = laplace_z_scores(x, s[None, :], lambda p: laplace_closed_form(g, p) + 10 * TOL.monte_carlo_sigmas * se)
    assert shifted['laplace_0'] > TOL.monte_carlo_sigmas


def test_numerical_failure_in_one_check_is_recorded(monkeypatch, small_config):
    def broken(g):
        raise np.linalg.LinAlgError("singular matrix")

    monkeypatch.setattr(verify_service, "density_mass", broken)
    report = full_suite(0.5, small_config)
    check = report.checks["dist3.density_mass"]
    assert check.passed is False
    assert check.reason.startswith("LinAlgError")
    assert report.checks["dist3.sampler_support"].passed
    assert not report.passed
