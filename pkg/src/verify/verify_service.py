"""
Verification service
Runs the cross-module checks for one input and gathers them into a report
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np

from src.chaos_oracle.oracle_service import (build_chaos_basis, build_operators, check_axioms,
                                             check_n_meixner)
from src.classify3.classify_service import CaseI, CaseII, Rejected, classify
from src.config import settings
from src.config.settings import VerifyConfig
from src.core.errors import MeixnerError
from src.core.tensor import MeixnerSpec, SymmetricCubicTensor, canonical_tensor, validate_lcc
from src.dist3.distribution import (CanonicalGamma3, case2_laplace, in_domain, in_omega_a,
                                    laplace_closed_form, laplace_gradient)
from src.dist3.quadrature import (cone_lt_closed_form, cylinder_lt_closed_form, density_mass,
                                  quadrature_cone_lt, quadrature_cylinder_lt)
from src.dist3.samplers import sample_case2, sample_interior, sample_surface
from src.integrability.integrability_service import necessary_conditions
from src.logging.log_service import log_audit_event, logger
from src.moments.moment_service import (MomentTable, laplace_radius, moment_bound, pivot_spread,
                                        taylor_laplace, taylor_tail_bound)
from utils.multi_index import factorial_product, indices_up_to, shift

CONE_EXPONENTS = (0.0, 0.5, 1.0, 2.5)
CONE_ARGUMENTS = (
    (0.0, 0.0, -1.0),
    (0.0, 0.0, -2.0),
    (0.3, 0.0, -1.0),
    (0.2, -0.3, -1.5),
    (-0.4, 0.1, -0.8),
)
CYLINDER_ARGUMENTS = ((0.0, 0.0, -1.0), (0.5, 0.0, -1.0), (0.0, 0.0, -2.0), (0.3, 0.4, -1.2))


@dataclass
class CheckResult:
    """One named check; passed is None when the check was skipped."""
    name: str
    description: str
    tolerance: Optional[float]
    observed: Optional[float]
    passed: Optional[bool]
    wall_time: float = 0.0
    reason: Optional[str] = None
    details: Dict[str, object] = field(default_factory=dict)

    @property
    def skipped(self) -> bool:
        return self.passed is None

    def to_dict(self, include_timings: bool = False):
        out = {
            'name': self.name,
            'description': self.description,
            'tolerance': self.tolerance,
            'observed': _finite_or_none(self.observed),
            'passed': self.passed,
            'skipped': self.skipped,
            'reason': self.reason,
            'details': self.details,
        }
        if include_timings:
            out['wall_time'] = self.wall_time
        return out


def _finite_or_none(value):
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


@dataclass
class VerifyReport:
    config: VerifyConfig
    checks: Dict[str, CheckResult] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values() if not c.skipped)

    def add(self, result: CheckResult):
        self.checks[result.name] = result

    def skip(self, name: str, description: str, reason: str):
        self.add(CheckResult(name, description, None, None, None, reason=reason))

    def ordered(self) -> List[CheckResult]:
        return [self.checks[k] for k in sorted(self.checks)]

    def to_dict(self, include_timings: bool = False):
        return {
            'passed': self.passed,
            'profile': self.config.profile,
            'seed': self.config.seed,
            'tolerances': self.config.tolerances.to_dict(),
            'checks': [c.to_dict(include_timings) for c in self.ordered()],
        }


@dataclass
class PdeResidual:
    analytic: float
    finite_difference: float


@dataclass
class TaylorComparison:
    deviation: float
    raw_deviation: float
    tail_bound: float
    grid_radius: float


def _timed(report: VerifyReport, name: str, description: str, tolerance: Optional[float],
           fn: Callable[[], tuple]):
    """Run fn -> (observed, passed[, details]) and record it; errors become failures."""
    start = time.perf_counter()
    try:
        outcome = fn()
        observed, passed = outcome[0], outcome[1]
        details = outcome[2] if len(outcome) > 2 else {}
        reason = None
    except (MeixnerError, np.linalg.LinAlgError, ArithmeticError) as e:
        logger.error(f"Check {name} raised {type(e).__name__}: {e}")
        observed, passed, details, reason = None, False, {}, f"{type(e).__name__}: {e}"
    result = CheckResult(name, description, tolerance, observed, bool(passed),
                         time.perf_counter() - start, reason, details)
    report.add(result)
    return result


def _canonical_matrix(a: float, s: np.ndarray) -> np.ndarray:
    return np.einsum('k,krs->rs', s, canonical_tensor(a).dense)


def pde_residual(a: float, points: Sequence, exponent_scale: float = 1.0) -> PdeResidual:
    """
    Residual of grad(phi) = (I - B(s))^{-1} phi(s) s for the canonical law

    The gradient is taken analytically from grad(log phi) and by central
    differences with step 1e-6 * max(1, |s_i|).

    Args:
        a: Canonical parameter
        points: Points in the Laplace domain
        exponent_scale: Perturbs the transform exponent (1 is the true law)

    Returns:
        PdeResidual with the max residual of each variant
    """
    g = CanonicalGamma3(a)
    analytic = 0.0
    finite = 0.0
    for s in np.atleast_2d(np.asarray(points, dtype=float)):
        phi = laplace_closed_form(g, s, exponent_scale)
        rhs = np.linalg.solve(np.eye(3) - _canonical_matrix(a, s), phi * s)
        grad = laplace_gradient(g, s, exponent_scale)
        fd = np.empty(3)
        for k in range(3):
            h = settings.FD_REL_STEP * max(1.0, abs(s[k]))
            up = s.copy()
            down = s.copy()
            up[k] += h
            down[k] -= h
            fd[k] = (laplace_closed_form(g, up, exponent_scale)
                     - laplace_closed_form(g, down, exponent_scale)) / (2.0 * h)
        analytic = max(analytic, float(np.linalg.norm(grad - rhs)))
        finite = max(finite, float(np.linalg.norm(fd - rhs)))
    return PdeResidual(analytic, finite)


def random_domain_points(a: float, count: int, radius: float, seed: int) -> np.ndarray:
    """Uniform points in the cube ||s||_inf <= radius that lie in the Laplace domain."""
    rng = np.random.default_rng(seed)
    points = []
    while len(points) < count:
        s = rng.uniform(-radius, radius, 3)
        if in_domain(a, s):
            points.append(s)
    return np.array(points)


def _cube_grid(radius: float, per_axis: int = 5) -> np.ndarray:
    axis = np.linspace(-radius, radius, per_axis)
    return np.array(np.meshgrid(axis, axis, axis, indexing='ij')).reshape(3, -1).T


def taylor_vs_closed_form(a: float, N: int, grid_radius: Optional[float] = None,
                          perturbation: float = 0.0) -> TaylorComparison:
    """
    Compare degree-N Taylor sums from exact moments with the closed form

    The grid is a 5 x 5 x 5 lattice with ||s||_inf <= min(grid_radius, R/2).
    A non-zero perturbation scales the closed-form target by (1 + perturbation).

    Returns:
        TaylorComparison; deviation is max(0, |difference| - tail bound)
    """
    spec = MeixnerSpec.normalized(canonical_tensor(a))
    tbl = MomentTable(spec)
    g = CanonicalGamma3(a)
    radius = laplace_radius(spec) / 2.0
    if grid_radius is not None:
        radius = min(radius, grid_radius)
    deviation = raw = 0.0
    for s in _cube_grid(radius):
        diff = abs(taylor_laplace(tbl, s, N) - laplace_closed_form(g, s) * (1.0 + perturbation))
        bound = taylor_tail_bound(spec, s, N)
        raw = max(raw, diff)
        deviation = max(deviation, diff - bound)
    return TaylorComparison(deviation, raw, taylor_tail_bound(spec, np.full(3, radius), N), radius)


def series_pde_residual(tbl: MomentTable, points: Sequence, N: int) -> float:
    """
    Residual of the Laplace system for the Taylor series built from moments

    Works in any dimension; the residual shrinks with the truncation tail.
    """
    d = tbl.d
    slices = tbl.spec.alpha.dense
    beta = np.asarray(tbl.spec.beta, dtype=float)
    indices = indices_up_to(d, N)
    values = {idx: float(tbl.moment(idx)) for idx in indices}
    worst = 0.0
    for s in np.atleast_2d(np.asarray(points, dtype=float)):
        phi = 0.0
        grad = np.zeros(d)
        for idx in indices:
            value = values[idx]
            if value == 0.0:
                continue
            phi += float(np.prod(s ** np.array(idx))) * value / factorial_product(idx)
        for k in range(d):
            for idx in indices_up_to(d, N - 1):
                higher = shift(idx, k)
                value = values[higher]
                if value != 0.0:
                    grad[k] += float(np.prod(s ** np.array(idx))) * value / factorial_product(idx)
        B = np.einsum('k,krs->rs', s, slices)
        rhs = np.linalg.solve(np.eye(d) - B, phi * (beta @ s))
        worst = max(worst, float(np.linalg.norm(grad - rhs)))
    return worst


def _monte_carlo_z(samples: np.ndarray, statistic: Callable[[np.ndarray], np.ndarray], target: float) -> float:
    values = statistic(samples)
    se = values.std(ddof=1) / math.sqrt(len(values))
    if se == 0.0:
        return 0.0 if abs(values.mean() - target) <= 1e-12 * max(1.0, abs(target)) else math.inf
    return abs(values.mean() - target) / se


def moment_z_scores(samples: np.ndarray, third_targets: Dict[tuple, float]) -> Dict[str, float]:
    scores = {}
    for r in range(3):
        scores[f"mean_{r}"] = _monte_carlo_z(samples, lambda x, r=r: x[:, r], 0.0)
        for q in range(r, 3):
            scores[f"cov_{r}{q}"] = _monte_carlo_z(
                samples, lambda x, r=r, q=q: x[:, r] * x[:, q], 1.0 if r == q else 0.0)
    for (i, j, k), target in third_targets.items():
        scores[f"third_{i}{j}{k}"] = _monte_carlo_z(
            samples, lambda x, i=i, j=j, k=k: x[:, i] * x[:, j] * x[:, k], target)
    return scores


def laplace_z_scores(samples: np.ndarray, points: np.ndarray, transform: Callable) -> Dict[str, float]:
    scores = {}
    for n, s in enumerate(points):
        scores[f"laplace_{n}"] = _monte_carlo_z(samples, lambda x, s=s: np.exp(x @ s), transform(s))
    return scores


def cone_quadrature_deviation(exponents: Sequence[float] = CONE_EXPONENTS, arguments: Sequence = CONE_ARGUMENTS,
                              perturbation: float = 0.0) -> float:
    """Worst relative gap between cone quadrature and (1 + perturbation) times the closed form."""
    return max(abs(quadrature_cone_lt(p, t) / (cone_lt_closed_form(p, t) * (1.0 + perturbation)) - 1.0)
               for p in exponents for t in arguments)


def cylinder_quadrature_deviation(arguments: Sequence = CYLINDER_ARGUMENTS, perturbation: float = 0.0) -> float:
    return max(abs(quadrature_cylinder_lt(t) / (cylinder_lt_closed_form(t) * (1.0 + perturbation)) - 1.0)
               for t in arguments)


def marginal_section_deviation(a: float, perturbation: float = 0.0) -> float:
    """
    Worst relative gap between the s3-section of the closed form and the
    1D Gamma transform exp(-s3/a) (1 - a s3)^(-1/a^2), scaled by (1 + perturbation)
    """
    g = CanonicalGamma3(a)
    worst = 0.0
    for s3 in np.linspace(-0.5, 0.5 / a, 11, endpoint=False):
        section = laplace_closed_form(g, (0.0, 0.0, s3))
        gamma_1d = math.exp(-s3 / a) * (1.0 - a * s3) ** (-1.0 / a ** 2) * (1.0 + perturbation)
        worst = max(worst, abs(section / gamma_1d - 1.0))
    return worst


def _check_quadrature(report: VerifyReport, config: VerifyConfig):
    tol = config.tolerances
    exponents = CONE_EXPONENTS if config.profile == "full" else (0.0, 1.0)
    arguments = CONE_ARGUMENTS if config.profile == "full" else CONE_ARGUMENTS[:3]

    def cone():
        worst = cone_quadrature_deviation(exponents, arguments)
        return worst, worst <= tol.quadrature_rel, {'exponents': list(exponents), 'points': len(arguments)}

    def cylinder():
        worst = cylinder_quadrature_deviation()
        return worst, worst <= tol.cylinder_rel

    _timed(report, "quadrature.cone", "cone Laplace quadrature vs 2 pi Gamma(2p+2) form",
           tol.quadrature_rel, cone)
    _timed(report, "quadrature.cylinder", "cylinder quadrature vs 2 pi / sqrt form",
           tol.cylinder_rel, cylinder)


def _check_case1(report: VerifyReport, a: float, config: VerifyConfig):
    tol = config.tolerances
    g = CanonicalGamma3(a)
    spec = MeixnerSpec.normalized(canonical_tensor(a))
    points = random_domain_points(a, config.pde_points, 0.05, config.seed)

    pde = {}

    def analytic():
        pde['result'] = pde_residual(a, points)
        return pde['result'].analytic, pde['result'].analytic <= tol.exact_identity

    def finite():
        result = pde.get('result') or pde_residual(a, points)
        return result.finite_difference, result.finite_difference <= tol.finite_difference

    _timed(report, "dist3.pde_residual.analytic", "Laplace system, analytic gradient",
           tol.exact_identity, analytic)
    _timed(report, "dist3.pde_residual.finite_difference", "Laplace system, central differences",
           tol.finite_difference, finite)

    def taylor():
        cmp = taylor_vs_closed_form(a, config.taylor_degree)
        return cmp.deviation, cmp.deviation <= tol.symbolic_vs_float, {
            'raw_deviation': cmp.raw_deviation, 'tail_bound': cmp.tail_bound, 'grid_radius': cmp.grid_radius}

    _timed(report, "dist3.taylor_vs_closed_form", "Taylor series from moments vs closed form",
           tol.symbolic_vs_float, taylor)

    def marginal():
        worst = marginal_section_deviation(a)
        return worst, worst <= tol.exact_identity

    _timed(report, "dist3.marginal_section", "s3-section equals the 1D Gamma transform",
           tol.exact_identity, marginal)

    third = {(0, 0, 2): 2 * a, (1, 1, 2): 2 * a, (2, 2, 2): 2 * a, (0, 1, 2): 0.0}
    laplace_points = random_domain_points(a, 5, laplace_radius(spec) / 2.0, config.seed + 1)

    if a < 1.0:
        def mass():
            value = density_mass(g)
            return abs(value - 1.0), abs(value - 1.0) <= tol.quadrature_rel

        _timed(report, "dist3.density_mass", "density integrates to one", tol.quadrature_rel, mass)
        samples = sample_interior(g, config.samples, config.seed, config.workers)

        def support():
            outside = int(np.count_nonzero(~in_omega_a(a, samples)))
            return outside, outside == 0

        _timed(report, "dist3.sampler_support", "interior draws lie in the shifted cone", 0.0, support)
    else:
        report.skip("dist3.density_mass", "density integrates to one", "a = 1 has no density")
        samples = sample_surface(a, config.samples, config.seed, config.workers)

        def surface():
            lhs = samples[:, 0] ** 2 + samples[:, 1] ** 2
            rhs = (samples[:, 2] + a) ** 2
            worst = float(np.max(np.abs(lhs - rhs) / np.maximum(1.0, rhs)))
            return worst, worst <= tol.exact_identity

        _timed(report, "dist3.sampler_support", "surface draws satisfy the cone equation",
               tol.exact_identity, surface)

    def moments():
        scores = moment_z_scores(samples, third)
        worst = max(scores.values())
        return worst, worst <= tol.monte_carlo_sigmas, scores

    def laplace():
        scores = laplace_z_scores(samples, laplace_points, lambda s: laplace_closed_form(g, s))
        worst = max(scores.values())
        return worst, worst <= tol.monte_carlo_sigmas, scores

    _timed(report, "dist3.sampler_moments", "sample moments vs exact moments (z-score)",
           tol.monte_carlo_sigmas, moments)
    _timed(report, "dist3.sampler_laplace", "Monte Carlo Laplace vs closed form (z-score)",
           tol.monte_carlo_sigmas, laplace)


def _check_case2(report: VerifyReport, result: CaseII, spec: MeixnerSpec, config: VerifyConfig):
    tol = config.tolerances
    tbl = MomentTable(spec)
    radius = laplace_radius(spec) / 2.0

    def taylor():
        worst = 0.0
        for s in _cube_grid(radius):
            diff = abs(taylor_laplace(tbl, s, config.taylor_degree) - case2_laplace(result.components, result.U, s))
            worst = max(worst, diff - taylor_tail_bound(spec, s, config.taylor_degree))
        worst = max(worst, 0.0)
        return worst, worst <= tol.symbolic_vs_float

    _timed(report, "dist3.case2_taylor", "Taylor series vs product of 1D transforms",
           tol.symbolic_vs_float, taylor)

    samples = sample_case2(result.components, result.U, config.samples, config.seed, config.workers)
    rotated = samples @ result.U.T
    third = {(k, k, k): 2.0 * c.b for k, c in enumerate(result.components)}

    def moments():
        scores = moment_z_scores(rotated, third)
        worst = max(scores.values())
        return worst, worst <= tol.monte_carlo_sigmas, scores

    _timed(report, "dist3.sampler_moments", "component moments of Case II draws (z-score)",
           tol.monte_carlo_sigmas, moments)


def _as_spec(target) -> MeixnerSpec:
    if isinstance(target, MeixnerSpec):
        return target
    if isinstance(target, SymmetricCubicTensor):
        return MeixnerSpec.normalized(target)
    return MeixnerSpec.normalized(canonical_tensor(float(target)))


def full_suite(target: Union[MeixnerSpec, SymmetricCubicTensor, float],
               config: Optional[VerifyConfig] = None) -> VerifyReport:
    """
    Run every applicable check for a spec, tensor or canonical parameter a

    Failing checks are report entries, never exceptions. Checks that depend
    on a failed prerequisite are recorded as skipped with the reason.

    Args:
        target: MeixnerSpec, tensor (normalized spec assumed) or a float a
        config: Profile, seed and tolerances

    Returns:
        VerifyReport
    """
    config = config or VerifyConfig.for_profile("quick")
    tol = config.tolerances
    spec = _as_spec(target)
    t = spec.alpha
    report = VerifyReport(config)
    logger.info(f"Verification ({config.profile}) for d = {spec.dimension}")

    lcc = validate_lcc(spec)
    _timed(report, "core.lcc", "consistency conditions", tol.exact_identity,
           lambda: (len(lcc.violations), lcc.passed, {'violations': lcc.violations}))
    obstruction = necessary_conditions(t)
    _timed(report, "integrability.necessary_conditions", obstruction.verdict, obstruction.tol,
           lambda: (obstruction.worst, obstruction.passed))

    classification = None
    if spec.dimension == 3:
        classification = classify(t)

        def classified():
            details = classification.to_dict()
            if isinstance(classification, Rejected):
                return None, False, details
            return None, True, details

        _timed(report, "classify3.classification", "d = 3 classification", None, classified)
    else:
        report.skip("classify3.classification", "d = 3 classification", "dimension is not 3")

    dependent = [
        ("moments.third_moment_identity", "E[X_i X_j X_k] = 2 alpha_ijk"),
        ("moments.bound", "|E[X^i]| <= K^|i| |i|!"),
        ("moments.pivot_independence", "recursion agrees across pivots"),
        ("chaos.axioms", "commutation axioms on F_{N-2}"),
        ("chaos.meixner1", "[U_i, X_j] fit recovers alpha and beta"),
        ("moments.series_pde_residual", "Taylor series satisfies the Laplace system"),
    ]
    if not lcc.passed or not obstruction.passed:
        reason = "consistency conditions failed" if not lcc.passed else "integrability obstruction"
        for name, description in dependent:
            report.skip(name, description, reason)
        report.skip("dist3", "distribution checks", reason)
        report.skip("quadrature", "quadrature oracles", reason)
        _finish(report)
        return report

    tbl = MomentTable(spec)
    bound_degree = 10 if config.profile == "full" else 8

    def third_moments():
        worst = max(abs(float(tbl.moment(shift(shift(shift((0,) * spec.dimension, i), j), k)))
                        - 2.0 * t.lookup(i, j, k))
                    for i in range(spec.dimension) for j in range(i, spec.dimension)
                    for k in range(j, spec.dimension))
        return worst, worst <= tol.exact_identity

    def bound():
        worst = 0.0
        for n in range(bound_degree + 1):
            for idx, value in tbl.moments_of_degree(n).items():
                worst = max(worst, abs(float(value)) / moment_bound(spec, idx))
        return worst, worst <= 1.0

    def pivots():
        spread = pivot_spread(tbl, bound_degree)
        return spread, spread <= tol.pivot_rel

    _timed(report, "moments.third_moment_identity", dependent[0][1], tol.exact_identity, third_moments)
    _timed(report, "moments.bound", dependent[1][1], 1.0, bound)
    _timed(report, "moments.pivot_independence", dependent[2][1], tol.pivot_rel, pivots)

    def series():
        rng = np.random.default_rng(config.seed)
        points = rng.uniform(-1.0, 1.0, (5, spec.dimension)) * laplace_radius(spec) / 4.0
        residual = series_pde_residual(tbl, points, 10)
        return residual, residual <= 1e-6

    _timed(report, "moments.series_pde_residual", dependent[5][1], 1e-6, series)

    ops_cache = {}

    def operators():
        if 'ops' not in ops_cache:
            basis = build_chaos_basis(tbl, config.chaos_degree)
            ops_cache['ops'] = build_operators(basis, tbl)
        return ops_cache['ops']

    def axioms():
        result = check_axioms(operators(), tol=tol.axiom_residual)
        return result.max_residual, result.passed, result.residuals

    def meixner1():
        result = check_n_meixner(operators(), 1)
        deviation = result.alpha_deviation(t, spec.beta)
        worst = max(deviation, result.max_residual)
        return worst, worst <= tol.operator_residual, {
            'alpha_deviation': deviation, 'max_residual': result.max_residual}

    _timed(report, "chaos.axioms", dependent[3][1], tol.axiom_residual, axioms)
    _timed(report, "chaos.meixner1", dependent[4][1], tol.operator_residual, meixner1)

    if isinstance(classification, CaseI):
        _check_case1(report, classification.a, config)
    elif isinstance(classification, CaseII):
        _check_case2(report, classification, spec, config)
    elif isinstance(classification, Rejected):
        report.skip("dist3", "distribution checks", f"classification rejected: {classification.reason}")
    else:
        report.skip("dist3", "distribution checks", "no closed-form law outside d = 3")

    _check_quadrature(report, config)
    _finish(report)
    return report


def _finish(report: VerifyReport):
    failed = [c.name for c in report.ordered() if c.passed is False]
    log_audit_event("VERIFY_COMPLETE", {'passed': report.passed, 'failed': failed,
                                        'profile': report.config.profile, 'seed': report.config.seed})
    if failed:
        logger.warning(f"Verification failed: {', '.join(failed)}")
    else:
        logger.info("Verification passed")
