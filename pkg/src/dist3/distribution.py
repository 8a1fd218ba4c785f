"""
Closed forms for the three-dimensional cone Gamma law
Laplace transform, density, domain predicates and the Case II product law
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from src.classify3.classify_service import MarginalParams, marginal_params_1d
from src.core.errors import InvalidParam, OutOfDomain
from src.core.transforms import check_orthogonal


@dataclass(frozen=True)
class CanonicalGamma3:
    """
    Law with Laplace transform exp(-s3/a) ((1 - a s3)^2 - a^2 (s1^2 + s2^2))^(-1/(2a^2))

    a = +-1 gives a measure on the cone surface; 0 < |a| < 1 has a density.
    """
    a: float

    def __post_init__(self):
        if not (0.0 < abs(self.a) <= 1.0):
            raise InvalidParam(f"canonical parameter must satisfy 0 < |a| <= 1, got {self.a}")

    @property
    def p(self) -> float:
        return 1.0 / (2.0 * self.a ** 2)

    @property
    def p_interior(self) -> float:
        """Exponent of the cone quadratic form in the density; > -1 iff |a| < 1."""
        return self.p - 1.5

    @property
    def is_surface(self) -> bool:
        return abs(self.a) == 1.0


def in_domain(a: float, s) -> bool:
    """s in D: |a| sqrt(s1^2 + s2^2) < 1 - a s3."""
    s = np.asarray(s, dtype=float)
    return bool(abs(a) * math.hypot(s[0], s[1]) < 1.0 - a * s[2])


def in_omega_a(a: float, x) -> np.ndarray:
    """
    Membership of points in the shifted cone Omega_a (a > 0)

    Accepts one point or an (n, 3) array; returns a bool or bool array.
    """
    x = np.asarray(x, dtype=float)
    y3 = x[..., 2] / a + 1.0 / a ** 2
    radial = (x[..., 0] ** 2 + x[..., 1] ** 2) / a ** 2
    return (y3 > 0) & (y3 ** 2 > radial)


def _quadratic(a: float, s: np.ndarray) -> float:
    return (1.0 - a * s[2]) ** 2 - a ** 2 * (s[0] ** 2 + s[1] ** 2)


def laplace_closed_form(g: CanonicalGamma3, s, exponent_scale: float = 1.0) -> float:
    """
    E[exp(s.X)] for the canonical law

    Args:
        g: Canonical law
        s: Point in D
        exponent_scale: Multiplies the power -1/(2a^2); 1 gives the true law

    Returns:
        Transform value
    """
    s = np.asarray(s, dtype=float)
    a = g.a
    if not in_domain(a, s):
        raise OutOfDomain(f"s = {s.tolist()} is outside the Laplace domain for a = {a}")
    Q = _quadratic(a, s)
    return float(math.exp(-s[2] / a) * Q ** (-exponent_scale * g.p))


def laplace_gradient(g: CanonicalGamma3, s, exponent_scale: float = 1.0) -> np.ndarray:
    """Analytic gradient phi * grad(log phi) of laplace_closed_form."""
    s = np.asarray(s, dtype=float)
    a = g.a
    phi = laplace_closed_form(g, s, exponent_scale)
    Q = _quadratic(a, s)
    grad_log = np.array([
        exponent_scale * s[0] / Q,
        exponent_scale * s[1] / Q,
        -1.0 / a + exponent_scale * (1.0 - a * s[2]) / (a * Q),
    ])
    return phi * grad_log


def log_density_constant(a: float) -> float:
    """log C_a with C_a = 1 / (|a|^3 2 pi Gamma(1/a^2 - 1))."""
    return -3.0 * math.log(abs(a)) - math.log(2.0 * math.pi) - float(gammaln(1.0 / a ** 2 - 1.0))


def density(g: CanonicalGamma3, x) -> np.ndarray:
    """
    Density of the canonical law for 0 < a < 1

    C_a exp(-(x3/a + 1/a^2)) ((x3/a + 1/a^2)^2 - (x1^2 + x2^2)/a^2)^(1/(2a^2) - 3/2)
    on Omega_a, 0 elsewhere. Accepts one point or an (n, 3) array.
    """
    a = g.a
    if not (0.0 < a < 1.0):
        raise InvalidParam(f"a density exists only for 0 < a < 1, got {a}")
    x = np.asarray(x, dtype=float)
    y3 = x[..., 2] / a + 1.0 / a ** 2
    form = y3 ** 2 - (x[..., 0] ** 2 + x[..., 1] ** 2) / a ** 2
    inside = in_omega_a(a, x)
    with np.errstate(invalid='ignore', divide='ignore'):
        log_value = log_density_constant(a) - y3 + g.p_interior * np.log(np.where(inside, form, 1.0))
    out = np.where(inside, np.exp(log_value), 0.0)
    return float(out) if out.ndim == 0 else out


def marginal_laplace_1d(b: float, s):
    """Transform of the standardized component with parameter b."""
    return marginal_params_1d(b).laplace(s)


def case2_laplace(components: Sequence[MarginalParams], U, s) -> float:
    """
    E[exp(s.X)] for X = U^T Y with independent components Y_k

    Equals the product of the component transforms at (U s)_k.
    """
    U = check_orthogonal(U)
    rotated = U @ np.asarray(s, dtype=float)
    return float(np.prod([marginal_laplace_1d(c.b, v) for c, v in zip(components, rotated)]))
