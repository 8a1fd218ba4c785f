"""
Quadrature oracles for the cone Laplace transforms

The cone integral is taken in spherical angles: theta in closed form through
the I0 power series, r by generalized Gauss-Laguerre with rate rescaling, and
phi over [0, pi/4) by QUADPACK with the (pi/4 - phi)^p endpoint weight.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy import integrate
from scipy.special import gammaln, roots_genlaguerre

from src.config import settings
from src.core.errors import DomainError, InvalidParam
from src.dist3.distribution import CanonicalGamma3, log_density_constant
from src.logging.log_service import logger

QUARTER_PI = math.pi / 4.0


@lru_cache(maxsize=32)
def _laguerre_rule(alpha: float, order: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = roots_genlaguerre(order, alpha)
    return nodes, weights


def bessel_i0_series(z) -> np.ndarray:
    """
    I0(z) = sum_n (z/2)^(2n) / (n!)^2

    Summed until the term ratio drops below 1e-18; 2 pi I0(z) is the theta
    integral of exp(z cos theta).
    """
    z = np.asarray(z, dtype=float)
    q = (z / 2.0) ** 2
    term = np.ones_like(q)
    total = np.ones_like(q)
    n = 0
    while True:
        n += 1
        term = term * q / (n * n)
        total = total + term
        active = term > settings.BESSEL_SERIES_CUTOFF * total
        if not np.any(active):
            break
    return total


def _check_cone_argument(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if t.shape != (3,):
        raise InvalidParam(f"t must be a 3-vector, got shape {t.shape}")
    if not (t[2] < 0 and t[2] ** 2 > t[0] ** 2 + t[1] ** 2):
        raise DomainError(f"t = {t.tolist()} is not in -Omega; the integral diverges")
    return t


def cone_lt_closed_form(p: float, t) -> float:
    """2 pi Gamma(2p + 2) (t3^2 - t1^2 - t2^2)^(-p - 3/2)."""
    t = _check_cone_argument(t)
    form = t[2] ** 2 - t[0] ** 2 - t[1] ** 2
    return float(2.0 * math.pi * math.exp(gammaln(2.0 * p + 2.0) - (p + 1.5) * math.log(form)))


def cylinder_lt_closed_form(t) -> float:
    """2 pi / sqrt(t3^2 - t1^2 - t2^2)."""
    t = _check_cone_argument(t)
    return float(2.0 * math.pi / math.sqrt(t[2] ** 2 - t[0] ** 2 - t[1] ** 2))


def quadrature_cone_lt(p: float, t, order: int = settings.GAUSS_LAGUERRE_ORDER,
                       epsrel: float = settings.PHI_QUAD_EPSREL) -> float:
    """
    Numerically integrate exp(t.x) (x3^2 - x1^2 - x2^2)^p over the cone Omega

    Args:
        p: Exponent, p > -1
        t: 3-vector with t3 < 0 and t3^2 > t1^2 + t2^2
        order: Gauss-Laguerre order for r
        epsrel: Relative tolerance for the phi integral

    Returns:
        Integral value
    """
    if p <= -1.0:
        raise InvalidParam(f"cone exponent must exceed -1, got {p}")
    t = _check_cone_argument(t)
    transverse = math.hypot(t[0], t[1])
    decay = -t[2]
    alpha = 2.0 * p + 2.0
    nodes, weights = _laguerre_rule(alpha, order)

    def radial(phi: float) -> float:
        rate = decay * math.cos(phi)
        z = nodes * (transverse * math.sin(phi) / rate)
        return float(2.0 * math.pi * np.dot(weights, bessel_i0_series(z)) / rate ** (alpha + 1.0))

    def integrand(phi: float) -> float:
        # cos(2 phi) / (pi/4 - phi), written through delta for accuracy near pi/4
        delta = QUARTER_PI - phi
        ratio = math.sin(2.0 * delta) / delta if delta > 0 else 2.0
        return math.sin(phi) * ratio ** p * radial(phi)

    value, error = integrate.quad(integrand, 0.0, QUARTER_PI, weight='alg', wvar=(0.0, p),
                                  epsabs=0.0, epsrel=epsrel, limit=200)
    logger.debug(f"Cone quadrature p={p}, t={t.tolist()}: {value:.12g} (error estimate {error:.2g})")
    return float(value)


def quadrature_cylinder_lt(t, order: int = settings.GAUSS_LAGUERRE_ORDER) -> float:
    """
    Integrate exp(t3 r + r (t1 cos theta + t2 sin theta)) over r >= 0, theta in [0, 2 pi)

    theta is done through the I0 series, r by Gauss-Laguerre at rate |t3|.
    """
    t = _check_cone_argument(t)
    transverse = math.hypot(t[0], t[1])
    decay = -t[2]
    nodes, weights = _laguerre_rule(0.0, order)
    series = bessel_i0_series(nodes * (transverse / decay))
    return float(2.0 * math.pi * np.dot(weights, series) / decay)


def density_mass(g: CanonicalGamma3) -> float:
    """
    Total mass of the density, from the cone quadrature at t = (0, 0, -1)

    Substituting y = (x + e3/a)/a turns the density integral into
    C_a |a|^3 times the cone integral with exponent p'.
    """
    if not (0.0 < g.a < 1.0):
        raise InvalidParam(f"a density exists only for 0 < a < 1, got {g.a}")
    integral = quadrature_cone_lt(g.p_interior, (0.0, 0.0, -1.0))
    return float(math.exp(log_density_constant(g.a) + 3.0 * math.log(g.a)) * integral)
