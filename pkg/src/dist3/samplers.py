"""
Exact samplers for the canonical law and the Case II product law
"""

from __future__ import annotations

from typing import Iterator, Optional, Sequence

import numpy as np

from src.classify3.classify_service import MarginalParams
from src.config import settings
from src.core.errors import InvalidParam
from src.core.transforms import check_orthogonal
from src.dist3.distribution import CanonicalGamma3
from src.logging.log_service import logger
from utils.rng_streams import collect, iter_chunks


def _interior_chunk(a: float):
    p_interior = 1.0 / (2.0 * a ** 2) - 1.5
    shape = 1.0 / a ** 2

    def draw(rng: np.random.Generator, m: int) -> np.ndarray:
        theta = rng.uniform(0.0, 2.0 * np.pi, m)
        # tan^2(phi) ~ Beta(1, p' + 1); 1 - random() lies in (0, 1]
        w = 1.0 - (1.0 - rng.random(m)) ** (1.0 / (p_interior + 1.0))
        phi = np.arctan(np.sqrt(w))
        r = rng.standard_gamma(shape, m) / np.cos(phi)
        out = np.empty((m, 3))
        out[:, 0] = a * r * np.sin(phi) * np.cos(theta)
        out[:, 1] = a * r * np.sin(phi) * np.sin(theta)
        out[:, 2] = a * r * np.cos(phi) - 1.0 / a
        return out

    return draw


def _surface_chunk(a: float):
    def draw(rng: np.random.Generator, m: int) -> np.ndarray:
        theta = rng.uniform(0.0, 2.0 * np.pi, m)
        r = rng.standard_exponential(m)
        out = np.empty((m, 3))
        out[:, 0] = a * r * np.cos(theta)
        out[:, 1] = a * r * np.sin(theta)
        out[:, 2] = a * (r - 1.0)
        return out

    return draw


def _case2_chunk(components: Sequence[MarginalParams], U: np.ndarray):
    def draw(rng: np.random.Generator, m: int) -> np.ndarray:
        Y = np.column_stack([c.sample(rng, m) for c in components])
        return Y @ U

    return draw


def _interior_checked(g: CanonicalGamma3) -> float:
    if not (0.0 < g.a < 1.0):
        raise InvalidParam(f"interior sampler needs 0 < a < 1, got {g.a}")
    return g.a


def _surface_checked(a: float) -> float:
    if abs(a) != 1.0:
        raise InvalidParam(f"surface sampler needs a = +1 or -1, got {a}")
    return float(a)


def _case2_checked(components, U) -> np.ndarray:
    if len(components) != 3:
        raise InvalidParam(f"expected 3 components, got {len(components)}")
    for c in components:
        if c.kind not in ("Gamma", "Gaussian"):
            raise InvalidParam(f"unknown component kind '{c.kind}'")
    return check_orthogonal(U)


def sample_interior(g: CanonicalGamma3, n: int, seed: int = settings.DEFAULT_SEED,
                    workers: int = settings.SAMPLE_WORKERS) -> np.ndarray:
    """
    Draws from the canonical law with 0 < a < 1

    y has density proportional to exp(-y3) (y3^2 - y1^2 - y2^2)^p' on the
    cone; in spherical angles tan^2(phi) ~ Beta(1, p' + 1) and
    r | phi ~ Gamma(1/a^2, rate cos(phi)). Returns x = a y - (0, 0, 1/a).

    Args:
        g: Canonical law
        n: Number of draws
        seed: Run seed
        workers: Thread count

    Returns:
        (n, 3) array, every row inside Omega_a
    """
    a = _interior_checked(g)
    logger.info(f"Drawing {n} interior samples (a = {a})")
    return collect(_interior_chunk(a), n, seed, 3, workers)


def sample_surface(a: float, n: int, seed: int = settings.DEFAULT_SEED,
                   workers: int = settings.SAMPLE_WORKERS) -> np.ndarray:
    """
    Draws from the surface law at a = +-1

    theta uniform, r ~ Exp(1), x = a ((r cos theta, r sin theta, r) - e3),
    so x1^2 + x2^2 = (x3 + a)^2.
    """
    a = _surface_checked(a)
    logger.info(f"Drawing {n} surface samples (a = {a})")
    return collect(_surface_chunk(a), n, seed, 3, workers)


def sample_case2(components: Sequence[MarginalParams], U, n: int, seed: int = settings.DEFAULT_SEED,
                 workers: int = settings.SAMPLE_WORKERS) -> np.ndarray:
    """Independent standardized components Y, returned as X = U^T Y row by row."""
    U = _case2_checked(components, U)
    logger.info(f"Drawing {n} Case II samples")
    return collect(_case2_chunk(components, U), n, seed, 3, workers)


def iter_samples(n: int, seed: int = settings.DEFAULT_SEED, *, a: Optional[float] = None,
                 components: Optional[Sequence[MarginalParams]] = None, U=None,
                 workers: int = settings.SAMPLE_WORKERS) -> Iterator[np.ndarray]:
    """
    Stream sample blocks without holding all draws in memory

    Pass `a` for the canonical law (interior for |a| < 1, surface for
    |a| = 1) or `components` (and optionally U) for the Case II law. Blocks
    match the rows sample_interior / sample_surface / sample_case2 return
    for the same seed.
    """
    if (a is None) == (components is None):
        raise InvalidParam("give exactly one of a or components")
    if components is not None:
        U = np.eye(3) if U is None else U
        chunk = _case2_chunk(components, _case2_checked(components, U))
    elif abs(a) == 1.0:
        chunk = _surface_chunk(_surface_checked(a))
    else:
        chunk = _interior_chunk(_interior_checked(CanonicalGamma3(a)))
    return iter_chunks(chunk, n, seed, workers)
