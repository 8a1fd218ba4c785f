"""
Integrability service
Slice-matrix commutators, the polynomial obstructions C_ij t . B(t)^n t = 0
and invariance of the cubic form along commutator flows
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.linalg import expm

from src.config import settings
from src.core.errors import DimensionMismatch, IndexOutOfRange
from src.core.tensor import SymmetricCubicTensor, cubic_form, slice_matrix
from src.integrability.polynomial import HomogeneousPoly, expand_identity
from src.logging.log_service import logger
from src.moments.moment_service import MomentTable
from utils.multi_index import multinomial

VERDICT_PASS = "necessary conditions satisfied"
VERDICT_FAIL = "necessary conditions violated"


def commutator(t: SymmetricCubicTensor, i: int, j: int) -> np.ndarray:
    """C_ij = A_i A_j - A_j A_i (skew-symmetric)."""
    A_i = slice_matrix(t, i)
    A_j = slice_matrix(t, j)
    return A_i @ A_j - A_j @ A_i


def commutator_norms(t: SymmetricCubicTensor) -> Dict[tuple, float]:
    d = t.dimension
    return {(i, j): float(np.linalg.norm(commutator(t, i, j)))
            for i in range(d) for j in range(i + 1, d)}


@dataclass
class ObstructionEntry:
    i: int
    j: int
    n: int
    max_coefficient: float
    normalized: float
    passed: bool

    def to_dict(self):
        return {'i': self.i, 'j': self.j, 'n': self.n,
                'max_coefficient': self.max_coefficient,
                'normalized': self.normalized, 'passed': self.passed}


@dataclass
class ObstructionReport:
    """Per (i, j, n) maximum coefficient magnitudes of the expanded identities."""
    dimension: int
    tol: float
    entries: List[ObstructionEntry] = field(default_factory=list)
    polynomials: Dict[tuple, HomogeneousPoly] = field(default_factory=dict, repr=False)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def verdict(self) -> str:
        return VERDICT_PASS if self.passed else VERDICT_FAIL

    @property
    def worst(self) -> float:
        return max((e.normalized for e in self.entries), default=0.0)

    def polynomial(self, i: int, j: int, n: int) -> HomogeneousPoly:
        return self.polynomials[(i, j, n)]

    def to_dict(self):
        return {
            'dimension': self.dimension,
            'tol': self.tol,
            'passed': self.passed,
            'verdict': self.verdict,
            'entries': [e.to_dict() for e in self.entries],
        }


def identity_polynomial(t: SymmetricCubicTensor, i: int, j: int, n: int) -> HomogeneousPoly:
    """Expanded C_ij t . B(t)^n t for one pair and power."""
    d = t.dimension
    for k in (i, j):
        if k < 0 or k >= d:
            raise IndexOutOfRange(f"index {k} outside [0, {d})")
    return expand_identity(t, i, j, n)


def necessary_conditions(t: SymmetricCubicTensor, tol: float = settings.OBSTRUCTION_TOL) -> ObstructionReport:
    """
    Expand every identity C_ij t . B(t)^n t, i < j, 1 <= n <= d - 1

    The identity is homogeneous of degree n + 2 in t and of degree n + 2 in
    alpha, so coefficients are normalized by max|alpha|^(n+2) before the
    comparison against tol. The n = 0 identity vanishes by skew-symmetry
    and is not listed.

    Args:
        t: Coefficient tensor
        tol: Tolerance on normalized coefficient magnitudes

    Returns:
        ObstructionReport
    """
    d = t.dimension
    report = ObstructionReport(dimension=d, tol=tol)
    scale = t.max_abs
    for i in range(d):
        for j in range(i + 1, d):
            for n in range(1, d):
                poly = expand_identity(t, i, j, n)
                report.polynomials[(i, j, n)] = poly
                raw = poly.max_abs_coefficient()
                normalized = raw / scale ** (n + 2) if scale > 0 else 0.0
                report.entries.append(ObstructionEntry(i, j, n, raw, normalized, normalized <= tol))
    logger.info(f"Integrability check: {report.verdict} (worst normalized coefficient {report.worst:.3g})")
    return report


def flow_invariance(t: SymmetricCubicTensor, i: int, j: int, xi, grid: Sequence[float]) -> float:
    """
    Max |F(exp(s C_ij) xi) - F(xi)| over the grid of s values

    Args:
        t: Coefficient tensor
        i, j: Pair generating the flow
        xi: Starting point
        grid: Flow times

    Returns:
        Maximum deviation of the cubic form along the curve
    """
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (t.dimension,):
        raise DimensionMismatch(f"xi has shape {xi.shape}, expected {(t.dimension,)}")
    C = commutator(t, i, j)
    base = cubic_form(t, xi)
    deviation = 0.0
    for s in grid:
        point = expm(float(s) * C) @ xi
        deviation = max(deviation, abs(cubic_form(t, point) - base))
    return deviation


def cubic_matches_third_moments(t: SymmetricCubicTensor, tbl: MomentTable, trials: int = 32,
                                seed: Optional[int] = None) -> float:
    """
    Compare F(v) with E[(v.X)^3]/2 on random unit vectors

    Returns:
        Max absolute deviation
    """
    rng = np.random.default_rng(settings.DEFAULT_SEED if seed is None else seed)
    d = t.dimension
    third = tbl.moments_of_degree(3)
    worst = 0.0
    for _ in range(trials):
        v = rng.standard_normal(d)
        v /= np.linalg.norm(v)
        half = 0.5 * sum(multinomial(idx) * float(np.prod(v ** np.array(idx))) * float(value)
                         for idx, value in third.items())
        worst = max(worst, abs(cubic_form(t, v) - half))
    return worst


def resolvent_condition(t: SymmetricCubicTensor, i: int, j: int, points) -> float:
    """
    Max |C_ij s . (I - B(s))^{-1} s| over points, via a linear solve

    A numeric companion to necessary_conditions; only meaningful where
    I - B(s) is invertible, e.g. inside the Laplace radius.
    """
    C = commutator(t, i, j)
    d = t.dimension
    worst = 0.0
    for s in np.atleast_2d(np.asarray(points, dtype=float)):
        B = np.einsum('k,krs->rs', s, t.dense)
        w = np.linalg.solve(np.eye(d) - B, s)
        worst = max(worst, abs(float((C @ s) @ w)))
    return worst
