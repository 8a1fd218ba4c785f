"""
Moment service
Exact joint moments from the commutator recursion, moment bounds and the
Taylor expansion of the Laplace transform
"""

from __future__ import annotations

import math
import threading
from fractions import Fraction
from typing import Dict, Optional, Sequence

import numpy as np

from src.config import settings
from src.core.errors import (DegreeCapExceeded, DimensionMismatch, InvalidParam,
                             PivotInconsistency)
from src.core.tensor import MeixnerSpec
from src.logging.log_service import logger
from utils.multi_index import MultiIndex, factorial_product, indices_of_degree, total_degree, zero_index


class MomentTable:
    """
    Memoized E[X^i] for a centered spec

    For i = j + e_w the recursion reads

        E[X^i] = sum_p j_p ( sum_r alpha_{w,p,r} E[X^(j - e_p + e_r)] + beta_{w,p} E[X^(j - e_p)] )

    and every term on the right has lower total degree, so the memo is
    filled one degree layer at a time.
    """

    def __init__(self, spec: MeixnerSpec, exact: bool = False,
                 degree_cap: Optional[int] = None, pivot: str = "lowest-index"):
        if pivot not in settings.PIVOT_POLICIES:
            raise InvalidParam(f"unknown pivot policy '{pivot}'")
        if not np.all(np.asarray(spec.mean) == 0):
            raise InvalidParam("moment recursion needs a centered spec (mean 0); standardize first")

        self.spec = spec
        self.exact = exact
        self.pivot = pivot
        if degree_cap is None:
            degree_cap = settings.EXACT_DEGREE_CAP if exact else settings.DEFAULT_DEGREE_CAP
        self.degree_cap = degree_cap
        self.d = spec.dimension

        convert = Fraction if exact else float
        dense = spec.alpha.dense
        self._alpha = [[[convert(float(dense[w, p, r])) for r in range(self.d)]
                        for p in range(self.d)] for w in range(self.d)]
        self._beta = [[convert(float(spec.beta[w, p])) for p in range(self.d)] for w in range(self.d)]
        self._zero = convert(0)

        self._memo: Dict[MultiIndex, object] = {zero_index(self.d): convert(1)}
        self._filled_degree = 0
        self._lock = threading.Lock()

    @property
    def filled_degree(self) -> int:
        return self._filled_degree

    def _check_index(self, idx: Sequence[int]) -> MultiIndex:
        idx = tuple(int(c) for c in idx)
        if len(idx) != self.d:
            raise DimensionMismatch(f"multi-index of length {len(idx)} for dimension {self.d}")
        if any(c < 0 for c in idx):
            raise InvalidParam(f"negative count in multi-index {idx}")
        if sum(idx) > self.degree_cap:
            raise DegreeCapExceeded(
                f"total degree {sum(idx)} exceeds cap {self.degree_cap}; raise degree_cap explicitly")
        return idx

    def pivot_value(self, idx: Sequence[int], w: int):
        """
        Recursion value for idx using coordinate w as pivot

        Lower layers must already be filled; pivot_value does not store.

        Args:
            idx: Multi-index with idx[w] >= 1
            w: Pivot coordinate

        Returns:
            E[X^idx] computed through pivot w
        """
        idx = self._check_index(idx)
        if idx[w] < 1:
            raise InvalidParam(f"pivot {w} has zero count in {idx}")
        self.fill_to(sum(idx) - 1)
        return self._pivot_value(idx, w)

    def _pivot_value(self, idx: MultiIndex, w: int):
        memo = self._memo
        alpha_w = self._alpha[w]
        beta_w = self._beta[w]
        j = list(idx)
        j[w] -= 1
        total = self._zero
        for p in range(self.d):
            jp = j[p]
            if jp == 0:
                continue
            j[p] -= 1
            acc = self._zero
            if beta_w[p] != 0:
                acc += beta_w[p] * memo[tuple(j)]
            for r in range(self.d):
                coeff = alpha_w[p][r]
                if coeff != 0:
                    j[r] += 1
                    acc += coeff * memo[tuple(j)]
                    j[r] -= 1
            j[p] += 1
            total += jp * acc
        return total

    def _choose_pivot(self, idx: MultiIndex) -> int:
        if self.pivot == "highest-count":
            return max(range(self.d), key=lambda r: (idx[r], -r))
        return next(r for r in range(self.d) if idx[r] > 0)

    def _agree(self, v1, v2) -> bool:
        if self.exact:
            return v1 == v2
        scale = max(abs(v1), abs(v2))
        return abs(v1 - v2) <= settings.PIVOT_REL_TOL * scale + settings.PIVOT_ABS_TOL

    def _compute(self, idx: MultiIndex):
        if self.pivot != "all-and-compare":
            return self._pivot_value(idx, self._choose_pivot(idx))
        values = {w: self._pivot_value(idx, w) for w in range(self.d) if idx[w] > 0}
        reference = next(iter(values.values()))
        for w, value in values.items():
            if not self._agree(reference, value):
                logger.warning(f"Pivot disagreement at {idx}: {values}")
                raise PivotInconsistency(idx, {k: float(v) for k, v in values.items()})
        return reference

    def fill_to(self, degree: int):
        """Fill every moment of total degree <= degree, layer by layer."""
        if degree <= self._filled_degree:
            return
        if degree > self.degree_cap:
            raise DegreeCapExceeded(f"degree {degree} exceeds cap {self.degree_cap}")
        with self._lock:
            for n in range(self._filled_degree + 1, degree + 1):
                layer = {idx: self._compute(idx) for idx in indices_of_degree(self.d, n)}
                self._memo.update(layer)
                self._filled_degree = n
            logger.debug(f"Moment table filled to degree {self._filled_degree}")

    def moment(self, idx: Sequence[int], pivot: Optional[str] = None):
        """
        E[X^idx]

        Args:
            idx: Multi-index (counts per coordinate)
            pivot: Optional policy overriding the table's own for the top level

        Returns:
            Moment value (float, or Fraction in exact mode)
        """
        idx = self._check_index(idx)
        n = sum(idx)
        if pivot is None or pivot == self.pivot or n == 0:
            self.fill_to(n)
            return self._memo[idx]
        if pivot not in settings.PIVOT_POLICIES:
            raise InvalidParam(f"unknown pivot policy '{pivot}'")
        self.fill_to(n - 1)
        if pivot == "all-and-compare":
            values = {w: self._pivot_value(idx, w) for w in range(self.d) if idx[w] > 0}
            reference = next(iter(values.values()))
            if not all(self._agree(reference, v) for v in values.values()):
                raise PivotInconsistency(idx, {k: float(v) for k, v in values.items()})
            return reference
        if pivot == "highest-count":
            w = max(range(self.d), key=lambda r: (idx[r], -r))
        else:
            w = next(r for r in range(self.d) if idx[r] > 0)
        return self._pivot_value(idx, w)

    def moments_of_degree(self, n: int) -> Dict[MultiIndex, object]:
        self.fill_to(n)
        return {idx: self._memo[idx] for idx in indices_of_degree(self.d, n)}


def pivot_spread(tbl: MomentTable, max_degree: int) -> float:
    """
    Largest relative disagreement between pivots over all |i| <= max_degree

    Lower layers come from the table's own policy, so this reports the
    spread without raising.
    """
    worst = 0.0
    for n in range(2, max_degree + 1):
        tbl.fill_to(n - 1)
        for idx in indices_of_degree(tbl.d, n):
            values = [float(tbl.pivot_value(idx, w)) for w in range(tbl.d) if idx[w] > 0]
            spread = max(values) - min(values)
            scale = max(max(abs(v) for v in values), 1.0)
            worst = max(worst, spread / scale)
    return worst


def constant_k(spec: MeixnerSpec) -> float:
    """K = max{d A + B, 1} with A = max|alpha|, B = max|beta|."""
    A = spec.alpha.max_abs
    B = float(np.abs(spec.beta).max()) if spec.beta.size else 0.0
    return max(spec.dimension * A + B, 1.0)


def moment_bound(spec: MeixnerSpec, idx: Sequence[int]) -> float:
    """K^|i| |i|! bounding |E[X^i]|."""
    n = total_degree(idx)
    return constant_k(spec) ** n * math.factorial(n)


def moment_abs_bound(spec: MeixnerSpec, idx: Sequence[int]) -> float:
    """(2K)^|i| |i|! bounding E[|X^i|]."""
    n = total_degree(idx)
    return (2.0 * constant_k(spec)) ** n * math.factorial(n)


def laplace_radius(spec: MeixnerSpec) -> float:
    """R = 1/(2 K d); the Laplace series converges for ||t||_inf < R."""
    return 1.0 / (2.0 * constant_k(spec) * spec.dimension)


def taylor_tail_bound(spec: MeixnerSpec, t, N: int) -> float:
    """
    Bound on the Laplace series terms beyond total degree N

    The degree-n term is at most (K d ||t||_inf)^n, giving q^(N+1)/(1-q).
    Returns inf when q >= 1.
    """
    t = np.asarray(t, dtype=float)
    q = constant_k(spec) * spec.dimension * float(np.abs(t).max(initial=0.0))
    if q >= 1.0:
        return math.inf
    return q ** (N + 1) / (1.0 - q)


def taylor_laplace(tbl: MomentTable, t, N: int) -> float:
    """
    Partial sum of E[exp(t.X)] up to total degree N

    Args:
        tbl: Moment table of the law
        t: Argument vector
        N: Maximum total degree

    Returns:
        sum over |i| <= N of t^i E[X^i] / i!
    """
    t = np.asarray(t, dtype=float)
    if t.shape != (tbl.d,):
        raise DimensionMismatch(f"t has shape {t.shape}, expected {(tbl.d,)}")
    radius = laplace_radius(tbl.spec)
    if np.abs(t).max(initial=0.0) >= radius:
        logger.warning(f"||t||_inf = {np.abs(t).max():.3g} is outside the Laplace radius {radius:.3g}")

    total = 0.0
    for n in range(N + 1):
        for idx, value in tbl.moments_of_degree(n).items():
            if value == 0:
                continue
            total += float(np.prod(t ** np.array(idx))) * float(value) / factorial_product(idx)
    return total
