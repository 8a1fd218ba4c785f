"""
Homogeneous polynomials produced by expanding matrix identities over linear forms
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np
import sympy as sp

from src.core.tensor import SymmetricCubicTensor

MultiIndex = Tuple[int, ...]


@dataclass(frozen=True)
class HomogeneousPoly:
    """Polynomial of fixed total degree, stored as monomial -> coefficient."""
    dimension: int
    degree: int
    coefficients: Dict[MultiIndex, float] = field(default_factory=dict)

    def __post_init__(self):
        for mono in self.coefficients:
            if len(mono) != self.dimension or sum(mono) != self.degree:
                raise ValueError(f"monomial {mono} does not have degree {self.degree}")

    def evaluate(self, x: Sequence[float]) -> float:
        x = np.asarray(x, dtype=float)
        return float(sum(c * np.prod(x ** np.array(m)) for m, c in self.coefficients.items()))

    def max_abs_coefficient(self) -> float:
        return max((abs(c) for c in self.coefficients.values()), default=0.0)

    def coefficient(self, mono: Sequence[int]) -> float:
        return self.coefficients.get(tuple(mono), 0.0)

    def to_dict(self):
        return {
            'dimension': self.dimension,
            'degree': self.degree,
            'terms': [{'monomial': list(m), 'coefficient': c}
                      for m, c in sorted(self.coefficients.items())],
        }


def _symbols(d: int) -> List[sp.Symbol]:
    return list(sp.symbols(f"t0:{d}"))


def _rational_slices(t: SymmetricCubicTensor) -> List[sp.Matrix]:
    dense = t.dense
    d = t.dimension
    return [sp.Matrix(d, d, lambda r, s: sp.Rational(float(dense[k, r, s]))) for k in range(d)]


def expand_identity(t: SymmetricCubicTensor, i: int, j: int, n: int) -> HomogeneousPoly:
    """
    Expand (C_ij t) . B(t)^n t, B(t) = sum_k t_k A_k, into monomials

    Arithmetic is exact over the rationals represented by the float entries,
    so an identically vanishing identity gives exact zero coefficients.

    Args:
        t: Coefficient tensor
        i, j: Commutator pair
        n: Power of B(t)

    Returns:
        HomogeneousPoly of degree n + 2
    """
    d = t.dimension
    ts = _symbols(d)
    slices = _rational_slices(t)
    C = slices[i] * slices[j] - slices[j] * slices[i]
    B = sp.zeros(d, d)
    for k in range(d):
        B += ts[k] * slices[k]

    vec = sp.Matrix(ts)
    left = (C * vec).applyfunc(sp.expand)
    right = vec
    for _ in range(n):
        right = (B * right).applyfunc(sp.expand)
    expr = sp.expand((left.T * right)[0, 0])

    coefficients: Dict[MultiIndex, float] = {}
    if expr != 0:
        for mono, coeff in sp.Poly(expr, *ts).terms():
            if coeff != 0:
                coefficients[tuple(int(m) for m in mono)] = float(coeff)
    return HomogeneousPoly(d, n + 2, coefficients)


def evaluate_identity(t: SymmetricCubicTensor, i: int, j: int, n: int, x) -> float:
    """Numeric (C_ij x) . B(x)^n x in floating point."""
    x = np.asarray(x, dtype=float)
    slices = t.dense
    C = slices[i] @ slices[j] - slices[j] @ slices[i]
    B = np.einsum('k,krs->rs', x, slices)
    right = x
    for _ in range(n):
        right = B @ right
    return float((C @ x) @ right)
