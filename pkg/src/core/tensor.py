"""
Coefficient tensor model
Symmetric cubic tensors, Meixner specs, slice matrices and the cubic form
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.config import settings
from src.core.errors import ConflictingEntry, DimensionMismatch, IndexOutOfRange, InvalidParam
from src.logging.log_service import logger
from utils.multi_index import sorted_triples

Triple = Tuple[int, int, int]


def _check_index(d: int, *indices: int):
    for i in indices:
        if not isinstance(i, (int, np.integer)) or i < 0 or i >= d:
            raise IndexOutOfRange(f"index {i} outside [0, {d})")


@dataclass(frozen=True, eq=False)
class SymmetricCubicTensor:
    """
    Coefficients alpha_{i,j,k} stored once per sorted triple

    Symmetry is structural: lookup sorts its arguments, so every
    permutation of a triple reads the same entry.
    """
    dimension: int
    entries: Dict[Triple, float] = field(default_factory=dict)

    def lookup(self, i: int, j: int, k: int) -> float:
        _check_index(self.dimension, i, j, k)
        return self.entries.get(tuple(sorted((i, j, k))), 0.0)

    @cached_property
    def dense(self) -> np.ndarray:
        """Full d x d x d array with every permutation filled in."""
        d = self.dimension
        out = np.zeros((d, d, d))
        for triple, value in self.entries.items():
            for perm in set(itertools.permutations(triple)):
                out[perm] = value
        out.setflags(write=False)
        return out

    @property
    def max_abs(self) -> float:
        return max((abs(v) for v in self.entries.values()), default=0.0)

    def slices(self) -> np.ndarray:
        """Stack of slice matrices, shape (d, d, d); slices()[k] is A_k."""
        return self.dense

    def to_entries(self) -> List[Tuple[int, int, int, float]]:
        return [(i, j, k, v) for (i, j, k), v in sorted(self.entries.items())]

    @classmethod
    def from_dense(cls, array: np.ndarray) -> 'SymmetricCubicTensor':
        """Read the sorted triples off a full array (assumed symmetric)."""
        d = array.shape[0]
        entries = {}
        for triple in sorted_triples(d):
            value = float(array[triple])
            if value != 0.0:
                entries[triple] = value
        return cls(d, entries)

    def __eq__(self, other):
        if not isinstance(other, SymmetricCubicTensor):
            return NotImplemented
        return self.dimension == other.dimension and self.entries == other.entries

    def __hash__(self):
        return hash((self.dimension, tuple(sorted(self.entries.items()))))


@dataclass(frozen=True, eq=False)
class MeixnerSpec:
    """Dimension, commutator tensor alpha, covariance beta and mean."""
    alpha: SymmetricCubicTensor
    beta: np.ndarray
    mean: np.ndarray

    @property
    def dimension(self) -> int:
        return self.alpha.dimension

    @property
    def is_centered(self) -> bool:
        return bool(np.all(self.mean == 0))

    @classmethod
    def normalized(cls, alpha: SymmetricCubicTensor) -> 'MeixnerSpec':
        """Spec with beta = I and mean = 0."""
        d = alpha.dimension
        return cls(alpha, np.eye(d), np.zeros(d))

    @classmethod
    def build(cls, alpha: SymmetricCubicTensor, beta=None, mean=None) -> 'MeixnerSpec':
        d = alpha.dimension
        beta = np.eye(d) if beta is None else np.asarray(beta, dtype=float)
        mean = np.zeros(d) if mean is None else np.asarray(mean, dtype=float)
        if beta.shape != (d, d):
            raise DimensionMismatch(f"beta has shape {beta.shape}, expected {(d, d)}")
        if mean.shape != (d,):
            raise DimensionMismatch(f"mean has shape {mean.shape}, expected {(d,)}")
        return cls(alpha, beta, mean)


def tensor_from_entries(d: int, raw: Iterable[Sequence]) -> SymmetricCubicTensor:
    """
    Build a canonical symmetric tensor from (i, j, k, value) entries

    Args:
        d: Dimension
        raw: Entries; permutation-equivalent triples may repeat if they agree

    Returns:
        SymmetricCubicTensor with unspecified triples equal to 0
    """
    if d < 1:
        raise InvalidParam(f"dimension must be positive, got {d}")
    entries: Dict[Triple, float] = {}
    for item in raw:
        i, j, k, value = item
        _check_index(d, i, j, k)
        key = tuple(sorted((int(i), int(j), int(k))))
        value = float(value)
        if key in entries:
            prev = entries[key]
            scale = max(abs(prev), abs(value))
            if abs(prev - value) > settings.ENTRY_CONFLICT_REL_TOL * scale:
                logger.error(f"Conflicting tensor entries at {key}: {prev} vs {value}")
                raise ConflictingEntry(f"entries for {key} disagree: {prev} vs {value}")
            continue
        entries[key] = value
    return SymmetricCubicTensor(d, {k: v for k, v in entries.items() if v != 0.0})


def canonical_tensor(a: float, b: Optional[float] = None) -> SymmetricCubicTensor:
    """
    Canonical d=3 tensor: alpha_002 = alpha_112 = a, alpha_222 = b (default b = a)

    The b != a members are not realized by any random vector and are used
    to exercise the obstruction checks.
    """
    b = a if b is None else b
    return tensor_from_entries(3, [(0, 0, 2, a), (1, 1, 2, a), (2, 2, 2, b)])


def diagonal_tensor(values: Sequence[float]) -> SymmetricCubicTensor:
    """Tensor with alpha_kkk = values[k] and every mixed entry zero."""
    return tensor_from_entries(len(values), [(k, k, k, v) for k, v in enumerate(values)])


def slice_matrix(t: SymmetricCubicTensor, k: int) -> np.ndarray:
    """A_k with (A_k)_{r,s} = alpha_{k,r,s}."""
    _check_index(t.dimension, k)
    return np.array(t.dense[k])


def cubic_form(t: SymmetricCubicTensor, v) -> float:
    """F(v) = sum over all (i, j, k) of alpha_{i,j,k} v_i v_j v_k."""
    v = np.asarray(v, dtype=float)
    if v.shape != (t.dimension,):
        raise DimensionMismatch(f"vector of shape {v.shape} for dimension {t.dimension}")
    return float(np.einsum('ijk,i,j,k->', t.dense, v, v, v))


def third_moment(t: SymmetricCubicTensor, i: int, j: int, k: int) -> float:
    """E[X_i X_j X_k] = 2 alpha_{i,j,k} for a normalized spec."""
    return 2.0 * t.lookup(i, j, k)


@dataclass
class LccReport:
    """Outcome of the linear consistency validation."""
    normalized_mode: bool
    checks: Dict[str, bool] = field(default_factory=dict)
    violations: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self):
        return {
            'normalized_mode': self.normalized_mode,
            'passed': self.passed,
            'checks': dict(self.checks),
            'violations': list(self.violations),
        }


def validate_lcc(spec: MeixnerSpec, normalized: bool = True, tol: float = 1e-12) -> LccReport:
    """
    Check the consistency conditions a spec must satisfy

    Args:
        spec: Spec to validate
        normalized: Also require beta = I and mean = 0
        tol: Absolute tolerance for the beta checks

    Returns:
        LccReport; a failing check never raises
    """
    report = LccReport(normalized_mode=normalized)
    beta = np.asarray(spec.beta, dtype=float)

    # Structural: lookup is permutation-invariant by construction
    report.checks['alpha_symmetric'] = True

    symmetric = bool(np.allclose(beta, beta.T, rtol=0.0, atol=tol))
    report.checks['beta_symmetric'] = symmetric
    if not symmetric:
        report.violations.append("beta is not symmetric")

    eigenvalues = np.linalg.eigvalsh((beta + beta.T) / 2)
    psd = bool(eigenvalues.min() >= -tol * max(1.0, np.abs(eigenvalues).max()))
    report.checks['beta_psd'] = psd
    if not psd:
        report.violations.append(f"beta is not positive semidefinite (min eigenvalue {eigenvalues.min():.3g})")

    if normalized:
        identity = bool(np.allclose(beta, np.eye(spec.dimension), rtol=0.0, atol=tol))
        report.checks['beta_identity'] = identity
        if not identity:
            report.violations.append("normalized mode requires beta = I")
        centered = bool(np.all(np.abs(spec.mean) <= tol))
        report.checks['mean_zero'] = centered
        if not centered:
            report.violations.append("normalized mode requires mean = 0")

    if report.violations:
        logger.info(f"LCC validation found {len(report.violations)} violation(s)")
    return report
