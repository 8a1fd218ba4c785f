"""
Classification service for three-dimensional Meixner tensors
Splits into the cone Gamma law (Case I), independent Gamma/Gaussian
components (Case II), or a rejection with the obstruction that caused it
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Union

import numpy as np
from scipy.optimize import linear_sum_assignment

from src.config import settings
from src.core.errors import DimensionNot3
from src.core.tensor import SymmetricCubicTensor, slice_matrix
from src.core.transforms import reflection, rotate_tensor
from src.integrability.integrability_service import commutator
from src.logging.log_service import logger

CANONICAL_TRIPLES = ((0, 0, 2), (1, 1, 2), (2, 2, 2))


@dataclass(frozen=True)
class MarginalParams:
    """
    Law of a standardized 1-Meixner component

    Gaussian(0, 1) when b = 0, otherwise b * Gamma(1/b^2, 1) - 1/b.
    """
    b: float
    kind: str
    shape: Optional[float]
    scale: float
    shift: float

    def laplace(self, s):
        """E[exp(s X)]; Gamma requires 1 - b s > 0."""
        s = np.asarray(s, dtype=float)
        if self.kind == "Gaussian":
            return np.exp(s ** 2 / 2)
        base = 1.0 - self.b * s
        with np.errstate(invalid='ignore', divide='ignore'):
            value = np.exp(-s / self.b) * base ** (-self.shape)
        return np.where(base > 0, value, np.inf)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "Gaussian":
            return rng.standard_normal(n)
        return self.scale * rng.standard_gamma(self.shape, n) + self.shift

    def to_dict(self):
        return {'b': self.b, 'kind': self.kind, 'shape': self.shape,
                'scale': self.scale, 'shift': self.shift}


def marginal_params_1d(b: float) -> MarginalParams:
    """Gamma/Gaussian parameters for the component with [U, X] = b X + I."""
    b = float(b)
    if abs(b) <= settings.GAUSSIAN_B_TOL:
        return MarginalParams(b=0.0, kind="Gaussian", shape=None, scale=1.0, shift=0.0)
    return MarginalParams(b=b, kind="Gamma", shape=1.0 / b ** 2, scale=b, shift=-1.0 / b)


@dataclass
class CaseI:
    a: float
    U: np.ndarray
    variant: str = field(default="CaseI", init=False)

    def to_dict(self):
        return {'variant': self.variant, 'a': self.a, 'U': self.U.tolist()}


@dataclass
class CaseII:
    U: np.ndarray
    components: List[MarginalParams]
    variant: str = field(default="CaseII", init=False)

    def to_dict(self):
        return {'variant': self.variant, 'U': self.U.tolist(),
                'components': [c.to_dict() for c in self.components]}


@dataclass
class Rejected:
    """
    reason is one of:
      obstruction  rotated tensor has alpha'_222 != alpha'_002 (b != a)
      pattern      no rotation brings the tensor to the canonical pattern
      positivity   canonical a > 1, no probability measure exists
      not_diagonal commuting slices failed to diagonalize jointly
    """
    reason: str
    obstruction: Dict[str, object] = field(default_factory=dict)
    U: Optional[np.ndarray] = None
    variant: str = field(default="Rejected", init=False)

    def to_dict(self):
        return {'variant': self.variant, 'reason': self.reason,
                'obstruction': self.obstruction,
                'U': None if self.U is None else self.U.tolist()}


Classification3 = Union[CaseI, CaseII, Rejected]


def _refine(vectors: np.ndarray, ops: List[np.ndarray], level: int, gap: float) -> np.ndarray:
    """Split a degenerate eigenspace using the next operator in the family."""
    if level == len(ops) or vectors.shape[1] == 1:
        return vectors
    sub = vectors.T @ ops[level] @ vectors
    eigenvalues, inner = np.linalg.eigh((sub + sub.T) / 2)
    vectors = vectors @ inner
    k = 0
    while k < len(eigenvalues):
        (group,) = np.where(np.abs(eigenvalues - eigenvalues[k]) <= gap)
        group = group[group >= k]
        if len(group) > 1:
            vectors[:, group] = _refine(vectors[:, group], ops, level + 1, gap)
        k = group[-1] + 1
    return vectors


def joint_eigenbasis(ops: List[np.ndarray], seed: int = settings.CLASSIFY_RNG_SEED) -> np.ndarray:
    """
    Common orthonormal eigenbasis of commuting symmetric matrices

    Diagonalizes a random combination, then refines any eigenspace whose
    eigenvalues lie within 1e-8 * spectral norm by projecting the slices
    one by one.

    Returns:
        Matrix whose columns are the common eigenvectors
    """
    weights = np.random.default_rng(seed).standard_normal(len(ops))
    combo = sum(w * A for w, A in zip(weights, ops))
    combo = (combo + combo.T) / 2
    norm = max(np.linalg.norm(combo, ord=2), max(np.linalg.norm(A, ord=2) for A in ops))
    gap = settings.EIGEN_GAP_REL * max(norm, np.finfo(float).tiny)
    eigenvalues, vectors = np.linalg.eigh(combo)
    k = 0
    while k < len(eigenvalues):
        (group,) = np.where(np.abs(eigenvalues - eigenvalues[k]) <= gap)
        group = group[group >= k]
        if len(group) > 1:
            vectors[:, group] = _refine(vectors[:, group], ops, 0, gap)
        k = group[-1] + 1
    return vectors


def _axial(C: np.ndarray) -> np.ndarray:
    return np.array([C[2, 1], C[0, 2], C[1, 0]])


def _frame_from_axis(f3: np.ndarray) -> np.ndarray:
    """Rows f1, f2, f3 with f1 the projection of e1 (or e2) orthogonal to f3."""
    for e in np.eye(3)[:2]:
        f1 = e - (e @ f3) * f3
        if np.linalg.norm(f1) > 1e-6:
            break
    f1 = f1 / np.linalg.norm(f1)
    f2 = np.cross(f3, f1)
    return np.vstack([f1, f2, f3])


def align_to_axes(V: np.ndarray) -> np.ndarray:
    """
    Reorder and re-sign eigenvector columns to follow the input axes

    Column j ends up matched to the axis where the matching of |V| is
    heaviest, with a positive entry on that axis. An already diagonal
    tensor therefore keeps the identity frame.
    """
    rows, cols = linear_sum_assignment(-np.abs(V))
    aligned = V[:, cols[np.argsort(rows)]]
    signs = np.sign(np.diag(aligned))
    signs[signs == 0] = 1.0
    return aligned * signs


def _classify_commuting(t: SymmetricCubicTensor, scale: float) -> Classification3:
    ops = [slice_matrix(t, k) for k in range(3)]
    U = align_to_axes(joint_eigenbasis(ops)).T
    rotated = rotate_tensor(t, U)
    off = max((abs(v) for key, v in rotated.entries.items() if len(set(key)) > 1), default=0.0)
    if off > 1e-9 * max(scale, np.finfo(float).tiny) and off > 1e-14:
        logger.warning(f"Joint diagonalization left off-diagonal entries of size {off:.3g}")
        return Rejected("not_diagonal", {'max_off_diagonal': off}, U)
    components = [marginal_params_1d(rotated.lookup(k, k, k)) for k in range(3)]
    return CaseII(U, components)


def classify(t: SymmetricCubicTensor, tol: float = settings.CLASSIFY_TOL) -> Classification3:
    """
    Classify a normalized d = 3 coefficient tensor

    Args:
        t: Tensor with dimension 3
        tol: Relative tolerance for the commutator case split

    Returns:
        CaseI, CaseII or Rejected
    """
    if t.dimension != 3:
        raise DimensionNot3(f"classification needs d = 3, got d = {t.dimension}")

    scale = t.max_abs
    pairs = [(0, 1), (1, 2), (0, 2)]
    commutators = {pair: commutator(t, *pair) for pair in pairs}
    norms = {pair: float(np.linalg.norm(C)) for pair, C in commutators.items()}
    threshold = tol * max(1.0, scale ** 2)

    if all(n <= threshold for n in norms.values()):
        result = _classify_commuting(t, scale)
        logger.info(f"Classified as {result.variant}")
        return result

    # Axis candidates in order of commutator size; the first one giving the
    # canonical pattern wins
    pattern_tol = 10 * tol * max(1.0, scale)
    data = None
    matched = False
    for pair in sorted(pairs, key=lambda p: -norms[p]):
        if norms[pair] <= threshold:
            continue
        axis = _axial(commutators[pair])
        U = _frame_from_axis(axis / np.linalg.norm(axis))
        rotated = rotate_tensor(t, U)
        a = rotated.lookup(0, 0, 2)
        a2 = rotated.lookup(1, 1, 2)
        b = rotated.lookup(2, 2, 2)
        stray = max((abs(v) for key, v in rotated.entries.items() if key not in CANONICAL_TRIPLES),
                    default=0.0)
        candidate = {
            'commutator_norms': {f"{i},{j}": n for (i, j), n in norms.items()},
            'axis_pair': list(pair), 'a': a, 'a_second': a2, 'b': b, 'stray': stray,
        }
        if data is None:
            data, first_U = candidate, U
        if stray <= pattern_tol and abs(a - a2) <= pattern_tol:
            data = candidate
            matched = True
            break
    if not matched:
        logger.info("Rejected: rotated tensor does not match the canonical pattern")
        return Rejected("pattern", data, first_U)
    if abs(b - a) > pattern_tol:
        data['obstruction'] = -a ** 2 * (b - a)
        logger.info(f"Rejected: obstruction -a^2(b-a) = {data['obstruction']:.6g}")
        return Rejected("obstruction", data, U)

    if a < 0:
        U = reflection(3, 2) @ U
        a = -a
    if a > 1.0 + 1e-12:
        logger.info(f"Rejected: a = {a:.6g} exceeds 1, no positive measure")
        return Rejected("positivity", dict(data, a=a), U)

    logger.info(f"Classified as CaseI with a = {a:.12g}")
    return CaseI(a, U)
