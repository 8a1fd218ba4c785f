"""
Orthogonal rotations and standardization of Meixner vectors
"""

from typing import Tuple

import numpy as np

from src.config import settings
from src.core.errors import DimensionMismatch, NotOrthogonal, SingularCovariance
from src.core.tensor import SymmetricCubicTensor
from src.logging.log_service import logger


def check_orthogonal(U, tol: float = settings.ORTHOGONALITY_TOL) -> np.ndarray:
    """Return U as an array, raising NotOrthogonal if ||U^T U - I||_2 > tol."""
    U = np.asarray(U, dtype=float)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {U.shape}")
    defect = np.linalg.norm(U.T @ U - np.eye(U.shape[0]), ord=2)
    if defect > tol:
        raise NotOrthogonal(f"||U^T U - I|| = {defect:.3g} exceeds {tol:g}")
    return U


def rotate_tensor(t: SymmetricCubicTensor, U) -> SymmetricCubicTensor:
    """
    Coefficients of the rotated vector UX

    alpha'_{i,j,k} = sum_{p,q,r} U_ip U_jq U_kr alpha_{p,q,r}, so that
    cubic_form(rotate_tensor(t, U), s) == cubic_form(t, U^T s).

    Args:
        t: Tensor to rotate
        U: Orthogonal d x d matrix

    Returns:
        Rotated tensor
    """
    U = check_orthogonal(U)
    if U.shape[0] != t.dimension:
        raise DimensionMismatch(f"rotation of size {U.shape[0]} for dimension {t.dimension}")
    rotated = np.einsum('ip,jq,kr,pqr->ijk', U, U, U, t.dense)
    return SymmetricCubicTensor.from_dense(rotated)


def standardize(mean, cov) -> Tuple[np.ndarray, np.ndarray]:
    """
    Whitening map (W, s) with W cov W^T = I and s = -W mean

    W is the symmetric inverse square root of cov, from eigh.

    Args:
        mean: Length-d mean vector
        cov: Symmetric positive definite covariance

    Returns:
        Tuple (W, s)
    """
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    d = mean.shape[0]
    if cov.shape != (d, d):
        raise DimensionMismatch(f"covariance shape {cov.shape} does not match mean length {d}")

    eigenvalues, vectors = np.linalg.eigh((cov + cov.T) / 2)
    if eigenvalues.min() < settings.SINGULAR_COV_REL * np.trace(cov):
        logger.error(f"Singular covariance: smallest eigenvalue {eigenvalues.min():.3g}")
        raise SingularCovariance(
            f"smallest covariance eigenvalue {eigenvalues.min():.3g} is below "
            f"{settings.SINGULAR_COV_REL:g} * trace")

    W = (vectors / np.sqrt(eigenvalues)) @ vectors.T
    W = (W + W.T) / 2
    return W, -W @ mean


def apply_affine(W, s, x) -> np.ndarray:
    """Apply x -> W x + s to one point or to rows of an (n, d) array."""
    W = np.asarray(W, dtype=float)
    x = np.asarray(x, dtype=float)
    return x @ W.T + np.asarray(s, dtype=float)


def reflection(d: int, axis: int) -> np.ndarray:
    """Diagonal orthogonal matrix flipping one coordinate."""
    R = np.eye(d)
    R[axis, axis] = -1.0
    return R
