"""
Chaos oracle service
Rebuilds the chaos decomposition and the quantum operators of a law from its
moments, then checks the commutation axioms and the 1- and 2-Meixner
commutator identities directly on matrices
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np
import sympy as sp

from src.config import settings
from src.core.errors import IllConditioned, InvalidParam, RankDeficientFit
from src.core.tensor import SymmetricCubicTensor
from src.logging.log_service import logger
from src.moments.moment_service import MomentTable
from utils.multi_index import add, indices_up_to, unit_index


@dataclass
class ChaosBasis:
    """
    Graded basis of F_N in monomial coordinates

    Column k of `vectors` holds the monomial coefficients of basis vector k;
    columns are ordered by chaos degree. In float mode the basis is
    orthonormal; in exact mode it is orthogonal with squared norms `gram`.
    """
    max_degree: int
    monomials: List[Tuple[int, ...]]
    vectors: np.ndarray
    degrees: np.ndarray
    gram: np.ndarray
    exact: bool
    min_gram_eigenvalues: List[float] = field(default_factory=list)

    @property
    def dims(self) -> List[int]:
        return [int(np.sum(self.degrees == n)) for n in range(self.max_degree + 1)]

    def size_up_to(self, m: int) -> int:
        """dim F_m; basis columns 0 .. size_up_to(m) - 1 span F_m."""
        return int(np.sum(self.degrees <= m))

    def orthogonality_defect(self, moment_matrix: np.ndarray) -> float:
        E = np.asarray(self.vectors, dtype=float)
        G = E.T @ np.asarray(moment_matrix, dtype=float) @ E
        return float(np.abs(G - np.diag(np.asarray(self.gram, dtype=float))).max(initial=0.0))


@dataclass
class OperatorSet:
    """Matrices of X_i, a-(i), a0(i), a+(i), U_i, V_i in chaos coordinates on F_N."""
    basis: ChaosBasis
    X: List[np.ndarray]
    minus: List[np.ndarray]
    zero: List[np.ndarray]
    plus: List[np.ndarray]
    U: List[np.ndarray]
    V: List[np.ndarray]
    off_band: List[float]

    @property
    def dimension(self) -> int:
        return len(self.X)

    @property
    def exact(self) -> bool:
        return self.basis.exact

    def identity(self) -> np.ndarray:
        size = len(self.basis.degrees)
        if self.exact:
            out = np.full((size, size), Fraction(0), dtype=object)
            for k in range(size):
                out[k, k] = Fraction(1)
            return out
        return np.eye(size)

    def adjoint(self, M: np.ndarray) -> np.ndarray:
        """Polynomial adjoint in these coordinates: G^{-1} M^T G."""
        g = self.basis.gram
        return (M.T * g[np.newaxis, :]) / g[:, np.newaxis]


def _norm(M) -> float:
    return float(np.linalg.norm(np.asarray(M, dtype=float)))


def _comm(A, B):
    return A @ B - B @ A


def _moment_matrices(tbl: MomentTable, monomials, exact: bool):
    """Gram matrix E[X^(u+v)] and the shifted matrices E[X^(u+v+e_i)]."""
    d = tbl.d
    size = len(monomials)
    dtype = object if exact else float

    def entry(idx):
        value = tbl.moment(idx)
        return value if exact else float(value)

    mom = np.empty((size, size), dtype=dtype)
    shifted = [np.empty((size, size), dtype=dtype) for _ in range(d)]
    for a, u in enumerate(monomials):
        for b in range(a, size):
            uv = add(u, monomials[b])
            mom[a, b] = mom[b, a] = entry(uv)
            for i in range(d):
                shifted[i][a, b] = shifted[i][b, a] = entry(add(uv, unit_index(d, i)))
    return mom, shifted


def _float_basis(mom: np.ndarray, monomials, N: int):
    size = len(monomials)
    columns: List[np.ndarray] = []
    degrees: List[int] = []
    min_eigs: List[float] = []

    for n in range(N + 1):
        positions = [k for k, u in enumerate(monomials) if sum(u) == n]
        P = np.zeros((size, len(positions)))
        P[positions, np.arange(len(positions))] = 1.0
        R = P
        if columns:
            E = np.column_stack(columns)
            # Two projection sweeps keep the residual orthogonal to F_{n-1}
            for _ in range(2):
                R = R - E @ (E.T @ mom @ R)
        S = R.T @ mom @ R
        S = (S + S.T) / 2
        eigenvalues, V = np.linalg.eigh(S)
        min_eigs.append(float(eigenvalues.min()))
        top = float(eigenvalues.max()) if eigenvalues.size else 0.0
        keep = eigenvalues > settings.CHAOS_RANK_REL_CUTOFF * max(top, np.finfo(float).tiny)
        if not np.any(keep):
            logger.info(f"Chaos space G_{n} is trivial")
            continue
        kept = eigenvalues[keep]
        condition = kept.max() / kept.min()
        if condition > settings.CHAOS_MAX_CONDITION:
            logger.error(f"Degree-{n} Gram block condition {condition:.3g} exceeds limit")
            raise IllConditioned(
                f"degree-{n} Gram block has condition {condition:.3g}; try exact mode")
        block = R @ V[:, keep] / np.sqrt(kept)
        columns.extend(block.T)
        degrees.extend([n] * block.shape[1])

    vectors = np.column_stack(columns)
    return vectors, np.array(degrees), np.ones(len(degrees)), min_eigs


def _exact_basis(mom: np.ndarray, monomials, N: int):
    size = len(monomials)
    vectors: List[np.ndarray] = []
    images: List[np.ndarray] = []  # mom @ vector
    grams: List[Fraction] = []
    degrees: List[int] = []
    min_eigs: List[float] = []

    for n in range(N + 1):
        block_grams = []
        for k, u in enumerate(monomials):
            if sum(u) != n:
                continue
            v = np.full(size, Fraction(0), dtype=object)
            v[k] = Fraction(1)
            for b, mb, g in zip(vectors, images, grams):
                coeff = mb[k] / g
                if coeff != 0:
                    v = v - coeff * b
            mv = mom.dot(v)
            g = v.dot(mv)
            block_grams.append(g)
            if g == 0:
                continue
            vectors.append(v)
            images.append(mv)
            grams.append(g)
            degrees.append(n)
        min_eigs.append(float(min(block_grams)) if block_grams else 0.0)

    return (np.column_stack(vectors), np.array(degrees),
            np.array(grams, dtype=object), min_eigs)


def build_chaos_basis(tbl: MomentTable, N: int) -> ChaosBasis:
    """
    Orthogonalize monomials degree by degree under <f, g> = E[f g]

    Float mode diagonalizes the Schur complement of each degree block and
    keeps eigenvalues above a relative cutoff; exact mode runs Gram-Schmidt
    over the rationals.

    Args:
        tbl: Moment table; needs moments up to degree 2N + 1
        N: Maximum chaos degree

    Returns:
        ChaosBasis
    """
    if N < 0:
        raise InvalidParam(f"chaos degree must be non-negative, got {N}")
    monomials = indices_up_to(tbl.d, N)
    tbl.fill_to(2 * N + 1)
    mom, _ = _moment_matrices(tbl, monomials, tbl.exact)
    if tbl.exact:
        vectors, degrees, gram, min_eigs = _exact_basis(mom, monomials, N)
    else:
        vectors, degrees, gram, min_eigs = _float_basis(mom, monomials, N)
    basis = ChaosBasis(N, monomials, vectors, degrees, gram, tbl.exact, min_eigs)
    logger.info(f"Chaos basis to degree {N}: dims {basis.dims}")
    logger.debug(f"Chaos basis orthogonality defect {basis.orthogonality_defect(mom):.3g}")
    return basis


def build_operators(basis: ChaosBasis, tbl: MomentTable) -> OperatorSet:
    """
    Matrices of multiplication by X_i and their grading blocks

    Entry (b, a) of X_i is <X_i e_a, e_b> / <e_b, e_b>. Blocks are split by
    chaos degree: below the diagonal band goes to a-(i), the diagonal band
    to a0(i), above to a+(i), so the three always add up to X_i.

    Args:
        basis: Chaos basis of F_N
        tbl: Moment table the basis was built from

    Returns:
        OperatorSet
    """
    _, shifted = _moment_matrices(tbl, basis.monomials, basis.exact)
    E = basis.vectors
    deg = basis.degrees
    lower = deg[:, np.newaxis] < deg[np.newaxis, :]
    diag = deg[:, np.newaxis] == deg[np.newaxis, :]
    upper = deg[:, np.newaxis] > deg[np.newaxis, :]
    far = np.abs(deg[:, np.newaxis] - deg[np.newaxis, :]) >= 2

    X, minus, zero, plus, U, V, off_band = [], [], [], [], [], [], []
    for S in shifted:
        M = E.T.dot(S).dot(E)
        M = M / basis.gram[:, np.newaxis]
        zero_fill = Fraction(0) if basis.exact else 0.0
        m_minus = np.where(lower, M, zero_fill)
        m_zero = np.where(diag, M, zero_fill)
        m_plus = np.where(upper, M, zero_fill)
        X.append(M)
        minus.append(m_minus)
        zero.append(m_zero)
        plus.append(m_plus)
        U.append(m_minus + m_zero / 2)
        V.append(m_plus + m_zero / 2)
        off_band.append(_norm(np.where(far, M, zero_fill)))
    return OperatorSet(basis, X, minus, zero, plus, U, V, off_band)


@dataclass
class AxiomReport:
    degree_cap: int
    residuals: Dict[str, float] = field(default_factory=dict)
    tol: float = 1e-8

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol

    def to_dict(self):
        return {'degree_cap': self.degree_cap, 'tol': self.tol, 'passed': self.passed,
                'max_residual': self.max_residual, 'residuals': dict(sorted(self.residuals.items()))}


def check_axioms(ops: OperatorSet, m: Optional[int] = None,
                 tol: float = 1e-8) -> AxiomReport:
    """
    Residuals of the commutation axioms on F_m, m <= N - 2

    Covers [a-,a-] = 0, [a-(i),a0(j)] = [a-(j),a0(i)],
    [a0(i),a0(j)] = [a-(j),a+(i)] - [a-(i),a+(j)], [a0(i),a+(j)] = [a0(j),a+(i)],
    [a+,a+] = 0, the semi-quantum symmetry [U_i,X_j] = [U_j,X_i],
    commutativity of X on F_{N-1}, block duality and the off-band blocks.
    """
    N = ops.basis.max_degree
    if m is None:
        m = N - 2
    if m < 0 or m > N - 2:
        raise InvalidParam(f"axiom degree cap must lie in [0, {N - 2}], got {m}")
    cols = ops.basis.size_up_to(m)
    report = AxiomReport(degree_cap=m, tol=tol)
    d = ops.dimension
    am, a0, ap = ops.minus, ops.zero, ops.plus

    def restricted(M):
        return _norm(M[:, :cols])

    rules = {'--': 0.0, '-0': 0.0, '-0+': 0.0, '0+': 0.0, '++': 0.0, 'semi_quantum': 0.0}
    for i in range(d):
        for j in range(d):
            rules['--'] = max(rules['--'], restricted(_comm(am[i], am[j])))
            rules['-0'] = max(rules['-0'], restricted(_comm(am[i], a0[j]) - _comm(am[j], a0[i])))
            rules['-0+'] = max(rules['-0+'], restricted(
                _comm(a0[i], a0[j]) - _comm(am[j], ap[i]) + _comm(am[i], ap[j])))
            rules['0+'] = max(rules['0+'], restricted(_comm(a0[i], ap[j]) - _comm(a0[j], ap[i])))
            rules['++'] = max(rules['++'], restricted(_comm(ap[i], ap[j])))
            rules['semi_quantum'] = max(rules['semi_quantum'], restricted(
                _comm(ops.U[i], ops.X[j]) - _comm(ops.U[j], ops.X[i])))
    report.residuals.update(rules)

    wide = ops.basis.size_up_to(N - 1)
    commutativity = 0.0
    duality = 0.0
    for i in range(d):
        for j in range(d):
            commutativity = max(commutativity, _norm(_comm(ops.X[i], ops.X[j])[:, :wide]))
        duality = max(duality, _norm((ap[i] - ops.adjoint(am[i]))[:, :wide]))
        duality = max(duality, _norm(a0[i] - ops.adjoint(a0[i])))
    report.residuals['commutativity'] = commutativity
    report.residuals['duality'] = duality
    report.residuals['off_band'] = max(ops.off_band, default=0.0)
    logger.info(f"Axiom check on F_{m}: max residual {report.max_residual:.3g}")
    return report


@dataclass
class MeixnerFit:
    """Least-squares coefficients of one commutator on the chosen regressors."""
    indices: Tuple[int, ...]
    b: List[float]
    c: Optional[float]
    residual: float

    def to_dict(self):
        return {'indices': list(self.indices), 'b': list(self.b), 'c': self.c, 'residual': self.residual}


@dataclass
class MeixnerReport:
    n: int
    degree_cap: int
    fits: List[MeixnerFit] = field(default_factory=list)

    @property
    def max_residual(self) -> float:
        return max((f.residual for f in self.fits), default=0.0)

    def fit(self, *indices) -> MeixnerFit:
        for f in self.fits:
            if f.indices == tuple(indices):
                return f
        raise KeyError(indices)

    def alpha_deviation(self, t: SymmetricCubicTensor, beta=None) -> float:
        """Largest gap between fitted (b, c) and (alpha_ij., beta_ij); n = 1 only."""
        d = t.dimension
        beta = np.eye(d) if beta is None else np.asarray(beta, dtype=float)
        worst = 0.0
        for f in self.fits:
            i, j = f.indices
            for k in range(d):
                worst = max(worst, abs(f.b[k] - t.lookup(i, j, k)))
            worst = max(worst, abs(f.c - beta[i, j]))
        return worst

    def to_dict(self):
        return {'n': self.n, 'degree_cap': self.degree_cap, 'max_residual': self.max_residual,
                'fits': [f.to_dict() for f in self.fits]}


def _least_squares(regressors: List[np.ndarray], target: np.ndarray, exact: bool):
    A = np.column_stack([r.ravel() for r in regressors])
    y = target.ravel()
    if exact:
        to_rational = np.vectorize(lambda x: sp.Rational(x.numerator, x.denominator), otypes=[object])
        As = sp.Matrix(to_rational(A).tolist())
        ys = sp.Matrix(to_rational(y).tolist())
        normal = As.T * As
        if normal.det() == 0:
            raise RankDeficientFit("regressor operators are linearly dependent on the test space")
        coeffs = normal.LUsolve(As.T * ys)
        coeffs = [Fraction(int(c.p), int(c.q)) for c in coeffs]
        residual = y - A.dot(np.array(coeffs, dtype=object))
        return [float(c) for c in coeffs], _norm(residual)
    coeffs, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    if rank < A.shape[1]:
        raise RankDeficientFit(f"regressor rank {rank} < {A.shape[1]}")
    return [float(c) for c in coeffs], _norm(y - A @ coeffs)


def check_n_meixner(ops: OperatorSet, n: int = 1, m: Optional[int] = None) -> MeixnerReport:
    """
    Fit the n-Meixner commutators on F_m

    n = 1: [U_i, X_j] on span{X_1..X_d, I}, m <= N - 1.
    n = 2: [[U_i, X_j], X_k] on span{X_l - 2 U_l}, m <= N - 2.

    Returns:
        MeixnerReport with one fit per index tuple
    """
    N = ops.basis.max_degree
    limit = N - 1 if n == 1 else N - 2
    if n not in (1, 2):
        raise InvalidParam(f"only n = 1 and n = 2 are supported, got {n}")
    if m is None:
        m = limit
    if m < 0 or m > limit:
        raise InvalidParam(f"degree cap for n = {n} must lie in [0, {limit}], got {m}")

    cols = ops.basis.size_up_to(m)
    d = ops.dimension
    report = MeixnerReport(n=n, degree_cap=m)
    if n == 1:
        regressors = [x[:, :cols] for x in ops.X] + [ops.identity()[:, :cols]]
        for i in range(d):
            for j in range(d):
                target = _comm(ops.U[i], ops.X[j])[:, :cols]
                coeffs, residual = _least_squares(regressors, target, ops.exact)
                report.fits.append(MeixnerFit((i, j), coeffs[:d], coeffs[d], residual))
    else:
        regressors = [(ops.X[l] - 2 * ops.U[l])[:, :cols] for l in range(d)]
        for i in range(d):
            for j in range(d):
                inner = _comm(ops.U[i], ops.X[j])
                for k in range(d):
                    target = _comm(inner, ops.X[k])[:, :cols]
                    coeffs, residual = _least_squares(regressors, target, ops.exact)
                    report.fits.append(MeixnerFit((i, j, k), coeffs, None, residual))
    logger.info(f"{n}-Meixner fit on F_{m}: max residual {report.max_residual:.3g}")
    return report
