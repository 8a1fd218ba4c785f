"""
Core module
"""

from src.core.errors import (
    ConflictingEntry, DimensionMismatch, DimensionNot3, DomainError, IllConditioned,
    IndexOutOfRange, InputError, InvalidParam, MeixnerError, MeixnerInputError,
    MeixnerNumericalError, NotOrthogonal, OutOfDomain, PivotInconsistency,
    RankDeficientFit, SingularCovariance, DegreeCapExceeded,
)
from src.core.tensor import (
    LccReport, MeixnerSpec, SymmetricCubicTensor, canonical_tensor, cubic_form,
    diagonal_tensor, slice_matrix, tensor_from_entries, third_moment, validate_lcc,
)
from src.core.transforms import apply_affine, check_orthogonal, rotate_tensor, standardize
