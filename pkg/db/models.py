from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Dict, List, Optional

import numpy as np

from src.core.errors import InputError
from src.core.tensor import MeixnerSpec, SymmetricCubicTensor, tensor_from_entries
from src.logging.log_service import logger
from src.utils.helpers import ensure_finite


@dataclass
class TensorRecord:
    """Tensor file contents: dimension, alpha entries, optional beta and mean."""
    dimension: int = 0
    alpha: List[Dict[str, Any]] = field(default_factory=list)
    beta: Optional[List[List[float]]] = None
    mean: Optional[List[float]] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TensorRecord':
        """Create a TensorRecord from parsed JSON, rejecting malformed fields."""
        if not isinstance(data, dict):
            raise InputError("tensor file must hold a JSON object")
        try:
            dimension = int(data['dimension'])
        except (KeyError, TypeError, ValueError):
            raise InputError("tensor file needs an integer 'dimension'")
        if dimension < 1:
            raise InputError(f"dimension must be positive, got {dimension}")

        alpha = []
        for n, entry in enumerate(data.get('alpha', [])):
            if not isinstance(entry, dict) or 'index' not in entry or 'value' not in entry:
                raise InputError(f"alpha entry {n} needs 'index' and 'value'")
            index = entry['index']
            if not isinstance(index, list) or len(index) != 3 or not all(isinstance(i, int) for i in index):
                raise InputError(f"alpha entry {n} index must be three integers")
            value = ensure_finite([entry['value']], f"alpha entry {n}")[0]
            alpha.append({'index': list(index), 'value': value})

        beta = data.get('beta')
        if beta is not None:
            if not isinstance(beta, list) or len(beta) != dimension or \
                    any(not isinstance(row, list) or len(row) != dimension for row in beta):
                raise InputError(f"beta must be a {dimension} x {dimension} matrix")
            beta = [ensure_finite(row, "beta") for row in beta]

        mean = data.get('mean')
        if mean is not None:
            if not isinstance(mean, list) or len(mean) != dimension:
                raise InputError(f"mean must have {dimension} entries")
            mean = ensure_finite(mean, "mean")

        return cls(dimension=dimension, alpha=alpha, beta=beta, mean=mean)

    @classmethod
    def from_tensor(cls, t: SymmetricCubicTensor, beta=None, mean=None) -> 'TensorRecord':
        return cls(
            dimension=t.dimension,
            alpha=[{'index': [i, j, k], 'value': v} for i, j, k, v in t.to_entries()],
            beta=None if beta is None else np.asarray(beta, dtype=float).tolist(),
            mean=None if mean is None else np.asarray(mean, dtype=float).tolist(),
        )

    def to_tensor(self) -> SymmetricCubicTensor:
        return tensor_from_entries(self.dimension,
                                   [(*e['index'], e['value']) for e in self.alpha])

    def to_spec(self) -> MeixnerSpec:
        """Build the MeixnerSpec; beta defaults to I and mean to 0."""
        spec = MeixnerSpec.build(self.to_tensor(), self.beta, self.mean)
        logger.debug(f"Loaded spec of dimension {spec.dimension} with {len(self.alpha)} alpha entries")
        return spec

    def to_dict(self) -> Dict[str, Any]:
        out = {'dimension': self.dimension, 'alpha': self.alpha}
        if self.beta is not None:
            out['beta'] = self.beta
        if self.mean is not None:
            out['mean'] = self.mean
        return out


@dataclass
class RunRecord:
    """One CLI or dashboard run: command, seed and the result payload."""
    command: str = ""
    seed: Optional[int] = None
    passed: Optional[bool] = None
    result: Dict[str, Any] = field(default_factory=dict)
    created_at: Optional[datetime] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RunRecord':
        created_at = data.get('created_at')
        return cls(
            command=data.get('command', ''),
            seed=data.get('seed'),
            passed=data.get('passed'),
            result=data.get('result') or {},
            created_at=datetime.fromisoformat(created_at) if created_at else None,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'command': self.command,
            'seed': self.seed,
            'passed': self.passed,
            'result': self.result,
            'created_at': self.created_at.isoformat() if self.created_at else None,
        }
