import json

import pytest
from scipy.stats import special_ortho_group

from src.core.tensor import MeixnerSpec, canonical_tensor, diagonal_tensor


@pytest.fixture
def canonical():
    """Canonical tensor with a = 0.5."""
    return canonical_tensor(0.5)


@pytest.fixture
def canonical_spec(canonical):
    return MeixnerSpec.normalized(canonical)


@pytest.fixture
def tampered():
    """The b = 2a member of the canonical family; fails the obstruction."""
    return canonical_tensor(0.5, 1.0)


@pytest.fixture
def diagonal():
    return diagonal_tensor([0.5, 0.0, 1.0])


@pytest.fixture
def random_rotation():
    def draw(seed):
        return special_ortho_group.rvs(3, random_state=seed)
    return draw


@pytest.fixture
def tensor_file(tmp_path):
    """Write a tensor JSON payload and return its path."""
    def write(payload, name="tensor.json"):
        path = tmp_path / name
        path.write_text(payload if isinstance(payload, str) else json.dumps(payload))
        return str(path)
    return write


@pytest.fixture
def canonical_payload():
    return {
        "dimension": 3,
        "alpha": [
            {"index": [0, 0, 2], "value": 0.5},
            {"index": [1, 1, 2], "value": 0.5},
            {"index": [2, 2, 2], "value": 0.5},
        ],
    }
