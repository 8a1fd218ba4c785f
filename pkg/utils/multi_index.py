import itertools
import math
from functools import lru_cache
from typing import Iterator, List, Sequence, Tuple

MultiIndex = Tuple[int, ...]


def zero_index(d: int) -> MultiIndex:
    return (0,) * d


def unit_index(d: int, r: int) -> MultiIndex:
    """Multi-index e_r."""
    return tuple(1 if k == r else 0 for k in range(d))


def shift(idx: Sequence[int], r: int, delta: int = 1) -> MultiIndex:
    """Return idx + delta * e_r."""
    out = list(idx)
    out[r] += delta
    return tuple(out)


def add(u: Sequence[int], v: Sequence[int]) -> MultiIndex:
    return tuple(a + b for a, b in zip(u, v))


def total_degree(idx: Sequence[int]) -> int:
    return sum(idx)


@lru_cache(maxsize=None)
def indices_of_degree(d: int, n: int) -> Tuple[MultiIndex, ...]:
    """
    All multi-indices of length d with total degree n

    Ordered reverse-lexicographically, so (n,0,...,0) comes first.

    Args:
        d: Number of coordinates
        n: Total degree

    Returns:
        Tuple of multi-indices
    """
    if d == 1:
        return ((n,),)
    out = []
    for first in range(n, -1, -1):
        for rest in indices_of_degree(d - 1, n - first):
            out.append((first,) + rest)
    return tuple(out)


def indices_up_to(d: int, n: int) -> List[MultiIndex]:
    """Graded listing: degree 0 first, then degree 1, ..., degree n."""
    out: List[MultiIndex] = []
    for m in range(n + 1):
        out.extend(indices_of_degree(d, m))
    return out


def multinomial(idx: Sequence[int]) -> int:
    """|i|! / (i_1! ... i_d!)"""
    result = math.factorial(sum(idx))
    for c in idx:
        result //= math.factorial(c)
    return result


def factorial_product(idx: Sequence[int]) -> int:
    out = 1
    for c in idx:
        out *= math.factorial(c)
    return out


def index_from_coordinates(d: int, coords: Sequence[int]) -> MultiIndex:
    """Count occurrences, e.g. coordinates (0,0,2) in d=3 give (2,0,1)."""
    counts = [0] * d
    for c in coords:
        counts[c] += 1
    return tuple(counts)


def permute_index(idx: Sequence[int], perm: Sequence[int]) -> MultiIndex:
    """Relabel coordinates: new[perm[r]] = idx[r]."""
    out = [0] * len(idx)
    for r, c in enumerate(idx):
        out[perm[r]] = c
    return tuple(out)


def sorted_triples(d: int) -> Iterator[Tuple[int, int, int]]:
    """Canonical triples i <= j <= k."""
    return itertools.combinations_with_replacement(range(d), 3)
