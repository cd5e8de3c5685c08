"""Index sets packed into Python ints.

Vertex sets and entity sets are hot-path objects; arbitrary-precision ints
give O(n/64) intersection, union and popcount without any dependency.
Bit i set means index i is a member.
"""

from __future__ import annotations

from typing import Iterable, Iterator


def full_mask(n: int) -> int:
    """Mask with bits 0..n-1 set."""
    return (1 << n) - 1


def from_indices(indices: Iterable[int]) -> int:
    mask = 0
    for i in indices:
        mask |= 1 << i
    return mask


def iter_indices(mask: int) -> Iterator[int]:
    """Yield set bit positions in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def to_indices(mask: int) -> list[int]:
    return list(iter_indices(mask))


def is_subset(a: int, b: int) -> bool:
    """True iff every bit of a is set in b."""
    return a & ~b == 0
