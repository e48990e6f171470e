"""Exact finite reduction of the row space ``Z_{>=0}^n``.

Row ``z`` and its capped version ``min(z, cap)`` with ``cap_i = n // i`` have
the same pivot status against every column label, because every label has
``a_i <= cap_i``.  The top value ``cap_i`` of a class coordinate therefore
stands for the event ``Z_i >= cap_i``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SizeLimitError
from .processes import ProcessFamily

DEFAULT_CLASS_LIMIT = 10**7


def class_caps(n: int) -> tuple[int, ...]:
    return tuple(n // i for i in range(1, n + 1))


def class_count(n: int) -> int:
    count = 1
    for c in class_caps(n):
        count *= c + 1
    return count


@dataclass(frozen=True)
class RowClass:
    v: tuple[int, ...]
    at_cap: tuple[bool, ...]
    mass: float


def coordinate_masses(fam: ProcessFamily) -> list[np.ndarray]:
    """Per-index class weights: point masses below the cap, the tail at it."""
    out = []
    for i, cap in enumerate(class_caps(fam.n), start=1):
        w = [fam.pmf(i, v) for v in range(cap)]
        w.append(fam.sf(i, cap))
        out.append(np.array(w))
    return out


class RowClassSet:
    """All capped row vectors in lexicographic order, with exact masses.

    Stored column-wise: ``vectors`` is ``(count, n)`` and ``masses`` is
    ``(count,)``.  Indexing yields :class:`RowClass` objects.
    """

    def __init__(self, fam: ProcessFamily, limit: int = DEFAULT_CLASS_LIMIT):
        n = fam.n
        count = class_count(n)
        if count > limit:
            raise SizeLimitError(
                f"{count} row classes for n={n} exceed the limit {limit}; use a smaller n"
            )
        self.family = fam
        self.caps = np.array(class_caps(n), dtype=np.int64)
        shape = tuple(int(c) + 1 for c in self.caps)
        self.vectors = np.indices(shape, dtype=np.int16).reshape(n, -1).T.copy()
        weights = coordinate_masses(fam)
        masses = weights[0]
        for w in weights[1:]:
            masses = np.multiply.outer(masses, w)
        self.masses = np.ascontiguousarray(masses).reshape(-1)

    def __len__(self):
        return len(self.masses)

    def __getitem__(self, k) -> RowClass:
        v = self.vectors[k]
        return RowClass(
            tuple(int(t) for t in v),
            tuple(bool(t) for t in v == self.caps),
            float(self.masses[k]),
        )

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    @property
    def at_cap(self) -> np.ndarray:
        return self.vectors == self.caps

    def index_of(self, v) -> int:
        """Position of the class containing row ``v`` (any nonnegative vector)."""
        capped = np.minimum(np.asarray(v), self.caps)
        return int(np.ravel_multi_index(tuple(capped), tuple(self.caps + 1)))

    def pivot_mask(self, a) -> np.ndarray:
        """Boolean mask of classes that are pivots for column label ``a``."""
        a = np.asarray(a, dtype=np.int64)
        deficit = np.maximum(a[None, :] - self.vectors, 0).sum(axis=1)
        return deficit > 1

    def total_mass(self) -> float:
        return float(np.sum(self.masses))


def build_row_classes(fam: ProcessFamily, limit: int = DEFAULT_CLASS_LIMIT) -> RowClassSet:
    return RowClassSet(fam, limit)
