"""Combinatorial families: assemblies, multisets and selections.

A family is fixed by its kind and the weight sequence ``m_1, m_2, ...``
(the number of available component structures of each size).  All counts
here are exact Python integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

from .errors import EmptySupportError, ParameterError

KINDS = ("assembly", "multiset", "selection")

# preset name -> (kind, weight function i -> m_i)
PRESETS = {
    "permutations": ("assembly", lambda i: math.factorial(i - 1)),
    "set_partitions": ("assembly", lambda i: 1),
    "integer_partitions": ("multiset", lambda i: 1),
    "distinct_partitions": ("selection", lambda i: 1),
}


@dataclass(frozen=True)
class StructureSpec:
    """Which family, its weights ``m`` (``m[0]`` is ``m_1``) and the size ``n``."""

    kind: str
    m: tuple[int, ...]
    n: int
    preset: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown structure kind {self.kind!r}; expected one of {KINDS}")
        if not isinstance(self.n, int) or self.n < 1:
            raise ParameterError(f"n must be a positive integer, got {self.n!r}")
        m = tuple(int(v) for v in self.m)
        if len(m) < self.n:
            raise ParameterError(f"weight sequence has length {len(m)} < n = {self.n}")
        if any(v < 0 for v in m):
            raise ParameterError("weights m_i must be nonnegative")
        object.__setattr__(self, "m", m[: self.n])

    @classmethod
    def from_preset(cls, name: str, n: int) -> StructureSpec:
        try:
            kind, weight = PRESETS[name]
        except KeyError:
            raise ParameterError(
                f"unknown preset {name!r}; expected one of {sorted(PRESETS)}"
            ) from None
        if not isinstance(n, int) or n < 1:
            raise ParameterError(f"n must be a positive integer, got {n!r}")
        return cls(kind, tuple(weight(i) for i in range(1, n + 1)), n, preset=name)

    @classmethod
    def from_dict(cls, data: Mapping) -> StructureSpec:
        """Build from the structure-spec JSON object.

        Either ``"preset"`` or ``"kind"`` plus ``"m"`` must be given.
        """
        try:
            n = int(data["n"])
        except (KeyError, TypeError, ValueError):
            raise ParameterError("structure spec needs an integer field 'n'") from None
        if "preset" in data:
            spec = cls.from_preset(data["preset"], n)
            if "kind" in data and data["kind"] != spec.kind:
                raise ParameterError(
                    f"preset {data['preset']!r} is a {spec.kind}, not a {data['kind']}"
                )
            return spec
        if "kind" not in data or "m" not in data:
            raise ParameterError("structure spec needs either 'preset' or both 'kind' and 'm'")
        return cls(data["kind"], tuple(data["m"]), n)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "n": self.n, "m": list(self.m)}
        if self.preset is not None:
            out["preset"] = self.preset
        return out

    def weight(self, i: int) -> int:
        return self.m[i - 1]


@dataclass(frozen=True, order=True)
class ColumnLabel:
    """A component vector ``(a_1, ..., a_n)`` with ``sum i*a_i = n``."""

    a: tuple[int, ...]
    multiplicity: int = 1

    @property
    def n(self) -> int:
        return len(self.a)

    @property
    def is_unit(self) -> bool:
        """True for the one-component label ``e_n``."""
        return self.a[-1] == 1

    def __str__(self):
        return "(" + ",".join(map(str, self.a)) + ")"


def _check_vector(spec: StructureSpec, a: Sequence[int]) -> tuple[int, ...]:
    a = tuple(int(v) for v in a)
    if len(a) != spec.n:
        raise ParameterError(f"component vector has length {len(a)}, expected n = {spec.n}")
    if any(v < 0 for v in a):
        raise ParameterError(f"component vector {a} has negative entries")
    total = sum(i * v for i, v in enumerate(a, start=1))
    if total != spec.n:
        raise ParameterError(f"component vector {a} has weight {total}, expected {spec.n}")
    return a


def _series_power_product(spec: StructureSpec, coefficient) -> list[int]:
    """Coefficients 0..n of prod_i sum_a coefficient(m_i, a) z^(i a)."""
    n = spec.n
    series = [1] + [0] * n
    for i in range(1, n + 1):
        mi = spec.weight(i)
        factor = [coefficient(mi, a) for a in range(n // i + 1)]
        new = [0] * (n + 1)
        for d, c in enumerate(series):
            if c == 0:
                continue
            for a, f in enumerate(factor):
                if d + i * a > n:
                    break
                new[d + i * a] += c * f
        series = new
    return series


def structure_counts(spec: StructureSpec) -> list[int]:
    """Return ``[k_0, k_1, ..., k_n]`` for the family of ``spec``."""
    n = spec.n
    if spec.kind == "assembly":
        k = [1] + [0] * n
        for j in range(1, n + 1):
            k[j] = sum(math.comb(j - 1, i - 1) * spec.weight(i) * k[j - i] for i in range(1, j + 1))
        return k
    if spec.kind == "multiset":
        return _series_power_product(spec, lambda mi, a: math.comb(mi + a - 1, a) if mi else int(a == 0))
    return _series_power_product(spec, math.comb)


def count_structures(spec: StructureSpec) -> int:
    """Exact size ``k_n`` of the family at size ``n``."""
    return structure_counts(spec)[spec.n]


def column_multiplicity(spec: StructureSpec, a: Sequence[int]) -> int:
    """Number of elements of the family whose component vector is ``a``."""
    a = _check_vector(spec, a)
    if spec.kind == "assembly":
        num = math.factorial(spec.n)
        den = 1
        for i, ai in enumerate(a, start=1):
            num *= spec.weight(i) ** ai
            den *= math.factorial(i) ** ai * math.factorial(ai)
        count, rem = divmod(num, den)
        assert rem == 0, "assembly multiplicity must be integral"
        return count
    out = 1
    for i, ai in enumerate(a, start=1):
        mi = spec.weight(i)
        if spec.kind == "multiset":
            out *= math.comb(mi + ai - 1, ai) if mi else int(ai == 0)
        else:
            out *= math.comb(mi, ai)
    return out


def iter_component_vectors(n: int) -> Iterator[tuple[int, ...]]:
    """All ``(a_1..a_n)`` with ``sum i*a_i = n``, in increasing lexicographic order."""
    a = [0] * n

    def rec(i, remaining):
        if i == n:
            if remaining % n == 0:
                a[n - 1] = remaining // n
                yield tuple(a)
                a[n - 1] = 0
            return
        for ai in range(remaining // i + 1):
            a[i - 1] = ai
            yield from rec(i + 1, remaining - i * ai)
        a[i - 1] = 0

    yield from rec(1, n)


def enumerate_column_labels(spec: StructureSpec) -> list[ColumnLabel]:
    """Every component vector with positive multiplicity, lexicographically."""
    labels = []
    for a in iter_component_vectors(spec.n):
        mult = column_multiplicity(spec, a)
        if mult > 0:
            labels.append(ColumnLabel(a, mult))
    return labels


def component_distribution(spec: StructureSpec) -> dict[ColumnLabel, float]:
    """Law of the component counts of a uniform element."""
    k_n = count_structures(spec)
    if k_n == 0:
        raise EmptySupportError(f"empty support: the {spec.kind} has no elements of size {spec.n}")
    return {label: label.multiplicity / k_n for label in enumerate_column_labels(spec)}
