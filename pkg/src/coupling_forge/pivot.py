"""Pivots and pivot mass.

A (row, column) pair is a pivot when ``sum_i (a_i - z_i)^+ > 1``; such a
cell must carry zero mass in any admissible coupling.  The pivot mass of a
column is the probability that the independent row process lands on one of
its pivots.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import NumericalConsistencyError, ParameterError, SearchExhaustedError
from .processes import ProcessFamily
from .rowclasses import RowClassSet, build_row_classes
from .structures import ColumnLabel, StructureSpec, count_structures, enumerate_column_labels

CLAMP_TOL = 1e-12


def _vector(column) -> tuple[int, ...]:
    return tuple(column.a) if isinstance(column, ColumnLabel) else tuple(column)


def deficit(row: Sequence[int], column) -> int:
    """``sum_i max(a_i - z_i, 0)`` in integer arithmetic."""
    a = _vector(column)
    if len(row) != len(a):
        raise ParameterError(f"row has length {len(row)} but the column label has length {len(a)}")
    return sum(max(int(ai) - int(zi), 0) for ai, zi in zip(a, row))


def is_pivot(row: Sequence[int], column) -> bool:
    return deficit(row, column) > 1


def _clamp(value: float, what: str) -> float:
    if 0.0 <= value <= 1.0:
        return value
    if -CLAMP_TOL <= value < 0.0:
        return 0.0
    if 1.0 < value <= 1.0 + CLAMP_TOL:
        return 1.0
    raise NumericalConsistencyError(f"{what} = {value!r} lies outside [0, 1] beyond rounding noise")


def pivot_mass_inclusion_exclusion(fam: ProcessFamily, column) -> float:
    """Pivot mass by inclusion-exclusion over the coordinate allowed to fall
    one short.

    With ``S_i(k) = P(Z_i >= k)`` and ``J`` the number of nonzero ``C_i``::

        PM = 1 - sum_{j: C_j>0} S_j(C_j - 1) prod_{i!=j} S_i(C_i)
               + (J - 1) prod_i S_i(C_i)

    Loses all relative accuracy once PM drops below about 1e-16; kept as a
    cross-check for :func:`pivot_mass_closed_form`.
    """
    a = _check_column(fam, column)
    full = [fam.sf(i, ai) for i, ai in enumerate(a, start=1)]
    support = [j for j, aj in enumerate(a) if aj > 0]
    terms = []
    for j in support:
        prod = fam.sf(j + 1, a[j] - 1)
        for i, s in enumerate(full):
            if i != j:
                prod *= s
        terms.append(prod)
    prod_all = math.prod(full)
    value = 1.0 - math.fsum(terms) + (len(support) - 1) * prod_all
    return _clamp(value, f"pivot mass of {a}")


def pivot_mass_closed_form(fam: ProcessFamily, column) -> float:
    """Pivot mass of one column from the per-index laws of ``Z_i``.

    Algebraically the inclusion-exclusion formula, rearranged as
    ``P(sum_i D_i >= 2)`` with independent ``D_i = (C_i - Z_i)^+``.  Each
    ``D_i`` contributes ``P(D_i = 0) = S_i(C_i)``, ``P(D_i = 1) = P(Z_i = C_i - 1)``
    and ``P(D_i >= 2) = P(Z_i <= C_i - 2)``; folding them in keeps every term
    nonnegative, so tiny masses keep their relative accuracy.
    """
    a = _check_column(fam, column)
    s0, s1, s2 = 1.0, 0.0, 0.0
    for i, ai in enumerate(a, start=1):
        if ai == 0:
            continue
        d0 = fam.sf(i, ai)
        d1 = fam.pmf(i, ai - 1)
        d2 = fam.cdf(i, ai - 2)
        s0, s1, s2 = s0 * d0, s0 * d1 + s1 * d0, s2 + s1 * (d1 + d2) + s0 * d2
    return _clamp(s2, f"pivot mass of {a}")


def _check_column(fam, column):
    a = _vector(column)
    if len(a) != fam.n:
        raise ParameterError(f"column label has length {len(a)} but the family has n = {fam.n}")
    return a


def pivot_mass_oracle(fam: ProcessFamily, column, classes: RowClassSet | None = None) -> float:
    """Pivot mass as an exact sum of row-class masses."""
    if classes is None:
        classes = build_row_classes(fam)
    mask = classes.pivot_mask(_vector(column))
    return math.fsum(classes.masses[mask].tolist())


def pivot_mass_subset_bound(fam: ProcessFamily, labels: Iterable) -> float:
    """Upper bound ``min_j PM(j)`` on the pivot mass of a set of columns.

    Exactly zero as soon as the set contains the one-component label.
    """
    labels = list(labels)
    if not labels:
        raise ParameterError("label set must be nonempty")
    vectors = [_vector(lab) for lab in labels]
    if any(v[-1] == 1 for v in vectors):
        return 0.0
    return min(pivot_mass_closed_form(fam, v) for v in vectors)


@dataclass
class PivotMassReport:
    x: float
    per_column: dict  # ColumnLabel -> pivot mass
    max_mass: float = field(init=False)

    def __post_init__(self):
        self.max_mass = max(self.per_column.values(), default=0.0)

    def rows(self):
        for label, mass in self.per_column.items():
            yield str(label), label.multiplicity, mass

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "max_mass": self.max_mass,
            "columns": [
                {"label": list(label.a), "multiplicity": label.multiplicity, "pivot_mass": mass}
                for label, mass in self.per_column.items()
            ],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(["label", "multiplicity", "pivot_mass"])
        for label, mult, mass in self.rows():
            writer.writerow([label, mult, repr(mass)])
        return buf.getvalue()


def pivot_mass_report(fam: ProcessFamily) -> PivotMassReport:
    labels = enumerate_column_labels(fam.spec)
    return PivotMassReport(fam.x, {lab: pivot_mass_closed_form(fam, lab) for lab in labels})


def max_pivot_mass(fam: ProcessFamily, labels=None) -> tuple[float, ColumnLabel | None]:
    """Largest pivot mass over the labels other than ``e_n`` and its argmax."""
    if labels is None:
        labels = enumerate_column_labels(fam.spec)
    best, arg = 0.0, None
    for lab in labels:
        if lab.is_unit:
            continue
        mass = pivot_mass_closed_form(fam, lab)
        if arg is None or mass > best:
            best, arg = mass, lab
    return best, arg


def probe_sequence(kind: str, t_max: int = 20) -> list[float]:
    """``2^t`` for assemblies and selections, ``1 - 2^-t`` for multisets."""
    if kind == "multiset":
        return [1.0 - 2.0**-t for t in range(1, t_max + 1)]
    return [2.0**t for t in range(1, t_max + 1)]


@dataclass
class ThresholdResult:
    x: float
    max_mass: float
    target: float
    argmax: ColumnLabel | None
    probes: list  # (x, max pivot mass) in probe order

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "max_mass": self.max_mass,
            "target": self.target,
            "argmax": list(self.argmax.a) if self.argmax is not None else None,
            "probes": [[x, m] for x, m in self.probes],
        }


X_MAX = 1e6
U_MIN = 1e-9
REL_PRECISION = 1e-3


def find_threshold_x(spec: StructureSpec, target: float | None = None) -> ThresholdResult:
    """Find ``x`` at which every pivot mass is below ``target`` (default ``1/k_n``).

    Probes are evaluated, never extrapolated: the returned point itself
    satisfies the bound even if pivot mass is not monotone in ``x``.
    """
    if target is None:
        target = 1.0 / count_structures(spec)
    if not 0 < target <= 1:
        raise ParameterError(f"target must lie in (0, 1], got {target}")
    labels = enumerate_column_labels(spec)
    probes = []

    def evaluate(x):
        mass, arg = max_pivot_mass(ProcessFamily(spec, x), labels)
        probes.append((x, mass))
        return mass, arg

    def done(x, mass, arg):
        return ThresholdResult(x, mass, target, arg, probes)

    if spec.kind == "multiset":
        # search over u = 1 - x so that precision is relative to the gap from 1
        u_fail = None
        u = 0.5
        while True:
            mass, arg = evaluate(1.0 - u)
            if mass < target:
                break
            u_fail = u
            u /= 2.0
            if u < U_MIN:
                best = min(probes, key=lambda p: p[1])
                raise SearchExhaustedError(
                    f"no x with max pivot mass < {target} found before 1 - x < {U_MIN}", *best
                )
        if u_fail is None:
            return done(1.0 - u, mass, arg)
        u_ok, ok_mass, ok_arg = u, mass, arg
        while u_fail - u_ok > REL_PRECISION * u_ok:
            mid = 0.5 * (u_fail + u_ok)
            m, a = evaluate(1.0 - mid)
            if m < target:
                u_ok, ok_mass, ok_arg = mid, m, a
            else:
                u_fail = mid
        return done(1.0 - u_ok, ok_mass, ok_arg)

    x = 1.0
    x_fail = None
    while True:
        mass, arg = evaluate(x)
        if mass < target:
            break
        x_fail = x
        x *= 2.0
        if x > X_MAX:
            best = min(probes, key=lambda p: p[1])
            raise SearchExhaustedError(
                f"no x <= {X_MAX:g} with max pivot mass < {target} found", *best
            )
    if x_fail is None:
        return done(x, mass, arg)
    x_ok, ok_mass, ok_arg = x, mass, arg
    while x_ok - x_fail > REL_PRECISION * x_ok:
        mid = 0.5 * (x_fail + x_ok)
        m, a = evaluate(mid)
        if m < target:
            x_ok, ok_mass, ok_arg = mid, m, a
        else:
            x_fail = mid
    return done(x_ok, ok_mass, ok_arg)
