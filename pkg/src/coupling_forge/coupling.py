"""Explicit couplings of the independent row process and a uniform structure.

The coupling must put zero mass on every pivot cell.  Feasibility is a
transportation problem: row classes supply their mass, column labels demand
``multiplicity / k_n``, and a class may ship to a label only if the cell is
not a pivot.  A max-flow of value one yields the coupling; otherwise the
minimum cut names a set of labels whose demand exceeds the mass of every row
allowed to serve it.

Rows with the same set of allowed labels are interchangeable, so the flow is
solved on those groups and split back to classes in proportion to mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CouplingViolationError,
    FlowSolverError,
    ParameterError,
    UnverifiedTableError,
)
from .flow import FlowNetwork
from .pivot import max_pivot_mass
from .processes import ProcessFamily
from .rowclasses import DEFAULT_CLASS_LIMIT, RowClassSet, build_row_classes
from .structures import ColumnLabel, StructureSpec, count_structures, enumerate_column_labels

FEASIBLE_TOL = 1e-9
TAIL_CUTOFF = 1e-15
MAX_TAIL_STEPS = 10**6

__all__ = [
    "CouplingTable",
    "CutCertificate",
    "CouplingReport",
    "StrassenCheck",
    "build_row_classes",
    "construct_coupling",
    "verify_coupling",
    "sample_coupled_pair",
    "sample_coupled_pairs",
    "strassen_check",
]


@dataclass
class CouplingTable:
    """Sparse joint mass over (row class, column label).

    ``rows`` holds one capped class vector per entry, ``cols`` the label
    index into ``labels``, ``mass`` the entry mass.  Entries are ordered by
    label, then by class.
    """

    spec: StructureSpec
    x: float
    labels: list
    rows: np.ndarray
    cols: np.ndarray
    mass: np.ndarray
    flow_value: float = 1.0
    verified: bool = field(default=False, compare=False)

    @property
    def n(self) -> int:
        return self.spec.n

    def __len__(self):
        return len(self.mass)

    def entries(self):
        """Yield ``(class vector, ColumnLabel, mass)`` triples."""
        for v, c, m in zip(self.rows, self.cols, self.mass):
            yield tuple(int(t) for t in v), self.labels[c], float(m)

    def total_mass(self) -> float:
        return math.fsum(self.mass.tolist())


@dataclass
class CutCertificate:
    """A label set ``L`` whose demand ``nu_L`` exceeds the mass
    ``mu_reachable`` of all rows with at least one non-pivot cell in ``L``."""

    spec: StructureSpec
    x: float
    labels: list
    nu_L: float
    mu_reachable: float
    flow_value: float

    @property
    def gap(self) -> float:
        return self.nu_L - self.mu_reachable


def _group_classes(allowed: np.ndarray, masses: np.ndarray):
    """Merge classes that share an allowed-label pattern.

    Returns the group index of each positive-mass class (-1 for zero mass),
    the group patterns and the group masses.
    """
    positive = masses > 0
    packed = np.packbits(allowed[positive], axis=1)
    patterns, inverse = np.unique(packed, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    group_of = np.full(len(masses), -1, dtype=np.int64)
    group_of[positive] = inverse
    group_mass = np.bincount(inverse, weights=masses[positive], minlength=len(patterns))
    group_allowed = np.unpackbits(patterns, axis=1, count=allowed.shape[1]).astype(bool)
    return group_of, group_allowed, group_mass


def _allowed_matrix(classes: RowClassSet, labels) -> np.ndarray:
    allowed = np.empty((len(classes), len(labels)), dtype=bool)
    for c, lab in enumerate(labels):
        allowed[:, c] = ~classes.pivot_mask(lab.a)
    return allowed


def construct_coupling(
    fam: ProcessFamily,
    classes: RowClassSet | None = None,
    limit: int = DEFAULT_CLASS_LIMIT,
) -> CouplingTable | CutCertificate:
    """Solve the no-pivot transportation problem for ``fam``.

    Returns a :class:`CouplingTable` when the max flow reaches
    ``1 - 1e-9`` and a :class:`CutCertificate` otherwise.
    """
    spec = fam.spec
    labels = enumerate_column_labels(spec)
    k_n = count_structures(spec)
    demand = np.array([lab.multiplicity / k_n for lab in labels])
    if classes is None:
        classes = build_row_classes(fam, limit)
    allowed = _allowed_matrix(classes, labels)
    group_of, group_allowed, group_mass = _group_classes(allowed, classes.masses)

    n_groups, n_labels = group_allowed.shape
    source, sink = 0, 1 + n_groups + n_labels
    net = FlowNetwork(sink + 1)
    for g in range(n_groups):
        net.add_edge(source, 1 + g, group_mass[g])
    arcs = {}
    for g, c in zip(*np.nonzero(group_allowed)):
        arcs[g, c] = net.add_edge(1 + g, 1 + n_groups + c)
    for c in range(n_labels):
        net.add_edge(1 + n_groups + c, sink, demand[c])
    value = net.max_flow(source, sink)
    if value > 1.0 + 1e-12:
        raise FlowSolverError(f"max-flow value {value!r} exceeds total mass 1")

    if value < 1.0 - FEASIBLE_TOL:
        reach = net.residual_reachable(source)
        cut = [c for c in range(n_labels) if 1 + n_groups + c not in reach]
        nu = math.fsum(demand[cut].tolist())
        served = allowed[:, cut].any(axis=1)
        mu = math.fsum(classes.masses[served].tolist())
        if not nu - mu > FEASIBLE_TOL:
            raise FlowSolverError(
                f"flow value {value!r} < 1 but the cut has no Strassen violation "
                f"(nu={nu!r}, mu={mu!r})"
            )
        return CutCertificate(spec, fam.x, [labels[c] for c in cut], nu, mu, value)

    group_flow = np.zeros((n_groups, n_labels))
    for (g, c), eid in arcs.items():
        group_flow[g, c] = net.flow(eid)

    members = np.nonzero(group_of >= 0)[0]
    share = classes.masses[members] / group_mass[group_of[members]]
    flows = group_flow[group_of[members]] * share[:, None]  # (members, labels)

    # top up columns left short by rounding or eps-saturated edges
    inflow = flows.sum(axis=0)
    for c in range(n_labels):
        if inflow[c] >= demand[c]:
            continue
        if inflow[c] > 0:
            flows[:, c] *= demand[c] / inflow[c]
        else:
            ok = allowed[members, c]
            flows[ok, c] = demand[c] * classes.masses[members[ok]] / classes.masses[members[ok]].sum()

    r_idx, c_idx = np.nonzero(flows.T > 0)  # label-major ordering
    return CouplingTable(
        spec=spec,
        x=fam.x,
        labels=labels,
        rows=classes.vectors[members[c_idx]].astype(np.int64),
        cols=r_idx.astype(np.int64),
        mass=flows[c_idx, r_idx],
        flow_value=value,
    )


@dataclass
class CouplingReport:
    passed: bool
    tol: float
    pivot_violations: list  # (class vector, label vector, mass)
    max_row_residual: float
    max_col_residual: float
    total_mass_residual: float
    negative_entries: int
    problems: list

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "tol": self.tol,
            "max_row_residual": self.max_row_residual,
            "max_col_residual": self.max_col_residual,
            "total_mass_residual": self.total_mass_residual,
            "negative_entries": self.negative_entries,
            "pivot_violations": [
                {"row": list(v), "label": list(a), "mass": m} for v, a, m in self.pivot_violations
            ],
            "problems": list(self.problems),
        }


def verify_coupling(
    table: CouplingTable,
    fam: ProcessFamily,
    tol: float = 1e-8,
    classes: RowClassSet | None = None,
) -> CouplingReport:
    """Check zero-on-pivot, both marginals and total mass of ``table``.

    Violations are reported, not raised.  A passing table is marked verified.
    """
    problems = []
    if table.spec != fam.spec:
        problems.append("table was built for a different structure")
    if not math.isclose(table.x, fam.x, rel_tol=1e-15, abs_tol=0.0):
        problems.append(f"table was built at x={table.x}, not x={fam.x}")
    labels = enumerate_column_labels(fam.spec)
    if [lab.a for lab in table.labels] != [lab.a for lab in labels]:
        problems.append("table labels differ from the structure's column labels")
        labels = table.labels
    if classes is None:
        classes = build_row_classes(fam)
    k_n = count_structures(fam.spec)

    rows = np.asarray(table.rows, dtype=np.int64)
    cols = np.asarray(table.cols, dtype=np.int64)
    mass = np.asarray(table.mass, dtype=float)
    negative = int(np.sum(mass < 0))
    if negative:
        problems.append(f"{negative} entries carry negative mass")

    violations = []
    if len(mass):
        if np.any(rows < 0) or np.any(rows > classes.caps):
            problems.append("entry row vectors fall outside the class caps")
            rows = np.clip(rows, 0, classes.caps)
        label_vecs = np.array([lab.a for lab in labels], dtype=np.int64)
        deficits = np.maximum(label_vecs[cols] - rows, 0).sum(axis=1)
        for k in np.nonzero((deficits > 1) & (mass != 0))[0]:
            violations.append((tuple(int(t) for t in rows[k]), labels[cols[k]].a, float(mass[k])))
        if violations:
            v, a, m = violations[0]
            problems.append(f"{len(violations)} pivot cells carry mass, e.g. row {v} x label {a}: {m:.3g}")
        class_idx = np.ravel_multi_index(tuple(rows.T), tuple(classes.caps + 1))
    else:
        class_idx = np.zeros(0, dtype=np.int64)

    row_sums = np.bincount(class_idx, weights=mass, minlength=len(classes))
    col_sums = np.bincount(cols, weights=mass, minlength=len(labels))
    demand = np.array([lab.multiplicity / k_n for lab in labels])
    row_res = float(np.max(np.abs(row_sums - classes.masses))) if len(classes) else 0.0
    col_res = float(np.max(np.abs(col_sums[: len(demand)] - demand)))
    total_res = abs(math.fsum(mass.tolist()) - 1.0)
    if row_res > tol:
        problems.append(f"row sums miss class masses by up to {row_res:.3g}")
    if col_res > tol:
        problems.append(f"column sums miss multiplicity/k_n by up to {col_res:.3g}")
    if total_res > tol:
        problems.append(f"total mass is off by {total_res:.3g}")

    passed = not problems
    table.verified = passed
    return CouplingReport(passed, tol, violations, row_res, col_res, total_res, negative, problems)


class _TailSampler:
    """Draws ``Z_i`` conditioned on ``Z_i >= cap``."""

    def __init__(self, fam: ProcessFamily, i: int, cap: int):
        self.fam, self.i, self.cap = fam, i, cap
        self.tail = fam.sf(i, cap)
        if self.tail <= 0:
            raise ParameterError(f"Z_{i} >= {cap} has probability zero")
        self.table = None
        if self.tail < 0.5:
            # most of the tail sits just above cap: tabulate it
            top = fam.support_max(i)
            probs, acc = [], 0.0
            k = cap
            while k <= top and len(probs) < MAX_TAIL_STEPS:
                p = fam.pmf(i, k) / self.tail
                probs.append(p)
                acc += p
                if 1.0 - acc < TAIL_CUTOFF:
                    break
                k += 1
            self.table = np.cumsum(probs)

    def draw(self, size: int, rng: np.random.Generator) -> np.ndarray:
        if self.table is not None:
            u = rng.random(size) * self.table[-1]
            idx = np.searchsorted(self.table, u, side="right")
            return self.cap + np.minimum(idx, len(self.table) - 1)
        out = np.empty(size, dtype=np.int64)
        todo = np.arange(size)
        while len(todo):
            z = np.asarray(self.fam.sample(self.i, rng, size=len(todo)))
            ok = z >= self.cap
            out[todo[ok]] = z[ok]
            todo = todo[~ok]
        return out


def sample_coupled_pairs(
    table: CouplingTable,
    fam: ProcessFamily,
    size: int,
    rng_seed=None,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``size`` pairs; returns rows ``(size, n)`` and label indices.

    Each pair is checked to satisfy ``sum_i (a_i - z_i)^+ <= 1``.
    """
    if not table.verified:
        raise UnverifiedTableError("coupling table must pass verify_coupling before sampling")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    weights = np.asarray(table.mass, dtype=float)
    pick = rng.choice(len(weights), size=size, p=weights / weights.sum())
    z = np.asarray(table.rows, dtype=np.int64)[pick].copy()
    cols = np.asarray(table.cols)[pick]
    caps = [fam.n // i for i in range(1, fam.n + 1)]
    for i, cap in enumerate(caps, start=1):
        at_cap = np.nonzero(z[:, i - 1] == cap)[0]
        if len(at_cap):
            z[at_cap, i - 1] = _TailSampler(fam, i, cap).draw(len(at_cap), rng)
    label_vecs = np.array([lab.a for lab in table.labels], dtype=np.int64)
    deficits = np.maximum(label_vecs[cols] - z, 0).sum(axis=1)
    bad = np.nonzero(deficits > 1)[0]
    if len(bad):
        k = bad[0]
        raise CouplingViolationError(
            f"{len(bad)} sampled pairs violate the coupling constraint, "
            f"e.g. row {tuple(z[k])} with label {table.labels[cols[k]].a}"
        )
    return z, cols


def sample_coupled_pair(table: CouplingTable, fam: ProcessFamily, rng_seed=None):
    """One coupled draw ``(z, label)``."""
    z, cols = sample_coupled_pairs(table, fam, 1, rng_seed)
    return tuple(int(t) for t in z[0]), table.labels[cols[0]]


@dataclass
class StrassenCheck:
    holds: bool
    max_mass: float
    argmax: ColumnLabel | None
    bound: float

    def __bool__(self):
        return self.holds


def strassen_check(fam: ProcessFamily) -> StrassenCheck:
    """Sufficient condition for couplability: every label other than ``e_n``
    has pivot mass below ``1/k_n``.  A negative answer is inconclusive."""
    bound = 1.0 / count_structures(fam.spec)
    mass, arg = max_pivot_mass(fam)
    return StrassenCheck(mass < bound, mass, arg, bound)
