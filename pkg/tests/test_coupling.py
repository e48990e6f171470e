import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow

from coupling_forge import (
    CouplingTable,
    CutCertificate,
    ProcessFamily,
    StructureSpec,
    build_row_classes,
    construct_coupling,
    count_structures,
    enumerate_column_labels,
    is_pivot,
    sample_coupled_pair,
    sample_coupled_pairs,
    strassen_check,
    verify_coupling,
)
from coupling_forge.errors import CouplingViolationError, SizeLimitError, UnverifiedTableError
from coupling_forge.flow import FlowNetwork


def fam(preset, n, x):
    return ProcessFamily(StructureSpec.from_preset(preset, n), x)


@pytest.fixture(scope="module")
def s3_table():
    f = fam("permutations", 3, 4.0)
    table = construct_coupling(f)
    assert isinstance(table, CouplingTable)
    assert verify_coupling(table, f).passed
    return f, table


def test_s3_table_is_feasible(s3_table):
    f, table = s3_table
    report = verify_coupling(table, f, tol=1e-8)
    assert report.passed
    assert report.pivot_violations == []
    assert report.max_row_residual <= 1e-12
    assert report.max_col_residual <= 1e-12
    assert table.flow_value <= 1 + 1e-12
    assert table.total_mass() == pytest.approx(1.0, abs=1e-12)
    for v, lab, m in table.entries():
        assert m >= 0
        assert not is_pivot(v, lab)


def test_entries_are_label_major(s3_table):
    _, table = s3_table
    keys = [(lab.a, v) for v, lab, _ in table.entries()]
    assert keys == sorted(keys)


def test_trivial_n1_table():
    for preset, x in [("permutations", 0.5), ("integer_partitions", 0.5), ("distinct_partitions", 2.0)]:
        f = fam(preset, 1, x)
        table = construct_coupling(f)
        assert isinstance(table, CouplingTable)
        assert [lab.a for lab in table.labels] == [(1,)]
        assert verify_coupling(table, f).passed
        assert set(table.cols.tolist()) == {0}


def test_infeasible_s3_gives_cut():
    f = fam("permutations", 3, 0.01)
    cut = construct_coupling(f)
    assert isinstance(cut, CutCertificate)
    assert (3, 0, 0) in {lab.a for lab in cut.labels}
    assert cut.gap > 0.5
    assert cut.flow_value < 1 - 1e-9


def recompute_cut(cut, f):
    """Independent recomputation of nu(L) and the mass of rows that can serve L."""
    k_n = count_structures(f.spec)
    nu = math.fsum(lab.multiplicity / k_n for lab in cut.labels)
    classes = build_row_classes(f)
    served = [
        float(classes.masses[k])
        for k in range(len(classes))
        if any(not is_pivot(tuple(classes.vectors[k]), lab) for lab in cut.labels)
    ]
    return nu, math.fsum(served)


@pytest.mark.parametrize("preset,x", [
    ("permutations", 0.01), ("permutations", 0.5), ("set_partitions", 0.3),
    ("integer_partitions", 0.2), ("distinct_partitions", 0.3),
])
def test_cut_certificates_are_valid(preset, x):
    f = fam(preset, 4, x)
    cut = construct_coupling(f)
    assert isinstance(cut, CutCertificate)
    nu, mu = recompute_cut(cut, f)
    assert nu == pytest.approx(cut.nu_L, abs=1e-12)
    assert mu == pytest.approx(cut.mu_reachable, abs=1e-12)
    assert nu - mu > 1e-9
    # weak duality: no flow can exceed 1 - gap
    assert cut.flow_value <= 1 - (nu - mu) + 1e-12


def test_fault_injection_pivot_mass(s3_table):
    f, table = s3_table
    classes = build_row_classes(f)
    labels = table.labels
    pivot_row = (0, 0, 0)
    c = next(k for k, lab in enumerate(labels) if lab.a == (1, 1, 0))
    donor = int(np.argmax(table.mass))
    rows = np.vstack([table.rows, pivot_row])
    cols = np.append(table.cols, c)
    mass = np.append(table.mass, 1e-6)
    mass[donor] -= 1e-6
    bad = CouplingTable(table.spec, table.x, labels, rows, cols, mass, table.flow_value)
    report = verify_coupling(bad, f, classes=classes)
    assert not report.passed
    assert len(report.pivot_violations) == 1
    assert report.pivot_violations[0][:2] == (pivot_row, (1, 1, 0))
    assert not bad.verified


def test_fault_injection_scaled_table(s3_table):
    f, table = s3_table
    bad = replace(table, mass=table.mass * 0.5, verified=False)
    report = verify_coupling(bad, f)
    assert not report.passed
    assert report.total_mass_residual == pytest.approx(0.5, abs=1e-12)
    assert report.max_col_residual > 0.01
    with pytest.raises(UnverifiedTableError):
        sample_coupled_pairs(bad, f, 10, 1)


def test_verify_rejects_other_family(s3_table):
    _, table = s3_table
    copy = replace(table, verified=False)
    assert not verify_coupling(copy, fam("permutations", 3, 5.0)).passed


def test_sampling_s3(s3_table):
    f, table = s3_table
    size = 100_000
    z, cols = sample_coupled_pairs(table, f, size, 7)
    vecs = np.array([lab.a for lab in table.labels])
    assert np.all(np.maximum(vecs[cols] - z, 0).sum(axis=1) <= 1)
    k_n = count_structures(f.spec)
    freq = np.bincount(cols, minlength=len(table.labels)) / size
    for c, lab in enumerate(table.labels):
        p = lab.multiplicity / k_n
        assert abs(freq[c] - p) <= 4 * math.sqrt(p * (1 - p) / size)
    # each coordinate of the row must follow its own law
    for i in range(1, 4):
        for k in range(4):
            p = f.pmf(i, k)
            observed = float(np.mean(z[:, i - 1] == k))
            assert abs(observed - p) <= 4 * math.sqrt(p * (1 - p) / size) + 1e-12


def test_sampling_is_reproducible(s3_table):
    f, table = s3_table
    a = sample_coupled_pairs(table, f, 500, 11)
    b = sample_coupled_pairs(table, f, 500, 11)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    z, lab = sample_coupled_pair(table, f, 3)
    assert len(z) == 3 and lab in table.labels


def test_sampler_tail_expansion():
    # heavy tails: at x = 20 nearly every class coordinate sits at its cap
    f = fam("set_partitions", 4, 20.0)
    table = construct_coupling(f)
    assert verify_coupling(table, f).passed
    z, _ = sample_coupled_pairs(table, f, 50_000, 5)
    lam = f.rate(1)
    assert abs(z[:, 0].mean() - lam) <= 4 * math.sqrt(lam / 50_000)


def test_sampler_rejects_corrupted_rows(s3_table):
    f, table = s3_table
    # a class vector that is a pivot for its label, smuggled past verification
    bad = replace(table, rows=np.zeros_like(table.rows), verified=True)
    with pytest.raises(CouplingViolationError):
        sample_coupled_pairs(bad, f, 1000, 2)


def test_size_guard():
    with pytest.raises(SizeLimitError):
        construct_coupling(fam("permutations", 12, 30.0), limit=10_000)


def test_strassen_check_examples():
    hi = strassen_check(fam("permutations", 3, 6.0))
    assert hi.holds
    assert hi.max_mass == pytest.approx(7 * math.exp(-6), rel=1e-13)
    assert hi.max_mass == pytest.approx(0.01735, abs=1e-5)
    lo = strassen_check(fam("permutations", 3, 1.0))
    assert not lo.holds
    assert lo.max_mass == pytest.approx(0.7358, abs=1e-4)
    assert strassen_check(fam("set_partitions", 1, 0.3)).holds


@pytest.mark.parametrize("preset", ["permutations", "set_partitions", "integer_partitions", "distinct_partitions"])
def test_sufficient_condition_implies_coupling(preset):
    spec = StructureSpec.from_preset(preset, 5)
    xs = [0.5, 0.8, 0.9, 0.95, 0.99] if spec.kind == "multiset" else [0.5, 1.0, 2.0, 4.0, 8.0, 16.0]
    for x in xs:
        f = ProcessFamily(spec, x)
        result = construct_coupling(f)
        if strassen_check(f):
            assert isinstance(result, CouplingTable)
        if isinstance(result, CutCertificate):
            assert not strassen_check(f)


def test_flow_network_against_scipy():
    rng = np.random.default_rng(0)
    for _ in range(25):
        n = 9
        cap = rng.integers(0, 12, size=(n, n)) * (rng.random((n, n)) < 0.4)
        np.fill_diagonal(cap, 0)
        net = FlowNetwork(n)
        for u, v in zip(*np.nonzero(cap)):
            net.add_edge(int(u), int(v), float(cap[u, v]))
        ours = net.max_flow(0, n - 1)
        ref = maximum_flow(csr_matrix(cap.astype(np.int32)), 0, n - 1).flow_value
        assert ours == pytest.approx(ref, abs=1e-12)
        reach = net.residual_reachable(0)
        assert n - 1 not in reach
        cut = sum(cap[u, v] for u in reach for v in range(n) if v not in reach)
        assert cut == pytest.approx(ours, abs=1e-12)
