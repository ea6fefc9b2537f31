"""Acceptance suite: one test function per criterion (see the summary lines
printed at the end of the run)."""

from fractions import Fraction
import itertools

import numpy as np
import pytest

from affine_killing import expr as ex
from affine_killing.catalog import cases, default_catalog, instantiate, verify_catalog
from affine_killing.connection import (
    curvature_at, linear_change, perturb, random_spec, shear, symmetrize, torsion,
)
from affine_killing.killing import (
    D2, VectorField, field_rank, in_span, is_killing, killing_basis, killing_dimension,
)
from affine_killing.liealg import (
    classify, derived_action, discriminant, random_rational_matrix, standard_tables, structure_constants,
)

F = Fraction
V = VectorField.parse
criterion = pytest.mark.criterion
CAT = default_catalog()


@pytest.fixture(scope="module")
def reports():
    return {r.entry_id: r for r in verify_catalog()}


def _kind_reports(reports, prefix):
    return {k: r for k, r in reports.items() if k.startswith(prefix)}


@criterion(1, "torsion decomposition round trip on 100 random specs")
def test_round_trip():
    rng = np.random.default_rng(1001)
    for n in range(100):
        s = random_spec(rng, ("A", "B", "mixed")[n % 3])
        assert perturb(symmetrize(s), torsion(s)) == s


@criterion(2, "Killing fields with torsion are Killing for the symmetrized connection")
def test_inclusion(reports):
    bad = [(c.entry_id, c.branch, c.torsion) for r in reports.values() for c in r.cases if not c.inclusion_ok]
    assert not bad
    # the check itself: 20 seeded points, tol 1e-9
    pts = ex.sample_points(20)
    for entry in CAT:
        for case in cases(entry):
            if case.branch is None:
                continue
            s = entry.spec(case.params, case.torsion)
            sym = symmetrize(s)
            for X in killing_basis(s, params=case.params, check_dimension=False):
                assert is_killing(sym, X, points=pts, tol=1e-9), (entry.id, case.torsion, X)


def _check_table(reports, generic_tag):
    assert reports
    for entry_id, rep in reports.items():
        entry = CAT[entry_id]
        for n, br in enumerate(entry.branches):
            on = [c for c in rep.cases if c.branch == n]
            assert on, (entry_id, n)
            for c in on:
                assert c.dimension == len(br.basis), (entry_id, n, c.torsion)
                assert c.dim_ok and c.basis_ok and c.torsion_ok, (entry_id, n, c.torsion, c.errors)
                assert c.tag == br.tag, (entry_id, n, c.tag)
        off = [c for c in rep.cases if c.branch is None]
        if entry.off_branch:
            assert off, entry_id
        for c in off:
            assert c.dimension == 2 and c.tag == generic_tag, (entry_id, c.torsion, c.tag)
            assert c.ok, (entry_id, c.torsion, c.errors)


@criterion(3, "translation-invariant families: dimension, basis, tag, off-branch degeneration")
def test_type_a_table(reports):
    ra = _kind_reports(reports, "A.")
    assert len(ra) == 11
    _check_table(ra, "K_A")


@criterion(4, "ax+b-invariant families: dimension, basis, tag, off-branch degeneration")
def test_type_b_table(reports):
    rb = _kind_reports(reports, "B.")
    assert len(rb) == 14
    _check_table(rb, "K_B")


@criterion(5, "worked examples: constant torsion and 1/x1 torsion")
def test_examples():
    for t1 in (1, -2):
        assert killing_dimension(instantiate("X.IIA", {}, (t1, 0)).spec) == 4
    for t in [(0, 1), (3, -1), (1, 1)]:
        assert killing_dimension(instantiate("X.IIA", {}, t).spec) == 2

    for t2 in (1, 3):
        s = instantiate("X.IIB", {}, (0, t2)).spec
        assert s.kind == "mixed"
        assert killing_dimension(s) == 3
        got = killing_basis(s)
        want = [D2, V(["0", "x2"]), V(["0", "exp(-x1)"])]
        assert len(got) == 3 and field_rank(want) == 3
        assert all(in_span(X, got) for X in want) and all(in_span(X, want) for X in got)
    for t1 in (1, -2):
        s = instantiate("X.IIB", {}, (t1, 0)).spec
        assert killing_dimension(s) == 1
        got = killing_basis(s)
        assert len(got) == 1 and in_span(D2, got) and in_span(got[0], [D2])


def _points(rng, n=10):
    return [(F(int(rng.integers(1, 40)), int(rng.integers(1, 9))), F(int(rng.integers(-30, 31)), int(rng.integers(1, 9))))
            for _ in range(n)]


@criterion(6, "flat six-dimensional models and curved hyperbolic planes")
def test_flatness():
    rng = np.random.default_rng(606)
    pts = _points(rng)
    flat = [("A.M6.0", {})]
    for i in range(7):
        entry = CAT[f"B.N6.{i}"]
        for params in entry.param_samples:
            flat.append((entry.id, params))
    assert len({e for e, _ in flat}) == 8
    for entry_id, params in flat:
        s = instantiate(entry_id, params, (0, 0)).spec
        for p in pts:
            r = curvature_at(s, p)
            assert not any(r[l, k, i, j] for l, k, i, j in itertools.product((0, 1), repeat=4)), (entry_id, params, p)
    for entry_id in ("B.N3.3", "B.N3.4"):
        s = instantiate(entry_id, {}, (0, 0)).spec
        for p in pts:
            assert np.any(curvature_at(s, p) != 0), (entry_id, p)


@criterion(7, "classifier tables, basis-change invariance, shift invariance of the discriminant")
def test_classifier():
    tables = standard_tables()
    six = ["so21", "so3", "KBplusKB", "A49zero", "A412", "A6"]
    rng = np.random.default_rng(707)
    for name in six:
        L = tables[name]
        assert classify(L).tag == name
        for _ in range(10):
            M = L.change_of_basis(random_rational_matrix(rng, L.dim))
            assert classify(M).tag == name
    want = {"A49zero": 0, "A412": -1, "KBplusKB": 1}
    for name, sign in want.items():
        t = classify(tables[name])
        assert (t.delta > 0) - (t.delta < 0) == sign
        _, mats = derived_action(tables[name])
        z = next(m for m in mats if m[0][1] or m[1][0] or m[0][0] != m[1][1])
        for _ in range(10):
            c = F(int(rng.integers(-20, 21)), int(rng.integers(1, 7)))
            assert discriminant([[z[0][0] + c, z[0][1]], [z[1][0], z[1][1] + c]]) == discriminant(z)


@criterion(8, "exact prolongation agrees with the dictionary solver on every catalog entry")
def test_solvers_agree(reports):
    assert len(reports) == len(CAT)
    bad = [(c.entry_id, c.branch, c.torsion, c.dimension, c.computed_basis_size)
           for r in reports.values() for c in r.cases if not c.solvers_agree]
    assert not bad


def _random_with_torsion(rng, kind):
    while True:
        s = random_spec(rng, kind)
        if not torsion(s).is_zero():
            return s


@criterion(9, "generic random specs with torsion have the two-dimensional algebra")
@pytest.mark.parametrize("kind,tag", [("A", "K_A"), ("B", "K_B")])
def test_genericity(kind, tag):
    rng = np.random.default_rng(909 if kind == "A" else 919)
    failures = []
    for _ in range(50):
        s = _random_with_torsion(rng, kind)
        dim = killing_dimension(s)
        basis = killing_basis(s)
        got = classify(structure_constants(basis)).tag
        if dim != 2 or got != tag:
            failures.append((s, dim, got))
    assert failures == []


TYPE_A_SAMPLES = [("A.M6.0", {}, (1, 0)), ("A.M6.2", {}, (0, 0)), ("A.M4.2", {"c": 2}, (1, 0)),
                  ("A.M4.5", {"c": F(1, 2)}, (0, 1)), ("A.M6.3", {}, (0, -3))]
TYPE_B_SAMPLES = [("B.N6.2", {"c": F(-1, 2)}, (1, 0)), ("B.N4.2", {"kappa": 1, "theta": 2}, (0, 1)),
                  ("B.N3.3", {}, (0, 0)), ("B.N6.5", {}, (0, 2)), ("B.N4.3", {"c": 3}, (1, 1))]


@criterion(10, "dimension is invariant under linear changes (constant) and shears (1/x1)")
def test_structure_group():
    rng = np.random.default_rng(1010)
    for entry_id, params, t in TYPE_A_SAMPLES:
        s = instantiate(entry_id, params, t).spec
        d = killing_dimension(s)
        for _ in range(10):
            p = random_rational_matrix(rng, 2)
            assert killing_dimension(linear_change(s, p)) == d, (entry_id, p)
    for entry_id, params, t in TYPE_B_SAMPLES:
        s = instantiate(entry_id, params, t).spec
        d = killing_dimension(s)
        for _ in range(10):
            a = F(int(rng.integers(1, 8)), int(rng.integers(1, 5))) * (1 if rng.random() < 0.5 else -1)
            b = F(int(rng.integers(-8, 9)), int(rng.integers(1, 5)))
            assert killing_dimension(shear(s, a, b)) == d, (entry_id, a, b)
