from fractions import Fraction
import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from affine_killing.catalog import instantiate
from affine_killing.connection import (
    ChristoffelSpec, KEYS, TorsionVector, christoffel_at, curvature_at, linear_change,
    perturb, random_spec, shear, symmetrize, torsion,
)
from affine_killing.errors import DomainError, NotTorsionFree, ParseError

F = Fraction
rationals = st.fractions(min_value=-20, max_value=20, max_denominator=12)
pairs = st.tuples(rationals, rationals)
specs = st.lists(pairs, min_size=8, max_size=8).map(lambda xs: ChristoffelSpec(tuple(xs)))


def m0(t1, t2):
    return ChristoffelSpec.type_a(0, 0, t1, t2, -t1, -t2, 0, 0)


def test_torsion_of_translation_family():
    t = torsion(m0(F(3), F(-1, 2)))
    assert t.T1 == (3, 0) and t.T2 == (F(-1, 2), 0)


def test_torsion_free_when_symmetric():
    s = ChristoffelSpec.type_a(1, 2, 3, 4, 3, 4, 5, 6)
    assert torsion(s).is_zero()


def mixed_example(t2):
    # 1/x1 torsion in the second component on top of a constant model
    return ChristoffelSpec.from_mapping({
        (0, 0, 0): (1, 0),
        (0, 1, 1): (1, t2),
        (1, 0, 1): (1, -t2),
    })


def test_inverse_x1_torsion():
    s = mixed_example(F(3))
    t = torsion(s)
    assert t.T1 == (0, 0) and t.T2 == (0, 3)
    assert s.kind == "mixed"
    assert symmetrize(s) == ChristoffelSpec.from_mapping({(0, 0, 0): (1, 0), (0, 1, 1): (1, 0), (1, 0, 1): (1, 0)})
    assert perturb(symmetrize(s), TorsionVector.inverse_x1(0, 3)) == s


def test_symmetrize_examples():
    s = ChristoffelSpec.type_a(1, 2, 3, 4, 3, 4, 5, 6)
    assert symmetrize(s) == s
    assert symmetrize(m0(F(1), F(2))) == ChristoffelSpec.zero()


def test_perturb_examples():
    s0 = ChristoffelSpec.type_b(1, 0, 0, 2, 0, 2, 0, 0)
    assert perturb(s0, TorsionVector.constant(0, 0)) == s0
    assert perturb(ChristoffelSpec.zero(), TorsionVector.constant(5, -7)) == m0(F(5), F(-7))
    with pytest.raises(NotTorsionFree):
        perturb(m0(F(1), F(0)), TorsionVector.constant(0, 0))


@settings(max_examples=100, deadline=None)
@given(specs)
def test_decomposition_round_trip(s):
    assert perturb(symmetrize(s), torsion(s)) == s
    assert torsion(symmetrize(s)).is_zero()
    diag = [k for k in KEYS if k[0] == k[1]]
    for key in diag:
        idx = tuple(int(c) - 1 for c in key)
        assert symmetrize(s)[idx] == s[idx]


@settings(max_examples=50, deadline=None)
@given(specs, specs, rationals)
def test_torsion_linear(s, u, a):
    lhs = torsion(s + u.scale(a))
    ts, tu = torsion(s), torsion(u)
    for k in (0, 1):
        assert lhs[k] == tuple(x + a * y for x, y in zip(ts[k], tu[k]))


@settings(max_examples=30, deadline=None)
@given(specs, pairs)
def test_json_round_trip(s, _):
    doc = json.loads(json.dumps(s.to_json()))
    assert ChristoffelSpec.from_json(doc) == s


@pytest.mark.parametrize("doc", [
    {},
    {"entries": {}},
    {"entries": {k: ["0", "0"] for k in KEYS[:7]}},
    {"entries": {**{k: ["0", "0"] for k in KEYS}, "333": ["0", "0"]}},
    {"entries": {**{k: ["0", "0"] for k in KEYS}, "111": ["0"]}},
    "not json",
])
def test_json_rejects(doc):
    with pytest.raises((ParseError, ValueError)):
        ChristoffelSpec.from_json(doc)


def test_kind():
    assert ChristoffelSpec.type_a(*range(8)).kind == "A"
    assert ChristoffelSpec.type_b(*range(1, 9)).kind == "B"
    assert ChristoffelSpec.zero().kind == "A"


def test_christoffel_values():
    xi = [F(k, 3) for k in range(1, 9)]
    a = ChristoffelSpec.type_a(*xi)
    b = ChristoffelSpec.type_b(*xi)
    for p in [(1, 0), (2, 5), (F(1, 3), -1)]:
        assert list(christoffel_at(a, p).transpose(0, 1, 2).ravel()) == xi
    assert list(christoffel_at(b, (1, 7)).ravel()) == xi


def test_hyperbolic_symbols_at_two():
    s = instantiate("B.N3.3", {}, (0, 0)).spec
    g = christoffel_at(s, (2, 0))
    nonzero = {(0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0)}
    for i, j, k in itertools.product((0, 1), repeat=3):
        assert g[i, j, k] == (F(-1, 2) if (i, j, k) in nonzero else 0)


def test_domain_error_on_axis():
    with pytest.raises(DomainError):
        christoffel_at(ChristoffelSpec.type_b(*range(8)), (0, 1))
    with pytest.raises(DomainError):
        curvature_at(ChristoffelSpec.type_b(*range(8)), (0, 1))
    christoffel_at(ChristoffelSpec.type_a(*range(8)), (0, 1))


def test_flat_and_translation_curvature():
    for p in [(1, 0), (3, -2)]:
        assert not np.any(curvature_at(ChristoffelSpec.zero(), p))
    assert not np.any(curvature_at(instantiate("B.N6.5", {}, (0, 0)).spec, (1, 0)))


def test_hyperbolic_plane_curvature():
    """Hand computation for the upper half plane model at (1, 0)."""
    r = curvature_at(instantiate("B.N3.4", {}, (0, 0)).spec, (1, 0))
    want = np.zeros((2, 2, 2, 2), dtype=object)
    want[0, 1, 0, 1], want[0, 1, 1, 0] = -1, 1
    want[1, 0, 0, 1], want[1, 0, 1, 0] = 1, -1
    assert (r == want).all()


@settings(max_examples=25, deadline=None)
@given(specs.map(lambda s: ChristoffelSpec(tuple((a, 0) for a, _ in s.entries))), pairs)
def test_constant_symbols_constant_curvature(s, p):
    r0 = curvature_at(s, (0, 0))
    r1 = curvature_at(s, p)
    assert (r0 == r1).all()
    assert (r0 == -r0.transpose(0, 1, 3, 2)).all()


def test_linear_change_identity_and_inverse():
    rng = np.random.default_rng(5)
    s = random_spec(rng, "A")
    assert linear_change(s, [[1, 0], [0, 1]]) == s
    p = [[2, 1], [1, 1]]
    pinv = [[1, -1], [-1, 2]]
    assert linear_change(linear_change(s, p), pinv) == s


def test_shear_keeps_type_b():
    rng = np.random.default_rng(6)
    s = random_spec(rng, "B")
    t = shear(s, F(2), F(-1, 3))
    assert t.kind == "B"
    assert shear(t, F(1, 2), F(1, 6)) == s
    with pytest.raises(ValueError):
        linear_change(s, [[1, 1], [0, 1]])
