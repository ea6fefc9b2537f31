from fractions import Fraction
import itertools

import numpy as np
import pytest
import sympy as sp

from affine_killing import expr as ex
from affine_killing.catalog import instantiate
from affine_killing.connection import ChristoffelSpec, random_spec, symmetrize
from affine_killing.errors import DictionaryInsufficient, DomainError
from affine_killing.killing import (
    D1, D2, DILATION, VectorField, field_rank, in_span, is_killing, killing_basis,
    killing_dimension, killing_residuals, prolongation_ranks,
)

F = Fraction
V = VectorField.parse


def spec(entry, t=(0, 0), **params):
    return instantiate(entry, params, t).spec


def test_zero_field_has_zero_residuals():
    s = random_spec(np.random.default_rng(1), "mixed")
    zero = VectorField(ex.ZERO, ex.ZERO)
    assert all(ex.is_identically_zero(r) for r in killing_residuals(s, zero).values())


def test_translations_and_dilation():
    rng = np.random.default_rng(2)
    a = random_spec(rng, "A")
    b = random_spec(rng, "B")
    assert is_killing(a, D1) and is_killing(a, D2)
    assert is_killing(b, DILATION) and is_killing(b, D2)
    assert not is_killing(b, D1)


def test_known_fields_with_torsion():
    s = spec("A.M6.1", (0, 3))
    assert is_killing(s, V(["0", "exp(-x1)"]))
    assert is_killing(s, V(["0", "x2"]))
    assert not is_killing(s, V(["exp(-x1)", "-x2*exp(-x1)"]))
    assert is_killing(spec("A.M6.1"), V(["exp(-x1)", "-x2*exp(-x1)"]))


def test_hyperbolic_field():
    s = spec("B.N3.3")
    assert is_killing(s, V(["2*x1*x2", "x2^2 + x1^2"]))


# -------------------------------------------------------------- sympy oracle

X1, X2 = sp.symbols("x1 x2", positive=True)


def oracle_residuals(s, v):
    xs = (X1, X2)
    g = {}
    for (i, j, k), (a, b) in zip(itertools.product((0, 1), repeat=3), s.entries):
        g[i, j, k] = sp.Rational(a.numerator, a.denominator) + sp.Rational(b.numerator, b.denominator) / X1
    out = {}
    for i, j, k in itertools.product((0, 1), repeat=3):
        e = sp.diff(v[k], xs[i], xs[j])
        for l in (0, 1):
            e += (v[l] * sp.diff(g[i, j, k], xs[l]) - g[i, j, l] * sp.diff(v[k], xs[l])
                  + g[i, l, k] * sp.diff(v[l], xs[j]) + g[l, j, k] * sp.diff(v[l], xs[i]))
        out[i, j, k] = e
    return out


@pytest.mark.parametrize("seed", range(4))
def test_residuals_match_oracle(seed):
    rng = np.random.default_rng(seed)
    s = random_spec(rng, ("A", "B", "mixed", "mixed")[seed])
    texts = ["x1^2*x2 - 3*x2", "exp(x2)*log(x1) + x1"]
    X = V(texts)
    ours = killing_residuals(s, X)
    theirs = oracle_residuals(s, [sp.sympify(t.replace("^", "**"), locals={"x1": X1, "x2": X2}) for t in texts])
    pts = list(zip(*ex.sample_points(6, seed=seed)))
    for key, e in ours.items():
        f = sp.lambdify((X1, X2), theirs[key], "math")
        for p in pts:
            assert float(ex.evaluate(e, *p)) == pytest.approx(f(*p), rel=1e-9, abs=1e-9)


# ------------------------------------------------------------ identities

FIELDS = [V(["x2^2", "x1*x2"]), V(["exp(-x1)", "x2*cos(x2)"]), V(["x1*log(x1)", "x1^3"])]


@pytest.mark.parametrize("seed", range(5))
def test_diagonal_residual_identity(seed):
    s = random_spec(np.random.default_rng(10 + seed), "mixed")
    sym = symmetrize(s)
    for X in FIELDS:
        a, b = killing_residuals(s, X), killing_residuals(sym, X)
        for i in (0, 1):
            for k in (0, 1):
                assert ex.is_identically_zero(a[i, i, k] - b[i, i, k], tol=1e-8)


@pytest.mark.parametrize("seed", range(5))
def test_symmetrized_sum_identity(seed):
    s = random_spec(np.random.default_rng(20 + seed), "mixed")
    sym = symmetrize(s)
    for X in FIELDS:
        a, b = killing_residuals(s, X), killing_residuals(sym, X)
        for k in (0, 1):
            diff = a[0, 1, k] + a[1, 0, k] - b[0, 1, k] - b[1, 0, k]
            assert ex.is_identically_zero(diff, tol=1e-8)


# -------------------------------------------------------------- dimension

def test_dimension_examples():
    assert killing_dimension(ChristoffelSpec.zero()) == 6
    assert killing_dimension(spec("A.M6.0", (F(1, 2), -2))) == 4
    assert killing_dimension(random_spec(np.random.default_rng(99), "A")) == 2
    assert killing_dimension(spec("X.IIB", (0, 1))) == 3
    assert killing_dimension(spec("X.IIB", (1, 0))) == 1


def test_ranks_are_monotone_and_stable():
    r = prolongation_ranks(spec("A.M4.5", (0, 0), c=2))
    assert r == sorted(r)
    assert 6 - r[-1] == 4


@pytest.mark.parametrize("seed", range(3))
def test_type_a_base_point_independent(seed):
    rng = np.random.default_rng(40 + seed)
    candidates = [spec("A.M6.0", (1, 0)), spec("A.M4.5", c=F(1, 2)), random_spec(rng, "A")]
    s = candidates[seed]
    dims = {killing_dimension(s, p) for p in [(1, 0), (0, 0), (-3, 2), (F(1, 2), F(-7, 3)), (5, 5)]}
    assert len(dims) == 1


def test_base_point_on_axis_rejected():
    with pytest.raises(DomainError):
        killing_dimension(spec("B.N3.3"), (0, 0))
    with pytest.raises(DomainError):
        killing_dimension(spec("B.N3.3"), (-1, 0))


# ------------------------------------------------------------------ basis

def spans(computed, claimed):
    return (len(computed) == len(claimed) and field_rank(claimed) == len(claimed)
            and all(in_span(X, computed) for X in claimed))


def test_basis_flat():
    got = killing_basis(ChristoffelSpec.zero())
    want = [V(p) for p in [["1", "0"], ["0", "1"], ["x1", "0"], ["0", "x1"], ["x2", "0"], ["0", "x2"]]]
    assert spans(got, want)


def test_basis_with_quadratic_field():
    s = spec("A.M6.4", (2, 0))
    want = [V(p) for p in [["1", "0"], ["0", "1"], ["x1 + x2^2/2", "0"], ["x2", "0"]]]
    assert all(is_killing(s, X) for X in want)
    assert spans(killing_basis(s), want)


def test_basis_hyperbolic_branch():
    s = spec("B.N6.2", (1, 0), c=F(-1, 2))
    want = [DILATION, D2, V(["x1*x2", "x2^2/2"])]
    assert spans(killing_basis(s, params={"c": F(-1, 2)}), want)


def test_basis_mixed_example():
    s = spec("X.IIB", (0, 3))
    want = [D2, V(["0", "x2"]), V(["0", "exp(-x1)"])]
    assert spans(killing_basis(s), want)


def test_small_dictionary_is_insufficient():
    with pytest.raises(DictionaryInsufficient) as info:
        killing_basis(ChristoffelSpec.zero(), dictionary=[ex.ONE])
    assert len(info.value.found) == 2
    assert info.value.expected == 6


@pytest.mark.parametrize("kind", ["A", "B"])
def test_inclusion_for_random_specs(kind):
    rng = np.random.default_rng(7 if kind == "A" else 8)
    for _ in range(25):
        s = random_spec(rng, kind)
        sym = symmetrize(s)
        for X in killing_basis(s):
            assert is_killing(sym, X)
