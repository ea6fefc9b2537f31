"""Lie algebras of vector fields and their identification.

Algebras are stored by exact structure constants ``c[i][j][k]`` with
[e_i, e_j] = sum_k c[i][j][k] e_k (0-based in memory, 1-based in JSON).
Identification uses invariants only: abelian or not in dimension 2, the
signature of the Killing form in dimension 3, and in dimension 4 the
discriminant of the action of L on its (abelian, 2-dimensional) derived
algebra.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import expr as ex
from .connection import format_rational, parse_rational
from .errors import ClosureError, DegenerateBasis, InvalidAlgebra, ParseError
from .exact import inverse, nullspace, rank, rref, solve, sylvester_signature
from .killing import VectorField, field_rank

TAGS = ("K_A", "K_B", "so3", "so21", "KBplusKB", "A49zero", "A412", "A6")
UNRECOGNIZED = "Unrecognized"

Vector = List[Fraction]


def bracket(X: VectorField, Y: VectorField) -> VectorField:
    """[X, Y]^k = X^l d_l Y^k - Y^l d_l X^k."""
    names = ex.VARIABLES
    comps = []
    for k in (0, 1):
        terms = []
        for l in (0, 1):
            terms.append(ex.mul(X[l], ex.differentiate(Y[k], names[l])))
            terms.append(ex.neg(ex.mul(Y[l], ex.differentiate(X[k], names[l]))))
        comps.append(ex.add(*terms))
    return VectorField(*comps)


# ----------------------------------------------------------------- algebras

@dataclass(frozen=True)
class LieAlgebra:
    dim: int
    c: Tuple[Tuple[Tuple[Fraction, ...], ...], ...]

    def __post_init__(self):
        n = self.dim
        arr = tuple(
            tuple(tuple(Fraction(self.c[i][j][k]) for k in range(n)) for j in range(n)) for i in range(n)
        )
        object.__setattr__(self, "c", arr)

    @classmethod
    def from_brackets(cls, dim: int, brackets: Dict[Tuple[int, int], Dict[int, object]]) -> "LieAlgebra":
        """Build from {(i, j): {k: coef}} with 1-based indices; [e_j, e_i] is
        filled in by antisymmetry."""
        c = [[[Fraction(0)] * dim for _ in range(dim)] for _ in range(dim)]
        for (i, j), out in brackets.items():
            for k, v in out.items():
                c[i - 1][j - 1][k - 1] = Fraction(v)
                c[j - 1][i - 1][k - 1] = -Fraction(v)
        return cls(dim, c)

    @classmethod
    def abelian(cls, dim: int) -> "LieAlgebra":
        return cls(dim, [[[0] * dim for _ in range(dim)] for _ in range(dim)])

    def bracket(self, x: Sequence, y: Sequence) -> Vector:
        n = self.dim
        out = [Fraction(0)] * n
        for i in range(n):
            if not x[i]:
                continue
            for j in range(n):
                if not y[j]:
                    continue
                f = x[i] * y[j]
                row = self.c[i][j]
                for k in range(n):
                    if row[k]:
                        out[k] += f * row[k]
        return out

    def ad(self, x: Sequence) -> List[Vector]:
        """Matrix of ad_x acting on column vectors."""
        n = self.dim
        cols = [self.bracket(x, _unit(n, j)) for j in range(n)]
        return [[cols[j][i] for j in range(n)] for i in range(n)]

    def is_antisymmetric(self) -> bool:
        n = self.dim
        return all(self.c[i][j][k] == -self.c[j][i][k] for i in range(n) for j in range(n) for k in range(n))

    def satisfies_jacobi(self) -> bool:
        n = self.dim
        c = self.c
        for i, j, l in itertools.combinations(range(n), 3):
            for k in range(n):
                total = sum(
                    c[a][b][m] * c[m][d][k]
                    for a, b, d in ((i, j, l), (j, l, i), (l, i, j))
                    for m in range(n)
                )
                if total:
                    return False
        return True

    def validate(self) -> None:
        if not self.is_antisymmetric():
            raise InvalidAlgebra("structure constants are not antisymmetric")
        if not self.satisfies_jacobi():
            raise InvalidAlgebra("structure constants violate the Jacobi identity")

    def change_of_basis(self, p: Sequence[Sequence]) -> "LieAlgebra":
        """Constants in the basis f_j = sum_i p[i][j] e_i (columns of p)."""
        n = self.dim
        p = [[Fraction(x) for x in row] for row in p]
        pinv = inverse(p)
        cols = [[p[i][j] for i in range(n)] for j in range(n)]
        c = [[[Fraction(0)] * n for _ in range(n)] for _ in range(n)]
        for a in range(n):
            for b in range(n):
                v = self.bracket(cols[a], cols[b])
                coords = [sum((pinv[k][i] * v[i] for i in range(n)), Fraction(0)) for k in range(n)]
                c[a][b] = coords
        return LieAlgebra(n, c)

    def direct_sum(self, other: "LieAlgebra") -> "LieAlgebra":
        n, m = self.dim, other.dim
        c = [[[Fraction(0)] * (n + m) for _ in range(n + m)] for _ in range(n + m)]
        for i, j, k in itertools.product(range(n), repeat=3):
            c[i][j][k] = self.c[i][j][k]
        for i, j, k in itertools.product(range(m), repeat=3):
            c[n + i][n + j][n + k] = other.c[i][j][k]
        return LieAlgebra(n + m, c)

    def permute(self, order: Sequence[int]) -> "LieAlgebra":
        """Relabel so that new e_a is old e_{order[a]}."""
        n = self.dim
        p = [[Fraction(int(order[j] == i)) for j in range(n)] for i in range(n)]
        return self.change_of_basis(p)

    # JSON ------------------------------------------------------------------
    def to_json(self) -> dict:
        entries = []
        for i, j in itertools.combinations(range(self.dim), 2):
            for k in range(self.dim):
                if self.c[i][j][k]:
                    entries.append([i + 1, j + 1, k + 1, format_rational(self.c[i][j][k])])
        return {"dim": self.dim, "c": entries}

    @classmethod
    def from_json(cls, doc) -> "LieAlgebra":
        if isinstance(doc, str):
            try:
                doc = json.loads(doc)
            except json.JSONDecodeError as err:
                raise ParseError(f"invalid JSON: {err}") from err
        try:
            dim = int(doc["dim"])
            brackets: Dict[Tuple[int, int], Dict[int, Fraction]] = {}
            for i, j, k, v in doc["c"]:
                i, j, k = int(i), int(j), int(k)
                if not (1 <= i < j <= dim and 1 <= k <= dim):
                    raise ParseError(f"bad index triple ({i}, {j}, {k}) for dimension {dim}")
                brackets.setdefault((i, j), {})[k] = parse_rational(v)
        except (KeyError, TypeError, ValueError) as err:
            if isinstance(err, ParseError):
                raise
            raise ParseError(f"malformed structure-constant document: {err}") from err
        if dim < 1:
            raise ParseError("dimension must be positive")
        return cls.from_brackets(dim, brackets)


def _unit(n: int, j: int) -> Vector:
    return [Fraction(int(i == j)) for i in range(n)]


# --------------------------------------------------------------- invariants

def derived_subalgebra(L: LieAlgebra) -> List[Vector]:
    """Basis (reduced row echelon) of [L, L]."""
    rows = [list(L.c[i][j]) for i, j in itertools.combinations(range(L.dim), 2)]
    if not rows:
        return []
    red, piv = rref(rows)
    return red[: len(piv)]


def center(L: LieAlgebra) -> List[Vector]:
    """Basis of {x : [x, e_j] = 0 for all j}."""
    n = L.dim
    rows = []
    for j in range(n):
        for k in range(n):
            rows.append([L.c[i][j][k] for i in range(n)])
    return nullspace(rows, n)


def killing_form(L: LieAlgebra) -> List[Vector]:
    """B(e_i, e_j) = trace(ad e_i ad e_j)."""
    n = L.dim
    ads = [L.ad(_unit(n, i)) for i in range(n)]
    return [[sum((ads[i][a][b] * ads[j][b][a] for a in range(n) for b in range(n)), Fraction(0))
             for j in range(n)] for i in range(n)]


def signature(L: LieAlgebra) -> Tuple[int, int, int]:
    """(positive, negative, zero) counts of the Killing form."""
    return sylvester_signature(killing_form(L))


def is_abelian(L: LieAlgebra) -> bool:
    return not any(x for plane in L.c for row in plane for x in row)


def _span_coordinates(basis: Sequence[Vector], v: Sequence[Fraction]) -> Vector:
    cols = [[b[i] for b in basis] for i in range(len(v))]
    sol = solve(cols, list(v))
    if sol is None:
        raise InvalidAlgebra("vector outside the expected subspace")
    return sol


def derived_action(L: LieAlgebra) -> Tuple[List[Vector], List[List[Vector]]]:
    """Basis of the derived algebra D and the matrices of ad_{e_i} restricted to D."""
    d = derived_subalgebra(L)
    mats = []
    for i in range(L.dim):
        x = _unit(L.dim, i)
        cols = [_span_coordinates(d, L.bracket(x, n)) for n in d]
        mats.append([[cols[b][a] for b in range(len(d))] for a in range(len(d))])
    return d, mats


def discriminant(z: Sequence[Sequence]) -> Fraction:
    """trace(Z)^2 - 4 det(Z) of a 2x2 matrix."""
    tr = z[0][0] + z[1][1]
    det = z[0][0] * z[1][1] - z[0][1] * z[1][0]
    return Fraction(tr * tr - 4 * det)


@dataclass(frozen=True)
class AlgebraType:
    tag: str
    dim: int
    derived_dim: int
    signature: Tuple[int, int, int]
    delta: Optional[Fraction] = None
    reason: str = ""

    @property
    def recognized(self) -> bool:
        return self.tag != UNRECOGNIZED

    def summary(self) -> dict:
        out = {
            "tag": self.tag,
            "dim": self.dim,
            "derived_dim": self.derived_dim,
            "signature": list(self.signature[:2]),
            "killing_form_nullity": self.signature[2],
        }
        if self.delta is not None:
            out["delta"] = format_rational(self.delta)
        if self.reason:
            out["reason"] = self.reason
        return out


def _dim4(L: LieAlgebra) -> Tuple[str, Optional[Fraction], str]:
    d, mats = derived_action(L)
    if len(d) != 2:
        return UNRECOGNIZED, None, f"derived algebra has dimension {len(d)}"
    if any(any(x for x in L.bracket(a, b)) for a in d for b in d):
        return UNRECOGNIZED, None, "derived algebra is not abelian"
    flat = [[m[0][0], m[0][1], m[1][0], m[1][1]] for m in mats]
    red, piv = rref(flat)
    image = [[[r[0], r[1]], [r[2], r[3]]] for r in red[: len(piv)]]
    if len(image) != 2:
        return UNRECOGNIZED, None, f"image of the derived action has dimension {len(image)}"
    ident = [Fraction(1), Fraction(0), Fraction(0), Fraction(1)]
    if rank([r for r in red[: len(piv)]] + [ident]) != 2:
        return UNRECOGNIZED, None, "image of the derived action does not contain the identity"
    z = next(m for m in image if m[0][1] or m[1][0] or m[0][0] != m[1][1])
    delta = discriminant(z)
    if delta > 0:
        return "KBplusKB", delta, ""
    if delta < 0:
        return "A412", delta, ""
    return "A49zero", delta, ""


def classify(L: LieAlgebra) -> AlgebraType:
    L.validate()
    n = L.dim
    der = len(derived_subalgebra(L))
    sig = signature(L)
    delta = None
    reason = ""
    tag = UNRECOGNIZED
    if n == 2:
        tag = "K_A" if der == 0 else "K_B"
    elif n == 3:
        pos, neg, zero = sig
        if zero == 0 and pos == 0:
            tag = "so3"
        elif zero == 0:
            tag = "so21"
        else:
            reason = "degenerate Killing form"
    elif n == 4:
        tag, delta, reason = _dim4(L)
    elif n == 6:
        if der == 5 and sig[0] + sig[1] == 4:
            tag = "A6"
        else:
            reason = "derived dimension or Killing form rank differs from the affine algebra"
    else:
        reason = f"no target algebra of dimension {n}"
    return AlgebraType(tag, n, der, sig, delta, reason)


# --------------------------------------------------------- reference tables

def _affine_algebra() -> LieAlgebra:
    """Structure constants of aff(2) from its 3x3 matrix realisation.

    Basis: E11, E12, E21, E22 (linear part) then the translations t1, t2.
    """
    def mat(r, s):
        m = np.zeros((3, 3), dtype=object)
        m[:] = Fraction(0)
        m[r, s] = Fraction(1)
        return m

    basis = [mat(0, 0), mat(0, 1), mat(1, 0), mat(1, 1), mat(0, 2), mat(1, 2)]
    flat = [[b[r, s] for r in range(2) for s in range(3)] for b in basis]
    cols = [[row[i] for row in flat] for i in range(6)]
    c = []
    for a in basis:
        plane = []
        for b in basis:
            comm = a.dot(b) - b.dot(a)
            plane.append(solve(cols, [comm[r, s] for r in range(2) for s in range(3)]))
        c.append(plane)
    return LieAlgebra(6, c)


def standard_tables() -> Dict[str, LieAlgebra]:
    kb = LieAlgebra.from_brackets(2, {(1, 2): {1: 1}})
    return {
        "K_A": LieAlgebra.abelian(2),
        "K_B": kb,
        "so3": LieAlgebra.from_brackets(3, {(1, 2): {3: 1}, (2, 3): {1: 1}, (3, 1): {2: 1}}),
        "so21": LieAlgebra.from_brackets(3, {(1, 2): {1: 1}, (2, 3): {3: 1}, (3, 1): {2: 2}}),
        "KBplusKB": kb.direct_sum(kb),
        "A49zero": LieAlgebra.from_brackets(4, {(2, 3): {1: 1}, (1, 4): {1: 1}, (2, 4): {2: 1}}),
        "A412": LieAlgebra.from_brackets(
            4, {(1, 3): {1: 1}, (2, 3): {2: 1}, (1, 4): {2: -1}, (2, 4): {1: 1}}
        ),
        "A6": _affine_algebra(),
    }


# ------------------------------------------------- algebras of vector fields

STRUCTURE_SEED = 314159
SNAP_DENOMINATOR = 10 ** 4


def structure_constants(
    basis: Sequence[VectorField],
    params=None,
    seed: int = STRUCTURE_SEED,
    tol: float = ex.ZERO_TEST_TOL,
) -> LieAlgebra:
    """Express every bracket of ``basis`` in the basis itself.

    Coefficients come from a least-squares fit on sample points, are snapped to
    rationals, and the remainder [X, Y] - sum c_k e_k must then vanish under
    :func:`expr.is_identically_zero`.
    """
    n = len(basis)
    if params:
        basis = [b.substitute(params) for b in basis]
    points = ex.sample_points(max(4 * (n + 2), 24), seed)
    if field_rank(basis, points=points) < n:
        raise DegenerateBasis("basis fields are linearly dependent")
    mat = np.column_stack([b.values(points).ravel() for b in basis])
    c = [[[Fraction(0)] * n for _ in range(n)] for _ in range(n)]
    for i, j in itertools.combinations(range(n), 2):
        br = bracket(basis[i], basis[j])
        target = br.values(points).ravel()
        coef, *_ = np.linalg.lstsq(mat, target, rcond=None)
        snapped = [Fraction(float(x)).limit_denominator(SNAP_DENOMINATOR) for x in coef]
        rest = br
        for q, b in zip(snapped, basis):
            if q:
                rest = rest - b * ex.Const(q)
        if not all(ex.is_identically_zero(comp, tol=tol) for comp in rest):
            raise ClosureError(f"bracket of fields {i + 1} and {j + 1} leaves their span")
        c[i][j] = snapped
        c[j][i] = [-q for q in snapped]
    return LieAlgebra(n, c)


def random_rational_matrix(rng: np.random.Generator, n: int, size: int = 5, den: int = 4) -> List[Vector]:
    """Seeded invertible n x n rational matrix."""
    while True:
        m = [[Fraction(int(rng.integers(-size, size + 1)), int(rng.integers(1, den + 1))) for _ in range(n)]
             for _ in range(n)]
        if rank(m) == n:
            return m
