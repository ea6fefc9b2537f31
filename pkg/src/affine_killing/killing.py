"""Affine Killing vector fields of a connection.

Three routes are provided:

* :func:`killing_residuals` / :func:`is_killing` check a given field against
  the eight affine Killing equations

      d_i d_j v^k + v^l d_l G_ij^k - G_ij^l d_l v^k + G_il^k d_j v^l + G_lj^k d_i v^l = 0.

* :func:`killing_dimension` counts solutions exactly by jet prolongation. The
  part of the system symmetric in (i, j) solves every second derivative in
  terms of the 1-jet u = (v1, v2, d1 v1, d2 v1, d1 v2, d2 v2), giving
  d_i u = A_i(x) u. The antisymmetric part has no second derivatives and
  enters as algebraic constraints, together with the integrability rows of
  the system d_i u = A_i u. Constraints are differentiated along the system
  until their rank at the base point stops growing.

* :func:`killing_basis` finds explicit fields by writing X as a combination
  of dictionary functions and extracting the numeric kernel of the sampled
  residuals; every candidate is then re-checked with :func:`is_killing`.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from . import expr as ex
from .connection import INDICES, ChristoffelSpec, symmetrize
from .errors import DictionaryInsufficient, DomainError, ProlongationError
from .exact import rank as exact_rank
from .poly import Laurent

log = logging.getLogger(__name__)

BASE_POINT = (Fraction(1), Fraction(0))
MAX_PROLONGATIONS = 12
SNAP_DENOMINATOR = 10 ** 4
SNAP_TOL = 1e-9
KERNEL_RTOL = 1e-11
SUPPORT_RTOL = 1e-7
BASIS_SEED = 1729
# wide box: on a small one, exponentials and trig functions are too close to
# low degree polynomials and the kernel gap shrinks
BASIS_BOX = ((0.25, 4.0), (-3.0, 3.0))
# pure 1/x1 models: x1 = 2^u, u uniform. Power laws x1^p and logarithms are
# nearly dependent on a short interval (x1^(1/2) fits the log/polynomial part
# of the dictionary to 3e-10 on [1/4, 4]); spreading x1 over several octaves
# separates them.
LOG2_X1_RANGE = (-4.0, 4.0)


# ------------------------------------------------------------- vector fields

@dataclass(frozen=True)
class VectorField:
    """X = v1 d_1 + v2 d_2 with expression components."""

    v1: ex.Expr
    v2: ex.Expr

    def __post_init__(self):
        object.__setattr__(self, "v1", ex.canonical(ex.as_expr(self.v1)))
        object.__setattr__(self, "v2", ex.canonical(ex.as_expr(self.v2)))

    @classmethod
    def parse(cls, pair: Sequence[str]) -> "VectorField":
        a, b = pair
        return cls(ex.parse(a) if isinstance(a, str) else a, ex.parse(b) if isinstance(b, str) else b)

    def __getitem__(self, k: int) -> ex.Expr:
        return (self.v1, self.v2)[k]

    def __iter__(self):
        return iter((self.v1, self.v2))

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.v1 + other.v1, self.v2 + other.v2)

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.v1 - other.v1, self.v2 - other.v2)

    def __neg__(self) -> "VectorField":
        return VectorField(-self.v1, -self.v2)

    def __mul__(self, scalar) -> "VectorField":
        s = ex.as_expr(scalar)
        return VectorField(s * self.v1, s * self.v2)

    __rmul__ = __mul__

    def substitute(self, params: Mapping) -> "VectorField":
        return VectorField(ex.substitute(self.v1, params), ex.substitute(self.v2, params))

    def to_text(self) -> List[str]:
        return [ex.to_text(self.v1), ex.to_text(self.v2)]

    def values(self, points, params=None) -> np.ndarray:
        """Components at ``points`` stacked as an array of shape (2, n)."""
        x1, x2 = points
        return np.vstack([ex.evaluate_array(c, x1, x2, params) for c in self])

    def __str__(self):
        a, b = self.to_text()
        return f"({a}) d1 + ({b}) d2"


D1 = VectorField(ex.ONE, ex.ZERO)
D2 = VectorField(ex.ZERO, ex.ONE)
DILATION = VectorField(ex.X1, ex.X2)


# ---------------------------------------------------------------- residuals

def _jet(i: int, k: int) -> int:
    """Position of d_i v^k in u = (v1, v2, d1 v1, d2 v1, d1 v2, d2 v2)."""
    return 2 + 2 * k + i


def _first_order(g, dg, v, dv, i, j, k):
    """Killing residual K_ij^k without its d_i d_j v^k term.

    ``g[i][j][k]`` are the symbols, ``dg[l][i][j][k]`` their derivatives,
    ``dv[l][k]`` is d_l v^k. Works on any ring-like values (Expr, Laurent
    vectors, numpy arrays).
    """
    total = 0
    for l in (0, 1):
        total = total + v[l] * dg[l][i][j][k] - g[i][j][l] * dv[l][k] \
            + g[i][l][k] * dv[j][l] + g[l][j][k] * dv[i][l]
    return total


def _table3(fn):
    return [[[fn(i, j, k) for k in (0, 1)] for j in (0, 1)] for i in (0, 1)]


def _table4(fn):
    return [_table3(lambda i, j, k, l=l: fn(l, i, j, k)) for l in (0, 1)]


def killing_residuals(s: ChristoffelSpec, X: VectorField) -> Dict[Tuple[int, int, int], ex.Expr]:
    """The eight expressions K_ij^k(X), keyed by 0-based (i, j, k)."""
    g = _table3(s.gamma_expr)
    dg = _table4(s.dgamma_expr)
    v = (X.v1, X.v2)
    names = ex.VARIABLES
    dv = [[ex.differentiate(v[k], names[l]) for k in (0, 1)] for l in (0, 1)]
    out = {}
    for i, j, k in INDICES:
        second = ex.differentiate(dv[i][k], names[j])
        out[i, j, k] = ex.add(second, _first_order(g, dg, v, dv, i, j, k))
    return out


def is_killing(s: ChristoffelSpec, X: VectorField, params=None, points=None, tol: float = ex.ZERO_TEST_TOL) -> bool:
    """True iff all eight residuals vanish (exactly for Laurent polynomials,
    otherwise at the seeded sample points within ``tol``)."""
    return all(
        ex.is_identically_zero(r, params=params, points=points, tol=tol)
        for r in killing_residuals(s, X).values()
    )


# ------------------------------------------------------------ jet prolongation

def _laurent_symbols(s: ChristoffelSpec):
    g = _table3(lambda i, j, k: Laurent({(0, 0): s[i, j, k][0], (-1, 0): s[i, j, k][1]}))
    dg = _table4(lambda l, i, j, k: Laurent({(-2, 0): -s[i, j, k][1]}) if l == 0 else Laurent())
    return g, dg


def _unit_rows():
    def e(n):
        row = np.empty(6, dtype=object)
        row[:] = [Laurent.const(int(m == n)) for m in range(6)]
        return row

    v = [e(0), e(1)]
    dv = [[e(_jet(l, k)) for k in (0, 1)] for l in (0, 1)]
    return v, dv


def _zero_matrix(n=6, m=6):
    out = np.empty((n, m), dtype=object)
    for idx in np.ndindex(n, m):
        out[idx] = Laurent()
    return out


def _diff_array(a: np.ndarray, var: int) -> np.ndarray:
    out = np.empty(a.shape, dtype=object)
    for idx in np.ndindex(a.shape):
        out[idx] = a[idx].diff(var)
    return out


def _eval_array(a: np.ndarray, point) -> List[List[Fraction]]:
    x1, x2 = point
    return np.vectorize(lambda p: p(x1, x2), otypes=[object])(a).tolist()


@dataclass
class JetSystem:
    """First-order system d_i u = A_i(x) u on 1-jets plus algebraic constraints.

    Entries of ``A1``, ``A2`` and of every constraint row are Laurent
    polynomials in x1 (the symbols depend on x1 only).
    """

    base_point: Tuple[Fraction, Fraction]
    A1: np.ndarray
    A2: np.ndarray
    algebraic_constraints: List[np.ndarray] = field(default_factory=list)

    def A(self, i: int) -> np.ndarray:
        return (self.A1, self.A2)[i]

    def A_at(self, i: int, point=None) -> List[List[Fraction]]:
        return _eval_array(self.A(i), point or self.base_point)

    def obstruction(self) -> np.ndarray:
        """d_2 A_1 - d_1 A_2 + A_1 A_2 - A_2 A_1 (rows annihilate every solution)."""
        return _diff_array(self.A1, 1) - _diff_array(self.A2, 0) + self.A1.dot(self.A2) - self.A2.dot(self.A1)

    def prolong(self, row: np.ndarray, i: int) -> np.ndarray:
        """Row annihilating solutions obtained from d_i (row . u) = 0."""
        return _diff_array(row, i) + row.dot(self.A(i))

    def constraint_rank(self, point=None) -> int:
        if not self.algebraic_constraints:
            return 0
        return exact_rank(_eval_array(np.vstack(self.algebraic_constraints), point or self.base_point))


def jet_system(s: ChristoffelSpec, base_point=BASE_POINT) -> JetSystem:
    """Build A_1, A_2 from the symmetrised connection and seed the constraints
    with the torsion (antisymmetric) rows of the Killing equations."""
    x1, x2 = Fraction(base_point[0]), Fraction(base_point[1])
    if any(s.inverse_x1_part) and x1 <= 0:
        raise DomainError("base point must have x1 > 0 for symbols with a 1/x1 part")
    v, dv = _unit_rows()
    gs, dgs = _laurent_symbols(symmetrize(s))
    mats = []
    for i in (0, 1):
        a = _zero_matrix()
        for k in (0, 1):
            a[k, _jet(i, k)] = Laurent.const(1)
            for j in (0, 1):
                a[_jet(j, k), :] = -_first_order(gs, dgs, v, dv, i, j, k)
        mats.append(a)
    g, dg = _laurent_symbols(s)
    torsion_rows = [
        _first_order(g, dg, v, dv, 0, 1, k) - _first_order(g, dg, v, dv, 1, 0, k) for k in (0, 1)
    ]
    return JetSystem((x1, x2), mats[0], mats[1], [np.asarray(r, dtype=object) for r in torsion_rows])


class _RowSpan:
    """Q-span of Laurent rows, used to drop rows that are constant linear
    combinations of rows already kept (their prolongations add nothing)."""

    def __init__(self):
        self.pivots: Dict[Tuple, Dict[Tuple, Fraction]] = {}

    @staticmethod
    def _coeffs(row) -> Dict[Tuple, Fraction]:
        out = {}
        for col, p in enumerate(row):
            for mono, c in p.terms.items():
                out[(col,) + mono] = c
        return out

    def add(self, row) -> bool:
        vec = self._coeffs(row)
        for key in sorted(self.pivots):
            if key in vec:
                f = vec[key]
                for k2, c2 in self.pivots[key].items():
                    vec[k2] = vec.get(k2, 0) - f * c2
                    if vec[k2] == 0:
                        del vec[k2]
        if not vec:
            return False
        lead = min(vec)
        c = vec[lead]
        vec = {k: x / c for k, x in vec.items()}
        for key, other in self.pivots.items():
            if lead in other:
                f = other[lead]
                for k2, c2 in vec.items():
                    other[k2] = other.get(k2, 0) - f * c2
                    if other[k2] == 0:
                        del other[k2]
        self.pivots[lead] = vec
        return True


def prolongation_ranks(s: ChristoffelSpec, base_point=BASE_POINT) -> List[int]:
    """Constraint ranks at the base point after each prolongation round."""
    system = jet_system(s, base_point)
    span = _RowSpan()
    obstruction = system.obstruction()
    seeds = list(system.algebraic_constraints) + [obstruction[r, :] for r in range(6)]
    system.algebraic_constraints = []
    frontier = []
    for row in seeds:
        if span.add(row):
            system.algebraic_constraints.append(row)
            frontier.append(row)
    ranks = [system.constraint_rank()]
    for _ in range(MAX_PROLONGATIONS):
        if ranks[-1] == 6 or not frontier:
            return ranks
        if len(ranks) >= 3 and ranks[-1] == ranks[-2] == ranks[-3]:
            return ranks
        new = []
        for row in frontier:
            for i in (0, 1):
                cand = system.prolong(row, i)
                if span.add(cand):
                    new.append(cand)
        system.algebraic_constraints.extend(new)
        frontier = new
        ranks.append(system.constraint_rank())
    if len(ranks) >= 3 and ranks[-1] == ranks[-2] == ranks[-3]:
        return ranks
    raise ProlongationError(f"constraint rank still changing after {MAX_PROLONGATIONS} rounds: {ranks}")


def killing_dimension(s: ChristoffelSpec, base_point=BASE_POINT) -> int:
    """Dimension of the space of affine Killing fields near ``base_point``.

    Exact: 6 minus the stabilised rank of the prolonged constraints.
    """
    return 6 - prolongation_ranks(s, base_point)[-1]


# -------------------------------------------------------- dictionary ansatz

def _param_values(params: Optional[Mapping]) -> List[Fraction]:
    vals = []
    for v in (params or {}).values():
        q = Fraction(v)
        if q not in vals:
            vals.append(q)
    return vals


def _monomial(a: int, b: int) -> ex.Expr:
    return ex.mul(ex.power(ex.X1, ex.const(a)), ex.power(ex.X2, ex.const(b)))


def dictionary_type_a(params: Optional[Mapping] = None) -> List[ex.Expr]:
    """Polynomials of degree <= 3, exponentials exp(m x1 + n x2) times low
    degree polynomials, and trigonometric functions of x2."""
    x1, x2 = ex.X1, ex.X2
    out = [_monomial(a, b) for a in range(4) for b in range(4) if a + b <= 3]
    for m, n in [(-1, 0), (1, 0), (0, -1), (0, 1), (1, 1), (-1, -1), (1, -1), (-1, 1)]:
        e = ex.exp(m * x1 + n * x2)
        out += [e, e * x1, e * x2, e * x2 * x2]
    for q in (1, 2):
        for trig in (ex.cos(q * x2), ex.sin(q * x2)):
            out += [trig, ex.exp(-x1) * trig]
    for p in _param_values(params):
        if p:
            e = ex.exp(-x1 + p * x2)
            out += [e * ex.cos(x2), e * ex.sin(x2)]
    return out


def dictionary_type_b(params: Optional[Mapping] = None) -> List[ex.Expr]:
    """Laurent monomials x1^a x2^b (a >= -1, a + b <= 3), logarithms of x1
    times low degree monomials, and powers of x1 built from the parameters."""
    x1, x2 = ex.X1, ex.X2
    out = [_monomial(a, b) for a in range(-1, 4) for b in range(4) if a + b <= 3]
    lg = ex.log(x1)
    out += [lg, x1 * lg, x2 * lg, x1 * x1 * lg, x1 * x2 * lg, lg * lg, x1 * lg * lg]
    for p in _param_values(params):
        for gamma in (p, -p):
            pw = ex.power(x1, ex.Const(gamma))
            out += [pw, pw * x1, pw * x2]
    return out


def standard_dictionary(kind: str, params: Optional[Mapping] = None) -> List[ex.Expr]:
    """Dictionary for a connection kind ("A", "B" or "mixed"); duplicates
    and dependent functions are dropped later by :func:`killing_basis`."""
    if kind == "A":
        return dictionary_type_a(params)
    if kind == "B":
        return dictionary_type_b(params)
    seen, out = set(), []
    for f in dictionary_type_a(params) + dictionary_type_b(params):
        if f not in seen:
            seen.add(f)
            out.append(f)
    return out


@functools.lru_cache(maxsize=4096)
def _jets(f: ex.Expr) -> Tuple[ex.Expr, ...]:
    """(f, f_1, f_2, f_11, f_12, f_22)."""
    f1 = ex.differentiate(f, "x1")
    f2 = ex.differentiate(f, "x2")
    return f, f1, f2, ex.differentiate(f1, "x1"), ex.differentiate(f1, "x2"), ex.differentiate(f2, "x2")


def _independent(values: np.ndarray, rtol: float = 1e-9) -> List[int]:
    """Greedy choice of columns that are numerically independent."""
    keep: List[int] = []
    basis = np.zeros((values.shape[0], 0))
    for c in range(values.shape[1]):
        col = values[:, c]
        norm = np.linalg.norm(col)
        if norm == 0:
            continue
        r = col - basis @ (basis.T @ col)
        r = r - basis @ (basis.T @ r)
        if np.linalg.norm(r) > rtol * norm:
            keep.append(c)
            basis = np.column_stack([basis, r / np.linalg.norm(r)])
    return keep


def residual_matrix(s: ChristoffelSpec, functions: Sequence[ex.Expr], points, with_scales: bool = False):
    """Sampled residuals of the fields (f, 0) and (0, f), one column each.

    Columns are ordered (f_0, 0), ..., (f_{m-1}, 0), (0, f_0), ...; rows are
    the eight equations stacked over the sample points. With ``with_scales``
    also returns, per column, the norm of the sampled 2-jet of f.
    """
    x1, x2 = points
    g = _table3(lambda i, j, k: float(s[i, j, k][0]) + float(s[i, j, k][1]) / x1)
    dg = _table4(lambda l, i, j, k: -float(s[i, j, k][1]) / x1 ** 2 if l == 0 else 0.0)
    zero = np.zeros_like(x1)
    cols = [[], []]
    scales = []
    for f in functions:
        vals = [ex.evaluate_array(d, x1, x2) for d in _jets(f)]
        scales.append(float(np.linalg.norm(np.concatenate(vals))))
        f0, f1, f2, f11, f12, f22 = vals
        second = ((f11, f12), (f12, f22))
        for comp in (0, 1):
            v = [f0 if l == comp else zero for l in (0, 1)]
            dv = [[(f1, f2)[l] if k == comp else zero for k in (0, 1)] for l in (0, 1)]
            rows = []
            for i, j, k in INDICES:
                ddv = second[i][j] if k == comp else zero
                rows.append(ddv + _first_order(g, dg, v, dv, i, j, k))
            cols[comp].append(np.concatenate(rows))
    matrix = np.column_stack(cols[0] + cols[1])
    if with_scales:
        return matrix, np.array(scales + scales)
    return matrix


def _snap(x: float) -> Fraction | float:
    if abs(x) <= SNAP_TOL:
        return Fraction(0)
    q = Fraction(x).limit_denominator(SNAP_DENOMINATOR)
    return q if abs(float(q) - x) <= SNAP_TOL * max(1.0, abs(x)) else x


def numeric_kernel(matrix: np.ndarray, rtol: float = KERNEL_RTOL, scales=None):
    """Kernel basis in pivoted echelon form, and its pivot coordinates.

    Columns are divided by ``scales`` (default: their own norms) before the
    SVD and the choice of pivots. Scaling by the size of the ansatz function
    rather than of its residual keeps columns that vanish up to rounding from
    being blown up to unit size. The returned vectors are in the original
    coordinates, one per column, each equal to 1 on its own pivot and 0 on the
    others.
    """
    norms = np.array(scales, dtype=float) if scales is not None else np.linalg.norm(matrix, axis=0)
    norms[norms == 0] = 1.0
    _, sv, vt = np.linalg.svd(matrix / norms, full_matrices=True)
    smax = sv[0] if sv.size else 0.0
    rank = int(np.sum(sv > rtol * max(smax, 1.0)))
    null = vt[rank:].T
    if null.shape[1] == 0:
        return null, np.zeros(0, dtype=int)
    _, _, piv = scipy.linalg.qr(null.T, pivoting=True)
    piv = piv[: null.shape[1]]
    basis = (null @ np.linalg.inv(null[piv, :])) / norms[:, None]
    basis = basis / basis[piv, np.arange(len(piv))]
    return basis, piv


def _refine(matrix: np.ndarray, scales: np.ndarray, col: np.ndarray, pivot: int) -> np.ndarray:
    """Drop negligible coordinates of a kernel vector and re-solve for the rest
    with the pivot held at 1; removes the rounding noise that would otherwise
    block rational snapping."""
    weight = np.abs(col) * scales
    support = np.flatnonzero(weight > SUPPORT_RTOL * weight.max())
    others = support[support != pivot]
    out = np.zeros_like(col)
    out[pivot] = 1.0
    if others.size:
        a = matrix[:, others] / scales[others]
        x, *_ = np.linalg.lstsq(a, -matrix[:, pivot], rcond=None)
        out[others] = x / scales[others]
    return out


def _basis_points(kind: str, n: int, seed: int):
    if kind != "B":
        return ex.sample_points(n, seed, BASIS_BOX)
    u, x2 = ex.sample_points(n, seed, (LOG2_X1_RANGE, BASIS_BOX[1]))
    return np.exp2(u), x2


def killing_basis(
    s: ChristoffelSpec,
    dictionary: Optional[Sequence[ex.Expr]] = None,
    params: Optional[Mapping] = None,
    seed: int = BASIS_SEED,
    check_dimension: bool = True,
) -> List[VectorField]:
    """Explicit Killing fields spanned by the dictionary.

    ``params`` are substituted into the dictionary before sampling. Kernel
    coefficients are snapped to rationals with denominator <= 10^4; fields
    that fail :func:`is_killing` are discarded. Raises DictionaryInsufficient
    when fewer fields are found than :func:`killing_dimension` reports.
    """
    if dictionary is None:
        dictionary = standard_dictionary(s.kind, params)
    funcs = [ex.substitute(f, params) if params else f for f in dictionary]
    n_points = max(3 * len(funcs), 60)
    points = _basis_points(s.kind, n_points, seed)
    values = np.column_stack([ex.evaluate_array(f, *points) for f in funcs])
    funcs = [funcs[c] for c in _independent(values)]
    matrix, scales = residual_matrix(s, funcs, points, with_scales=True)
    kernel, pivots = numeric_kernel(matrix, scales=scales)
    m = len(funcs)
    fields = []
    for col, pivot in zip(kernel.T, pivots):
        col = _refine(matrix, scales, col, pivot)
        coeffs = [_snap(x) for x in col]
        inexact = [x for x in coeffs if isinstance(x, float)]
        if inexact:
            log.debug("kernel vector kept with %d unsnapped coefficients", len(inexact))
            coeffs = [Fraction(x) if isinstance(x, float) else x for x in coeffs]
        comps = [
            ex.add(*(ex.mul(ex.Const(c), f) for c, f in zip(coeffs[h * m:(h + 1) * m], funcs) if c))
            for h in (0, 1)
        ]
        X = VectorField(*comps)
        if is_killing(s, X):
            fields.append(X)
        else:
            log.debug("discarding kernel vector that fails verification: %s", X)
    if check_dimension:
        expected = killing_dimension(s)
        if len(fields) < expected:
            raise DictionaryInsufficient(
                f"dictionary recovered {len(fields)} of {expected} Killing fields",
                found=fields,
                expected=expected,
            )
    return fields


def in_span(X: VectorField, basis: Sequence[VectorField], params=None, points=None, tol: float = 1e-9) -> bool:
    """Least-squares membership test of X in the span of ``basis`` on sample points."""
    if points is None:
        points = ex.sample_points(max(40, 4 * len(basis)), BASIS_SEED + 1)
    target = X.values(points, params).ravel()
    if not basis:
        return bool(np.all(np.abs(target) <= tol))
    mat = np.column_stack([b.values(points, params).ravel() for b in basis])
    coef, *_ = np.linalg.lstsq(mat, target, rcond=None)
    return bool(np.all(np.abs(mat @ coef - target) <= tol))


def field_rank(fields: Sequence[VectorField], params=None, points=None, rtol: float = 1e-9) -> int:
    """Numerical rank of the fields as functions, sampled on ``points``."""
    if not fields:
        return 0
    if points is None:
        points = ex.sample_points(max(40, 4 * len(fields)), BASIS_SEED + 2)
    mat = np.column_stack([f.values(points, params).ravel() for f in fields])
    sv = np.linalg.svd(mat, compute_uv=False)
    return int(np.sum(sv > rtol * max(sv[0], 1.0)))
