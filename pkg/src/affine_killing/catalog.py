"""Catalog of homogeneous connection families with torsion.

Each entry is a family of Type A or Type B connections (or one of the two
mixed examples) written as templates in its parameters and in the torsion
components T1, T2. A family carries branches: conditions on (T1, T2) and the
parameters under which the Killing algebra is larger than generic, with the
claimed basis and the claimed algebra type. Any torsion matching no branch
is claimed to give the generic two-dimensional algebra.

The data lives in ``data/catalog.json``; another file can be used by passing
a path or setting ``AFFINE_KILLING_CATALOG``.
"""

from __future__ import annotations

import ast
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from . import expr as ex
from .connection import ChristoffelSpec, format_rational, parse_rational, symmetrize, torsion
from .errors import AffineKillingError, BadParams, ParseError, UnknownId
from .killing import DILATION, D1, D2, VectorField, field_rank, in_span, is_killing, killing_basis, killing_dimension
from .liealg import classify, structure_constants

log = logging.getLogger(__name__)

ENV_VAR = "AFFINE_KILLING_CATALOG"
TORSION_NAMES = ("T1", "T2")
GENERIC_BASIS = {"A": (D1, D2), "B": (DILATION, D2)}
GENERIC_TAG = {"A": "K_A", "B": "K_B"}
SAMPLES_PER_BRANCH = 3

Torsion = Tuple[Fraction, Fraction]


# --------------------------------------------------------------- predicates

class Predicate:
    """Boolean combination (and / or / not) of equalities and inequalities
    between polynomial expressions in T1, T2 and the family parameters.

    ``true`` and ``false`` are accepted as constants.
    """

    _CMP = {
        ast.Eq: lambda a, b: a == b,
        ast.NotEq: lambda a, b: a != b,
        ast.Lt: lambda a, b: a < b,
        ast.LtE: lambda a, b: a <= b,
        ast.Gt: lambda a, b: a > b,
        ast.GtE: lambda a, b: a >= b,
    }

    def __init__(self, text: str):
        self.text = text
        try:
            tree = ast.parse(text.replace("^", "**"), mode="eval")
        except SyntaxError as err:
            raise ParseError(f"cannot parse predicate {text!r}: {err.msg}") from None
        self._fn = self._compile(tree.body)

    def _compile(self, node):
        if isinstance(node, ast.BoolOp):
            parts = [self._compile(v) for v in node.values]
            if isinstance(node.op, ast.And):
                return lambda b: all(p(b) for p in parts)
            return lambda b: any(p(b) for p in parts)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.Not):
            inner = self._compile(node.operand)
            return lambda b: not inner(b)
        if isinstance(node, ast.Name) and node.id in ("true", "false"):
            value = node.id == "true"
            return lambda b: value
        if isinstance(node, ast.Compare):
            sides = [ex.parse(ast.unparse(s)) for s in [node.left, *node.comparators]]
            for s in sides:
                if ex.depends_on(s, "x1") or ex.depends_on(s, "x2"):
                    raise ParseError(f"predicate {self.text!r} may not mention coordinates")
            ops = []
            for op in node.ops:
                if type(op) not in self._CMP:
                    raise ParseError(f"unsupported comparison in {self.text!r}")
                ops.append(self._CMP[type(op)])

            def check(b, sides=sides, ops=ops):
                vals = [ex.evaluate(s, 0, 0, b) for s in sides]
                return all(op(vals[n], vals[n + 1]) for n, op in enumerate(ops))

            return check
        raise ParseError(f"unsupported syntax in predicate {self.text!r}")

    def __call__(self, bindings: Mapping[str, Fraction]) -> bool:
        return bool(self._fn(bindings))

    def names(self) -> set:
        tree = ast.parse(self.text.replace("^", "**"), mode="eval")
        return {n.id for n in ast.walk(tree) if isinstance(n, ast.Name)} - {"true", "false"}

    def __repr__(self):
        return f"Predicate({self.text!r})"


# ------------------------------------------------------------------ entries

@dataclass(frozen=True)
class Branch:
    when: Predicate
    tag: str
    basis: Tuple[Tuple[str, str], ...]
    param_samples: Optional[Tuple[Dict[str, Fraction], ...]] = None

    def fields(self, bindings: Mapping[str, Fraction]) -> List[VectorField]:
        out = []
        for a, b in self.basis:
            out.append(VectorField(ex.substitute(ex.parse(a), _consts(bindings)),
                                   ex.substitute(ex.parse(b), _consts(bindings))))
        return out


def _consts(bindings: Mapping[str, Fraction]) -> Dict[str, ex.Expr]:
    return {k: ex.Const(Fraction(v)) for k, v in bindings.items()}


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    kind: str
    label: str
    params: Tuple[str, ...]
    param_constraint: Predicate
    param_samples: Tuple[Dict[str, Fraction], ...]
    template: Tuple[Tuple[ex.Expr, ex.Expr], ...]
    constraint: Predicate
    branches: Tuple[Branch, ...]
    torsion_samples: Tuple[Torsion, ...]
    off_branch: bool = True

    @property
    def generic_kind(self) -> str:
        return "B" if self.kind == "B" else "A"

    def bindings(self, params: Mapping, t: Sequence) -> Dict[str, Fraction]:
        b = {k: parse_rational(v) for k, v in params.items()}
        b["T1"], b["T2"] = parse_rational(t[0]), parse_rational(t[1])
        return b

    def check_params(self, params: Mapping) -> Dict[str, Fraction]:
        missing = set(self.params) - set(params)
        extra = set(params) - set(self.params)
        if missing or extra:
            raise BadParams(f"{self.id} expects parameters {list(self.params)}, got {sorted(params)}")
        try:
            values = {k: parse_rational(v) for k, v in params.items()}
        except (ValueError, TypeError, ZeroDivisionError) as err:
            raise BadParams(f"{self.id}: {err}") from err
        if not self.param_constraint(values):
            raise BadParams(f"{self.id}: parameters {values} violate {self.param_constraint.text!r}")
        return values

    def spec(self, params: Mapping, t: Sequence) -> ChristoffelSpec:
        b = self.bindings(params, t)
        pairs = tuple((ex.evaluate(a, 0, 0, b), ex.evaluate(c, 0, 0, b)) for a, c in self.template)
        return ChristoffelSpec(pairs)

    def branch_for(self, params: Mapping, t: Sequence) -> Optional[Branch]:
        b = self.bindings(params, t)
        for br in self.branches:
            if br.when(b):
                return br
        return None

    def claimed(self, params: Mapping, t: Sequence) -> Tuple[List[VectorField], str]:
        """Claimed Killing basis and algebra tag at (params, T)."""
        br = self.branch_for(params, t)
        if br is None:
            return list(GENERIC_BASIS[self.generic_kind]), GENERIC_TAG[self.generic_kind]
        return br.fields(self.bindings(params, t)), br.tag


def _entry_from_json(doc: dict, pool: Sequence[Torsion]) -> CatalogEntry:
    try:
        kind = doc["kind"]
        if kind in ("A", "B"):
            xi = [ex.parse(s) for s in doc["xi"]]
            if len(xi) != 8:
                raise ParseError("xi needs 8 templates")
            zero = ex.ZERO
            template = tuple((x, zero) if kind == "A" else (zero, x) for x in xi)
        elif kind == "mixed":
            template = tuple((ex.parse(a), ex.parse(b)) for a, b in doc["pairs"])
            if len(template) != 8:
                raise ParseError("pairs needs 8 entries")
        else:
            raise ParseError(f"unknown kind {kind!r}")
        params = tuple(doc.get("params", ()))
        samples = tuple(
            {k: parse_rational(v) for k, v in s.items()} for s in doc.get("param_samples", [{}])
        )
        branches = []
        for br in doc["branches"]:
            ps = br.get("param_samples")
            branches.append(Branch(
                when=Predicate(br["when"]),
                tag=br["tag"],
                basis=tuple((a, b) for a, b in br["basis"]),
                param_samples=None if ps is None else tuple(
                    {k: parse_rational(v) for k, v in s.items()} for s in ps
                ),
            ))
        if "torsion_samples" in doc:
            tors = tuple((parse_rational(a), parse_rational(b)) for a, b in doc["torsion_samples"])
        else:
            tors = tuple(pool)
        return CatalogEntry(
            id=doc["id"],
            kind=kind,
            label=doc.get("label", doc["id"]),
            params=params,
            param_constraint=Predicate(doc.get("param_constraint", "true")),
            param_samples=samples,
            template=template,
            constraint=Predicate(doc.get("constraint", "true")),
            branches=tuple(branches),
            torsion_samples=tors,
            off_branch=bool(doc.get("off_branch", True)),
        )
    except (KeyError, TypeError, ValueError) as err:
        if isinstance(err, ParseError):
            raise
        raise ParseError(f"malformed catalog entry {doc.get('id', '?')}: {err}") from err


class Catalog:
    def __init__(self, entries: Sequence[CatalogEntry]):
        self.entries: Dict[str, CatalogEntry] = {e.id: e for e in entries}

    @staticmethod
    def bundled_text() -> str:
        return resources.files(__package__).joinpath("data/catalog.json").read_text(encoding="utf-8")

    @classmethod
    def load(cls, path: Optional[str] = None) -> "Catalog":
        """Read ``path``, else the file named by $AFFINE_KILLING_CATALOG, else the bundled data."""
        path = path or os.environ.get(ENV_VAR)
        if path:
            try:
                with open(path, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as err:
                raise ParseError(f"cannot read catalog {path}: {err}") from err
        else:
            text = cls.bundled_text()
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as err:
            raise ParseError(f"catalog is not valid JSON: {err}") from err
        return cls.from_json(doc)

    @classmethod
    def from_json(cls, doc: dict) -> "Catalog":
        if not isinstance(doc, dict) or not isinstance(doc.get("entries"), list):
            raise ParseError('catalog document needs an "entries" list')
        pool = tuple((parse_rational(a), parse_rational(b)) for a, b in doc.get("torsion_pool", []))
        return cls([_entry_from_json(e, pool) for e in doc["entries"]])

    def __getitem__(self, entry_id: str) -> CatalogEntry:
        try:
            return self.entries[entry_id]
        except KeyError:
            raise UnknownId(f"no catalog entry {entry_id!r}") from None

    def __iter__(self):
        return iter(self.entries[k] for k in self.ids())

    def __len__(self):
        return len(self.entries)

    def ids(self) -> List[str]:
        return sorted(self.entries)


_DEFAULT: Optional[Catalog] = None


def default_catalog() -> Catalog:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = Catalog.load()
    return _DEFAULT


# ------------------------------------------------------------ instantiation

@dataclass(frozen=True)
class Instance:
    id: str
    spec: ChristoffelSpec
    params: Dict[str, Fraction]
    torsion: Torsion
    constraint_ok: bool


def instantiate(entry_id: str, params: Optional[Mapping] = None, t: Sequence = (0, 0),
                catalog: Optional[Catalog] = None) -> Instance:
    """Connection of family ``entry_id`` at the given parameters and torsion.

    The torsion condition is reported in ``constraint_ok``, not enforced.
    """
    entry = (catalog or default_catalog())[entry_id]
    values = entry.check_params(dict(params or {}))
    tt = (parse_rational(t[0]), parse_rational(t[1]))
    spec = entry.spec(values, tt)
    ok = entry.constraint(entry.bindings(values, tt))
    return Instance(entry_id, spec, values, tt, ok)


# ------------------------------------------------------------- verification

@dataclass(frozen=True)
class Case:
    entry_id: str
    branch: Optional[int]  # None: off-branch (generic algebra claimed)
    params: Dict[str, Fraction]
    torsion: Torsion


def cases(entry: CatalogEntry, per_branch: int = SAMPLES_PER_BRANCH) -> List[Case]:
    """Deterministic sample plan: parameter samples paired with torsion
    samples that fall on each branch, then off-branch torsion samples."""
    out: List[Case] = []
    for n, br in enumerate(entry.branches):
        psamples = br.param_samples or entry.param_samples
        out.extend(_pick(entry, psamples, per_branch, lambda b, br=br: br.when(b), n))
    if entry.off_branch:
        def off(b):
            return not any(br.when(b) for br in entry.branches)
        out.extend(_pick(entry, entry.param_samples, per_branch, off, None))
    return out


def _pick(entry, psamples, count, accept, label) -> List[Case]:
    chosen: List[Case] = []
    used = set()
    rounds = max(count, len(psamples))
    for r in range(rounds):
        params = psamples[r % len(psamples)]
        for t in entry.torsion_samples:
            key = (tuple(sorted(params.items())), t)
            if key in used:
                continue
            if accept(entry.bindings(params, t)):
                used.add(key)
                chosen.append(Case(entry.id, label, dict(params), t))
                break
        if len(chosen) >= count:
            break
    return chosen


@dataclass
class CaseReport:
    entry_id: str
    branch: Optional[int]
    params: Dict[str, Fraction]
    torsion: Torsion
    expected_dim: int
    dimension: Optional[int] = None
    computed_basis_size: Optional[int] = None
    tag: Optional[str] = None
    expected_tag: str = ""
    dim_ok: bool = False
    basis_ok: bool = False
    tag_ok: bool = False
    inclusion_ok: bool = False
    solvers_agree: bool = False
    torsion_ok: bool = False
    sampled: bool = True
    errors: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.dim_ok and self.basis_ok and self.tag_ok and self.inclusion_ok \
            and self.solvers_agree and self.torsion_ok

    def to_json(self) -> dict:
        return {
            "id": self.entry_id,
            "branch": "off" if self.branch is None else self.branch,
            "params": {k: format_rational(v) for k, v in sorted(self.params.items())},
            "T": [format_rational(x) for x in self.torsion],
            "expected_dim": self.expected_dim,
            "dimension": self.dimension,
            "computed_basis_size": self.computed_basis_size,
            "expected_tag": self.expected_tag,
            "tag": self.tag,
            "dim_ok": self.dim_ok,
            "basis_ok": self.basis_ok,
            "tag_ok": self.tag_ok,
            "inclusion_ok": self.inclusion_ok,
            "solvers_agree": self.solvers_agree,
            "torsion_ok": self.torsion_ok,
            "sampled": self.sampled,
            "ok": self.ok,
            "errors": list(self.errors),
        }


def _torsion_matches(entry: CatalogEntry, spec: ChristoffelSpec, t: Torsion) -> bool:
    tv = torsion(spec)
    slot = 1 if entry.kind in ("B", "mixed") else 0
    for comp, value in zip((tv.T1, tv.T2), t):
        want = [Fraction(0), Fraction(0)]
        want[slot] = value
        if tuple(comp) != tuple(want):
            return False
    return True


def verify_case(case: Case, catalog: Optional[Catalog] = None) -> CaseReport:
    entry = (catalog or default_catalog())[case.entry_id]
    claimed, tag = entry.claimed(case.params, case.torsion)
    rep = CaseReport(case.entry_id, case.branch, case.params, case.torsion, len(claimed), expected_tag=tag)
    try:
        spec = entry.spec(case.params, case.torsion)
        rep.torsion_ok = _torsion_matches(entry, spec, case.torsion)
        dim = killing_dimension(spec)
        rep.dimension = dim
        rep.dim_ok = dim == len(claimed)
        computed = killing_basis(spec, params=case.params, check_dimension=False)
        rep.computed_basis_size = len(computed)
        rep.solvers_agree = len(computed) == dim
        claimed_killing = all(is_killing(spec, X) for X in claimed)
        independent = field_rank(claimed) == len(claimed)
        covered = all(in_span(X, claimed) for X in computed)
        rep.basis_ok = claimed_killing and independent and covered and rep.dim_ok
        sym = symmetrize(spec)
        rep.inclusion_ok = all(is_killing(sym, X) for X in list(computed) + list(claimed))
        rep.tag = classify(structure_constants(claimed)).tag
        rep.tag_ok = rep.tag == tag
    except AffineKillingError as err:
        rep.errors.append(f"{type(err).__name__}: {err}")
    return rep


@dataclass
class EntryReport:
    entry_id: str
    cases: List[CaseReport]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.cases)

    def flags(self) -> Dict[str, bool]:
        keys = ("dim_ok", "basis_ok", "tag_ok", "inclusion_ok", "solvers_agree", "torsion_ok")
        return {k: all(getattr(c, k) for c in self.cases) for k in keys}

    def to_json(self) -> dict:
        return {"id": self.entry_id, "ok": self.ok, **self.flags(), "cases": [c.to_json() for c in self.cases]}


def verify_entry(entry_id: str, catalog: Optional[Catalog] = None,
                 plan: Optional[Sequence[Case]] = None) -> EntryReport:
    """Check one family on its sample plan (or on ``plan`` if given)."""
    cat = catalog or default_catalog()
    entry = cat[entry_id]
    plan = list(plan) if plan is not None else cases(entry)
    return EntryReport(entry_id, [verify_case(c, cat) for c in plan])


def _verify_by_id(args):
    entry_id, path = args
    return verify_entry(entry_id, Catalog.load(path) if path else None)


def verify_catalog(ids: Optional[Sequence[str]] = None, catalog_path: Optional[str] = None,
                   workers: int = 1) -> List[EntryReport]:
    """Reports for every entry (or ``ids``), ordered by id."""
    cat = Catalog.load(catalog_path) if catalog_path else default_catalog()
    ids = sorted(ids) if ids else cat.ids()
    for i in ids:
        cat[i]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_verify_by_id, [(i, catalog_path) for i in ids]))
    else:
        reports = [verify_entry(i, cat) for i in ids]
    return sorted(reports, key=lambda r: r.entry_id)
