"""Command line front end.

Every command prints one JSON document on stdout (keys sorted) and logs to
stderr. Exit status: 0 success, 1 failed verification, 2 malformed input,
3 evaluation outside the domain.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from typing import List, Optional, Sequence

from . import killing as kl
from .catalog import Catalog, instantiate, verify_catalog
from .connection import (
    ChristoffelSpec, KEYS, TorsionVector, christoffel_at, curvature_at, format_rational,
    parse_rational, perturb, symmetrize, torsion,
)
from .errors import (
    AffineKillingError, BadParams, DomainError, InvalidAlgebra, NotTorsionFree, ParseError, UnknownId,
)
from .expr import ZERO_TEST_TOL
from .liealg import LieAlgebra, classify, standard_tables, structure_constants

log = logging.getLogger("affine_killing")

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_DOMAIN = 0, 1, 2, 3


class InputError(Exception):
    pass


def _pair(text: str) -> tuple:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected two comma-separated rationals, got {text!r}")
    try:
        return tuple(parse_rational(p) for p in parts)
    except (ValueError, ZeroDivisionError) as err:
        raise argparse.ArgumentTypeError(str(err)) from None


def _param(text: str) -> tuple:
    name, sep, value = text.partition("=")
    if not sep or not name:
        raise argparse.ArgumentTypeError(f"expected name=value, got {text!r}")
    return name.strip(), value.strip()


def _read_json(path: str):
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as err:
        raise InputError(f"cannot read {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise InputError(f"{path} is not valid JSON: {err}") from err


def _load_spec(args) -> ChristoffelSpec:
    if args.spec and args.id:
        raise InputError("give either --spec or --id, not both")
    if args.spec:
        return ChristoffelSpec.from_json(_read_json(args.spec))
    if args.id:
        params = dict(args.param or [])
        inst = instantiate(args.id, params, args.T, catalog=Catalog.load(args.catalog) if args.catalog else None)
        if not inst.constraint_ok:
            log.info("torsion %s is off every enlarged branch of %s", args.T, args.id)
        return inst.spec
    raise InputError("a connection is required: --spec FILE or --id CATALOG_ID")


def _spec_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--spec", metavar="FILE", help="connection JSON document ('-' for stdin)")
    p.add_argument("--id", metavar="ID", help="catalog entry instead of a spec file")
    p.add_argument("--param", metavar="NAME=VALUE", type=_param, action="append",
                   help="family parameter for --id (repeatable)")
    p.add_argument("--T", metavar="T1,T2", type=_pair, default=(Fraction(0), Fraction(0)),
                   help="torsion for --id (default 0,0)")


# ---------------------------------------------------------------- commands

def cmd_torsion(args) -> dict:
    t = torsion(_load_spec(args))
    out = {"T1": format_rational(t.T1[0]), "T2": format_rational(t.T2[0])}
    if t.T1[1] or t.T2[1]:
        out["T1_over_x1"] = format_rational(t.T1[1])
        out["T2_over_x1"] = format_rational(t.T2[1])
    return out


def cmd_symmetrize(args) -> dict:
    return symmetrize(_load_spec(args)).to_json()


def cmd_perturb(args) -> dict:
    t = TorsionVector((args.torsion[0], args.torsion_over_x1[0]), (args.torsion[1], args.torsion_over_x1[1]))
    return perturb(_load_spec(args), t).to_json()


def cmd_curvature(args) -> dict:
    s = _load_spec(args)
    g = christoffel_at(s, args.point)
    r = curvature_at(s, args.point)
    gam = {key: format_rational(g[int(key[0]) - 1, int(key[1]) - 1, int(key[2]) - 1]) for key in KEYS}
    curv = {}
    for l in (0, 1):
        for k in (0, 1):
            for i in (0, 1):
                for j in (0, 1):
                    curv[f"{l + 1}{k + 1}{i + 1}{j + 1}"] = format_rational(r[l, k, i, j])
    return {
        "point": [format_rational(x) for x in args.point],
        "christoffel": gam,
        "curvature": curv,
        "flat": all(v == "0" for v in curv.values()),
    }


def cmd_killing_dim(args) -> dict:
    return {"dimension": kl.killing_dimension(_load_spec(args), args.base_point)}


def cmd_killing_basis(args) -> dict:
    s = _load_spec(args)
    params = {k: parse_rational(v) for k, v in (args.param or [])}
    dim = kl.killing_dimension(s, args.base_point)
    fields = kl.killing_basis(s, params=params, seed=args.seed, check_dimension=False)
    fields = [X for X in fields if kl.is_killing(s, X, tol=args.tol)]
    out = {"dimension": dim, "fields": [X.to_text() for X in fields], "complete": len(fields) == dim}
    if len(fields) != dim:
        log.error("dictionary recovered %d of %d fields", len(fields), dim)
        args.exit_status = EXIT_FAILED
    return out


def cmd_classify(args) -> dict:
    given = [x for x in (args.algebra, args.table, args.spec, args.id) if x]
    if len(given) != 1:
        raise InputError("give exactly one of --algebra, --table, --spec, --id")
    if args.algebra:
        L = LieAlgebra.from_json(_read_json(args.algebra))
    elif args.table:
        tables = standard_tables()
        if args.table not in tables:
            raise InputError(f"unknown table {args.table!r}; known: {sorted(tables)}")
        L = tables[args.table]
    else:
        s = _load_spec(args)
        params = {k: parse_rational(v) for k, v in (args.param or [])}
        L = structure_constants(kl.killing_basis(s, params=params, seed=args.seed))
    return classify(L).summary()


def cmd_catalog_list(args) -> dict:
    cat = Catalog.load(args.catalog)
    return {"entries": [
        {
            "id": e.id,
            "kind": e.kind,
            "label": e.label,
            "params": list(e.params),
            "param_constraint": e.param_constraint.text,
            "constraint": e.constraint.text,
            "branches": [{"when": b.when.text, "dim": len(b.basis), "tag": b.tag} for b in e.branches],
        }
        for e in cat
    ]}


def cmd_catalog_check(args) -> dict:
    reports = verify_catalog(args.entry or None, catalog_path=args.catalog, workers=args.workers)
    ok = all(r.ok for r in reports)
    if not ok:
        args.exit_status = EXIT_FAILED
        for r in reports:
            if not r.ok:
                log.error("%s failed: %s", r.entry_id, {k: v for k, v in r.flags().items() if not v})
    return {"ok": ok, "entries": [r.to_json() for r in reports]}


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="affine-killing",
        description="Torsion split, affine Killing fields and algebra identification for connections on the plane.",
    )
    parser.add_argument("--base-point", type=_pair, default=kl.BASE_POINT, metavar="X1,X2",
                        help="base point for the prolongation (default 1,0)")
    parser.add_argument("--tol", type=float, default=ZERO_TEST_TOL, help="zero-test tolerance (default 1e-9)")
    parser.add_argument("--seed", type=int, default=kl.BASIS_SEED,
                        help=f"sampling seed for the dictionary solver (default {kl.BASIS_SEED})")
    parser.add_argument("--output", "-o", metavar="FILE", help="write JSON here instead of stdout")
    parser.add_argument("--catalog", metavar="FILE",
                        help="catalog data file (default: $AFFINE_KILLING_CATALOG or the bundled one)")
    parser.add_argument("--verbose", "-v", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("torsion", help="torsion components")
    _spec_options(p)
    p.set_defaults(func=cmd_torsion)

    p = sub.add_parser("symmetrize", help="torsion-free part as a spec document")
    _spec_options(p)
    p.set_defaults(func=cmd_symmetrize)

    p = sub.add_parser("perturb", help="add torsion to a torsion-free connection")
    _spec_options(p)
    p.add_argument("--torsion", type=_pair, default=(Fraction(0), Fraction(0)), metavar="A1,A2",
                   help="constant torsion parts")
    p.add_argument("--torsion-over-x1", type=_pair, default=(Fraction(0), Fraction(0)), metavar="B1,B2",
                   help="torsion parts proportional to 1/x1")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("curvature", help="symbols and curvature at a point")
    _spec_options(p)
    p.add_argument("--point", type=_pair, default=kl.BASE_POINT, metavar="X1,X2")
    p.set_defaults(func=cmd_curvature)

    p = sub.add_parser("killing-dim", help="dimension of the affine Killing algebra")
    _spec_options(p)
    p.set_defaults(func=cmd_killing_dim)

    p = sub.add_parser("killing-basis", help="explicit affine Killing fields")
    _spec_options(p)
    p.set_defaults(func=cmd_killing_basis)

    p = sub.add_parser("classify", help="identify a Lie algebra")
    _spec_options(p)
    p.add_argument("--algebra", metavar="FILE", help="structure-constant JSON document")
    p.add_argument("--table", metavar="NAME", help="one of the built-in reference algebras")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("catalog-list", help="list catalog families")
    p.set_defaults(func=cmd_catalog_list)

    p = sub.add_parser("catalog-check", help="verify catalog families")
    p.add_argument("entry", nargs="*", help="entry ids (default: all)")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_catalog_check)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    args.exit_status = EXIT_OK
    try:
        doc = args.func(args)
    except DomainError as err:
        log.error("%s", err)
        return EXIT_DOMAIN
    except (InputError, ParseError, BadParams, UnknownId, NotTorsionFree, InvalidAlgebra, ValueError) as err:
        log.error("%s", err)
        return EXIT_INPUT
    except AffineKillingError as err:
        log.error("%s: %s", type(err).__name__, err)
        return EXIT_FAILED
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return args.exit_status


if __name__ == "__main__":
    sys.exit(main())
