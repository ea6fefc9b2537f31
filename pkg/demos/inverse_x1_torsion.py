"""
A constant connection perturbed by torsion proportional to 1/x1
===============================================================

The symmetrized connection is translation invariant with six symmetries. The
torsion is not, so only some of them survive, and the survivors are all
multiples of d2: they no longer move points off a vertical line.
"""

from affine_killing.catalog import instantiate
from affine_killing.connection import format_rational, symmetrize, torsion
from affine_killing.killing import killing_basis, killing_dimension


def show(component):
    const, inv = (format_rational(q) for q in component)
    return f"{const} + {inv}/x1"


for t in [(0, 1), (0, 3), (2, 0)]:
    s = instantiate("X.IIB", {}, t).spec
    tv = torsion(s)
    print(f"t = {t}: T1 = {show(tv.T1)}, T2 = {show(tv.T2)}  ({s.kind} symbols)")
    print("  dimension with torsion   :", killing_dimension(s))
    print("  dimension without torsion:", killing_dimension(symmetrize(s)))
    for X in killing_basis(s):
        print("    ", X)
