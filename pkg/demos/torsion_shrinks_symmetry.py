"""
How torsion cuts down the affine symmetries of a flat plane
===========================================================

Start from a translation-invariant flat connection with six affine Killing
fields, add constant torsion in different directions, and watch the algebra
shrink.
"""

from fractions import Fraction

from affine_killing.catalog import instantiate
from affine_killing.killing import killing_basis, killing_dimension
from affine_killing.liealg import classify, structure_constants

# family A.M6.1 is flat when T = 0
for t in [(0, 0), (0, 1), (0, Fraction(-5, 2)), (1, 0), (1, 1)]:
    inst = instantiate("A.M6.1", {}, t)
    dim = killing_dimension(inst.spec)
    fields = killing_basis(inst.spec)
    kind = classify(structure_constants(fields))
    print(f"T = ({t[0]}, {t[1]}):  dim {dim}  algebra {kind.tag}  (on an enlarged branch: {inst.constraint_ok})")
    for X in fields:
        print("    ", X)

# %%
# Torsion along the second coordinate keeps four fields; any first component
# leaves only the translations.
