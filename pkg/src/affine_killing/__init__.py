"""Affine Killing vector fields of two-dimensional connections with torsion."""
