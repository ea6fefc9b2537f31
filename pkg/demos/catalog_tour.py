"""
Checking every family in the catalog
====================================

Each family is instantiated at sampled parameters and torsion values, on and
off the branches where a larger algebra is claimed. Both solvers run, the
claimed fields are verified, and the algebra is identified from its
structure constants.
"""

import time

from affine_killing.catalog import verify_catalog

start = time.perf_counter()
reports = verify_catalog()

print(f"{'id':8s} {'cases':>5s}  dims        tags")
for r in reports:
    dims = sorted({c.dimension for c in r.cases})
    tags = sorted({c.tag for c in r.cases})
    mark = "ok" if r.ok else "FAILED " + str({k: v for k, v in r.flags().items() if not v})
    print(f"{r.entry_id:8s} {len(r.cases):5d}  {str(dims):10s}  {', '.join(tags)}  {mark}")

print(f"\n{sum(len(r.cases) for r in reports)} cases in {time.perf_counter() - start:.1f}s")
