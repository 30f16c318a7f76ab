"""Sample the product and interpolation inequalities on random fields.

Each suite draws fresh seeded fields, evaluates left side over right side and
reports the largest ratio seen. A bounded maximum that does not drift between
seed sets is the empirical evidence that the constant exists.

    python3 demos/inequality_suites.py
"""
import math

from mmpflow.inequalities import suite
from mmpflow.spectral import GridSpec

cube = GridSpec.cube(16)
for kind in ("lemma21_a", "lemma21_b"):
    for seed in (1, 2):
        rep = suite(kind, cube, 200, seed=seed)
        print(f"{kind} seed {seed}: max {rep.max_ratio:.4f} mean {rep.mean_ratio:.4f} "
              f"worst homogeneity defect {rep.max_homogeneity_defect:.1e}")

# On a periodic interval with q = 2 the interpolation inequality is an
# identity (Parseval), so every ratio is one up to roundoff.
line = GridSpec(256, 4, 4)
for q in (2.0, 4.0, math.inf):
    rep = suite("lemma22", line, 200, seed=1, k_peak=8, q=q, s=1.0)
    print(f"lemma22 q={q}: max {rep.max_ratio:.6f} min {min(x.ratio for x in rep.samples):.6f}")
print(f"sqrt(2) = {math.sqrt(2):.6f} bounds the q = inf, s = 1 ratio")
