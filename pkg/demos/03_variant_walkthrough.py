"""Variant walkthrough: the four scores on a fixture you can check by hand.

All four variants share the same shape: dist_a measures how far the input
sits from its own class, dist_b how far from the nearest other class, and
the score is the ratio dist_a / dist_b. They differ only in what "far
from" means. Run it directly: python demos/03_variant_walkthrough.py
"""

import numpy as np

from dsadetect.dsa import NeighborhoodSpec, dsa0, dsa1, dsa2, dsa3
from dsadetect.nnindex import NeighborIndex
from dsadetect.traces import TraceSet

# 1-D training set, small enough to reason through by hand:
#   class A at 0.0 and 1.0, class B at 3.0
index = NeighborIndex(TraceSet([[0.0], [1.0], [3.0]]), [0, 0, 1], 2)
x = [0.9]
print(f"training: class A at 0.0, 1.0; class B at 3.0; input x = {x[0]}")

# Original form. dist_a: x to its nearest same-class point (1.0), so 0.1.
# dist_b starts FROM that anchor: 1.0 to the nearest class-B point (3.0),
# so 2.0. Score 0.1 / 2.0 = 0.05.
s0 = dsa0(index, x, 0)
print(f"\ndsa0: dist_a={s0.dist_a:.3f} dist_b={s0.dist_b:.3f} -> {s0.value:.6f}")
print(f"      anchors: same-class row {s0.anchor_a}, other-class row {s0.anchor_b}")

# First modification: dist_b is measured from x itself, not from the
# anchor. 0.9 to 3.0 is 2.1, so 0.1 / 2.1 = 0.047619. Note this is NOT
# always smaller than dsa0; either ordering occurs depending on geometry.
s1 = dsa1(index, x, 0)
print(f"dsa1: dist_a={s1.dist_a:.3f} dist_b={s1.dist_b:.3f} -> {s1.value:.6f}")

# Second modification: distances to class centroids instead of single
# points. Class A's centroid is 0.5, class B's is 3.0: 0.4 / 2.1.
s2 = dsa2(index, x, 0)
print(f"dsa2: dist_a={s2.dist_a:.3f} dist_b={s2.dist_b:.3f} -> {s2.value:.6f}")

# Third modification: distances to LOCAL means, the average of the k
# nearest class members around each anchor. It interpolates between the
# single-point view (k=1) and the centroid view (k >= class size). For
# the local view we need a class with more structure:
index3 = NeighborIndex(
    TraceSet([[0.0], [1.0], [1.2], [3.0], [3.4]]), [0, 0, 0, 1, 1], 2
)
print("\nricher training: class A at 0.0, 1.0, 1.2; class B at 3.0, 3.4")
s3 = dsa3(index3, x, 0, NeighborhoodSpec.k_nearest(2))
print(f"dsa3(k=2): dist_a={s3.dist_a:.3f} dist_b={s3.dist_b:.3f} -> {s3.value:.6f}")
print("          neighborhood means: {1.0, 1.2} -> 1.1 and {3.0, 3.4} -> 3.2")

# The two reductions, checked numerically:
r1 = dsa3(index3, x, 0, NeighborhoodSpec.k_nearest(1))
d1 = dsa1(index3, x, 0)
print(f"\ndsa3(k=1) == dsa1: {r1.value == d1.value}  ({r1.value:.6f})")
r2 = dsa3(index3, x, 0, NeighborhoodSpec.k_nearest(10))
d2 = dsa2(index3, x, 0)
print(f"dsa3(k=10) == dsa2 (k covers both classes): "
      f"{np.isclose(r2.value, d2.value, rtol=1e-12)}  ({r2.value:.6f})")

# Degenerate inputs have defined answers rather than surprises: an input
# equal to a training trace scores exactly 0, and an input at zero
# distance from the other class but not its own gets the infinity
# sentinel (or a raised error under policy="error").
dup = dsa1(index3, [1.0], 0)
print(f"\nexact duplicate of a training row -> {dup.value}")
pinned = dsa1(index3, [3.0], 0)
print(f"on the other class, far from home -> {pinned.value}")
