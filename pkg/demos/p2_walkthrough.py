"""The projective plane example: classes, dimensions and the cross-checked summary."""
import numpy as np

from gmonopole.kahler import OrientedPairData, classify_oriented_pair, p2_example_summary, p2_line_cohomology
from gmonopole.topology import cp2, enumerate_spinu2_classes, expected_dimension, has_spinc

X = cp2()
ok, lift = has_spinc(X)
print(f"{X.name}: e={X.euler} sigma={X.signature} Spin^c lift of w2: {lift}")

c1 = np.array([4])
c1_sq = int(c1 @ X.intersection_form @ c1)
classes = enumerate_spinu2_classes(X, X.w2_tangent, c1, (-8, 8))
print("admissible p1 for c1 = 4:", [c.p1 for c in classes])
for c in classes:
    print(f"  p1 = {c.p1:3d}  expected dimension {expected_dimension(c.p1, c1_sq, X.euler, X.signature)}")

for d in (-4, -3, -1, 0, 1, 2):
    print(f"h*(O({d})) = {p2_line_cohomology(d)}")

print("pair with nonzero section on T(-1):", classify_oriented_pair(OrientedPairData("1/2", 0)))
print(p2_example_summary())
