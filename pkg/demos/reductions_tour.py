"""Minimal admissible subpairs and the abelian reduction of the PU(2) system."""
import numpy as np

from gmonopole.lattice import LatticeGeometry, Variant, random_config, sw_residual
from gmonopole.reductions import (
    SubpairSpec, embed_abelian_to_pu2, enumerate_minimal_admissible, is_admissible, maximal_torus,
    quadratic_value, twisted_abelian_residual, weight_space_criterion,
)

for group in ("su2", "u2", "sp2"):
    print(group)
    for s in enumerate_minimal_admissible(group):
        print(f"  {s.label:55s} admissible={bool(is_admissible(s))}")

for group in ("su2", "u2"):
    for w, basis in weight_space_criterion(maximal_torus(group), group):
        print(f"{group} weight {w}: line spanned by {np.round(basis[0], 3)}")

res = is_admissible(SubpairSpec("u2", maximal_torus("u2"), list(np.eye(2))))
print("(T, C^2) in U(2):", res.reason, "value", quadratic_value(res.witness_k, res.witness_v))

rng = np.random.default_rng(0)
geom = LatticeGeometry(3, 0.8)
ab = random_config(geom, "abelian", rng)
det = np.exp(0.2j * rng.normal(size=geom.shape + (4,)))
pu = sw_residual(embed_abelian_to_pu2(ab, det), Variant("pu2"))
d, c = twisted_abelian_residual(ab, det)
w = np.sqrt(geom.weight)
print(f"PU(2) residual {pu.dirac_norm:.6f} {pu.curv_norm:.6f}; "
      f"twisted abelian {w * np.linalg.norm(d):.6f} {w * np.linalg.norm(c) / np.sqrt(2):.6f} (curvature / sqrt 2)")
