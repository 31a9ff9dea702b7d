"""Energy descent on the lattice torus, an exact twisted solution and the Kahler splitting."""
import numpy as np

from gmonopole.kahler import decoupling_check, solve_type
from gmonopole.lattice import LatticeGeometry, Variant, deformation_harmonics, flat_config, sw_residual
from gmonopole.solver import perturbed_flat, solve, twisted_constant_solution

geom = LatticeGeometry(3, 1.0)

cfg, rep = solve(perturbed_flat(geom, "abelian", 1e-2, seed=7), tol=1e-8)
kinds = "".join("g" if k == "gd" else "N" for k in rep.step_kinds)
print(f"abelian: {rep.message} after {rep.iterations} steps, residual {rep.final_residual:.2e}")
print(f"  steps (g = gradient, N = Gauss-Newton): {kinds[:40]}...{kinds[-20:]}")
print(f"  energy {rep.energy_trace[0]:.3e} -> {rep.energy_trace[-1]:.3e}")

beta = (0.3, -0.1, 0.2)
exact = twisted_constant_solution(geom, beta)
print("twisted constant solution residual:", sw_residual(exact, Variant("twisted", beta)).total)

print("harmonic dimensions at the flat abelian point (n = 2):",
      deformation_harmonics(flat_config(LatticeGeometry(2)))[:3])

for k in (1, 2):
    out, rep = solve_type(perturbed_flat(geom, "pu2", 1e-2, seed=3), k)
    d = decoupling_check(out)
    print(f"type {k}: converged={rep.converged} full={d.full_residual:.2e} "
          f"phi={d.phi_norm:.2e} alpha={d.alpha_norm:.2e} C={d.C:.3f} C'={d.C_prime:.3f}")
