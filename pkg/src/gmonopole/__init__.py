"""Numerical workbench for non-abelian Seiberg-Witten (G-monopole) equations.

Submodules
----------
quatspin    quaternionic model of Spin(4), Clifford map and the two-form isomorphism
momentmaps  quadratic moment maps and a finite-difference moment identity check
topology    characteristic-class arithmetic for Spin^c, Spin^h, Spin^U(2) structures
lattice     discretized monopole equations on a periodic flat 4-torus
solver      energy descent for the monopole equations
kahler      decoupling on a flat Kahler torus, vortex equation, oriented-pair stability
reductions  admissible subpairs and the abelian-to-PU(2) embedding
"""

__version__ = "0.1.0"
