"""Energy minimization for the lattice monopole equations.

Descent uses the weighted L^2 gradient with Armijo backtracking.  Close to the zero
locus the flow is sublinear along directions where the energy is only quartic, so once
the residual is small enough a Gauss-Newton direction (least squares against the
linearized residual, solved with LSQR) replaces the gradient; the same line search
keeps the energy strictly decreasing.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import LinearOperator, lsqr

from .lattice import (
    LatticeConfig, Tangent, Variant, apply_tangent, c1_from_real, c1_to_real, c2_from_real,
    c2_to_real, dense_d1, deformation_d1, deformation_d1_adjoint, real_layout, reunitarize, sw_residual,
)


@dataclass
class StepPolicy:
    armijo_c: float = 1e-4
    shrink: float = 0.5
    initial_step: float = 1.0
    grow: float = 2.0
    min_step: float = 1e-16
    newton: bool = True
    newton_switch: float = 1e-2
    lsqr_iter: int = 200
    dense_limit: int = 6000
    rcond: float = 1e-10
    max_extrapolate: int = 3


@dataclass
class SolveReport:
    iterations: int
    final_residual: float
    energy_trace: list
    converged: bool
    seed: int | None = None
    residual_trace: list = field(default_factory=list)
    step_kinds: list = field(default_factory=list)
    message: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def energy(cfg: LatticeConfig, variant: Variant = Variant()) -> float:
    """E = ||Dirac psi||^2 + ||Gamma(F^+) - mu(psi) - beta||^2 with a^4 weights."""
    r = sw_residual(cfg, variant)
    return r.dirac_norm ** 2 + r.curv_norm ** 2


def _masked(v: Tangent, mask) -> Tangent:
    if mask is None:
        return v
    return Tangent(v.alpha, v.psi * mask)


def gradient(cfg: LatticeConfig, variant: Variant = Variant(), spinor_mask=None,
             residual=None) -> Tangent:
    """Gradient of the energy in the a^4-weighted tangent metric: 2 D1^*(residual)."""
    r = residual if residual is not None else sw_residual(cfg, variant)
    return _masked(2.0 * deformation_d1_adjoint(cfg, r.curv_res, r.dirac_res), spinor_mask)


def gauss_newton_direction(cfg: LatticeConfig, residual, spinor_mask=None,
                           policy: StepPolicy | None = None) -> Tangent:
    """Minimum-norm least-squares solution of D1 v = -residual.

    Small problems use a dense SVD solve, which copes with the near-singular Jacobian
    at reducible solutions; larger ones fall back to LSQR.
    """
    policy = policy or StepPolicy()
    gb, cb = real_layout(cfg)
    zero = c1_to_real(Tangent(np.zeros_like(cfg.gauge.links), np.zeros_like(cfg.psi)), gb)
    rhs = -c2_to_real(residual.curv_res, residual.dirac_res, cb)
    if max(zero.size, rhs.size) <= policy.dense_limit:
        cols = None
        if spinor_mask is not None:
            # real and imaginary spinor coordinates both need a nonzero marker
            ones = Tangent(np.ones_like(cfg.gauge.links), np.full_like(cfg.psi, 1 + 1j))
            cols = c1_to_real(_masked(ones, spinor_mask), np.ones((len(gb), 1, 1))) != 0
        jac = dense_d1(cfg, cols)
        x = scipy.linalg.lstsq(jac, rhs, cond=policy.rcond, lapack_driver="gelsy")[0]
        return _masked(c1_from_real(cfg, x, gb), spinor_mask)

    def mv(x):
        c, d = deformation_d1(cfg, _masked(c1_from_real(cfg, x, gb), spinor_mask))
        return c2_to_real(c, d, cb)

    def rmv(y):
        c, d = c2_from_real(cfg, y, cb)
        return c1_to_real(_masked(deformation_d1_adjoint(cfg, c, d), spinor_mask), gb)

    op = LinearOperator((rhs.size, zero.size), matvec=mv, rmatvec=rmv, dtype=float)
    x = lsqr(op, rhs, atol=1e-14, btol=1e-14, iter_lim=policy.lsqr_iter)[0]
    return _masked(c1_from_real(cfg, x, gb), spinor_mask)


def solve(cfg0: LatticeConfig, variant: Variant = Variant(), tol: float = 1e-8,
          max_iter: int = 5000, policy: StepPolicy | None = None, seed: int | None = None,
          spinor_mask=None, callback=None):
    """Minimize the energy from cfg0; returns (config, SolveReport).

    Convergence is declared when the sum of the two residual norms drops below tol.
    Non-convergence is reported, not raised.  ``spinor_mask`` (broadcastable to the
    spinor shape) freezes spinor components; ``callback(cfg, report)`` runs after every
    accepted step.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    variant.check(cfg0)
    policy = policy or StepPolicy()
    w = cfg0.geom.weight
    cfg = LatticeConfig(cfg0.geom, reunitarize(cfg0.gauge), cfg0.psi.copy())
    if spinor_mask is not None:
        spinor_mask = np.broadcast_to(np.asarray(spinor_mask, dtype=float), cfg.psi.shape)
        cfg.psi = cfg.psi * spinor_mask
    res = sw_residual(cfg, variant)
    E = res.dirac_norm ** 2 + res.curv_norm ** 2
    report = SolveReport(0, res.total, [E], res.total < tol, seed, [res.total])
    step = policy.initial_step
    it = 0
    while not report.converged and it < max_iter:
        g = gradient(cfg, variant, spinor_mask, res)
        slope = -g.dot(g, w)
        if slope == 0.0:
            report.message = "zero gradient"
            break
        direction, t, kind = -1.0 * g, step, "gd"
        if policy.newton and res.total < policy.newton_switch:
            gn = gauss_newton_direction(cfg, res, spinor_mask, policy)
            gn_slope = g.dot(gn, w)
            if gn_slope < 0:
                direction, slope, t, kind = gn, gn_slope, 1.0, "gn"
        accepted = None
        while t >= policy.min_step:
            trial = apply_tangent(cfg, direction, t)
            trial = LatticeConfig(trial.geom, reunitarize(trial.gauge), trial.psi)
            tres = sw_residual(trial, variant)
            tE = tres.dirac_norm ** 2 + tres.curv_norm ** 2
            if tE < E and tE <= E + policy.armijo_c * t * slope:
                accepted = (trial, tres, tE)
                break
            t *= policy.shrink
        if accepted is None:
            report.message = "line search failed"
            break
        if kind == "gn" and t == 1.0:
            # along a cone of reducible solutions the GN step undershoots; extrapolate
            for _ in range(policy.max_extrapolate):
                t2 = 2 * t
                trial = apply_tangent(cfg, direction, t2)
                trial = LatticeConfig(trial.geom, reunitarize(trial.gauge), trial.psi)
                tres = sw_residual(trial, variant)
                tE = tres.dirac_norm ** 2 + tres.curv_norm ** 2
                if not (tE < accepted[2] and tE <= E + policy.armijo_c * t2 * slope):
                    break
                accepted, t = (trial, tres, tE), t2
        cfg, res, E = accepted
        it += 1
        if kind == "gd":
            step = t * policy.grow
        report.energy_trace.append(E)
        report.residual_trace.append(res.total)
        report.step_kinds.append(kind)
        report.converged = res.total < tol
        report.iterations = it
        if callback is not None:
            callback(cfg, report)
    report.iterations = it
    report.final_residual = res.total
    if not report.message:
        report.message = "converged" if report.converged else "max_iter reached"
    return cfg, report


def twisted_constant_solution(geom, beta) -> LatticeConfig:
    """Exact solution of the twisted abelian system: flat links, constant spinor.

    With H = -i Gamma(beta) (traceless Hermitian, eigenvalues +-lam) the spinor is
    sqrt(2 lam) times the +lam eigenvector, so that (psi psi^*)_0 = H.
    """
    from .lattice import flat_config
    from .quatspin import big_gamma
    cfg = flat_config(geom, "abelian")
    h = -1j * big_gamma(np.asarray(beta, dtype=float))
    ev, vec = np.linalg.eigh(h)
    x = np.sqrt(2 * ev[-1]) * vec[:, -1]
    cfg.psi[...] = x[:, None]
    return cfg


def perturbed_flat(geom, kind: str = "abelian", size: float = 1e-2, seed: int = 7,
                   det_links=None) -> LatticeConfig:
    """Flat configuration plus a seeded Gaussian perturbation of the links and spinor."""
    from .lattice import expm_algebra, flat_config, random_algebra_field
    rng = np.random.default_rng(seed)
    cfg = flat_config(geom, kind, det_links)
    g = cfg.gauge
    links = expm_algebra(size * random_algebra_field(geom.shape + (4,), g.group, g.rank, rng)) @ g.links
    psi = size * (rng.normal(size=cfg.psi.shape) + 1j * rng.normal(size=cfg.psi.shape))
    g2 = type(g)(g.kind, links, g.det_links)
    return LatticeConfig(geom, g2, psi)
