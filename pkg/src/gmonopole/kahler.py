"""Kahler-surface calculus on the flat torus lattice.

Complex coordinates are z1 = x0 - i x1, z2 = x2 - i x3.  With the Clifford conventions of
``quatspin`` the form w = e01 + e23 acts on positive spinors as diag(-2i, 2i), so row 0
of a 2 x 2 spinor is the Lambda^00 part phi and row 1 is the Lambda^02 part alpha.  In
these terms the Dirac operator reads

    row 0 = 2 dbar_1 phi - 2 d_2 alpha,     row 1 = 2 dbar_2 phi + 2 d_1 alpha,

and the curvature residual has blocks

    R00 = -i Lambda F - 1/2 (phi phi^* - alpha alpha^*)_0,   R01 = -X - (phi alpha^*)_0,

with Lambda F = F01 + F23 and X = (F02 - F13) + i (F03 + F12) the (0,2) part.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .lattice import (
    GaugeField, LatticeConfig, LatticeGeometry, Variant, cup_symplectic, curvature_pairing,
    deformation_d0, plaquette_curvature, polar_unitary, shift, sw_residual,
)
from .topology import cp2, enumerate_spinu2_classes, expected_dimension

KAHLER_OMEGA = np.zeros((4, 4))
KAHLER_OMEGA[0, 1] = KAHLER_OMEGA[2, 3] = 1.0
KAHLER_OMEGA -= KAHLER_OMEGA.T

# J d0 = -d1, J d2 = -d3 (columns are images of basis vectors)
STANDARD_J = np.array([[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]], dtype=float)


class CrossCheckError(RuntimeError):
    """Independently derived quantities disagree."""


# ----------------------------------------------------------------------------- splitting

@dataclass
class KahlerSplitSpinor:
    phi: np.ndarray
    alpha: np.ndarray

    def reassemble(self) -> np.ndarray:
        return np.stack([self.phi, self.alpha], axis=-2)


def split_spinor(psi) -> KahlerSplitSpinor:
    psi = np.asarray(psi, dtype=complex)
    if psi.shape[-2] != 2:
        raise ValueError("spinor must have a spin axis of length 2")
    return KahlerSplitSpinor(psi[..., 0, :].copy(), psi[..., 1, :].copy())


def check_kahler(J=None):
    """Refuse anything but the standard flat Kahler structure."""
    if J is None:
        return
    J = np.asarray(J, dtype=float)
    if J.shape != (4, 4) or np.abs(J @ J + np.eye(4)).max() > 1e-12 or np.abs(J.T @ J - np.eye(4)).max() > 1e-12:
        raise ValueError("not an orthogonal complex structure; the geometry is not Kahler")
    if np.abs(J - STANDARD_J).max() > 1e-12:
        raise ValueError("only the standard complex structure of the flat torus is supported")


# ----------------------------------------------------------------------------- stencils

def _cov_diff(W: np.ndarray, phi: np.ndarray, mu: int, a: float) -> np.ndarray:
    """Central covariant difference of a row-vector field transported by W."""
    Wm = W[..., mu, :, :]
    fw =np.einsum("...b,...cb->...c", _shift_vec(phi, mu, 1), Wm)
    bw = _shift_vec(np.einsum("...b,...bc->...c", phi, np.conj(Wm)), mu, -1)
    return (fw - bw) / (2 * a)


def _shift_vec(f: np.ndarray, mu: int, k: int) -> np.ndarray:
    return np.roll(f, -k, axis=mu - 5)


def dbar(W, phi, a):
    d = [_cov_diff(W, phi, mu, a) for mu in range(4)]
    return 0.5 * (d[0] - 1j * d[1]), 0.5 * (d[2] - 1j * d[3])


def dhol(W, alpha, a):
    d = [_cov_diff(W, alpha, mu, a) for mu in range(4)]
    return 0.5 * (d[0] + 1j * d[1]), 0.5 * (d[2] + 1j * d[3])


def _outer0(u, v):
    m = np.einsum("...a,...b->...ab", u, np.conj(v))
    return m - 0.5 * np.trace(m, axis1=-2, axis2=-1)[..., None, None] * np.eye(2)


def curvature_parts(g: GaugeField, geom: LatticeGeometry):
    """(Lambda F, X) with X the (0,2) component of the traceless curvature."""
    F, _ = plaquette_curvature(g, geom)
    lam = F[..., 0, 1, :, :] + F[..., 2, 3, :, :]
    X = (F[..., 0, 2, :, :] - F[..., 1, 3, :, :]) + 1j * (F[..., 0, 3, :, :] + F[..., 1, 2, :, :])
    return lam, X


def _wnorm(geom, *fields, mult=1.0) -> float:
    return float(np.sqrt(mult * geom.weight * sum(np.sum(np.abs(f) ** 2) for f in fields)))


def det_curvature_02(det_links, geom) -> float:
    g = GaugeField("abelian", np.asarray(det_links)[..., None, None])
    F, _ = plaquette_curvature(g, geom)
    X = (F[..., 0, 2, :, :] - F[..., 1, 3, :, :]) + 1j * (F[..., 0, 3, :, :] + F[..., 1, 2, :, :])
    return _wnorm(geom, X)


# ----------------------------------------------------------------------------- decoupling

@dataclass
class DecouplingReport:
    full_residual: float
    type1_residual: float
    type2_residual: float
    phi_norm: float
    alpha_norm: float
    mixed_flag: bool
    C: float
    C_prime: float
    type1_parts: dict
    type2_parts: dict

    def to_dict(self) -> dict:
        return {k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in self.__dict__.items()}


def type_residuals(cfg: LatticeConfig):
    """Residual components of the type-1 (alpha = 0) and type-2 (phi = 0) systems."""
    geom = cfg.geom
    W = cfg.gauge.transport()
    sp = split_spinor(cfg.psi)
    lam, X = curvature_parts(cfg.gauge, geom)
    d1, d2 = dbar(W, sp.phi, geom.a)
    h1, h2 = dhol(W, sp.alpha, geom.a)
    vort1 = -1j * lam - 0.5 * _outer0(sp.phi, sp.phi)
    vort2 = -1j * lam + 0.5 * _outer0(sp.alpha, sp.alpha)
    t1 = {"dbar_phi": _wnorm(geom, 2 * d1, 2 * d2), "vortex": _wnorm(geom, vort1),
          "f02": _wnorm(geom, X)}
    t2 = {"d_alpha": _wnorm(geom, 2 * h1, 2 * h2), "vortex": _wnorm(geom, vort2),
          "f02": _wnorm(geom, X)}
    # the curvature residual is traceless Hermitian: each block appears twice
    r1 = t1["dbar_phi"] + np.sqrt(2 * t1["vortex"] ** 2 + 2 * t1["f02"] ** 2)
    r2 = t2["d_alpha"] + np.sqrt(2 * t2["vortex"] ** 2 + 2 * t2["f02"] ** 2)
    return float(r1), float(r2), t1, t2


def decoupling_check(cfg: LatticeConfig, complex_structure=None, mixed_tol: float = 1e-6,
                     integrability_tol: float = 1e-9) -> DecouplingReport:
    """Compare the full PU(2) residual with the type-1 and type-2 decoupled residuals.

    With k the type minimizing (type_k residual + norm of the other spinor part), C is the
    smallest constant with that sum <= C * full at this configuration and
    C' = full / (type_k residual) compares the other way.
    """
    check_kahler(complex_structure)
    if cfg.gauge.kind != "pu2":
        raise ValueError("decoupling needs a pu2 configuration")
    geom = cfg.geom
    if det_curvature_02(cfg.gauge.det_links, geom) > integrability_tol:
        raise ValueError("the fixed determinant connection is not integrable")
    full = sw_residual(cfg, Variant("pu2")).total
    r1, r2, t1, t2 = type_residuals(cfg)
    sp = split_spinor(cfg.psi)
    pn, an = _wnorm(geom, sp.phi), _wnorm(geom, sp.alpha)
    # the nearer type decides which decoupled system the configuration is measured against
    fwd, back = min((r1 + an, r1), (r2 + pn, r2))
    C = fwd / full if full > 0 else (0.0 if fwd == 0 else np.inf)
    Cp = full / back if back > 0 else (1.0 if full == 0 else np.inf)
    return DecouplingReport(full, r1, r2, pn, an, bool(pn > mixed_tol and an > mixed_tol),
                            float(C), float(Cp), t1, t2)


TYPE_MASKS = {1: np.array([[1.0, 1.0], [0.0, 0.0]]), 2: np.array([[0.0, 0.0], [1.0, 1.0]])}


def solve_type(cfg: LatticeConfig, kind: int, tol: float = 1e-8, max_iter: int = 2000, **kw):
    """Solve the type-1 (alpha = 0) or type-2 (phi = 0) system by masked minimization."""
    from .solver import solve
    if kind not in TYPE_MASKS:
        raise ValueError("type must be 1 or 2")
    return solve(cfg, Variant("pu2"), tol=tol, max_iter=max_iter, spinor_mask=TYPE_MASKS[kind], **kw)


# ----------------------------------------------------------------------------- vortex and moment

def _sqrt_psd(h: np.ndarray) -> np.ndarray:
    ev, vec = np.linalg.eigh(h)
    return np.einsum("...ij,...j,...kj->...ik", vec, np.sqrt(ev), np.conj(vec))


def apply_metric(g: GaugeField, phi, h_deviation):
    """Move (C, phi) by the complex gauge transformation h^(1/2), h = (I + dev) / sqrt(det).

    Links are polar-projected back to SU(2), which is the lattice stand-in for the Chern
    connection of h.
    """
    dev = np.asarray(h_deviation, dtype=complex)
    if np.abs(dev - np.conj(np.swapaxes(dev, -1, -2))).max() > 1e-12:
        raise ValueError("metric perturbation must be Hermitian")
    if np.abs(np.trace(dev, axis1=-2, axis2=-1)).max() > 1e-12:
        raise ValueError("metric perturbation must be traceless (det h fixed)")
    h = np.eye(2) + dev
    if np.linalg.eigvalsh(h).min() <= 0:
        raise ValueError("perturbed metric is not positive definite")
    h = h / np.sqrt(np.real(np.linalg.det(h)))[..., None, None]
    s = _sqrt_psd(h)
    sinv = np.linalg.inv(s)
    links = np.empty_like(g.links)
    for mu in range(4):
        links[..., mu, :, :] = s @ g.links[..., mu, :, :] @ shift(sinv, mu)
    links = polar_unitary(links)
    links = links / np.sqrt(np.linalg.det(links))[..., None, None]
    phi = np.einsum("...b,...cb->...c", np.asarray(phi, dtype=complex), s)
    return GaugeField(g.kind, links, g.det_links), phi


def vortex_terms(g: GaugeField, phi, geom: LatticeGeometry):
    """(i Lambda F0, 1/2 (phi phi^*)_0) as site fields."""
    lam, _ = curvature_parts(g, geom)
    phi = np.asarray(phi, dtype=complex)
    return 1j * lam, 0.5 * _outer0(phi, phi)


def vortex_residual(g: GaugeField, phi, geom: LatticeGeometry, h_deviation=None) -> float:
    """L^2 norm of i Lambda F0_h + 1/2 (phi phi^*h)_0."""
    if h_deviation is not None:
        g, phi = apply_metric(g, phi, h_deviation)
    curv, mom = vortex_terms(g, phi, geom)
    return _wnorm(geom, curv + mom)


def pair_moment(cfg: LatticeConfig) -> np.ndarray:
    """m(C, phi) = Lambda F0 - (i/2)(phi phi^*)_0, su(2)-valued site field."""
    lam, _ = curvature_parts(cfg.gauge, cfg.geom)
    phi = split_spinor(cfg.psi).phi
    return lam - 0.5j * _outer0(phi, phi)


def pair_symplectic(cfg: LatticeConfig, v1, v2) -> float:
    """Kahler form of A x A0(E): cup product on links plus Re<i v1, v2> on phi."""
    conn = cup_symplectic(cfg, v1.alpha, v2.alpha, KAHLER_OMEGA)
    p1, p2 = v1.psi[..., 0, :], v2.psi[..., 0, :]
    return conn + cfg.geom.weight * float(np.real(np.vdot(1j * p1, p2)))


def pair_moment_identity(cfg: LatticeConfig, samples: int = 5, h: float = 1e-5, rng=None) -> float:
    """Max |d<m, f>(v) - Omega(f#, v)| over random f and v tangent to (C, phi)."""
    from .lattice import apply_tangent, random_algebra_field, random_tangent
    rng = rng or np.random.default_rng(0)
    worst = 0.0
    mask = TYPE_MASKS[1]
    for _ in range(samples):
        f = random_algebra_field(cfg.geom.shape, "su2", 2, rng)
        v = random_tangent(cfg, rng)
        v.psi = v.psi * mask

        def pair(c):
            return cfg.geom.weight * float(np.real(np.vdot(pair_moment(c), f)))
        lhs = (pair(apply_tangent(cfg, v, h)) - pair(apply_tangent(cfg, v, -h))) / (2 * h)
        rhs = pair_symplectic(cfg, deformation_d0(cfg, f), v)
        worst = max(worst, abs(lhs - rhs))
    return worst


# ----------------------------------------------------------------------------- stability

STABLE, POLYSTABLE, UNSTABLE = "stable", "polystable_not_stable", "unstable"


@dataclass
class OrientedPairData:
    mu_E: Fraction
    mu_Dphi: Fraction | None = None
    splits: tuple | None = None
    bundle_stable: bool | None = None
    bundle_polystable: bool | None = None

    def __post_init__(self):
        self.mu_E = Fraction(self.mu_E)
        if isinstance(self.mu_Dphi, str):
            if self.mu_Dphi != "none":
                raise ValueError("mu_Dphi must be a rational number or 'none'")
            self.mu_Dphi = None
        if self.mu_Dphi is not None:
            self.mu_Dphi = Fraction(self.mu_Dphi)
        if self.splits is not None:
            m1, m2 = (Fraction(s) for s in self.splits)
            if m1 + m2 != 2 * self.mu_E:
                raise ValueError("split slopes must add up to 2 mu_E")
            self.splits = (m1, m2)

    @classmethod
    def from_dict(cls, d: dict) -> "OrientedPairData":
        splits = d.get("splits")
        return cls(Fraction(str(d["mu_E"])), d.get("mu_Dphi") if d.get("mu_Dphi") in (None, "none")
                   else Fraction(str(d["mu_Dphi"])), tuple(Fraction(str(s)) for s in splits) if splits else None,
                   d.get("bundle_stable"), d.get("bundle_polystable"))

    def scaled(self, c) -> "OrientedPairData":
        c = Fraction(c)
        return OrientedPairData(self.mu_E * c, None if self.mu_Dphi is None else self.mu_Dphi * c,
                                None if self.splits is None else tuple(s * c for s in self.splits),
                                self.bundle_stable, self.bundle_polystable)


def classify_oriented_pair(d: OrientedPairData) -> str:
    if d.mu_Dphi is not None:
        if d.splits is not None:
            # phi lies in the first summand, so O(D_phi) is that summand
            if d.splits[0] != d.mu_Dphi:
                raise ValueError("with phi in E1 the divisor slope must equal mu_1")
            return STABLE if d.splits[0] < d.mu_E else UNSTABLE
        return STABLE if d.mu_Dphi < d.mu_E else UNSTABLE
    if d.splits is not None:
        raise ValueError("a splitting with the section in E1 needs phi != 0")
    if d.bundle_stable is None:
        raise ValueError("phi = 0 needs bundle_stable")
    if d.bundle_stable:
        if d.bundle_polystable is False:
            raise ValueError("a stable bundle is polystable")
        return STABLE
    return POLYSTABLE if d.bundle_polystable else UNSTABLE


def is_lambda_stable(lam, sup_lower, inf_upper) -> bool:
    """lam in (max(mu(E), sup mu(F')), inf mu(E/F)); the bounds are caller-supplied."""
    return Fraction(sup_lower) < Fraction(lam) < Fraction(inf_upper)


# ----------------------------------------------------------------------------- P^2 example

def _binom2(m: int) -> int:
    return (m + 2) * (m + 1) // 2 if m >= 0 else 0


def p2_line_cohomology(d: int) -> tuple:
    d = int(d)
    return _binom2(d), 0, _binom2(-3 - d)


MODULI_MODEL = "C^3/+-id"
MODULI_MODEL_COMPLEX_DIM = 3
ABELIAN_POINT_DIM = 0
EXAMPLE_C1 = 4
EXAMPLE_P1 = (-3, 1)


def p2_example_summary() -> dict:
    """Flagship cross-check: oriented pairs on T_P2(-1) with c1(det P^u) = 4."""
    # Euler sequence 0 -> O(-1) -> O^3 -> T(-1) -> 0
    h0m1, h1m1, _ = p2_line_cohomology(-1)
    h0_0, _, _ = p2_line_cohomology(0)
    if h1m1 != 0:
        raise CrossCheckError("H^1(O(-1)) must vanish for the Euler sequence count")
    h0_F = 3 * h0_0 - h0m1
    X = cp2()
    c1 = np.array([EXAMPLE_C1])
    c1_sq = int(c1 @ X.intersection_form @ c1)
    allowed = [c.p1 for c in enumerate_spinu2_classes(X, X.w2_tangent, c1, (-4, 2))]
    if sorted(allowed) != sorted(EXAMPLE_P1):
        raise CrossCheckError(f"congruence filter admits {allowed}, expected {EXAMPLE_P1}")
    chi = expected_dimension(EXAMPLE_P1[0], c1_sq, X.euler, X.signature)
    chi_prime = expected_dimension(EXAMPLE_P1[1], c1_sq, X.euler, X.signature)
    if chi != 2 * h0_F or chi != 2 * MODULI_MODEL_COMPLEX_DIM:
        raise CrossCheckError(f"chi = {chi}, 2 h0(F) = {2 * h0_F}, model dim = {2 * MODULI_MODEL_COMPLEX_DIM}")
    if chi_prime != ABELIAN_POINT_DIM:
        raise CrossCheckError(f"chi' = {chi_prime} but the moduli space is a single point")
    stab = classify_oriented_pair(OrientedPairData(Fraction(1, 2), Fraction(0)))
    if stab != STABLE:
        raise CrossCheckError("pairs with nonzero section on T(-1) must be stable")
    return {"h0_F": int(h0_F), "moduli_model": MODULI_MODEL, "chi": int(chi), "chi_prime": int(chi_prime),
            "p1_values": [int(p) for p in EXAMPLE_P1], "c1_sq": c1_sq,
            "compactification": "cone over Veronese image", "pair_stability": stab}
