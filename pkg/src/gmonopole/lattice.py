"""Monopole equations on a periodic flat 4-torus.

Layout conventions
------------------
* Site fields have leading shape ``(n, n, n, n)``; the flattened site index is
  ``((x*n + y)*n + z)*n + t`` (numpy row-major order).
* Links ``U[x, mu]`` are r x r unitaries transporting from ``x + mu`` to ``x``; the gauge
  group acts by ``U[x, mu] -> g(x) U g(x + mu)^-1`` and spinors (2 x r) by ``psi -> psi g^T``.
* ``abelian`` fields have r = 1 and the links are the spinor transport; the determinant
  line then carries the squared links, so its curvature is twice the plaquette angle.
* ``pu2`` fields carry SU(2) links V and frozen phase links zeta; the spinor transport is
  ``zeta V`` and the determinant connection has links ``zeta**2``.  The gauge group is
  sitewise SU(2) and zeta is never changed.
* Plaquette ``P = U_mu(x) U_nu(x+mu) U_mu(x+nu)^* U_nu(x)^*`` and ``F = log(P) / a^2``.
* Tangent vectors are pairs (alpha, psi_dot) with alpha in g per link; a link moves as
  ``U -> exp(a alpha) U``.  All inner products carry the volume weight a^4.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import expm

from .momentmaps import SU2_BASIS, lie_basis, mu0G, project_tensor
from .quatspin import CLIFFORD, PAIRS, PAIR_PRODUCTS, SELF_DUAL_BASIS, big_gamma

KINDS = ("abelian", "pu2")
BRANCH_EPS = 1e-9
MAX_DENSE_DIM = 6000


class BranchCutError(ArithmeticError):
    """A plaquette sits at the branch cut of the matrix logarithm."""


@dataclass(frozen=True)
class LatticeGeometry:
    n: int
    a: float = 1.0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need at least 2 sites per direction")
        if not self.a > 0:
            raise ValueError("lattice spacing must be positive")

    @property
    def shape(self) -> tuple:
        return (self.n,) * 4

    @property
    def sites(self) -> int:
        return self.n ** 4

    @property
    def weight(self) -> float:
        return self.a ** 4


@dataclass
class GaugeField:
    kind: str
    links: np.ndarray
    det_links: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown gauge kind {self.kind!r}")
        self.links = np.asarray(self.links, dtype=complex)
        if self.kind == "abelian" and self.links.shape[-2:] != (1, 1):
            raise ValueError("abelian links must be 1 x 1")
        if self.kind == "pu2":
            if self.links.shape[-2:] != (2, 2):
                raise ValueError("pu2 links must be 2 x 2")
            if self.det_links is None:
                self.det_links = np.ones(self.links.shape[:-2], dtype=complex)
            self.det_links = np.asarray(self.det_links, dtype=complex)

    @property
    def rank(self) -> int:
        return self.links.shape[-1]

    @property
    def group(self) -> str:
        return "u1" if self.kind == "abelian" else "su2"

    def transport(self) -> np.ndarray:
        if self.kind == "pu2":
            return self.links * self.det_links[..., None, None]
        return self.links

    def copy(self) -> "GaugeField":
        det = None if self.det_links is None else self.det_links.copy()
        return GaugeField(self.kind, self.links.copy(), det)


@dataclass
class LatticeConfig:
    geom: LatticeGeometry
    gauge: GaugeField
    psi: np.ndarray

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=complex)
        r = self.gauge.rank
        if self.gauge.links.shape != self.geom.shape + (4, r, r):
            raise ValueError("link array does not match the geometry")
        if self.psi.shape != self.geom.shape + (2, r):
            raise ValueError("spinor array does not match the geometry")

    def copy(self) -> "LatticeConfig":
        return LatticeConfig(self.geom, self.gauge.copy(), self.psi.copy())


@dataclass(frozen=True)
class Variant:
    name: str = "plain"
    beta: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.name not in ("plain", "twisted", "pu2"):
            raise ValueError(f"unknown variant {self.name!r}")
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if len(self.beta) != 3:
            raise ValueError("beta must have three self-dual components")

    @property
    def kind(self) -> str:
        return "pu2" if self.name == "pu2" else "abelian"

    def check(self, cfg: LatticeConfig):
        if cfg.gauge.kind != self.kind:
            raise ValueError(f"variant {self.name!r} needs a {self.kind} gauge field")

    def twist(self, r: int) -> np.ndarray:
        """Hermitian central term subtracted in the curvature equation."""
        if self.name != "twisted":
            return np.zeros((2 * r, 2 * r), dtype=complex)
        return np.kron(1j * big_gamma(np.array(self.beta)), np.eye(r))


@dataclass
class MonopoleResidual:
    dirac_res: np.ndarray
    curv_res: np.ndarray
    dirac_norm: float
    curv_norm: float

    @property
    def total(self) -> float:
        return self.dirac_norm + self.curv_norm


@dataclass
class Tangent:
    alpha: np.ndarray
    psi: np.ndarray

    def __add__(self, o: "Tangent") -> "Tangent":
        return Tangent(self.alpha + o.alpha, self.psi + o.psi)

    def __sub__(self, o: "Tangent") -> "Tangent":
        return Tangent(self.alpha - o.alpha, self.psi - o.psi)

    def __mul__(self, s: float) -> "Tangent":
        return Tangent(self.alpha * s, self.psi * s)

    __rmul__ = __mul__

    def dot(self, o: "Tangent", weight: float = 1.0) -> float:
        return weight * float(np.real(np.vdot(self.alpha, o.alpha) + np.vdot(self.psi, o.psi)))


# ----------------------------------------------------------------------------- helpers

def shift(f: np.ndarray, mu: int, k: int = 1) -> np.ndarray:
    """f(x + k*mu) for a site field with exactly two trailing component axes.

    Site axes are located from the end so that leading batch axes broadcast through.
    """
    return np.roll(f, -k, axis=mu - 6)


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def project_algebra(m: np.ndarray, group: str) -> np.ndarray:
    """Frobenius projection of r x r matrices onto g (u(1) or su(2))."""
    anti = 0.5 * (m - dagger(m))
    if group == "su2":
        r = m.shape[-1]
        tr = np.trace(anti, axis1=-2, axis2=-1)[..., None, None] / r
        anti = anti - tr * np.eye(r)
    return anti


def polar_unitary(m: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(m)
    return u @ vh


def reunitarize(g: GaugeField) -> GaugeField:
    links = polar_unitary(g.links)
    if g.kind == "pu2":
        det = np.linalg.det(links)
        links = links / np.sqrt(det)[..., None, None]
    return GaugeField(g.kind, links, g.det_links)


def expm_algebra(x: np.ndarray) -> np.ndarray:
    """exp of anti-Hermitian r x r matrices (closed form for r <= 2)."""
    r = x.shape[-1]
    if r == 1:
        return np.exp(x)
    if r == 2:
        tr = np.trace(x, axis1=-2, axis2=-1)[..., None, None] / 2
        y = x - tr * np.eye(2)
        # y^2 = -theta^2 I for traceless anti-Hermitian y
        theta = np.sqrt(np.maximum(-np.real(np.trace(y @ y, axis1=-2, axis2=-1)) / 2, 0.0))
        sinc = np.sinc(theta / np.pi)[..., None, None]
        return np.exp(tr) * (np.cos(theta)[..., None, None] * np.eye(2) + sinc * y)
    flat = x.reshape(-1, r, r)
    return np.array([expm(m) for m in flat]).reshape(x.shape)


def _log_unitary(p: np.ndarray):
    """Principal log of plaquettes; returns (L, theta) with theta the rotation angle."""
    r = p.shape[-1]
    if r == 1:
        ang = np.angle(p)
        if np.any(np.abs(np.abs(ang) - np.pi) < BRANCH_EPS):
            raise BranchCutError("abelian plaquette at angle pi")
        return 1j * ang, np.abs(ang[..., 0, 0])
    half_tr = 0.5 * np.real(np.trace(p, axis1=-2, axis2=-1))
    if np.any(half_tr <= -1 + BRANCH_EPS):
        raise BranchCutError("plaquette trace at the matrix-log branch cut")
    theta = np.arccos(np.clip(half_tr, -1.0, 1.0))
    small = theta < 1e-4
    s = np.where(small, 1.0, np.sin(theta))
    fac = np.where(small, 1 + theta ** 2 / 6, theta / s)
    L = fac[..., None, None] * 0.5 * (p - dagger(p))
    return L, theta


def plaquettes(links: np.ndarray) -> dict:
    """P[(mu, nu)] for mu < nu, each of shape (..., r, r)."""
    out = {}
    for mu, nu in PAIRS:
        A, B = links[..., mu, :, :], shift(links[..., nu, :, :], mu)
        C, D = shift(links[..., mu, :, :], nu), links[..., nu, :, :]
        out[(mu, nu)] = A @ B @ dagger(C) @ dagger(D)
    return out


def curvature_scale(kind: str) -> float:
    return 2.0 if kind == "abelian" else 1.0


def plaquette_curvature(g: GaugeField, geom: LatticeGeometry):
    """Lattice curvature F (..., 4, 4, r, r) and its self-dual coordinates (..., 3, r, r).

    The self-dual coordinates are taken in the orthonormal basis used by quatspin.
    """
    r = g.rank
    F = np.zeros(geom.shape + (4, 4, r, r), dtype=complex)
    kappa = curvature_scale(g.kind)
    for (mu, nu), p in plaquettes(g.links).items():
        L, _ = _log_unitary(p)
        F[..., mu, nu, :, :] = kappa * L / geom.a ** 2
        F[..., nu, mu, :, :] = -F[..., mu, nu, :, :]
    sd = 0.5 * np.einsum("kij,...ijab->...kab", SELF_DUAL_BASIS, F)
    return F, sd


def curvature_gamma(F: np.ndarray) -> np.ndarray:
    """Gamma(F) as Hermitian (..., 2r, 2r) matrices: sum_{mu<nu} S_{mu nu} (x) F_{mu nu}."""
    r = F.shape[-1]
    out = 0
    for mu, nu in PAIRS:
        out = out + np.einsum("st,...ab->...satb", PAIR_PRODUCTS[mu, nu], F[..., mu, nu, :, :])
    return out.reshape(F.shape[:-4] + (2 * r, 2 * r))


# ----------------------------------------------------------------------------- Dirac

def _dirac(W: np.ndarray, psi: np.ndarray, a: float) -> np.ndarray:
    out = np.zeros_like(psi)
    for mu in range(4):
        Wm = W[..., mu, :, :]
        fwd = shift(psi, mu) @ np.swapaxes(Wm, -1, -2)
        bwd = shift(psi @ np.conj(Wm), mu, -1)
        out += np.einsum("st,...tb->...sb", CLIFFORD[mu], fwd - bwd)
    return out / (2 * a)


def _dirac_adjoint(W: np.ndarray, d: np.ndarray, a: float) -> np.ndarray:
    out = np.zeros_like(d)
    for mu in range(4):
        Md = np.einsum("ts,...tb->...sb", CLIFFORD[mu].conj(), d)
        Wm = W[..., mu, :, :]
        out += shift(Md, mu, -1) @ np.conj(shift(Wm, mu, -1))
        out -= shift(Md, mu) @ np.swapaxes(Wm, -1, -2)
    return out / (2 * a)


def dirac_apply(g: GaugeField, psi: np.ndarray, geom: LatticeGeometry) -> np.ndarray:
    """Central covariant-difference Dirac operator Sigma^+ -> Sigma^-."""
    return _dirac(g.transport(), np.asarray(psi, dtype=complex), geom.a)


# ----------------------------------------------------------------------------- residual

def _norm(f: np.ndarray, geom: LatticeGeometry) -> float:
    return float(np.sqrt(geom.weight * np.sum(np.abs(f) ** 2)))


def sw_residual(cfg: LatticeConfig, variant: Variant = Variant()) -> MonopoleResidual:
    variant.check(cfg)
    g, geom = cfg.gauge, cfg.geom
    F, _ = plaquette_curvature(g, geom)
    curv = curvature_gamma(F) - mu0G(cfg.psi, g.group) - variant.twist(g.rank)
    dirac = dirac_apply(g, cfg.psi, geom)
    return MonopoleResidual(dirac, curv, _norm(dirac, geom), _norm(curv, geom))


def gauge_transform(cfg: LatticeConfig, u: np.ndarray) -> LatticeConfig:
    """Apply a sitewise gauge transformation u (..., r, r); det(u) = 1 required for pu2."""
    g = cfg.gauge
    r = g.rank
    u = np.asarray(u, dtype=complex)
    if u.shape == cfg.geom.shape:
        u = u[..., None, None]
    if u.shape != cfg.geom.shape + (r, r):
        raise ValueError("gauge transformation has the wrong shape")
    if np.abs(dagger(u) @ u - np.eye(r)).max() > 1e-10:
        raise ValueError("gauge transformation must be unitary")
    if g.kind == "pu2" and np.abs(np.linalg.det(u) - 1).max() > 1e-10:
        raise ValueError("pu2 gauge transformations must have determinant 1")
    links = np.empty_like(g.links)
    for mu in range(4):
        links[..., mu, :, :] = u @ g.links[..., mu, :, :] @ dagger(shift(u, mu))
    psi = cfg.psi @ np.swapaxes(u, -1, -2)
    det = None if g.det_links is None else g.det_links.copy()
    return LatticeConfig(cfg.geom, GaugeField(g.kind, links, det), psi)


# ----------------------------------------------------------------------------- deformation complex

def apply_tangent(cfg: LatticeConfig, v: Tangent, t: float = 1.0) -> LatticeConfig:
    """Move along v: U -> exp(t a alpha) U, psi -> psi + t psi_dot (no re-unitarization)."""
    g = cfg.gauge
    links = expm_algebra(t * cfg.geom.a * v.alpha) @ g.links
    det = None if g.det_links is None else g.det_links.copy()
    return LatticeConfig(cfg.geom, GaugeField(g.kind, links, det), cfg.psi + t * v.psi)


def zero_tangent(cfg: LatticeConfig) -> Tangent:
    return Tangent(np.zeros_like(cfg.gauge.links), np.zeros_like(cfg.psi))


def deformation_d0(cfg: LatticeConfig, f: np.ndarray) -> Tangent:
    """Infinitesimal gauge action of f (..., r, r) in g: (-d_A f, psi f^T)."""
    g, a = cfg.gauge, cfg.geom.a
    f = np.asarray(f, dtype=complex)
    alpha = np.empty_like(g.links)
    for mu in range(4):
        U = g.links[..., mu, :, :]
        alpha[..., mu, :, :] = -(U @ shift(f, mu) @ dagger(U) - f) / a
    return Tangent(alpha, cfg.psi @ np.swapaxes(f, -1, -2))


def deformation_d0_adjoint(cfg: LatticeConfig, v: Tangent) -> np.ndarray:
    g, a = cfg.gauge, cfg.geom.a
    out = np.zeros(cfg.geom.shape + (g.rank, g.rank), dtype=complex)
    for mu in range(4):
        U = g.links[..., mu, :, :]
        w = v.alpha[..., mu, :, :]
        out += w / a
        out -= shift(dagger(U) @ w @ U, mu, -1) / a
    out += np.swapaxes(dagger(cfg.psi) @ v.psi, -1, -2)
    return project_algebra(out, g.group)


def _dlog(L: np.ndarray, theta: np.ndarray, Y: np.ndarray, adjoint: bool = False) -> np.ndarray:
    """Derivative of the principal log at P = exp(L) along the left-trivialized Y."""
    if L.shape[-1] == 1:
        return Y
    nrm2 = np.real(np.einsum("...ij,...ij->...", L.conj(), L))
    safe = np.where(nrm2 > 1e-30, nrm2, 1.0)
    par_c = np.real(np.einsum("...ij,...ij->...", L.conj(), Y)) / safe
    par_c = np.where(nrm2 > 1e-30, par_c, 0.0)
    par = par_c[..., None, None] * L
    small = theta < 1e-4
    tc = np.where(small, 1 - theta ** 2 / 3, theta / np.tan(np.where(small, 1.0, theta)))
    comm = L @ Y - Y @ L
    sign = 0.5 if adjoint else -0.5
    return par + tc[..., None, None] * (Y - par) + sign * comm


def _plaquette_parts(links: np.ndarray):
    for mu, nu in PAIRS:
        A, B = links[..., mu, :, :], shift(links[..., nu, :, :], mu)
        C, D = shift(links[..., mu, :, :], nu), links[..., nu, :, :]
        ABCd = A @ B @ dagger(C)
        P = ABCd @ dagger(D)
        yield mu, nu, A, ABCd, P


def deformation_d1(cfg: LatticeConfig, v: Tangent, variant: Variant | None = None):
    """Directional derivative of the residual map; returns (curv, dirac) arrays."""
    g, geom = cfg.gauge, cfg.geom
    a, r = geom.a, g.rank
    kappa = curvature_scale(g.kind)
    X = a * v.alpha
    dF = np.zeros(X.shape[:-3] + (4, 4, r, r), dtype=complex)
    for mu, nu, A, ABCd, P in _plaquette_parts(g.links):
        Y = (X[..., mu, :, :] + A @ shift(X[..., nu, :, :], mu) @ dagger(A)
             - ABCd @ shift(X[..., mu, :, :], nu) @ dagger(ABCd)
             - P @ X[..., nu, :, :] @ dagger(P))
        L, theta = _log_unitary(P)
        dF[..., mu, nu, :, :] = kappa * _dlog(L, theta, Y) / a ** 2
    psi = cfg.psi
    vp, vv = psi.reshape(psi.shape[:-2] + (-1,)), v.psi.reshape(v.psi.shape[:-2] + (-1,))
    dmu = project_tensor(np.einsum("...i,...j->...ij", vv, vp.conj())
                         + np.einsum("...i,...j->...ij", vp, vv.conj()), g.group)
    curv = curvature_gamma(dF) - dmu
    W = g.transport()
    dW = X @ W
    dirac = _dirac(W, v.psi, a)
    for mu in range(4):
        fwd = shift(psi, mu) @ np.swapaxes(dW[..., mu, :, :], -1, -2)
        bwd = shift(psi @ np.conj(dW[..., mu, :, :]), mu, -1)
        dirac += np.einsum("st,...tb->...sb", CLIFFORD[mu], fwd - bwd) / (2 * a)
    return curv, dirac


def deformation_d1_adjoint(cfg: LatticeConfig, curv: np.ndarray, dirac: np.ndarray) -> Tangent:
    """Adjoint of deformation_d1 for the weighted real L^2 products on both sides."""
    g, geom = cfg.gauge, cfg.geom
    a, r, group = geom.a, g.rank, g.group
    kappa = curvature_scale(g.kind)
    curv = project_tensor(curv, group)
    c4 = curv.reshape(curv.shape[:-2] + (2, r, 2, r))
    psi = cfg.psi
    vp = psi.reshape(psi.shape[:-2] + (-1,))
    # moment term
    dpsi = -2 * np.einsum("...ij,...j->...i", curv, vp).reshape(psi.shape)
    # Dirac in psi
    W = g.transport()
    dpsi += _dirac_adjoint(W, dirac, a)
    # link cotangent with respect to X = a alpha
    GX = np.zeros_like(g.links)
    for mu in range(4):
        Wm = W[..., mu, :, :]
        M = CLIFFORD[mu]
        T = shift(psi, mu) @ np.swapaxes(Wm, -1, -2)
        MT = np.einsum("st,...tb->...sb", M, T)
        GX[..., mu, :, :] += np.swapaxes(dirac, -1, -2) @ np.conj(MT) / (2 * a)
        Mpsi = np.einsum("st,...tb->...sb", M, psi)
        d_next = shift(dirac, mu)
        GX[..., mu, :, :] -= (np.swapaxes(Mpsi, -1, -2) @ np.conj(d_next) @ dagger(Wm)) / (2 * a)
    for mu, nu, A, ABCd, P in _plaquette_parts(g.links):
        Q = np.einsum("...satb,st->...ab", c4, np.conj(PAIR_PRODUCTS[mu, nu]))
        Q = project_algebra(Q, group)
        L, theta = _log_unitary(P)
        Gy = kappa * _dlog(L, theta, Q, adjoint=True) / a ** 2
        GX[..., mu, :, :] += Gy
        GX[..., nu, :, :] += shift(dagger(A) @ Gy @ A, mu, -1)
        GX[..., mu, :, :] -= shift(dagger(ABCd) @ Gy @ ABCd, nu, -1)
        GX[..., nu, :, :] -= dagger(P) @ Gy @ P
    return Tangent(a * project_algebra(GX, group), dpsi)


# ----------------------------------------------------------------------------- harmonic spaces

def _algebra_basis(group: str, r: int) -> np.ndarray:
    return lie_basis(group, r)


def _c2_basis(group: str, r: int) -> np.ndarray:
    return np.array([np.kron(s, b) for s in SU2_BASIS for b in lie_basis(group, r)])


def real_layout(cfg: LatticeConfig):
    g = cfg.gauge
    gb = _algebra_basis(g.group, g.rank)
    cb = _c2_basis(g.group, g.rank)
    return gb, cb


def c1_from_real(cfg, vec, gb):
    """Tangent from real coordinates; a leading batch axis on ``vec`` is carried through."""
    vec = np.asarray(vec, dtype=float)
    batch = vec.shape[:-1]
    nlink = cfg.gauge.links.shape[:-2]
    k = len(gb)
    na = int(np.prod(nlink)) * k
    alpha = np.tensordot(vec[..., :na].reshape(batch + nlink + (k,)), gb, axes=1)
    z = vec[..., na:].reshape(batch + cfg.psi.shape + (2,))
    return Tangent(alpha, z[..., 0] + 1j * z[..., 1])


def _flatten(parts, batch):
    return np.concatenate([p.reshape(batch + (-1,)) for p in parts], axis=-1)


def c1_to_real(v: Tangent, gb) -> np.ndarray:
    batch = v.psi.shape[:-6]
    coef = np.real(np.einsum("kij,...ij->...k", gb.conj(), v.alpha))
    return _flatten([coef, np.stack([v.psi.real, v.psi.imag], -1)], batch)


def c2_from_real(cfg, vec, cb):
    k = len(cb)
    nc = cfg.geom.sites * k
    curv = np.tensordot(vec[:nc].reshape(cfg.geom.shape + (k,)), cb, axes=1)
    z = vec[nc:].reshape(cfg.psi.shape + (2,))
    return curv, z[..., 0] + 1j * z[..., 1]


def c2_to_real(curv, dirac, cb) -> np.ndarray:
    batch = dirac.shape[:-6]
    coef = np.real(np.einsum("kij,...ij->...k", cb.conj(), curv))
    return _flatten([coef, np.stack([dirac.real, dirac.imag], -1)], batch)


def c1_dim(cfg: LatticeConfig) -> int:
    k = len(lie_basis(cfg.gauge.group, cfg.gauge.rank))
    return cfg.gauge.links[..., 0, 0].size * k + 2 * cfg.psi.size


def dense_d1(cfg: LatticeConfig, column_mask=None, chunk: int = 128) -> np.ndarray:
    """Real matrix of D1 in orthonormal bases; masked-out columns are left zero.

    Columns are evaluated in batches by pushing a leading batch axis through D1.
    """
    gb, cb = real_layout(cfg)
    n1 = c1_dim(cfg)
    n2 = cfg.geom.sites * len(cb) + 2 * cfg.psi.size
    if max(n1, n2) > MAX_DENSE_DIM:
        raise ValueError(f"deformation complex too large for dense analysis ({n1} x {n2})")
    cols = np.arange(n1) if column_mask is None else np.flatnonzero(column_mask)
    d1 = np.zeros((n2, n1))
    for start in range(0, cols.size, chunk):
        idx = cols[start:start + chunk]
        e = np.zeros((idx.size, n1))
        e[np.arange(idx.size), idx] = 1.0
        curv, dirac = deformation_d1(cfg, c1_from_real(cfg, e, gb))
        d1[:, idx] = c2_to_real(curv, dirac, cb).T
    return d1


def dense_operators(cfg: LatticeConfig, variant: Variant | None = None):
    """Real matrices of D0 and D1 in orthonormal bases (volume weights cancel)."""
    gb, _ = real_layout(cfg)
    shape = cfg.geom.shape
    k = len(gb)
    n0 = cfg.geom.sites * k
    d1 = dense_d1(cfg)
    d0 = np.empty((d1.shape[1], n0))
    for j in range(n0):
        e = np.zeros(n0)
        e[j] = 1.0
        f = np.tensordot(e.reshape(shape + (k,)), gb, axes=1)
        d0[:, j] = c1_to_real(deformation_d0(cfg, f), gb)
    return d0, d1


def deformation_harmonics(cfg: LatticeConfig, variant: Variant | None = None, rtol: float = 1e-8):
    """(h0, h1, h2) of the discrete complex by singular-value thresholding (n <= 3)."""
    if cfg.geom.n > 3:
        raise ValueError("harmonic-space computation is limited to n <= 3")
    d0, d1 = dense_operators(cfg, variant)

    def rank(m):
        s = np.linalg.svd(m, compute_uv=False)
        return int(np.sum(s > rtol * max(s.max(initial=0.0), 1.0)))

    r0, r1 = rank(d0), rank(d1)
    h0 = d0.shape[1] - r0
    h1 = (d1.shape[1] - r1) - r0
    h2 = d1.shape[0] - r1
    return h0, h1, h2


# ----------------------------------------------------------------------------- constructors

def flat_config(geom: LatticeGeometry, kind: str = "abelian", det_links=None) -> LatticeConfig:
    r = 1 if kind == "abelian" else 2
    links = np.broadcast_to(np.eye(r, dtype=complex), geom.shape + (4, r, r)).copy()
    det = None
    if kind == "pu2":
        det = np.ones(geom.shape + (4,), dtype=complex) if det_links is None else np.asarray(det_links)
    return LatticeConfig(geom, GaugeField(kind, links, det), np.zeros(geom.shape + (2, r), dtype=complex))


def random_algebra_field(shape: tuple, group: str, r: int, rng: np.random.Generator) -> np.ndarray:
    gb = lie_basis(group, r)
    return np.tensordot(rng.normal(size=shape + (len(gb),)), gb, axes=1)


def random_gauge_transform(cfg: LatticeConfig, rng: np.random.Generator, scale: float = 1.0):
    f = random_algebra_field(cfg.geom.shape, cfg.gauge.group, cfg.gauge.rank, rng)
    return expm_algebra(scale * f)


def random_config(geom: LatticeGeometry, kind: str, rng: np.random.Generator,
                  link_scale: float = 0.3, psi_scale: float = 0.5,
                  det_scale: float = 0.0) -> LatticeConfig:
    cfg = flat_config(geom, kind)
    g = cfg.gauge
    links = expm_algebra(link_scale * random_algebra_field(geom.shape + (4,), g.group, g.rank, rng))
    det = None
    if kind == "pu2":
        det = np.exp(1j * det_scale * rng.normal(size=geom.shape + (4,)))
    psi = psi_scale * (rng.normal(size=cfg.psi.shape) + 1j * rng.normal(size=cfg.psi.shape))
    return LatticeConfig(geom, GaugeField(kind, links, det), psi)


def random_tangent(cfg: LatticeConfig, rng: np.random.Generator) -> Tangent:
    g = cfg.gauge
    alpha = random_algebra_field(cfg.geom.shape + (4,), g.group, g.rank, rng)
    psi = rng.normal(size=cfg.psi.shape) + 1j * rng.normal(size=cfg.psi.shape)
    return Tangent(alpha, psi)


def site_index(x: int, y: int, z: int, t: int, n: int) -> int:
    return ((x * n + y) * n + z) * n + t


# ----------------------------------------------------------------------------- field snapshots

def write_field_csv(path, field_values: np.ndarray, geom: LatticeGeometry, kind: str) -> Path:
    """Write a site field as CSV: header (n, a, kind), then one row per complex entry.

    Rows are ordered by site index then by the row-major component index.
    """
    path = Path(path)
    vals = np.asarray(field_values, dtype=complex).reshape(geom.sites, -1)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "a", "kind"])
        w.writerow([geom.n, repr(float(geom.a)), kind])
        w.writerow(["site", "component", "re", "im"])
        for s in range(vals.shape[0]):
            for c in range(vals.shape[1]):
                w.writerow([s, c, repr(float(vals[s, c].real)), repr(float(vals[s, c].imag))])
    return path


def read_field_csv(path):
    """Inverse of write_field_csv; returns (values (sites, components), geometry, kind)."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    n, a, kind = int(rows[1][0]), float(rows[1][1]), rows[1][2]
    geom = LatticeGeometry(n, a)
    body = rows[3:]
    ncomp = max(int(r[1]) for r in body) + 1 if body else 0
    vals = np.zeros((geom.sites, ncomp), dtype=complex)
    for s, c, re, im in body:
        vals[int(s), int(c)] = float(re) + 1j * float(im)
    return vals, geom, kind


# ----------------------------------------------------------------------------- F^+ as a moment map

def curvature_pairing(cfg: LatticeConfig, f: np.ndarray, omega: np.ndarray) -> float:
    """<F_A, f omega> = a^4 sum_x sum_{mu<nu} Re tr(f(x)^* F_{mu nu}(x)) omega_{mu nu}."""
    F, _ = plaquette_curvature(cfg.gauge, cfg.geom)
    val = 0.0
    for mu, nu in PAIRS:
        val += omega[mu, nu] * np.real(np.sum(np.conj(f) * F[..., mu, nu, :, :]))
    return cfg.geom.weight * val


def cup_symplectic(cfg: LatticeConfig, beta: np.ndarray, alpha: np.ndarray, omega: np.ndarray) -> float:
    """Omega(beta, alpha) = kappa a^4 sum_x sum_{mu,nu} omega_{mu nu} Re tr(beta_mu(x)^* A alpha_nu(x+mu) A^*).

    The cochain cup product transports the second factor back along the link
    ``A = U_mu(x)``; with this pairing the moment identity for the curvature is exact
    on abelian lattices.
    """
    kappa = curvature_scale(cfg.gauge.kind)
    U = cfg.gauge.links
    val = 0.0
    for mu in range(4):
        A = U[..., mu, :, :]
        for nu in range(4):
            if mu == nu or omega[mu, nu] == 0:
                continue
            moved = A @ shift(alpha[..., nu, :, :], mu) @ dagger(A)
            val += omega[mu, nu] * np.real(np.sum(np.conj(beta[..., mu, :, :]) * moved))
    return kappa * cfg.geom.weight * val
