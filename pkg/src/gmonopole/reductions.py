"""Admissible subpairs (H, V0) of (G, V) and the abelian reduction of the PU(2) system.

Groups act on column vectors: SU(2), U(2) on C^2 and Sp(2) on H^2 = C^4, where a
quaternion alpha + j beta has complex coordinates (alpha, beta) and left multiplication
by i, j, k is diag(i, -i), [[0, -1], [1, 0]], [[0, -i], [-i, 0]].  The orthogonal
complement of h in g is taken for the trace form <a, b> = -Re tr(ab).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import (
    GaugeField, LatticeConfig, Variant, curvature_gamma, plaquette_curvature, sw_residual,
)
from .momentmaps import SU2_BASIS

TOL = 1e-10

_QI = np.diag([1j, -1j])
_QJ = np.array([[0, -1], [1, 0]], dtype=complex)
_QK = np.array([[0, -1j], [-1j, 0]], dtype=complex)
QUAT_UNITS = np.array([np.eye(2, dtype=complex), _QI, _QJ, _QK])


def quaternion_block(q) -> np.ndarray:
    """2 x 2 complex matrix of left multiplication by the quaternion (w, x, y, z)."""
    return np.tensordot(np.asarray(q, dtype=float), QUAT_UNITS, axes=1)


def _embed_quaternionic(blocks) -> np.ndarray:
    """Assemble a 2x2 array of quaternions (each a 4-vector) into a 4 x 4 complex matrix."""
    out = np.zeros((4, 4), dtype=complex)
    for r in range(2):
        for c in range(2):
            out[2 * r:2 * r + 2, 2 * c:2 * c + 2] = quaternion_block(blocks[r][c])
    return out


def _sp2_basis() -> np.ndarray:
    basis = []
    zero = np.zeros(4)
    for slot in range(2):
        for u in range(1, 4):
            q = np.eye(4)[u]
            b = [[zero, zero], [zero, zero]]
            b[slot][slot] = q
            basis.append(_embed_quaternionic(b))
    for u in range(4):
        q = np.eye(4)[u]
        qbar = q * np.array([1, -1, -1, -1])
        basis.append(_embed_quaternionic([[zero, q], [-qbar, zero]]))
    basis = np.array(basis)
    return basis / np.sqrt(np.real(np.einsum("kij,kij->k", basis.conj(), basis)))[:, None, None]


GROUP_DIM = {"su2": 2, "u2": 2, "sp2": 4}


def algebra_basis(group: str) -> np.ndarray:
    if group == "su2":
        return SU2_BASIS.copy()
    if group == "u2":
        return np.concatenate([SU2_BASIS, (1j * np.eye(2) / np.sqrt(2))[None]])
    if group == "sp2":
        return _sp2_basis()
    raise ValueError(f"unknown group {group!r}")


def _real(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m)
    return np.concatenate([m.real.reshape(m.shape[0], -1), m.imag.reshape(m.shape[0], -1)], 1)


def _span_basis(mats, tol=TOL) -> np.ndarray:
    """Orthonormal (real Frobenius) basis of the real span of a list of matrices."""
    mats = [np.asarray(m, dtype=complex) for m in mats]
    if not mats:
        return np.zeros((0, 0, 0), dtype=complex)
    shape = mats[0].shape
    r = _real(np.array(mats))
    _, s, vh = np.linalg.svd(r, full_matrices=False)
    keep = vh[s > tol * max(1.0, s.max(initial=0.0))]
    half = keep.shape[1] // 2
    return (keep[:, :half] + 1j * keep[:, half:]).reshape((-1,) + shape)


def orthogonal_complement(h_basis, group: str) -> np.ndarray:
    """Basis of h^perp inside g for -Re tr(ab) (equal to the real Frobenius product on g)."""
    g = algebra_basis(group)
    dim = GROUP_DIM[group]
    h = _span_basis(h_basis) if len(h_basis) else np.zeros((0, dim, dim), dtype=complex)
    rg = _real(g)
    if len(h):
        rh = _real(h)
        rg = rg - (rg @ rh.T) @ rh
    _, s, vh = np.linalg.svd(rg, full_matrices=False)
    keep = vh[s > 1e-8]
    half = keep.shape[1] // 2 if keep.size else 0
    if keep.size == 0:
        return np.zeros((0, dim, dim), dtype=complex)
    return (keep[:, :half] + 1j * keep[:, half:]).reshape((-1, dim, dim))


@dataclass
class SubpairSpec:
    group: str
    h_basis: list = field(default_factory=list)
    v0_basis: list = field(default_factory=list)
    contains_minus_id: bool = True
    label: str = ""

    def __post_init__(self):
        if self.group not in GROUP_DIM:
            raise ValueError(f"unknown group {self.group!r}")
        dim = GROUP_DIM[self.group]
        self.h_basis = [np.asarray(h, dtype=complex).reshape(dim, dim) for h in self.h_basis]
        self.v0_basis = [np.asarray(v, dtype=complex).reshape(dim) for v in self.v0_basis]
        for h in self.h_basis:
            if np.abs(h + h.conj().T).max() > TOL:
                raise ValueError("h_basis entries must be anti-Hermitian")
            resid = h - _project_onto(h, algebra_basis(self.group))
            if np.abs(resid).max() > 1e-8:
                raise ValueError("h_basis entry is not in the Lie algebra of G")

    @property
    def dim(self) -> int:
        return GROUP_DIM[self.group]

    def v0_matrix(self) -> np.ndarray:
        if not self.v0_basis:
            return np.zeros((self.dim, 0), dtype=complex)
        return np.array(self.v0_basis).T

    def is_lie_subalgebra(self, tol: float = 1e-8) -> bool:
        if not self.h_basis:
            return True
        span = _span_basis(self.h_basis)
        for a in self.h_basis:
            for b in self.h_basis:
                c = a @ b - b @ a
                if np.abs(c - _project_onto(c, span)).max() > tol:
                    return False
        return True

    def v0_invariant(self, tol: float = 1e-8) -> bool:
        B = self.v0_matrix()
        if B.shape[1] == 0:
            return True
        q, _ = np.linalg.qr(B)
        return all(np.abs(h @ B - q @ (q.conj().T @ h @ B)).max() < tol for h in self.h_basis)

    def conjugate(self, g: np.ndarray) -> "SubpairSpec":
        gi = np.linalg.inv(g)
        return SubpairSpec(self.group, [g @ h @ gi for h in self.h_basis],
                           [g @ v for v in self.v0_basis], self.contains_minus_id, self.label)

    def to_dict(self) -> dict:
        def enc(m):
            return [[float(z.real), float(z.imag)] for z in np.asarray(m).ravel()]
        return {"group": self.group, "label": self.label, "contains_minus_id": self.contains_minus_id,
                "h_basis": [enc(h) for h in self.h_basis], "v0_basis": [enc(v) for v in self.v0_basis]}

    @classmethod
    def from_dict(cls, d: dict) -> "SubpairSpec":
        def dec(a):
            a = np.asarray(a, dtype=float)
            return a[:, 0] + 1j * a[:, 1]
        return cls(d["group"], [dec(h) for h in d.get("h_basis", [])],
                   [dec(v) for v in d.get("v0_basis", [])], bool(d.get("contains_minus_id", True)),
                   d.get("label", ""))


def _project_onto(m, basis) -> np.ndarray:
    if len(basis) == 0:
        return np.zeros_like(m)
    coef = np.real(np.einsum("kij,ij->k", np.conj(basis), m))
    return np.tensordot(coef, basis, axes=1)


@dataclass
class AdmissibilityResult:
    admissible: bool
    witness_k: np.ndarray | None = None
    witness_v: np.ndarray | None = None
    reason: str = ""

    def __bool__(self):
        return self.admissible


def is_admissible(s: SubpairSpec, tol: float = 1e-9) -> AdmissibilityResult:
    """Check <i k v, v> = 0 for k in h^perp and v in V0, with a violating (k, v) as witness."""
    if not s.v0_invariant():
        raise ValueError("V0 is not invariant under H")
    if not s.contains_minus_id:
        return AdmissibilityResult(False, reason="-id is not in H")
    B = s.v0_matrix()
    for k in orthogonal_complement(s.h_basis, s.group):
        form = B.conj().T @ (1j * k) @ B  # Hermitian Gram matrix of v -> <ik v, v>
        if B.shape[1] == 0 or np.abs(form).max() <= tol:
            continue
        diag = np.abs(np.diag(form).real)
        p = int(np.argmax(diag))
        if diag[p] > tol:
            v = B[:, p]
        else:
            off = np.abs(form - np.diag(np.diag(form)))
            p, q = np.unravel_index(np.argmax(off), off.shape)
            v = B[:, p] + B[:, q] if abs(form[p, q].real) > tol else B[:, p] + 1j * B[:, q]
        return AdmissibilityResult(False, k, v, "moment map leaves h on V0")
    return AdmissibilityResult(True, reason="criterion holds on V0")


def quadratic_value(k: np.ndarray, v: np.ndarray) -> float:
    return float(np.real(np.vdot(v, 1j * k @ v)))


def _e(dim, i):
    return np.eye(dim, dtype=complex)[i]


def enumerate_minimal_admissible(group: str) -> list[SubpairSpec]:
    """Conjugacy-class representatives of proper minimal admissible subpairs."""
    if group == "su2":
        return [SubpairSpec("su2", [], [], True, "({+-1}, {0})"),
                SubpairSpec("su2", [np.diag([1j, -1j])], [_e(2, 0)], True, "(T_SU(2), C+{0})")]
    if group == "u2":
        return [SubpairSpec("u2", [], [], True, "({+-1}, {0})"),
                SubpairSpec("u2", [np.diag([1j, 0])], [_e(2, 0)], True,
                            "({diag(zeta, +-1) | zeta in S^1}, C x {0})")]
    if group == "sp2":
        z = np.zeros(4)
        block = [_embed_quaternionic([[np.eye(4)[u], z], [z, z]]) for u in (1, 2, 3)]
        return [SubpairSpec("sp2", [], [], True, "({+-1}, {0})"),
                SubpairSpec("sp2", block[:1], [_e(4, 0)], True,
                            "({diag(zeta, +-1) | zeta in T_Sp(1)}, C+{0_H})"),
                SubpairSpec("sp2", block, [_e(4, 0), _e(4, 1)], True,
                            "({diag(zeta, +-1) | zeta in Sp(1)}, H+{0_H})")]
    raise ValueError(f"unknown group {group!r}")


def shrink_candidates(s: SubpairSpec) -> list[SubpairSpec]:
    """Proper closed subgroups H' of H (containing -id) generated from tori and sub-blocks."""
    out = []
    if not s.h_basis:
        return out
    out.append(SubpairSpec(s.group, [], s.v0_basis, True, "finite"))
    if len(s.h_basis) > 1:
        for h in s.h_basis:
            out.append(SubpairSpec(s.group, [h], s.v0_basis, True, "circle"))
    return [c for c in out if c.v0_invariant()]


def is_minimal(s: SubpairSpec) -> bool:
    if not is_admissible(s):
        return False
    return not any(is_admissible(c) for c in shrink_candidates(s))


def maximal_torus(group: str) -> list[np.ndarray]:
    if group == "su2":
        return [np.diag([1j, -1j])]
    if group == "u2":
        return [np.diag([1j, 0]), np.diag([0, 1j])]
    if group == "sp2":
        return [np.diag([1j, -1j, 0, 0]), np.diag([0, 0, 1j, -1j])]
    raise ValueError(f"unknown group {group!r}")


def weight_space_criterion(torus_generators, group: str, tol: float = 1e-8):
    """Single-weight subspaces V_alpha of V under a torus; each (T, V_alpha) is admissible.

    Returns a list of (weight, basis) with weight the tuple of eigenvalues of -i t on V_alpha.
    """
    gens = [np.asarray(t, dtype=complex) for t in torus_generators]
    if not gens or all(np.abs(t).max() < tol for t in gens):
        raise ValueError("the torus is trivial; the weight criterion needs a nontrivial torus")
    for a in gens:
        for b in gens:
            if np.abs(a @ b - b @ a).max() > tol:
                raise ValueError("torus generators do not commute")
    rng = np.random.default_rng(0)
    combo = sum(c * t for c, t in zip(rng.normal(size=len(gens)), gens))
    _, vecs = np.linalg.eigh(-1j * combo)
    groups: dict = {}
    for v in vecs.T:
        w = tuple(round(float(np.real(np.vdot(v, -1j * t @ v))), 8) + 0.0 for t in gens)
        groups.setdefault(w, []).append(v)
    out = []
    for w, vs in groups.items():
        spec = SubpairSpec(group, gens, vs, True, f"weight {w}")
        if not is_admissible(spec):
            raise AssertionError("single-weight subspace failed the admissibility cross-check")
        out.append((w, np.array(vs)))
    return out


# ----------------------------------------------------------------------------- abelian embedding

def embed_abelian_to_pu2(ab: LatticeConfig, det_links: np.ndarray) -> LatticeConfig:
    """Embed (w1, psi1) as W = diag(w1, zeta^2 / w1), Psi = [psi1 | 0].

    With W = zeta V the SU(2) links are V = diag(w1 / zeta, zeta / w1).
    """
    if ab.gauge.kind != "abelian":
        raise ValueError("expected an abelian configuration")
    det_links = np.asarray(det_links, dtype=complex)
    if det_links.shape != ab.geom.shape + (4,):
        raise ValueError("determinant links do not match the lattice geometry")
    w1 = ab.gauge.links[..., 0, 0] / det_links
    links = np.zeros(ab.geom.shape + (4, 2, 2), dtype=complex)
    links[..., 0, 0] = w1
    links[..., 1, 1] = 1 / w1
    psi = np.zeros(ab.geom.shape + (2, 2), dtype=complex)
    psi[..., 0] = ab.psi[..., 0]
    return LatticeConfig(ab.geom, GaugeField("pu2", links, det_links.copy()), psi)


def det_twist(det_links: np.ndarray, geom) -> np.ndarray:
    """Gamma(F_a^+) (Hermitian 2 x 2 per site) for the determinant connection a = zeta^2."""
    g = GaugeField("abelian", np.asarray(det_links)[..., None, None])
    F, _ = plaquette_curvature(g, geom)
    return curvature_gamma(F)


def twisted_abelian_residual(ab: LatticeConfig, det_links: np.ndarray):
    """Residual of D psi1 = 0, Gamma(F_A1^+) = (psi1 psi1^*)_0 + Gamma(F_a^+)."""
    plain = sw_residual(ab, Variant("plain"))
    curv = plain.curv_res - det_twist(det_links, ab.geom)
    return plain.dirac_res, curv


H_DIRECTION = np.diag([0.5, -0.5])


def embed_residual(dirac: np.ndarray, curv: np.ndarray):
    """Identify abelian residual fields with su(2) (x) su(2) fields along diag(1/2, -1/2)."""
    d = np.zeros(dirac.shape[:-1] + (2,), dtype=complex)
    d[..., 0] = dirac[..., 0]
    c = np.einsum("...st,ab->...satb", curv, H_DIRECTION).reshape(curv.shape[:-2] + (4, 4))
    return d, c
