"""Quadratic moment maps mu_0, mu_G, mu_{0,G} and a finite-difference moment identity check.

The gauge factor G acts on the columns of a 2 x r spinor.  For the moment identity
we use the right action ``psi . g = psi (g^{-1})^T`` whose fundamental vector field
is ``alpha#(psi) = -psi alpha^T``; complex structures of the linear hyperkahler family
act on rows by left multiplication with imaginary unit quaternions.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .quatspin import quat_matrix, random_unitary, random_special_unitary

GROUPS = ("u1", "su2", "u2")

_PAULI = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex)
SU2_BASIS = 1j * _PAULI / np.sqrt(2.0)  # Frobenius-orthonormal basis of su(2)


@dataclass(frozen=True)
class LieValue:
    tag: str
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if np.abs(m + m.conj().swapaxes(-1, -2)).max(initial=0) > 1e-10:
            raise ValueError("Lie algebra value must be anti-Hermitian")
        if self.tag == "su2" and np.abs(np.trace(m, axis1=-2, axis2=-1)).max(initial=0) > 1e-10:
            raise ValueError("su(2) value must be traceless")
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class ComplexStructureFamily:
    """Complex structures on the spin factor; points J lie on the radius sqrt(2) sphere."""

    basis: np.ndarray

    @classmethod
    def quaternionic(cls) -> "ComplexStructureFamily":
        return cls(np.array([quat_matrix(u) for u in np.eye(4)[1:]]))

    def point(self, c) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        return np.tensordot(c / np.linalg.norm(c), self.basis, axes=1)


def lie_basis(group: str, r: int | None = None) -> np.ndarray:
    """Frobenius-orthonormal basis of the Lie algebra g in u(r)."""
    if group == "u1":
        r = 1 if r is None else r
        return (1j * np.eye(r) / np.sqrt(r))[None]
    if group == "su2":
        return SU2_BASIS.copy()
    if group == "u2":
        return np.concatenate([SU2_BASIS, (1j * np.eye(2) / np.sqrt(2.0))[None]])
    raise ValueError(f"unknown group tag {group!r}")


def project_to_algebra(m, group: str) -> np.ndarray:
    """Orthogonal (Frobenius) projection of a square matrix onto g."""
    m = np.asarray(m, dtype=complex)
    anti = 0.5 * (m - m.conj().swapaxes(-1, -2))
    r = m.shape[-1]
    tr = np.trace(anti, axis1=-2, axis2=-1)[..., None, None] / r
    if group == "u2" or (group == "u1" and r == 1):
        return anti
    if group == "su2":
        return anti - tr * np.eye(r)
    if group == "u1":
        return tr * np.eye(r)
    raise ValueError(f"unknown group tag {group!r}")


def mu0(x) -> LieValue:
    x = np.asarray(x, dtype=complex)
    h = np.outer(x, x.conj())
    return LieValue("su2", -0.5j * (h - 0.5 * np.trace(h) * np.eye(2)))


def muG(w, group: str) -> LieValue:
    if group not in GROUPS:
        raise ValueError(f"unknown group tag {group!r}")
    w = np.asarray(w, dtype=complex)
    return LieValue(group, -project_to_algebra(0.5j * np.outer(w, w.conj()), group))


def project_tensor(h, group: str) -> np.ndarray:
    """Frobenius projection of (..., 2r, 2r) matrices onto su(2) (x) g, via partial traces."""
    if group not in GROUPS:
        raise ValueError(f"unknown group tag {group!r}")
    h = np.asarray(h, dtype=complex)
    r = h.shape[-1] // 2
    h = h.reshape(h.shape[:-2] + (2, r, 2, r))
    spin_tr = np.einsum("...uaub->...ab", h)
    h = h - 0.5 * np.einsum("st,...ab->...satb", np.eye(2), spin_tr)
    gauge_tr = np.einsum("...sctc->...st", h)
    if group == "su2":
        h = h - np.einsum("...st,ab->...satb", gauge_tr, np.eye(r)) / r
    elif group == "u1" and r > 1:
        h = np.einsum("...st,ab->...satb", gauge_tr, np.eye(r)) / r
    return h.reshape(h.shape[:-4] + (2 * r, 2 * r))


def mu0G(psi, group: str, offset=None) -> np.ndarray:
    """Projection of psi (x) psi^* onto su(2) (x) g inside Herm(H (x) W).

    ``psi`` has shape (..., 2, r); the result has shape (..., 2r, 2r).  ``offset`` is an
    optional constant (central) element added to the result.
    """
    psi = np.asarray(psi, dtype=complex)
    v = psi.reshape(psi.shape[:-2] + (-1,))
    out = project_tensor(np.einsum("...i,...j->...ij", v, v.conj()), group)
    if offset is not None:
        out = out + offset
    return out


def pairing(x, y) -> float:
    """Real Frobenius pairing Re tr(x^* y)."""
    return float(np.real(np.vdot(x, y)))


def moment_identity_check(mu: Callable[[np.ndarray], np.ndarray], group: str, r: int,
                          samples: int = 50, h: float = 1e-5,
                          family: ComplexStructureFamily | None = None,
                          rng: np.random.Generator | None = None) -> float:
    """Max |d<mu, u (x) alpha>(v) - omega_u(alpha#, v)| over samples and basis directions.

    ``mu`` maps a 2 x r spinor to a Hermitian 2r x 2r matrix in su(2) (x) g.
    Central differences with step ``h``; truncation error O(h^2), roundoff O(eps/h).
    """
    if h <= 0:
        raise ValueError("h must be positive")
    family = family or ComplexStructureFamily.quaternionic()
    rng = rng or np.random.default_rng(0)
    gens = lie_basis(group, r)
    worst = 0.0
    for _ in range(samples):
        psi = rng.normal(size=(2, r)) + 1j * rng.normal(size=(2, r))
        v = rng.normal(size=(2, r)) + 1j * rng.normal(size=(2, r))
        m_plus, m_minus = mu(psi + h * v), mu(psi - h * v)
        for u in family.basis:
            for alpha in gens:
                k = np.kron(u, alpha)
                lhs = (pairing(m_plus, k) - pairing(m_minus, k)) / (2 * h)
                field = -psi @ alpha.T
                rhs = pairing(u @ field, v)
                worst = max(worst, abs(lhs - rhs))
    return worst


def equivariance_residual(mu: Callable[[np.ndarray], np.ndarray], group: str, r: int,
                          samples: int = 50, rng: np.random.Generator | None = None) -> float:
    """Max ||mu(psi . g) - Ad_g mu(psi)|| over random psi and g in G (right action)."""
    rng = rng or np.random.default_rng(1)
    worst = 0.0
    for _ in range(samples):
        psi = rng.normal(size=(2, r)) + 1j * rng.normal(size=(2, r))
        if group == "su2":
            g = random_special_unitary(r, rng)
        elif group == "u1":
            g = np.exp(1j * rng.uniform(0, 2 * np.pi)) * np.eye(r)
        else:
            g = random_unitary(r, rng)
        ginv = np.linalg.inv(g)
        lhs = mu(psi @ ginv.T)
        big = np.kron(np.eye(2), g)
        rhs = np.linalg.inv(big) @ mu(psi) @ big
        worst = max(worst, float(np.abs(lhs - rhs).max()))
    return worst
