"""Quaternionic model of Spin(4) = Sp(1) x Sp(1) and its spinor representations.

Conventions used everywhere downstream:

* A quaternion ``w + x i + y j + z k`` is represented on C^2 by
  ``[[w + i x, y + i z], [-y + i z, w - i x]]``; unit quaternions map to SU(2).
* A real one-form ``eta = (eta_0, .., eta_3)`` is identified with the quaternion
  ``eta_0 - eta_1 i - eta_2 j - eta_3 k``.  With this choice the orthonormal
  self-dual basis below acts non-trivially on positive spinors.
* Lambda^2_+ basis (orthonormal): (e01 + e23)/sqrt2, (e02 - e13)/sqrt2, (e03 + e12)/sqrt2.
* A spinor fibre value in H (x) V is a complex 2 x r matrix; the spin factor acts on
  rows, the gauge factor on columns (``s -> q s g^T``).  Vectorized row-major it is
  ``kron(x, w)`` for a monomial x (x) w.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

UNIT_TOL = 1e-12

__all__ = [
    "Quaternion", "SpinGroupElement", "quat_matrix", "one_form_to_quaternion",
    "CLIFFORD", "clifford_2x2", "gamma", "two_form_gamma", "big_gamma",
    "SELF_DUAL_BASIS", "self_dual_coefficients", "quat_to_so4", "spinor_action",
    "random_unit_quaternion", "random_unitary", "random_special_unitary",
]


@dataclass(frozen=True)
class Quaternion:
    w: float
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    @classmethod
    def from_array(cls, a) -> "Quaternion":
        w, x, y, z = (float(v) for v in a)
        return cls(w, x, y, z)

    def to_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    def __mul__(self, other: "Quaternion") -> "Quaternion":
        a1, b1, c1, d1 = self.w, self.x, self.y, self.z
        a2, b2, c2, d2 = other.w, other.x, other.y, other.z
        return Quaternion(
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
        )

    def __neg__(self) -> "Quaternion":
        return Quaternion(-self.w, -self.x, -self.y, -self.z)

    def conj(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def norm2(self) -> float:
        return self.w ** 2 + self.x ** 2 + self.y ** 2 + self.z ** 2

    def norm(self) -> float:
        return float(np.sqrt(self.norm2()))

    def is_unit(self, tol: float = UNIT_TOL) -> bool:
        return abs(self.norm2() - 1.0) <= tol

    def matrix(self) -> np.ndarray:
        return quat_matrix(self)


def quat_matrix(q) -> np.ndarray:
    """2x2 complex matrix of left multiplication by ``q`` (an algebra homomorphism)."""
    w, x, y, z = q.to_array() if isinstance(q, Quaternion) else np.asarray(q, dtype=float)
    return np.array([[w + 1j * x, y + 1j * z], [-y + 1j * z, w - 1j * x]])


def one_form_to_quaternion(eta) -> np.ndarray:
    eta = np.asarray(eta, dtype=float)
    return np.array([eta[0], -eta[1], -eta[2], -eta[3]])


# Pauli-frame Clifford matrices: CLIFFORD[mu] = gamma(e_mu) restricted to the spin factor.
CLIFFORD = np.array([quat_matrix(one_form_to_quaternion(e)) for e in np.eye(4)])


def clifford_2x2(one_form) -> np.ndarray:
    return np.tensordot(np.asarray(one_form, dtype=float), CLIFFORD, axes=1)


def gamma(one_form, r: int = 1) -> np.ndarray:
    """Clifford multiplication Sigma^+ -> Sigma^- as a 2r x 2r complex matrix."""
    if r < 1:
        raise ValueError("rank of V must be >= 1")
    one_form = np.asarray(one_form, dtype=float)
    if one_form.shape != (4,):
        raise ValueError("one_form must be a real 4-vector")
    return np.kron(clifford_2x2(one_form), np.eye(r))


def _antisym(mu, nu):
    m = np.zeros((4, 4))
    m[mu, nu], m[nu, mu] = 1.0, -1.0
    return m


SELF_DUAL_BASIS = np.array([
    _antisym(0, 1) + _antisym(2, 3),
    _antisym(0, 2) - _antisym(1, 3),
    _antisym(0, 3) + _antisym(1, 2),
]) / np.sqrt(2.0)

# Gamma of the orthonormal self-dual basis; derived by hand from CLIFFORD
# (tests recompute it from products of Clifford matrices).
_I, _J, _K = (quat_matrix(u) for u in np.eye(4)[1:])
SELF_DUAL_IMAGES = -np.sqrt(2.0) * np.array([_I, _J, _K])

PAIRS = list(combinations(range(4), 2))
# S[mu, nu] = gamma(e_mu)^* gamma(e_nu); antisymmetric off the diagonal.
PAIR_PRODUCTS = np.einsum("mji,njk->mnik", CLIFFORD.conj(), CLIFFORD)


def self_dual_coefficients(two_form) -> np.ndarray:
    """Coordinates of the self-dual part of an antisymmetric 4x4 array."""
    two_form = np.asarray(two_form)
    return 0.5 * np.einsum("aij,...ij->...a", SELF_DUAL_BASIS, two_form)


def big_gamma(self_dual_two_form) -> np.ndarray:
    """Gamma: Lambda^2_+ -> su(2) on the positive spin factor; doubles norms."""
    w = np.asarray(self_dual_two_form)
    if w.shape[-1] != 3:
        raise ValueError("expected coordinates in the 3-dimensional self-dual basis")
    return np.tensordot(w, SELF_DUAL_IMAGES, axes=1)


def two_form_gamma(two_form) -> np.ndarray:
    """Gamma of an arbitrary (real or complex) 2-form given as antisymmetric 4x4 array.

    The anti-self-dual part is annihilated, so this equals Gamma of the self-dual part.
    """
    two_form = np.asarray(two_form)
    out = 0
    for mu, nu in PAIRS:
        out = out + two_form[..., mu, nu, None, None] * PAIR_PRODUCTS[mu, nu]
    return out


@dataclass(frozen=True)
class SpinGroupElement:
    """Element of Spin^G(4) = (SU(2) x SU(2) x G) / Z_2."""

    q_plus: Quaternion
    q_minus: Quaternion
    g_factor: np.ndarray = field(default_factory=lambda: np.eye(1, dtype=complex))
    group: str = "u"

    def __post_init__(self):
        if not (self.q_plus.is_unit() and self.q_minus.is_unit()):
            raise ValueError("spin factors must be unit quaternions")
        g = np.asarray(self.g_factor, dtype=complex)
        r = g.shape[0]
        if g.shape != (r, r) or np.abs(g.conj().T @ g - np.eye(r)).max() > UNIT_TOL * 10:
            raise ValueError("g_factor must be unitary")
        if self.group == "su" and abs(np.linalg.det(g) - 1) > 1e-10:
            raise ValueError("SU factor must have determinant 1")
        object.__setattr__(self, "g_factor", g)

    @classmethod
    def identity(cls, r: int = 1) -> "SpinGroupElement":
        return cls(Quaternion(1.0), Quaternion(1.0), np.eye(r, dtype=complex))

    def __mul__(self, other: "SpinGroupElement") -> "SpinGroupElement":
        return SpinGroupElement(self.q_plus * other.q_plus, self.q_minus * other.q_minus,
                                self.g_factor @ other.g_factor, self.group)

    def rotation(self) -> np.ndarray:
        return quat_to_so4(self.q_plus, self.q_minus)


def _check_unit(q: Quaternion):
    if not q.is_unit():
        raise ValueError(f"quaternion {q} is not a unit quaternion")


def quat_to_so4(q_plus: Quaternion, q_minus: Quaternion) -> np.ndarray:
    """Rotation eta -> q_minus eta conj(q_plus) of one-forms, as a real 4x4 matrix.

    Columns are taken in the one-form coordinates (see module docstring).
    """
    _check_unit(q_plus)
    _check_unit(q_minus)
    cols = []
    for e in np.eye(4):
        x = Quaternion.from_array(one_form_to_quaternion(e))
        y = (q_minus * x * q_plus.conj()).to_array()
        cols.append(one_form_to_quaternion(y))  # the identification is an involution
    return np.array(cols).T


def spinor_action(g: SpinGroupElement, s, chirality: int = +1) -> np.ndarray:
    """lambda_{+-}(g) on a 2 x r spinor fibre value."""
    s = np.asarray(s, dtype=complex)
    if s.shape != (2, g.g_factor.shape[0]):
        raise ValueError("spinor shape does not match the gauge factor")
    q = g.q_plus if chirality > 0 else g.q_minus
    return quat_matrix(q) @ s @ g.g_factor.T


def random_unit_quaternion(rng: np.random.Generator) -> Quaternion:
    v = rng.normal(size=4)
    return Quaternion.from_array(v / np.linalg.norm(v))


def random_unitary(r: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r))
    q, rr = np.linalg.qr(z)
    return q * (np.diag(rr) / np.abs(np.diag(rr)))


def random_special_unitary(r: int, rng: np.random.Generator) -> np.ndarray:
    u = random_unitary(r, rng)
    return u / np.linalg.det(u) ** (1.0 / r)
