"""Characteristic-class arithmetic for Spin^c, Spin^h and Spin^U(2) structures.

Only the torsion-free part of H^2(X, Z) is modelled; classes are integer vectors in
the basis of the intersection form Q.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np


class ParityError(ValueError):
    """Raised when the index formula does not produce an integer."""


def _as_int_matrix(q) -> np.ndarray:
    q = np.atleast_2d(np.asarray(q, dtype=np.int64))
    if q.shape[0] != q.shape[1]:
        raise ValueError("intersection form must be square")
    return q


def _bits(u, n: int) -> np.ndarray:
    u = np.asarray(u, dtype=np.int64).reshape(-1) % 2
    if u.size != n:
        raise ValueError(f"expected a vector of length {n}, got {u.size}")
    return u


def is_characteristic(x, q) -> bool:
    q = _as_int_matrix(q)
    x = np.asarray(x, dtype=np.int64)
    return bool(np.all((q @ x - np.diag(q)) % 2 == 0))


def _signature(q: np.ndarray) -> int:
    if q.size == 0:
        return 0
    ev = np.linalg.eigvalsh(q.astype(float))
    return int(np.sum(ev > 0) - np.sum(ev < 0))


@dataclass(frozen=True)
class FourManifoldData:
    euler: int
    signature: int
    b1: int
    intersection_form: np.ndarray = field(repr=False)
    w2_tangent: np.ndarray = field(repr=False)
    name: str = ""

    def __post_init__(self):
        q = np.asarray(self.intersection_form, dtype=np.int64)
        if q.size == 0:
            q = np.zeros((0, 0), dtype=np.int64)
        q = q.reshape(int(round(np.sqrt(q.size))), -1)
        if not np.array_equal(q, q.T):
            raise ValueError("intersection form must be symmetric")
        if q.shape[0] and abs(round(np.linalg.det(q.astype(float)))) != 1:
            raise ValueError("intersection form must be unimodular")
        if _signature(q) != self.signature:
            raise ValueError("signature field disagrees with the intersection form")
        if self.euler != 2 - 2 * self.b1 + q.shape[0]:
            raise ValueError("euler characteristic inconsistent with b1 and rank(Q)")
        w2 = _bits(self.w2_tangent, q.shape[0])
        # Wu formula: w2 is characteristic for the mod-2 intersection form
        if not is_characteristic(w2, q):
            raise ValueError("w2 is not characteristic for Q")
        object.__setattr__(self, "intersection_form", q)
        object.__setattr__(self, "w2_tangent", w2)

    @property
    def b2(self) -> int:
        return self.intersection_form.shape[0]

    @classmethod
    def from_dict(cls, d: dict) -> "FourManifoldData":
        try:
            return cls(int(d["euler"]), int(d["signature"]), int(d["b1"]),
                       np.asarray(d["Q"], dtype=np.int64), np.asarray(d["w2"], dtype=np.int64),
                       str(d.get("name", "")))
        except KeyError as exc:
            raise ValueError(f"missing field {exc}") from None

    @classmethod
    def from_json(cls, path) -> "FourManifoldData":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return {"name": self.name, "euler": self.euler, "signature": self.signature, "b1": self.b1,
                "Q": self.intersection_form.tolist(), "w2": self.w2_tangent.tolist()}


def hyperbolic(k: int = 1) -> np.ndarray:
    h = np.array([[0, 1], [1, 0]])
    return np.kron(np.eye(k, dtype=np.int64), h)


E8 = np.array([
    [2, -1, 0, 0, 0, 0, 0, 0],
    [-1, 2, -1, 0, 0, 0, 0, 0],
    [0, -1, 2, -1, 0, 0, 0, 0],
    [0, 0, -1, 2, -1, 0, 0, 0],
    [0, 0, 0, -1, 2, -1, 0, -1],
    [0, 0, 0, 0, -1, 2, -1, 0],
    [0, 0, 0, 0, 0, -1, 2, 0],
    [0, 0, 0, 0, -1, 0, 0, 2],
])


def _block_diag(*blocks) -> np.ndarray:
    n = sum(b.shape[0] for b in blocks)
    out = np.zeros((n, n), dtype=np.int64)
    i = 0
    for b in blocks:
        k = b.shape[0]
        out[i:i + k, i:i + k] = b
        i += k
    return out


def cp2() -> FourManifoldData:
    return FourManifoldData(3, 1, 0, np.array([[1]]), np.array([1]), "CP2")


def torus4() -> FourManifoldData:
    return FourManifoldData(0, 0, 4, hyperbolic(3), np.zeros(6, dtype=np.int64), "T4")


def k3() -> FourManifoldData:
    q = _block_diag(-E8, -E8, hyperbolic(3))
    return FourManifoldData(24, -16, 0, q, np.zeros(22, dtype=np.int64), "K3")


@dataclass(frozen=True)
class SpinU2StructureClass:
    p1: int
    c1_det: tuple


def mod4_square(u, q) -> int:
    """x.Q.x mod 4 for the 0/1 lift x of u; independent of the chosen lift."""
    q = _as_int_matrix(q)
    x = _bits(u, q.shape[0])
    return int(x @ q @ x) % 4


def _filter(residue: int, p_range) -> list[int]:
    lo, hi = p_range
    return [p for p in range(int(lo), int(hi) + 1) if (p - residue) % 4 == 0]


def enumerate_spinh_classes(X: FourManifoldData, w2P, p_range) -> list[int]:
    return _filter(mod4_square(w2P, X.intersection_form), p_range)


def enumerate_spinu2_classes(X: FourManifoldData, w2P, c1, p_range) -> list[SpinU2StructureClass]:
    n = X.b2
    c1 = np.asarray(c1, dtype=np.int64).reshape(-1)
    if c1.size != n:
        raise ValueError(f"c1 must have length {n}")
    u = (_bits(w2P, n) + c1) % 2
    return [SpinU2StructureClass(p, tuple(int(c) for c in c1))
            for p in _filter(mod4_square(u, X.intersection_form), p_range)]


def expected_dimension(p1: int, c1_sq: int, e: int, sigma: int) -> int:
    chi = Fraction(-3 * p1 + c1_sq, 2) - Fraction(3 * e + 4 * sigma, 2)
    if chi.denominator != 1:
        raise ParityError(f"expected dimension {chi} is not an integer")
    return int(chi)


def spinc_torsor_shift(c_det, m) -> np.ndarray:
    c_det = np.asarray(c_det, dtype=np.int64)
    m = np.asarray(m, dtype=np.int64)
    if c_det.shape != m.shape:
        raise ValueError("shape mismatch")
    return c_det + 2 * m


def _gf2_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """Solve a x = b over GF(2) by Gaussian elimination; None if inconsistent."""
    a = a.copy() % 2
    b = b.copy() % 2
    n, m = a.shape
    pivots = []
    row = 0
    for col in range(m):
        hit = next((i for i in range(row, n) if a[i, col]), None)
        if hit is None:
            continue
        a[[row, hit]], b[[row, hit]] = a[[hit, row]], b[[hit, row]]
        for i in range(n):
            if i != row and a[i, col]:
                a[i] ^= a[row]
                b[i] ^= b[row]
        pivots.append(col)
        row += 1
    if np.any(b[row:]):
        return None
    x = np.zeros(m, dtype=np.int64)
    for i, col in enumerate(pivots):
        x[col] = b[i]
    return x


def has_spinc(X: FourManifoldData, box: int = 3):
    """Return (True, lift) with lift an integral characteristic vector reducing to w2."""
    q = X.intersection_form
    n = X.b2
    w2 = X.w2_tangent
    if n == 0:
        return True, np.zeros(0, dtype=np.int64)
    cert = None
    if n <= 4:
        rng = range(-box, box + 1)
        # smallest lifts first, positive entries preferred
        order = sorted(itertools.product(rng, repeat=n), key=lambda v: (sum(map(abs, v)), [-c for c in v]))
        for x in order:
            x = np.array(x, dtype=np.int64)
            if np.all((x - w2) % 2 == 0) and is_characteristic(x, q):
                cert = x
                break
    if cert is None:
        sol = _gf2_solve(q % 2, np.diag(q) % 2)
        if sol is not None and np.array_equal(sol % 2, w2):
            cert = sol
        elif is_characteristic(w2, q):
            cert = w2.copy()
    if cert is None or not (is_characteristic(cert, q) and np.all((cert - w2) % 2 == 0)):
        return False, None
    return True, cert
