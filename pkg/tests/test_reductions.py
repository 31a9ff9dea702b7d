import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gmonopole.lattice import (
    LatticeGeometry, Variant, flat_config, gauge_transform, random_config, sw_residual,
)
from gmonopole.reductions import (
    SubpairSpec, algebra_basis, det_twist, embed_abelian_to_pu2, embed_residual,
    enumerate_minimal_admissible, is_admissible, is_minimal, maximal_torus, orthogonal_complement,
    quadratic_value, shrink_candidates, twisted_abelian_residual, weight_space_criterion,
)

E1, E2 = np.eye(2, dtype=complex)


def _random_group_element(group, rng):
    from scipy.linalg import expm
    basis = algebra_basis(group)
    return expm(np.tensordot(rng.normal(size=len(basis)), basis, axes=1))


@pytest.mark.parametrize("group,dim", [("su2", 3), ("u2", 4), ("sp2", 10)])
def test_algebra_bases_orthonormal_and_closed(group, dim):
    b = algebra_basis(group)
    assert len(b) == dim
    gram = np.real(np.einsum("kij,lij->kl", b.conj(), b))
    assert np.allclose(gram, np.eye(dim), atol=1e-12)
    assert np.allclose(b, -np.conj(np.swapaxes(b, 1, 2)))
    assert SubpairSpec(group, list(b), []).is_lie_subalgebra()


def test_sp2_commutes_with_quaternionic_structure():
    # J(v) = Jmat conj(v); Sp(2) matrices are complex-linear and commute with J
    jm = np.kron(np.eye(2), np.array([[0, -1], [1, 0]]))
    for m in algebra_basis("sp2"):
        assert np.allclose(m @ jm, jm @ m.conj())


def test_admissible_reference_examples():
    assert is_admissible(SubpairSpec("su2", [np.diag([1j, -1j])], [E1]))
    assert is_admissible(SubpairSpec("su2", [], []))
    res = is_admissible(SubpairSpec("u2", maximal_torus("u2"), [E1, E2]))
    assert not res
    assert abs(quadratic_value(res.witness_k, res.witness_v)) > 1e-6
    assert np.allclose(res.witness_k, -res.witness_k.conj().T)


def test_witness_lies_in_complement():
    s = SubpairSpec("su2", [np.diag([1j, -1j])], [E1, E2])
    res = is_admissible(s)
    assert not res
    h = s.h_basis[0]
    assert abs(np.real(np.trace(h.conj().T @ res.witness_k))) < 1e-12


def test_non_invariant_v0_rejected():
    with pytest.raises(ValueError):
        is_admissible(SubpairSpec("su2", [np.diag([1j, -1j])], [(E1 + E2) / np.sqrt(2)]))


def test_missing_minus_identity_is_not_admissible():
    res = is_admissible(SubpairSpec("su2", [], [], contains_minus_id=False))
    assert not res and "-id" in res.reason


def test_spec_validation():
    with pytest.raises(ValueError):
        SubpairSpec("so3", [], [])
    with pytest.raises(ValueError):
        SubpairSpec("su2", [np.eye(2)], [])  # Hermitian, not anti-Hermitian
    with pytest.raises(ValueError):
        SubpairSpec("su2", [1j * np.eye(2)], [])  # not traceless


def test_lie_subalgebra_check():
    i, j, _ = algebra_basis("su2")
    assert not SubpairSpec("su2", [i, j], []).is_lie_subalgebra()
    assert SubpairSpec("su2", [i], []).is_lie_subalgebra()


def _labels(group):
    return [s.label for s in enumerate_minimal_admissible(group)]


def test_tables_verbatim():
    assert _labels("su2") == ["({+-1}, {0})", "(T_SU(2), C+{0})"]
    assert _labels("u2") == ["({+-1}, {0})", "({diag(zeta, +-1) | zeta in S^1}, C x {0})"]
    assert _labels("sp2") == ["({+-1}, {0})", "({diag(zeta, +-1) | zeta in T_Sp(1)}, C+{0_H})",
                              "({diag(zeta, +-1) | zeta in Sp(1)}, H+{0_H})"]
    dims = {g: [(len(s.h_basis), len(s.v0_basis)) for s in enumerate_minimal_admissible(g)]
            for g in ("su2", "u2", "sp2")}
    assert dims == {"su2": [(0, 0), (1, 1)], "u2": [(0, 0), (1, 1)], "sp2": [(0, 0), (1, 1), (3, 2)]}


@pytest.mark.parametrize("group", ["su2", "u2", "sp2"])
def test_table_entries_admissible_and_minimal(group):
    for s in enumerate_minimal_admissible(group):
        assert s.is_lie_subalgebra() and s.v0_invariant()
        assert is_admissible(s)
        assert is_minimal(s)
        for c in shrink_candidates(s):
            assert not is_admissible(c)


def test_sp1_block_needs_full_sp1():
    s = enumerate_minimal_admissible("sp2")[2]
    circle = SubpairSpec("sp2", s.h_basis[:1], s.v0_basis)
    res = is_admissible(circle)
    assert not res
    assert abs(quadratic_value(res.witness_k, res.witness_v)) > 1e-6


@pytest.mark.parametrize("group", ["su2", "u2", "sp2"])
def test_conjugation_invariance(group, rng):
    specs = enumerate_minimal_admissible(group) + [SubpairSpec(group, maximal_torus(group),
                                                               list(np.eye(2 if group != "sp2" else 4)))]
    for s in specs:
        for _ in range(5):
            g = _random_group_element(group, rng)
            assert bool(is_admissible(s.conjugate(g))) == bool(is_admissible(s))


def test_orthogonal_complement_dimensions():
    assert len(orthogonal_complement([], "sp2")) == 10
    assert len(orthogonal_complement(maximal_torus("u2"), "u2")) == 2
    assert len(orthogonal_complement(list(algebra_basis("su2")), "su2")) == 0


def test_weight_space_u2():
    out = weight_space_criterion(maximal_torus("u2"), "u2")
    weights = sorted(w for w, _ in out)
    assert weights == [(0.0, 1.0), (1.0, 0.0)]
    for _, basis in out:
        assert len(basis) == 1
    assert not is_admissible(SubpairSpec("u2", maximal_torus("u2"), [E1, E2]))


def test_weight_space_su2():
    out = weight_space_criterion(maximal_torus("su2"), "su2")
    assert sorted(w for w, _ in out) == [(-1.0,), (1.0,)]


def test_weight_space_sp2_lines():
    out = weight_space_criterion(maximal_torus("sp2"), "sp2")
    assert len(out) == 4 and all(len(b) == 1 for _, b in out)


def test_weight_space_guards():
    with pytest.raises(ValueError):
        weight_space_criterion([], "su2")
    with pytest.raises(ValueError):
        weight_space_criterion([np.zeros((2, 2))], "su2")
    i, j, _ = algebra_basis("su2")
    with pytest.raises(ValueError):
        weight_space_criterion([i, j], "su2")


def test_subpair_json_roundtrip():
    for s in enumerate_minimal_admissible("sp2"):
        d = json.loads(json.dumps(s.to_dict()))
        t = SubpairSpec.from_dict(d)
        assert t.label == s.label and t.group == s.group
        assert all(np.array_equal(a, b) for a, b in zip(t.h_basis, s.h_basis))
        assert all(np.array_equal(a, b) for a, b in zip(t.v0_basis, s.v0_basis))


# ----------------------------------------------------------------------------- embedding

def _random_det(geom, rng, scale=0.2):
    return np.exp(1j * scale * rng.normal(size=geom.shape + (4,)))


def test_embedding_trivial():
    geom = LatticeGeometry(3)
    pu = embed_abelian_to_pu2(flat_config(geom), np.ones(geom.shape + (4,)))
    r = sw_residual(pu, Variant("pu2"))
    assert r.total == 0.0


def test_embedding_lands_in_su2(rng):
    geom = LatticeGeometry(3, 0.8)
    pu = embed_abelian_to_pu2(random_config(geom, "abelian", rng), _random_det(geom, rng))
    det = np.linalg.det(pu.gauge.links)
    assert np.allclose(det, 1, atol=1e-13)
    assert np.abs(pu.psi[..., 1]).max() == 0


def test_embedding_residual_fields_match(rng):
    geom = LatticeGeometry(3, 0.8)
    ab = random_config(geom, "abelian", rng)
    det = _random_det(geom, rng)
    r = sw_residual(embed_abelian_to_pu2(ab, det), Variant("pu2"))
    d, c = embed_residual(*twisted_abelian_residual(ab, det))
    assert np.abs(r.dirac_res - d).max() < 1e-12
    assert np.abs(r.curv_res - c).max() < 1e-12
    # along diag(1/2, -1/2) the identification scales the curvature norm by 1/sqrt(2)
    c_ab = twisted_abelian_residual(ab, det)[1]
    assert r.curv_norm == pytest.approx(np.sqrt(geom.weight) * np.linalg.norm(c_ab) / np.sqrt(2), rel=1e-12)


def test_twist_is_curvature_of_det_links():
    geom = LatticeGeometry(3)
    assert np.abs(det_twist(np.ones(geom.shape + (4,)), geom)).max() == 0


def test_embedding_geometry_mismatch():
    geom = LatticeGeometry(3)
    with pytest.raises(ValueError):
        embed_abelian_to_pu2(flat_config(geom), np.ones((2, 2, 2, 2, 4)))
    with pytest.raises(ValueError):
        embed_abelian_to_pu2(flat_config(geom, "pu2"), np.ones(geom.shape + (4,)))


def test_embedding_injective(rng):
    geom = LatticeGeometry(2)
    ab = random_config(geom, "abelian", rng)
    det = _random_det(geom, rng)
    ab2 = ab.copy()
    ab2.psi[0, 0, 0, 0, 0, 0] += 1e-3
    ab3 = ab.copy()
    ab3.gauge.links[1, 0, 0, 0, 2] *= np.exp(1e-3j)
    base = embed_abelian_to_pu2(ab, det)
    for other in (ab2, ab3):
        e = embed_abelian_to_pu2(other, det)
        assert np.abs(e.psi - base.psi).max() + np.abs(e.gauge.links - base.gauge.links).max() > 1e-4


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2 ** 31 - 1))
def test_embedding_gauge_equivariant(seed):
    rng = np.random.default_rng(seed)
    geom = LatticeGeometry(2, 0.9)
    ab = random_config(geom, "abelian", rng)
    det = _random_det(geom, rng)
    chi = rng.uniform(-np.pi, np.pi, size=geom.shape)
    ab_t = gauge_transform(ab, np.exp(1j * chi)[..., None, None])
    u = np.zeros(geom.shape + (2, 2), dtype=complex)
    u[..., 0, 0], u[..., 1, 1] = np.exp(1j * chi), np.exp(-1j * chi)
    left = embed_abelian_to_pu2(ab_t, det)
    right = gauge_transform(embed_abelian_to_pu2(ab, det), u)
    assert np.allclose(left.gauge.links, right.gauge.links, atol=1e-12)
    assert np.allclose(left.psi, right.psi, atol=1e-12)
    r1 = sw_residual(left, Variant("pu2"))
    r0 = sw_residual(embed_abelian_to_pu2(ab, det), Variant("pu2"))
    assert r1.dirac_norm == pytest.approx(r0.dirac_norm, rel=1e-10)
    assert r1.curv_norm == pytest.approx(r0.curv_norm, rel=1e-10)
