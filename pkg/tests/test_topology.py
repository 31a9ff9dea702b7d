import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gmonopole.topology import (
    FourManifoldData, ParityError, cp2, enumerate_spinh_classes, enumerate_spinu2_classes,
    expected_dimension, has_spinc, hyperbolic, is_characteristic, k3, mod4_square,
    spinc_torsor_shift, torus4,
)


def test_mod4_square_examples():
    assert mod4_square([0], [[1]]) == 0
    assert mod4_square([1], [[1]]) == 1
    assert mod4_square([1, 1], hyperbolic(1)) == 2
    with pytest.raises(ValueError):
        mod4_square([1, 0], [[1]])


def test_mod4_lift_independence(rng):
    forms = [np.array([[1]]), hyperbolic(2), k3().intersection_form]
    for q in forms:
        n = q.shape[0]
        for _ in range(100):
            x = rng.integers(-5, 6, size=n)
            y = rng.integers(-5, 6, size=n)
            lifted = x + 2 * y
            assert int(lifted @ q @ lifted) % 4 == int(x @ q @ x) % 4 == mod4_square(x % 2, q)


def test_spinh_examples():
    X = cp2()
    assert enumerate_spinh_classes(X, [0], (-8, 8)) == [-8, -4, 0, 4, 8]
    assert enumerate_spinh_classes(X, [1], (-4, 4)) == [-3, 1]
    assert enumerate_spinh_classes(X, [1], (4, 3)) == []


def test_spinu2_examples():
    X = cp2()
    assert [c.p1 for c in enumerate_spinu2_classes(X, [1], [4], (-4, 2))] == [-3, 1]
    assert all(p % 4 == 0 for p in (c.p1 for c in enumerate_spinu2_classes(X, [1], [1], (-8, 8))))
    with pytest.raises(ValueError):
        enumerate_spinu2_classes(X, [1], [1, 2], (0, 1))


@settings(max_examples=50)
@given(st.integers(-20, 20), st.integers(-5, 5), st.integers(0, 1))
def test_spinu2_even_shift_invariance(c, m, w):
    X = cp2()
    a = [k.p1 for k in enumerate_spinu2_classes(X, [w], [c], (-12, 12))]
    b = [k.p1 for k in enumerate_spinu2_classes(X, [w], [c + 2 * m], (-12, 12))]
    assert a == b


def test_expected_dimension_examples():
    assert expected_dimension(-3, 16, 3, 1) == 6
    assert expected_dimension(1, 16, 3, 1) == 0
    assert expected_dimension(0, 0, 0, 0) == 0
    with pytest.raises(ParityError):
        expected_dimension(0, 1, 0, 0)


@settings(max_examples=100)
@given(st.integers(-6, 6), st.integers(0, 1), st.integers(-40, 40))
def test_expected_dimension_integral_on_admissible_data(c1, w, p):
    # on CP2 (and its blow-ups handled the same way) admissible p1 make chi integral
    X = cp2()
    admitted = {k.p1 for k in enumerate_spinu2_classes(X, [1], [c1], (p, p))}
    if p in admitted:
        expected_dimension(p, c1 * c1, X.euler, X.signature)


def test_torsor_shift():
    assert list(spinc_torsor_shift([4], [0])) == [4]
    assert list(spinc_torsor_shift([4], [1])) == [6]
    a = spinc_torsor_shift(spinc_torsor_shift([1, 2], [3, -1]), [2, 2])
    assert list(a) == list(spinc_torsor_shift([1, 2], [5, 1]))
    assert list(spinc_torsor_shift([1, 2], [0, 1])) != [1, 2]


def test_has_spinc():
    ok, lift = has_spinc(cp2())
    assert ok and list(lift) == [1]
    ok, lift = has_spinc(torus4())
    assert ok and not lift.any()
    ok, lift = has_spinc(k3())
    assert ok and not lift.any()
    assert is_characteristic(lift, k3().intersection_form)


def test_has_spinc_odd_form_fallback():
    # 9(1) + (-1): odd form outside the search box dimension
    q = np.diag([1] * 9 + [-1])
    X = FourManifoldData(12, 8, 0, q, np.ones(10, dtype=int))
    ok, lift = has_spinc(X)
    assert ok and is_characteristic(lift, q)


def test_manifold_validation():
    with pytest.raises(ValueError):
        FourManifoldData(3, 1, 0, [[2]], [0])  # not unimodular
    with pytest.raises(ValueError):
        FourManifoldData(3, -1, 0, [[1]], [1])  # wrong signature
    with pytest.raises(ValueError):
        FourManifoldData(4, 1, 0, [[1]], [1])  # wrong euler
    with pytest.raises(ValueError):
        FourManifoldData(3, 1, 0, [[1]], [0])  # w2 not characteristic
    with pytest.raises(ValueError):
        FourManifoldData.from_dict({"euler": 3})


def test_manifold_roundtrip():
    X = k3()
    Y = FourManifoldData.from_dict(X.to_dict())
    assert np.array_equal(X.intersection_form, Y.intersection_form)
