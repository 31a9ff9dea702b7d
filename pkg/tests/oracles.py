"""Independent brute-force oracles used only by the tests."""
import numpy as np

from gmonopole.momentmaps import SU2_BASIS, lie_basis


def tensor_projection(h, group, r):
    """Orthogonal projection of a Hermitian 2r x 2r matrix onto span_R{(i a) (x) (i b)}.

    Here a runs over a basis of su(2) and b over a basis of g; the span is solved
    for by real least squares rather than by partial traces.
    """
    basis = [np.kron(a, b) for a in SU2_BASIS for b in lie_basis(group, r)]
    mat = np.array([np.concatenate([m.real.ravel(), m.imag.ravel()]) for m in basis]).T
    target = np.concatenate([h.real.ravel(), h.imag.ravel()])
    coef, *_ = np.linalg.lstsq(mat, target, rcond=None)
    return np.tensordot(coef, np.array(basis), axes=1)


def quaternion_product_table(p, q):
    """Hamilton product via the 4x4 left-multiplication matrix of p."""
    w, x, y, z = p
    left = np.array([[w, -x, -y, -z], [x, w, -z, y], [y, z, w, -x], [z, -y, x, w]])
    return left @ np.asarray(q)
