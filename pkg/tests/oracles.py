"""Brute-force dense oracles, independent of the library internals.

Everything here is built from plain numpy Kronecker products so the test
expectations never share code with the implementation they check.
"""
import numpy as np
from functools import reduce

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
LETTER = {"I": I2, "X": X, "Y": Y, "Z": Z}


def kron_op(L, ops):
    """Dense operator with single-site matrices at the given sites."""
    return reduce(np.kron, [ops.get(j, I2) for j in range(L)])


def kron_word(word):
    return reduce(np.kron, [LETTER[c] for c in word])


def tfim_dense(L, J=1.0, h=1.0, periodic=True):
    H = np.zeros((2**L, 2**L), dtype=complex)
    for j in range(L if periodic else L - 1):
        H -= J * kron_op(L, {j: Z, (j + 1) % L: Z})
    for j in range(L):
        H -= h * kron_op(L, {j: X})
    return H


def xxz_dense(L, delta, periodic=True):
    H = np.zeros((2**L, 2**L), dtype=complex)
    for j in range(L if periodic else L - 1):
        k = (j + 1) % L
        H += kron_op(L, {j: X, k: X}) + kron_op(L, {j: Y, k: Y})
        H += delta * kron_op(L, {j: Z, k: Z})
    return H


def ground_vec(H, sector_op=None, want=1.0, degeneracy_tol=1e-8):
    """Lowest eigenvector, resolved inside a degenerate multiplet if asked."""
    w, v = np.linalg.eigh(H)
    members = np.where(w - w[0] < degeneracy_tol)[0]
    if sector_op is None or members.size == 1:
        return w[0], v[:, 0]
    basis = v[:, members]
    block = basis.conj().T @ sector_op @ basis
    wb, vb = np.linalg.eigh(0.5 * (block + block.conj().T))
    pick = int(np.argmin(np.abs(wb - want)))
    return w[0], basis @ vb[:, pick]


def sum_z_dense(L):
    return sum(kron_op(L, {j: Z}) for j in range(L))


def expect(vec, mat):
    return float(np.real(vec.conj() @ mat @ vec))
