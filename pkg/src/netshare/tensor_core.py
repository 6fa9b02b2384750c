"""Dense complex matrix kernel.

Operators are plain complex ``numpy`` arrays. Multi-qubit factors are ordered
little-endian by declaration: the first factor is the most significant index,
matching ``numpy.kron``.
"""

from functools import reduce

import numpy as np

from netshare.errors import NetShareError

HERMITIAN_TOL = 1e-12
PSD_CLAMP = 1e-10

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SX, SY, SZ)


def kron(*mats):
    """Kronecker product of one or more matrices, left factor most significant."""
    return reduce(np.kron, [np.asarray(m, dtype=complex) for m in mats])


def is_hermitian(m, tol=HERMITIAN_TOL):
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.max(np.abs(m - m.conj().T), initial=0.0) <= tol


def _check_factorization(m, dims):
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or int(np.prod(dims)) != m.shape[0]:
        raise NetShareError("bad-factorization", f"dims {list(dims)} do not factor a {m.shape} matrix")


def partial_trace(m, keep, dims):
    """Trace out every factor not listed in ``keep``.

    ``keep`` is an iterable of factor indices; the kept factors stay in their
    original relative order.
    """
    dims = [int(d) for d in dims]
    _check_factorization(m, dims)
    keep = sorted(set(keep))
    if not keep or keep[0] < 0 or keep[-1] >= len(dims):
        raise NetShareError("bad-factorization", f"keep set {keep} is not a non-empty subset of factors")
    n = len(dims)
    t = np.asarray(m, dtype=complex).reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # contract row index i with column index n + i for every traced factor
    row = list(range(n))
    col = list(range(n, 2 * n))
    for i in traced:
        col[i] = row[i]
    out = [row[i] for i in keep] + [col[i] for i in keep]
    t = np.einsum(t, row + col, out)
    d = int(np.prod([dims[i] for i in keep]))
    return t.reshape(d, d)


def permute_factors(m, perm, dims):
    """Reorder tensor factors of an operator: new factor k is old factor ``perm[k]``."""
    dims = [int(d) for d in dims]
    _check_factorization(m, dims)
    n = len(dims)
    if sorted(perm) != list(range(n)):
        raise NetShareError("bad-factorization", f"{list(perm)} is not a permutation of {n} factors")
    t = np.asarray(m, dtype=complex).reshape(dims + dims)
    t = t.transpose(list(perm) + [n + p for p in perm])
    d = m.shape[0]
    return t.reshape(d, d)


def eig_hermitian(m):
    """Eigenvalues in descending order and the matching orthonormal eigenvectors (columns)."""
    m = np.asarray(m, dtype=complex)
    if not is_hermitian(m, 1e-10):
        raise NetShareError("not-hermitian")
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return w[::-1].copy(), v[:, ::-1].copy()


def psd_sqrt(m):
    """Principal square root of a positive semidefinite Hermitian matrix.

    Eigenvalues in [-1e-10, 0) are treated as numerical noise and clamped, as
    are positive ones at round-off level (their roots would be ~1e-8 noise).
    """
    w, v = eig_hermitian(m)
    if w.size and w[-1] < -PSD_CLAMP:
        raise NetShareError("not-psd", f"smallest eigenvalue {w[-1]:.3e}")
    floor = 16 * np.finfo(float).eps * max(1.0, float(np.abs(w).max(initial=0.0)))
    root = np.sqrt(np.where(w > floor, w, 0.0))
    return (v * root) @ v.conj().T


def svd_real3(t):
    """Singular values of a real 3x3 matrix, descending."""
    t = np.asarray(t, dtype=float).reshape(3, 3)
    return np.linalg.svd(t, compute_uv=False)


def bloch_operator(v):
    """v . sigma for a real 3-vector."""
    return v[0] * SX + v[1] * SY + v[2] * SZ
