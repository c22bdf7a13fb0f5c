"""Dense complex linear algebra in dimension 3.

Vectors are numpy arrays of shape ``(3,)`` and matrices arrays of shape
``(3, 3)``, both ``complex128``.  Products and commutators broadcast over
leading axes so that pointwise operator fields on a grid can be handled in
one call.
"""

import numpy as np

HERMITIAN_RTOL = 1e-10
DEGENERACY_GAP = 1e-9
PHASE_TIE_RTOL = 1e-12


class NonHermitianInput(ValueError):
    pass


class NonAntiHermitianInput(ValueError):
    pass


def as_vec3(v):
    v = np.asarray(v, dtype=complex)
    if v.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {v.shape}")
    return v


def as_mat3(m):
    m = np.asarray(m, dtype=complex)
    if m.shape[-2:] != (3, 3):
        raise ValueError(f"expected 3x3 matrices, got shape {m.shape}")
    return m


def dagger(m):
    return np.conj(np.swapaxes(m, -1, -2))


def matmul(a, b):
    return np.matmul(as_mat3(a), as_mat3(b))


def commutator(a, b):
    a, b = as_mat3(a), as_mat3(b)
    return a @ b - b @ a


def _scale(m):
    return max(float(np.max(np.abs(m))), 1.0)


def is_hermitian(m, rtol=HERMITIAN_RTOL):
    m = as_mat3(m)
    return float(np.max(np.abs(m - dagger(m)))) <= rtol * _scale(m)


def _fix_phase(v):
    # largest-magnitude component made real positive; near-ties go to the lowest index
    mags = np.abs(v)
    top = mags.max()
    if top == 0.0:
        return v
    idx = int(np.flatnonzero(mags >= top * (1.0 - PHASE_TIE_RTOL))[0])
    return v * (np.conj(v[idx]) / mags[idx])


def _canonical_cluster_basis(vecs):
    """Deterministic orthonormal basis of span(vecs) built from canonical axes.

    Picks, at every step, the canonical axis with the largest residual after
    projecting out the already chosen vectors (ties: lowest index).
    """
    proj = vecs @ dagger(vecs)
    k = vecs.shape[1]
    chosen = []
    for _ in range(k):
        best, best_norm = None, -1.0
        for i in range(3):
            w = proj[:, i].copy()
            for c in chosen:
                w -= c * np.vdot(c, w)
            nrm = np.linalg.norm(w)
            if nrm > best_norm * (1.0 + PHASE_TIE_RTOL):
                best, best_norm = w, nrm
        chosen.append(best / best_norm)
    return np.stack(chosen, axis=1)


def hermitian_eigensystem(m, gap=DEGENERACY_GAP):
    """Eigen-decomposition of a Hermitian 3x3 matrix.

    Returns
    -------
    eigenvalues : ndarray, shape (3,)
        Real, ascending.
    eigenvectors : ndarray, shape (3, 3)
        Column ``i`` is the unit eigenvector of ``eigenvalues[i]``.  Inside a
        degenerate cluster the basis is rebuilt from the canonical axes, and
        every column carries the fixed phase convention, so identical input
        gives bit-identical output.
    """
    m = as_mat3(m)
    if m.shape != (3, 3):
        raise ValueError("hermitian_eigensystem takes a single 3x3 matrix")
    if not is_hermitian(m):
        raise NonHermitianInput(
            f"max|M - M^H| = {np.max(np.abs(m - dagger(m))):.3e}"
        )
    w, v = np.linalg.eigh(0.5 * (m + dagger(m)))
    scale = _scale(m)
    out = v.copy()
    i = 0
    while i < 3:
        j = i + 1
        while j < 3 and w[j] - w[j - 1] < gap * scale:
            j += 1
        if j - i > 1:
            out[:, i:j] = _canonical_cluster_basis(v[:, i:j])
        i = j
    for c in range(3):
        out[:, c] = _fix_phase(out[:, c])
    return w, out


def matrix_exponential_antihermitian(m):
    """exp(M) for anti-Hermitian M, through the eigensystem of iM."""
    m = as_mat3(m)
    if float(np.max(np.abs(m + dagger(m)))) > HERMITIAN_RTOL * _scale(m):
        raise NonAntiHermitianInput(
            f"max|M + M^H| = {np.max(np.abs(m + dagger(m))):.3e}"
        )
    w, u = hermitian_eigensystem(1j * m)
    return (u * np.exp(-1j * w)) @ dagger(u)
