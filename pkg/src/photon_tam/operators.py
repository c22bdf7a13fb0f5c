"""Pointwise operators of the single-photon angular momentum.

Everything here is a multiplication operator in momentum space: a 3x3
matrix (or a 3-vector) attached to a momentum ``p``.  Angular momenta are in
units of hbar (``HBAR = 1``) and momenta in units of the carrier momentum.

Sign conventions
----------------
* Cartesian spin matrices ``(S_k)_{ml} = -i eps_{kml}``, so that
  ``exp(-i angle n.S)`` is the active rotation by ``angle`` about ``n``.
  The generators ``(A_k)_{ml} = eps_{kml}`` then satisfy ``S_k = -i A_k``.
* The S_z-diagonal representation is ``V S_k V^H`` with the unitary ``V``
  stored on the representation.
* Intrinsic frame: ``e3 = p/|p|`` and ``(e1, e2)`` are the images of
  ``(x, y)`` under the rotation about ``z x p`` taking ``z`` to ``p``.  The
  frame is right-handed and smooth around the +z axis, which is where the
  paraxial states live.
* Helicity vectors ``e_pm = (e1 pm i e2)/sqrt(2)`` carry helicity ``pm 1``.
"""

from dataclasses import dataclass, field

import numpy as np

from .smallalg import commutator, dagger, matrix_exponential_antihermitian

HBAR = 1.0
POLE_TOL = 1e-12
SQRT2 = np.sqrt(2.0)


class PolarSingularity(ValueError):
    pass


class ZeroMomentum(ValueError):
    pass


class NonUnitAxis(ValueError):
    pass


def levi_civita():
    eps = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[i, j, k] = 1.0
        eps[j, i, k] = -1.0
    return eps


EPS = levi_civita()


def so3_generators():
    """Real antisymmetric generators ``(A_k)_{ml} = eps_{kml}``, shape (3, 3, 3)."""
    return EPS.copy()


@dataclass(frozen=True, eq=False)
class SpinRepresentation:
    tag: str
    matrices: np.ndarray = field(repr=False)
    v_matrix: np.ndarray = field(repr=False)

    def dot(self, n):
        """``n . S`` for a real vector (or array of vectors, last axis 3)."""
        n = np.asarray(n, dtype=float)
        return np.tensordot(n, self.matrices, axes=([-1], [0]))


def _cartesian_rep():
    mats = -1j * HBAR * so3_generators()
    return SpinRepresentation("Cartesian", mats.astype(complex), np.eye(3, dtype=complex))


def _sz_diagonal_rep():
    sx = HBAR / SQRT2 * np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex)
    sy = HBAR / SQRT2 * np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]])
    sz = HBAR * np.diag([1.0, 0.0, -1.0]).astype(complex)
    v = np.array(
        [
            [1 / SQRT2, -1j / SQRT2, 0],
            [0, 0, -1],
            [-1 / SQRT2, -1j / SQRT2, 0],
        ]
    )
    return SpinRepresentation("SzDiagonal", np.stack([sx, sy, sz]), v)


CARTESIAN = _cartesian_rep()
SZ_DIAGONAL = _sz_diagonal_rep()
REPRESENTATIONS = {"Cartesian": CARTESIAN, "SzDiagonal": SZ_DIAGONAL}


@dataclass(frozen=True)
class MomentumPoint:
    p: float
    theta: float
    phi: float

    def __post_init__(self):
        if not self.p > 0:
            raise ZeroMomentum(f"|p| must be positive, got {self.p}")

    @property
    def cartesian(self):
        st = np.sin(self.theta)
        return self.p * np.array(
            [st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)]
        )

    @property
    def unit(self):
        return self.cartesian / self.p

    @classmethod
    def from_cartesian(cls, vec):
        vec = np.asarray(vec, dtype=float)
        p = float(np.linalg.norm(vec))
        if p == 0.0:
            raise ZeroMomentum("p = 0")
        theta = float(np.arccos(np.clip(vec[2] / p, -1.0, 1.0)))
        phi = float(np.arctan2(vec[1], vec[0]) % (2 * np.pi))
        return cls(p, theta, phi)


@dataclass(frozen=True)
class FrameTriad:
    e1: np.ndarray
    e2: np.ndarray
    e3: np.ndarray


def _unit_momentum(x):
    if isinstance(x, MomentumPoint):
        return x.unit
    vec = np.asarray(x, dtype=float)
    nrm = np.linalg.norm(vec)
    if nrm == 0.0:
        raise ZeroMomentum("p = 0")
    return vec / nrm


def frame_vectors(theta, phi):
    """Vectorised intrinsic frame; returns ``(e1, e2, e3)`` with last axis 3.

    No pole check: callers on quadrature grids never hit the poles.
    """
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(phi), np.sin(phi)
    e_theta = np.stack([ct * cp, ct * sp, -st], axis=-1)
    e_phi = np.stack([-sp, cp, np.zeros_like(cp)], axis=-1)
    e3 = np.stack([st * cp, st * sp, ct], axis=-1)
    cp_, sp_ = cp[..., None], sp[..., None]
    e1 = cp_ * e_theta - sp_ * e_phi
    e2 = sp_ * e_theta + cp_ * e_phi
    return e1, e2, e3


def intrinsic_frame(x):
    if not isinstance(x, MomentumPoint):
        x = MomentumPoint.from_cartesian(x)
    if abs(np.sin(x.theta)) < POLE_TOL:
        raise PolarSingularity(f"sin(theta) = {np.sin(x.theta):.3e} at the pole")
    e1, e2, e3 = frame_vectors(x.theta, x.phi)
    return FrameTriad(e1, e2, e3)


def helicity_vectors(x):
    """Returns ``(e_plus, e_minus)`` in Cartesian components."""
    fr = intrinsic_frame(x)
    return (fr.e1 + 1j * fr.e2) / SQRT2, (fr.e1 - 1j * fr.e2) / SQRT2


def helicity_vector_field(theta, phi, sign=+1):
    e1, e2, _ = frame_vectors(theta, phi)
    return (e1 + sign * 1j * e2) / SQRT2


def transversal_projector(x):
    n = _unit_momentum(x)
    return (np.eye(3) - np.outer(n, n)).astype(complex)


def projector_field(unit):
    """Projector for an array of unit vectors, shape (..., 3, 3)."""
    unit = np.asarray(unit, dtype=float)
    return np.eye(3) - unit[..., :, None] * unit[..., None, :] + 0j


def helicity_matrix(x, rep=CARTESIAN):
    return rep.dot(_unit_momentum(x)) / HBAR


def s_prime_matrix(x, k, rep=CARTESIAN):
    n = _unit_momentum(x)
    return HBAR * n[k] * helicity_matrix(n, rep)


def rotation_from_spin(rep, axis, angle):
    axis = np.asarray(axis, dtype=float)
    if abs(np.linalg.norm(axis) - 1.0) > 1e-12:
        raise NonUnitAxis(f"|axis| = {np.linalg.norm(axis)!r}")
    gen = -1j / HBAR * angle * rep.dot(axis)
    v = rep.v_matrix
    return dagger(v) @ matrix_exponential_antihermitian(gen) @ v


def h_matrix(theta, phi):
    """``-(p x (p x S))_z / |p|^2`` in the S_z-diagonal representation.

    Equals ``S_z - cos(theta) (p.S)/|p|``, i.e. ``S_z - S'_z``; this is the
    matrix that turns ``-i d/dphi`` into the non-canonical OAM ``L'_z``.
    Broadcasts over array ``theta``/``phi`` (result shape (..., 3, 3)).
    """
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    st, ct = np.sin(theta), np.cos(theta)
    ep = np.exp(1j * phi)
    off = -st * ct / SQRT2
    h = np.zeros(theta.shape + (3, 3), dtype=complex)
    h[..., 0, 0] = HBAR * st**2
    h[..., 2, 2] = -HBAR * st**2
    h[..., 0, 1] = HBAR * off * np.conj(ep)
    h[..., 1, 0] = HBAR * off * ep
    h[..., 1, 2] = HBAR * off * np.conj(ep)
    h[..., 2, 1] = HBAR * off * ep
    return h


def h_matrix_from_spin(x, rep=SZ_DIAGONAL):
    """Same operator as :func:`h_matrix`, assembled from the double cross product."""
    n = _unit_momentum(x)
    s = rep.matrices
    n_dot_s = rep.dot(n)
    # (n x (n x S))_z = n_z (n.S) - S_z  for unit n
    return -(n[2] * n_dot_s - s[2])


def commutator_S_pi_analytic(x, k, f):
    """Closed form of ``[i hbar A_k, pi(p)] f``.

    With ``S_k = -i hbar A_k`` this is ``-[S_k, pi] f = [L_k, pi] f``.
    """
    p = np.asarray(x.cartesian if isinstance(x, MomentumPoint) else x, dtype=float)
    p2 = float(p @ p)
    if p2 == 0.0:
        raise ZeroMomentum("p = 0")
    f = np.asarray(f, dtype=complex)
    a_k = so3_generators()[k]
    return 1j * HBAR * (np.cross(p, f)[k] * p - (p @ f) * (a_k @ p)) / p2


def _cross_with_spin(n, rep):
    # (n x S)_i = eps_iab n_a S_b
    return np.einsum("iab,a,bmn->imn", EPS, n, rep.matrices)


def commutator_Lp_Sp_analytic(x, i, j, rep=CARTESIAN):
    """Pointwise matrix of the three-term closed form for ``[L'_i, S'_j]``.

    ``i hbar [ n_j (n x S)_i - n_i (n x S)_j - eps_ijk n_k (n.S) ]`` with
    ``n = p/|p|``.  Finite differences show the true commutator is
    :func:`commutator_Lp_Sp_vector`; both are kept so the discrepancy can be
    measured.
    """
    n = _unit_momentum(x)
    nxs = _cross_with_spin(n, rep)
    nds = rep.dot(n)
    eps_n = np.einsum("k,k->", EPS[i, j], n)
    return 1j * HBAR * (n[j] * nxs[i] - n[i] * nxs[j] - eps_n * nds)


def commutator_Lp_Sp_vector(x, i, j, rep=CARTESIAN):
    """``[L'_i, S'_j] = i hbar eps_ijk S'_k``.

    ``L' = J - S'``, the ``S'_k`` commute pointwise, and ``S'`` is a vector
    operator under the rotations generated by ``J``.
    """
    n = _unit_momentum(x)
    out = np.zeros((3, 3), dtype=complex)
    for k in range(3):
        if EPS[i, j, k] != 0.0:
            out += 1j * HBAR * EPS[i, j, k] * s_prime_matrix(n, k, rep)
    return out


def spin_commutator_residual(rep):
    """max |[S_i, S_j] - i hbar eps_ijk S_k| over all index pairs."""
    s = rep.matrices
    worst = 0.0
    for i in range(3):
        for j in range(3):
            rhs = 1j * HBAR * np.tensordot(EPS[i, j], s, axes=(0, 0))
            worst = max(worst, float(np.max(np.abs(commutator(s[i], s[j]) - rhs))))
    return worst
