import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as hs

from photon_tam import operators as ops
from photon_tam.smallalg import dagger

angles = hs.tuples(hs.floats(0.05, np.pi - 0.05), hs.floats(0.0, 2 * np.pi))


def test_spin_algebra_both_representations():
    for rep in ops.REPRESENTATIONS.values():
        assert ops.spin_commutator_residual(rep) <= 1e-14


def test_representations_are_unitarily_equivalent():
    v = ops.SZ_DIAGONAL.v_matrix
    assert np.allclose(v @ dagger(v), np.eye(3), atol=1e-15)
    for k in range(3):
        assert np.allclose(v @ ops.CARTESIAN.matrices[k] @ dagger(v), ops.SZ_DIAGONAL.matrices[k], atol=1e-15)


def test_cartesian_spin_is_minus_i_times_generators():
    assert np.allclose(ops.CARTESIAN.matrices, -1j * ops.so3_generators())


@given(angles)
def test_frame_is_right_handed_and_orthonormal(ang):
    fr = ops.intrinsic_frame(ops.MomentumPoint(1.3, *ang))
    m = np.stack([fr.e1, fr.e2, fr.e3])
    assert np.allclose(m @ m.T, np.eye(3), atol=1e-14)
    assert np.allclose(np.cross(fr.e1, fr.e2), fr.e3, atol=1e-14)


def test_frame_is_smooth_at_north_pole():
    e1, e2, _ = ops.frame_vectors(1e-9, np.linspace(0, 2 * np.pi, 9))
    assert np.allclose(e1, [1, 0, 0], atol=1e-8) and np.allclose(e2, [0, 1, 0], atol=1e-8)


@given(angles, hs.sampled_from([1, -1]))
def test_helicity_vectors_are_eigenvectors(ang, sign):
    x = ops.MomentumPoint(1.0, *ang)
    ep, em = ops.helicity_vectors(x)
    e = ep if sign == 1 else em
    h = ops.helicity_matrix(x)
    assert np.allclose(h @ e, sign * e, atol=1e-14)
    assert np.allclose(ops.transversal_projector(x) @ e, e, atol=1e-14)
    assert abs(np.vdot(ep, em)) < 1e-14


def test_helicity_vector_at_equator_phi_zero():
    ep, _ = ops.helicity_vectors(ops.MomentumPoint(1.0, np.pi / 2, 0.0))
    assert np.allclose(ep, np.array([0, 1j, -1]) / np.sqrt(2))


@given(angles)
def test_projector_is_orthogonal_projection(ang):
    x = ops.MomentumPoint(2.0, *ang)
    pi = ops.transversal_projector(x)
    assert np.allclose(pi @ pi, pi, atol=1e-14)
    assert np.allclose(pi, dagger(pi))
    assert np.allclose(pi @ x.cartesian, 0, atol=1e-14)


@given(angles)
def test_h_matrix_two_constructions_agree(ang):
    th, ph = ang
    assert np.allclose(ops.h_matrix(th, ph), ops.h_matrix_from_spin(ops.MomentumPoint(1.0, th, ph)), atol=1e-14)
    w = np.linalg.eigvalsh(ops.h_matrix(th, ph))
    assert np.allclose(w, np.sin(th) * np.array([-1, 0, 1]), atol=1e-13)


@given(angles)
def test_h_equals_sz_minus_s_prime(ang):
    th, ph = ang
    x = ops.MomentumPoint(1.0, th, ph)
    expected = ops.SZ_DIAGONAL.matrices[2] - ops.s_prime_matrix(x, 2, ops.SZ_DIAGONAL)
    assert np.allclose(ops.h_matrix(th, ph), expected, atol=1e-14)


@given(angles, hs.integers(0, 2))
def test_s_pi_closed_form_is_generator_commutator(ang, k):
    rng = np.random.default_rng(3)
    f = rng.normal(size=3) + 1j * rng.normal(size=3)
    x = ops.MomentumPoint(0.8, *ang)
    lhs = (1j * ops.so3_generators()[k]) @ ops.transversal_projector(x) @ f - ops.transversal_projector(x) @ (
        1j * ops.so3_generators()[k]
    ) @ f
    assert np.allclose(ops.commutator_S_pi_analytic(x, k, f), lhs, atol=1e-14)


def test_rotation_from_spin_rotates_vectors():
    r = ops.rotation_from_spin(ops.CARTESIAN, [0, 0, 1], np.pi / 2)
    assert np.allclose(r @ np.array([1, 0, 0]), [0, 1, 0], atol=1e-14)
    r2 = ops.rotation_from_spin(ops.SZ_DIAGONAL, [0, 0, 1], np.pi / 2)
    assert np.allclose(r2, r, atol=1e-14)


def test_lp_sp_closed_forms_differ():
    x = ops.MomentumPoint(1.0, 0.9, 0.4)
    a = ops.commutator_Lp_Sp_analytic(x, 0, 1)
    b = ops.commutator_Lp_Sp_vector(x, 0, 1)
    assert np.abs(a - b).max() > 0.1


def test_errors():
    with pytest.raises(ops.ZeroMomentum):
        ops.MomentumPoint(0.0, 1.0, 1.0)
    with pytest.raises(ops.PolarSingularity):
        ops.intrinsic_frame(ops.MomentumPoint(1.0, 0.0, 0.0))
    with pytest.raises(ops.NonUnitAxis):
        ops.rotation_from_spin(ops.CARTESIAN, [0, 0, 2], 1.0)
    with pytest.raises(ops.ZeroMomentum):
        ops.transversal_projector([0, 0, 0])
