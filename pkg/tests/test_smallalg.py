import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as hs
from hypothesis.extra.numpy import arrays

from photon_tam.smallalg import (
    NonAntiHermitianInput,
    NonHermitianInput,
    as_vec3,
    commutator,
    dagger,
    hermitian_eigensystem,
    is_hermitian,
    matrix_exponential_antihermitian,
)

finite = hs.floats(-10, 10, allow_nan=False, allow_infinity=False)
real33 = arrays(np.float64, (3, 3), elements=finite)


def hermitian_from(re, im):
    m = re + 1j * im
    return 0.5 * (m + dagger(m))


@given(real33, real33)
def test_eigensystem_reconstructs(re, im):
    h = hermitian_from(re, im)
    w, u = hermitian_eigensystem(h)
    assert np.all(np.diff(w) >= 0)
    assert np.allclose(u @ np.diag(w) @ dagger(u), h, atol=1e-9 * max(1.0, np.abs(h).max()))
    assert np.allclose(dagger(u) @ u, np.eye(3), atol=1e-10)


@given(real33, real33)
def test_eigensystem_is_deterministic(re, im):
    h = hermitian_from(re, im)
    w1, u1 = hermitian_eigensystem(h)
    w2, u2 = hermitian_eigensystem(h.copy())
    assert np.array_equal(w1, w2) and np.array_equal(u1, u2)


def test_phase_convention_largest_component_real_positive():
    h = np.array([[2, 1j, 0], [-1j, 2, 0], [0, 0, 5]], dtype=complex)
    _, u = hermitian_eigensystem(h)
    for c in range(3):
        k = int(np.argmax(np.abs(u[:, c]) * (1 + 1e-9 * np.arange(3)[::-1])))
        assert abs(u[k, c].imag) < 1e-14 and u[k, c].real > 0


def test_degenerate_cluster_uses_canonical_axes():
    w, u = hermitian_eigensystem(np.diag([1.0, 1.0, 3.0]).astype(complex))
    assert np.allclose(w, [1, 1, 3])
    assert np.allclose(np.abs(u), np.eye(3))


def test_identity_is_fully_degenerate():
    w, u = hermitian_eigensystem(np.eye(3) * 2.5)
    assert np.allclose(w, 2.5) and np.allclose(u, np.eye(3))


def test_rejects_non_hermitian():
    with pytest.raises(NonHermitianInput):
        hermitian_eigensystem(np.array([[0, 1, 0], [0, 0, 0], [0, 0, 0]], dtype=complex))


@given(real33, real33)
def test_exponential_of_antihermitian_is_unitary(re, im):
    a = 1j * hermitian_from(re, im)
    u = matrix_exponential_antihermitian(a)
    assert np.allclose(dagger(u) @ u, np.eye(3), atol=1e-9)


def test_exponential_matches_series_for_rotation():
    gen = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 0]], dtype=complex) * 0.7
    expected = np.array([[np.cos(0.7), -np.sin(0.7), 0], [np.sin(0.7), np.cos(0.7), 0], [0, 0, 1]])
    assert np.allclose(matrix_exponential_antihermitian(gen), expected, atol=1e-14)


def test_exponential_rejects_hermitian():
    with pytest.raises(NonAntiHermitianInput):
        matrix_exponential_antihermitian(np.eye(3))


def test_commutator_and_shape_checks():
    a = np.diag([1.0, 2.0, 3.0]).astype(complex)
    assert np.allclose(commutator(a, a), 0)
    assert is_hermitian(a)
    with pytest.raises(ValueError):
        as_vec3([1, 2])
