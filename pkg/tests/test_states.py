import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hs
from scipy import integrate

from conftest import gaussian
from photon_tam import spectra as sp
from photon_tam import states as st


def test_grid_integrates_polynomial_measure():
    g = st.build_grid(12, 12, 16, (0.0, 2.0))
    # int d^3p/|p| over the ball-shell |p| < 2 of 1 = 2 pi * 4 * 2 / 2 ... = 4 pi * int_0^2 p dp
    assert g.integrate(np.ones(g.shape)) == pytest.approx(4 * np.pi * 2.0, rel=1e-14)


@settings(max_examples=12)
@given(hs.floats(1e-4, 3.0))
def test_gaussian_norm(a):
    psi = st.gaussian_state(a, st.auto_grid(a, (48, 48, 16)))
    assert st.norm(psi) == pytest.approx(1.0, abs=1e-11)


def test_gaussian_is_transversal_helicity_eigenstate(psi01):
    assert st.transversality_residual(psi01) < 1e-14
    hel = st.apply_helicity(psi01)
    assert np.allclose(hel.amplitudes, psi01.amplitudes, atol=1e-14)


def test_mean_cos_theta_matches_direct_integral():
    a = 0.1
    # |psi|^2 d^3p/|p| is an isotropic Gaussian density of variance 2a centred on z
    def density(c, p):
        return 2 * np.pi * p * p * (4 * np.pi * a) ** -1.5 * np.exp(-(p * p - 2 * p * c + 1) / (4 * a))

    ref, _ = integrate.dblquad(lambda c, p: c * density(c, p), 0, 6, -1, 1, epsabs=1e-13, epsrel=1e-13)
    psi = gaussian(a)
    assert st.mean_and_variance("Szp", psi, "sharp").mean == pytest.approx(ref, abs=1e-9)
    assert ref == pytest.approx(sp.f_of_a(a), abs=1e-9)


def test_jz_is_one_and_helicity_sign(psi05):
    assert st.mean_and_variance("Jz", psi05, "sharp").mean == pytest.approx(1.0, abs=1e-10)
    neg = st.gaussian_state(0.5, psi05.grid, helicity=-1)
    assert st.mean_and_variance("Jz", neg, "sharp").mean == pytest.approx(-1.0, abs=1e-10)
    assert st.mean_and_variance("Sz", neg).mean == pytest.approx(-sp.f_of_a(0.5), abs=1e-10)


def test_unsharp_minus_sharp_is_the_excess(psi05):
    for obs in ("Sz", "Lz"):
        u = st.mean_and_variance(obs, psi05, "unsharp").variance
        s = st.mean_and_variance(obs, psi05, "sharp").variance
        assert u - s == pytest.approx(st.variance_excess(obs, psi05), abs=1e-12)
        assert u >= s


def test_non_canonical_operators_preserve_transversality(psi05):
    for op in (st.apply_Sz_prime, st.apply_Lz_prime):
        assert st.transversality_residual(op(psi05)) < 1e-12
    assert st.transversality_residual(st.apply_Sz(psi05)) > 1e-3


def test_lz_prime_plus_sz_prime_is_jz(psi05):
    lhs = st.apply_Lz_prime(psi05) + st.apply_Sz_prime(psi05)
    assert np.allclose(lhs.amplitudes, st.apply_Jz(psi05).amplitudes, atol=1e-12)


def test_windows_and_truncation_bound():
    radial, polar = st.gaussian_windows(1e-3)
    assert radial[0] > 0 and polar[0] > 0
    g = st.auto_grid(1e-3)
    assert st.truncation_defect_bound(1e-3, g) < 1e-10
    narrow = st.build_grid(16, 16, 16, (0.9, 1.1))
    with pytest.raises(st.WindowTooNarrow):
        st.gaussian_state(0.1, narrow)


def test_grid_errors():
    with pytest.raises(st.TooFewNodes):
        st.build_grid(4, 16, 16, (0, 1))
    with pytest.raises(st.TooFewNodes):
        st.build_grid(16, 16, 15, (0, 1))
    with pytest.raises(st.InvalidWindow):
        st.build_grid(16, 16, 16, (1, 0.5))


def test_mixing_grids_is_rejected(psi01, psi05):
    with pytest.raises(st.GridMismatch):
        st.inner_product(psi01, psi05)


def test_unnormalized_state_rejected(psi01):
    with pytest.raises(st.NotNormalized):
        st.mean_and_variance("Sz", psi01.scaled(2.0))


def test_state_round_trip(tmp_path):
    psi = st.gaussian_state(0.2, st.auto_grid(0.2, (8, 8, 16)))
    path = tmp_path / "s.txt"
    st.save_state(psi, path)
    back = st.load_state(path)
    assert np.array_equal(back.amplitudes, psi.amplitudes)
    assert back.grid == psi.grid and back.metadata == psi.metadata
    assert st.norm(back) == pytest.approx(st.norm(psi), abs=1e-12)


def test_truncated_file_raises(tmp_path):
    psi = st.gaussian_state(0.2, st.auto_grid(0.2, (8, 8, 16)))
    path = tmp_path / "s.txt"
    st.save_state(psi, path)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-5]) + "\n")
    with pytest.raises(st.FormatError):
        st.load_state(path)
    path.write_text("garbage\n")
    with pytest.raises(st.FormatError):
        st.load_state(path)


def test_d_phi_is_exact_on_harmonics():
    g = st.build_grid(8, 8, 32, (0.5, 1.5))
    vals = np.broadcast_to(np.exp(3j * g.phi)[None, None, :, None], g.shape + (3,))
    assert np.allclose(st.d_phi(vals), 3j * vals, atol=1e-12)
    assert math.isclose(float(np.abs(st.d_phi(vals, 2) + 9 * vals).max()), 0.0, abs_tol=1e-11)
