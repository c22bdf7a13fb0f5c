"""Momentum-space quadrature grids and single-photon states on them.

The inner product is the Lorentz-invariant one, with measure
``d^3p/|p| = p dp dcos(theta) dphi``.  A grid is a tensor product of
Gauss-Legendre rules in ``p`` and ``cos(theta)`` with a uniform trapezoid
rule in ``phi``; states hold Cartesian amplitudes of shape
``(n_p, n_theta, n_phi, 3)``.
"""

import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import operators as ops
from .special import chi3_tail

DEFAULT_SHAPE = (48, 48, 64)
WINDOW_SIGMAS = 10.0
NORM_TOL = 1e-6
TRUNCATION_TOL = 1e-10


class InvalidWindow(ValueError):
    pass


class TooFewNodes(ValueError):
    pass


class GridMismatch(ValueError):
    pass


class WindowTooNarrow(ValueError):
    pass


class NotNormalized(ValueError):
    pass


class FormatError(ValueError):
    pass


@dataclass(frozen=True)
class SphericalGrid:
    n_p: int
    n_theta: int
    n_phi: int
    radial_window: tuple
    polar_window: tuple = (-1.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "radial_window", tuple(float(x) for x in self.radial_window))
        object.__setattr__(self, "polar_window", tuple(float(x) for x in self.polar_window))

    @cached_property
    def _radial(self):
        x, w = np.polynomial.legendre.leggauss(self.n_p)
        lo, hi = self.radial_window
        half = 0.5 * (hi - lo)
        return lo + half * (x + 1.0), half * w

    @cached_property
    def _polar(self):
        x, w = np.polynomial.legendre.leggauss(self.n_theta)
        lo, hi = self.polar_window
        half = 0.5 * (hi - lo)
        return lo + half * (x + 1.0), half * w

    @property
    def p(self):
        return self._radial[0]

    @property
    def p_weights(self):
        return self._radial[1]

    @property
    def cos_theta(self):
        return self._polar[0]

    @property
    def cos_weights(self):
        return self._polar[1]

    @cached_property
    def theta(self):
        return np.arccos(self.cos_theta)

    @cached_property
    def phi(self):
        return 2.0 * np.pi * np.arange(self.n_phi) / self.n_phi

    @property
    def shape(self):
        return (self.n_p, self.n_theta, self.n_phi)

    @cached_property
    def weights(self):
        """Quadrature weights of ``d^3p/|p|``, shape ``(n_p, n_theta, n_phi)``."""
        wp = self.p * self.p_weights
        wphi = np.full(self.n_phi, 2.0 * np.pi / self.n_phi)
        return wp[:, None, None] * self.cos_weights[None, :, None] * wphi[None, None, :]

    @cached_property
    def ring_weights(self):
        """Weights of ``p dp dcos(theta)`` per (p, theta) ring, shape (n_p, n_theta)."""
        return (self.p * self.p_weights)[:, None] * self.cos_weights[None, :]

    @cached_property
    def unit(self):
        """Unit momentum directions, shape ``(n_theta, n_phi, 3)``."""
        th, ph = np.meshgrid(self.theta, self.phi, indexing="ij")
        return ops.frame_vectors(th, ph)[2]

    @cached_property
    def angles(self):
        return np.meshgrid(self.theta, self.phi, indexing="ij")

    def params(self):
        return {
            "n_p": self.n_p,
            "n_theta": self.n_theta,
            "n_phi": self.n_phi,
            "radial_window": list(self.radial_window),
            "polar_window": list(self.polar_window),
        }

    def integrate(self, values):
        return np.sum(self.weights * values)


def build_grid(n_p, n_theta, n_phi, radial_window, polar_window=(-1.0, 1.0)):
    if n_p < 8 or n_theta < 8:
        raise TooFewNodes(f"need n_p, n_theta >= 8, got {n_p}, {n_theta}")
    if n_phi < 16 or n_phi % 2:
        raise TooFewNodes(f"n_phi must be even and >= 16, got {n_phi}")
    p_min, p_max = radial_window
    if not 0.0 <= p_min < p_max:
        raise InvalidWindow(f"radial window {radial_window}")
    c_min, c_max = polar_window
    if not -1.0 <= c_min < c_max <= 1.0:
        raise InvalidWindow(f"polar window {polar_window}")
    grid = SphericalGrid(int(n_p), int(n_theta), int(n_phi), radial_window, polar_window)
    if np.min(np.sin(grid.theta)) < 1e-10:
        raise InvalidWindow("polar nodes too close to a pole")
    return grid


def gaussian_windows(a, sigmas=WINDOW_SIGMAS):
    """Radial and polar windows holding a Gaussian of spread ``a`` to ``sigmas`` std devs.

    The Cartesian standard deviation is ``sqrt(2a)``.  The polar window is
    only narrowed when the whole ball of radius ``sigmas*sigma`` sits inside
    a cone around +z.
    """
    sigma = math.sqrt(2.0 * a)
    reach = sigmas * sigma
    radial = (max(0.0, 1.0 - reach), 1.0 + reach)
    polar = (-1.0, 1.0)
    if reach < 1.0:
        polar = (math.sqrt(1.0 - reach * reach), 1.0)
    return radial, polar


def auto_grid(a, shape=DEFAULT_SHAPE, sigmas=WINDOW_SIGMAS):
    radial, polar = gaussian_windows(a, sigmas)
    return build_grid(*shape, radial, polar)


def truncation_defect_bound(a, grid):
    """Upper bound on the Gaussian mass outside the grid's windows.

    Everything outside the windows lies farther than ``d`` from ``p0 = z``,
    so the mass is bounded by the tail of a 3D isotropic Gaussian.
    """
    sigma = math.sqrt(2.0 * a)
    p_min, p_max = grid.radial_window
    d = p_max - 1.0
    if p_min > 0.0:
        d = min(d, 1.0 - p_min)
    c_min, c_max = grid.polar_window
    if c_max < 1.0:
        return 1.0
    if c_min > -1.0:
        d = min(d, math.sqrt(1.0 - c_min * c_min) if c_min > 0.0 else 1.0)
    if d <= 0.0:
        return 1.0
    return chi3_tail(d / sigma)


@dataclass(frozen=True, eq=False)
class PhotonState:
    grid: SphericalGrid
    amplitudes: np.ndarray = field(repr=False)
    physical: bool = True
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != self.grid.shape + (3,):
            raise ValueError(f"amplitudes shape {amps.shape} != {self.grid.shape + (3,)}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def replace(self, amplitudes, physical=False):
        return PhotonState(self.grid, amplitudes, physical, dict(self.metadata))

    def __add__(self, other):
        _same_grid(self, other)
        return self.replace(self.amplitudes + other.amplitudes, self.physical and other.physical)

    def __sub__(self, other):
        _same_grid(self, other)
        return self.replace(self.amplitudes - other.amplitudes, self.physical and other.physical)

    def scaled(self, c):
        return self.replace(c * self.amplitudes, self.physical)


def _same_grid(a, b):
    if a.grid != b.grid:
        raise GridMismatch(f"{a.grid} vs {b.grid}")


def gaussian_profile(a, grid):
    """Scalar factor ``sqrt(p) (4 pi a)^(-3/4) exp(-|p - z|^2 / (8a))``."""
    p = grid.p[:, None]
    c = grid.cos_theta[None, :]
    dist2 = p * p - 2.0 * p * c + 1.0
    return np.sqrt(p) * (4.0 * np.pi * a) ** -0.75 * np.exp(-dist2 / (8.0 * a))


def gaussian_state(a, grid=None, helicity=+1):
    """Circularly polarised Gaussian photon centred on ``p0 = z`` (``p0 = 1``)."""
    if not a > 0:
        raise ValueError(f"a must be positive, got {a}")
    if grid is None:
        grid = auto_grid(a)
    defect = truncation_defect_bound(a, grid)
    if defect > TRUNCATION_TOL:
        raise WindowTooNarrow(f"mass outside windows may reach {defect:.2e}")
    th, ph = grid.angles
    pol = ops.helicity_vector_field(th, ph, helicity)
    amps = gaussian_profile(a, grid)[:, :, None, None] * pol[None, :, :, :]
    return PhotonState(grid, amps, True, {"family": "gaussian", "a": float(a), "helicity": helicity})


def inner_product(phi_state, psi_state):
    _same_grid(phi_state, psi_state)
    dots = np.sum(np.conj(phi_state.amplitudes) * psi_state.amplitudes, axis=-1)
    return complex(np.sum(phi_state.grid.weights * dots))


def norm(psi):
    return math.sqrt(max(inner_product(psi, psi).real, 0.0))


def transversality_residual(psi):
    """max over nodes of ``|p . psi| / (|p| |psi|)``."""
    amps = psi.amplitudes
    mags = np.linalg.norm(amps, axis=-1)
    along = np.abs(np.einsum("tfi,ptfi->ptf", psi.grid.unit, amps))
    mask = mags > 1e-150 * max(float(mags.max()), 1e-300)
    if not mask.any():
        return 0.0
    return float(np.max(along[mask] / mags[mask]))


# --- multiplication operators ---------------------------------------------


def apply_pointwise(matrix_field, psi):
    """Apply a field of 3x3 matrices node by node.

    ``matrix_field`` is an array broadcastable to ``(n_p, n_theta, n_phi, 3, 3)``
    or a callable ``(p, theta, phi) -> (..., 3, 3)`` taking broadcast grids.
    """
    g = psi.grid
    if callable(matrix_field):
        p = g.p[:, None, None]
        th = g.theta[None, :, None]
        ph = g.phi[None, None, :]
        p, th, ph = np.broadcast_arrays(p, th, ph)
        matrix_field = matrix_field(p, th, ph)
    out = np.einsum("...ij,...j->...i", np.asarray(matrix_field), psi.amplitudes)
    return psi.replace(out, physical=False)


def projector_field(grid):
    return ops.projector_field(grid.unit)


def spin_field(k, rep=ops.CARTESIAN):
    return rep.matrices[k]


def helicity_field(grid, rep=ops.CARTESIAN):
    return rep.dot(grid.unit) / ops.HBAR


def s_prime_field(grid, k, rep=ops.CARTESIAN):
    return ops.HBAR * grid.unit[..., k, None, None] * helicity_field(grid, rep)


def apply_projector(psi):
    return apply_pointwise(projector_field(psi.grid), psi)


def apply_Sz(psi):
    return apply_pointwise(spin_field(2), psi)


def apply_Sz_prime(psi):
    return apply_pointwise(s_prime_field(psi.grid, 2), psi)


def apply_helicity(psi):
    return apply_pointwise(helicity_field(psi.grid), psi)


# --- azimuthal derivative -------------------------------------------------


def phi_wavenumbers(n_phi):
    return np.fft.fftfreq(n_phi, d=1.0 / n_phi)


def d_phi(amps, order=1):
    """Spectral ``d^order/dphi^order`` along axis 2 (Nyquist mode dropped for odd order)."""
    n = amps.shape[2]
    k = phi_wavenumbers(n)
    if order % 2:
        k = k.copy()
        k[n // 2] = 0.0
    mult = (1j * k) ** order
    shape = [1] * amps.ndim
    shape[2] = n
    return np.fft.ifft(np.fft.fft(amps, axis=2) * mult.reshape(shape), axis=2)


def apply_Lz(psi):
    """Canonical OAM ``L_z = -i hbar d/dphi`` on Cartesian components."""
    return psi.replace(-1j * ops.HBAR * d_phi(psi.amplitudes), physical=False)


def apply_Jz(psi):
    return apply_Lz(psi) + apply_Sz(psi)


def apply_Lz_prime(psi):
    """Non-canonical OAM ``L'_z = -i hbar d/dphi + H``, ``H`` applied in the S_z-diagonal basis."""
    v = ops.SZ_DIAGONAL.v_matrix
    th, ph = psi.grid.angles
    h_cart = ops.dagger(v) @ ops.h_matrix(th, ph) @ v
    out = apply_Lz(psi).amplitudes + np.einsum("tfij,ptfj->ptfi", h_cart, psi.amplitudes)
    return psi.replace(out, physical=psi.physical)


OBSERVABLES = {
    "Lz": apply_Lz,
    "Sz": apply_Sz,
    "Lzp": apply_Lz_prime,
    "Szp": apply_Sz_prime,
    "Jz": apply_Jz,
    "helicity": apply_helicity,
}
CANONICAL = ("Lz", "Sz")
NON_CANONICAL = ("Lzp", "Szp")


def resolve_observable(obs):
    if callable(obs):
        return getattr(obs, "__name__", "custom"), obs
    try:
        return obs, OBSERVABLES[obs]
    except KeyError:
        raise ValueError(f"unknown observable {obs!r}; choose from {sorted(OBSERVABLES)}") from None


@dataclass
class CumulantRecord:
    observable: str
    a: float
    mean: float
    variance: float
    mode: str = "unsharp"
    status: str = "ok"


def check_normalized(psi, tol=NORM_TOL):
    nrm2 = inner_product(psi, psi).real
    if abs(nrm2 - 1.0) > tol:
        raise NotNormalized(f"<psi|psi> = {nrm2!r}")
    return nrm2


def mean_and_variance(obs, psi, mode="unsharp"):
    """First two cumulants of ``pi O pi`` on a physical state.

    ``unsharp`` uses the second moment ``<psi, pi O^2 pi psi>`` (the POVM
    obtained by projecting the PVM of ``O``); ``sharp`` uses
    ``<psi, (pi O pi)^2 psi>``.  They differ by :func:`variance_excess`.
    """
    name, op = resolve_observable(obs)
    check_normalized(psi)
    ppsi = apply_projector(psi)
    o_psi = op(ppsi)
    mean = inner_product(ppsi, o_psi).real
    if mode == "unsharp":
        second = inner_product(ppsi, op(o_psi)).real
    elif mode == "sharp":
        po = apply_projector(o_psi)
        second = inner_product(ppsi, apply_projector(op(po))).real
    else:
        raise ValueError(f"mode must be 'unsharp' or 'sharp', got {mode!r}")
    a = psi.metadata.get("a", float("nan"))
    return CumulantRecord(name, a, mean, second - mean * mean, mode)


def variance_excess(obs, psi):
    """``<phi, (1 - pi) phi>`` with ``phi = O pi psi``."""
    _, op = resolve_observable(obs)
    phi = op(apply_projector(psi))
    return inner_product(phi, phi - apply_projector(phi)).real


# --- serialisation --------------------------------------------------------

STATE_FORMAT = "photon-tam-state/1"


def save_state(psi, path):
    """Columnar text file: ``p theta phi re_x im_x re_y im_y re_z im_z`` per node.

    Header lines start with ``#``; the first carries a JSON record with the
    grid parameters, representation tag and metadata.  Floats are written
    with ``repr`` so the round trip is exact.
    """
    g = psi.grid
    header = {
        "format": STATE_FORMAT,
        "grid": g.params(),
        "representation": "Cartesian",
        "physical": psi.physical,
        "metadata": psi.metadata,
        "rows": int(np.prod(g.shape)),
    }
    amps = psi.amplitudes
    with open(path, "w") as fh:
        fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        fh.write("# p theta phi re_x im_x re_y im_y re_z im_z\n")
        for i, p in enumerate(g.p):
            for j, th in enumerate(g.theta):
                for k, ph in enumerate(g.phi):
                    a = amps[i, j, k]
                    vals = (p, th, ph, a[0].real, a[0].imag, a[1].real, a[1].imag, a[2].real, a[2].imag)
                    fh.write(" ".join(repr(float(v)) for v in vals) + "\n")


def load_state(path):
    try:
        with open(path) as fh:
            first = fh.readline()
            if not first.startswith("# "):
                raise FormatError("missing header")
            header = json.loads(first[2:])
            if header.get("format") != STATE_FORMAT:
                raise FormatError(f"unknown format {header.get('format')!r}")
            rows = [ln for ln in fh if not ln.startswith("#") and ln.strip()]
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FormatError(str(exc)) from exc
    gp = header["grid"]
    grid = build_grid(gp["n_p"], gp["n_theta"], gp["n_phi"], gp["radial_window"], gp["polar_window"])
    if len(rows) != header["rows"] or len(rows) != int(np.prod(grid.shape)):
        raise FormatError(f"expected {header['rows']} rows, found {len(rows)}")
    try:
        data = np.array([[float(x) for x in ln.split()] for ln in rows])
    except ValueError as exc:
        raise FormatError(str(exc)) from exc
    if data.ndim != 2 or data.shape[1] != 9:
        raise FormatError("each row needs 9 columns")
    data = data.reshape(grid.shape + (9,))
    if not (
        np.array_equal(data[:, 0, 0, 0], grid.p)
        and np.array_equal(data[0, :, 0, 1], grid.theta)
        and np.array_equal(data[0, 0, :, 2], grid.phi)
    ):
        raise FormatError("node coordinates do not match the declared grid")
    amps = data[..., 3::2] + 1j * data[..., 4::2]
    return PhotonState(grid, amps, bool(header["physical"]), header.get("metadata", {}))
