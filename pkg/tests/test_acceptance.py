"""Acceptance criteria 1-9, each at its stated tolerance."""

import time

import numpy as np

from photon_tam import spectra as sp
from photon_tam import states as st
from photon_tam import verify as vf

SWEEP_A = (0.01, 0.05, 0.1, 0.5, 1.0, 2.0)


def _state(a, shape=st.DEFAULT_SHAPE):
    return st.gaussian_state(a, st.auto_grid(a, shape))


def _moments(obs, psi):
    rec = st.mean_and_variance(obs, psi, sp.observable_mode(obs))
    return rec.mean, rec.variance


def _fmt(x):
    return f"{x:.2e}"


def _part(report, prefix):
    return next(p for p in report.parts if p.name.startswith(prefix))


def test_criterion_1_mean_values(criterion):
    t0 = time.perf_counter()
    worst_s, worst_l = 0.0, 0.0
    for a in SWEEP_A:
        psi = _state(a)
        f = sp.f_of_a(a)
        worst_s = max(worst_s, abs(_moments("Sz", psi)[0] - f), abs(_moments("Szp", psi)[0] - f))
        worst_l = max(worst_l, abs(_moments("Lz", psi)[0] - (1 - f)), abs(_moments("Lzp", psi)[0] - (1 - f)))
    elapsed = time.perf_counter() - t0
    criterion(1, [
        (f"max |<S_z>,<S'_z> - f(a)| = {_fmt(worst_s)} <= 1e-6", worst_s <= 1e-6),
        (f"max |<L_z>,<L'_z> - (1 - f(a))| = {_fmt(worst_l)} <= 1e-6", worst_l <= 1e-6),
        (f"runtime {elapsed:.2f} s < 10 s", elapsed < 10.0),
    ])


def test_criterion_2_tam_sum_rule(criterion):
    worst = max(abs(_moments("Jz", _state(a))[0] - 1.0) for a in SWEEP_A)
    criterion(2, [(f"max |<J_z> - 1| = {_fmt(worst)} <= 1e-8", worst <= 1e-8)])


def test_criterion_3_variances(criterion):
    pair_c, pair_n, ordered = 0.0, 0.0, True
    for a in SWEEP_A + (1e-3,):
        psi = _state(a)
        v = {o: _moments(o, psi)[1] for o in ("Lz", "Sz", "Lzp", "Szp")}
        pair_c = max(pair_c, abs(v["Lz"] - v["Sz"]))
        pair_n = max(pair_n, abs(v["Lzp"] - v["Szp"]))
        ordered &= v["Sz"] >= v["Szp"] and v["Lz"] >= v["Lzp"]
    limit = max(_moments(o, _state(1e-3))[1] for o in ("Lz", "Sz", "Lzp", "Szp"))
    drift = 0.0
    for a in (0.1, 0.5):
        for o in ("Lz", "Sz", "Lzp", "Szp"):
            drift = max(drift, abs(_moments(o, _state(a))[1] - _moments(o, _state(a, (72, 72, 96)))[1]))
    criterion(3, [
        (f"|Var(L_z) - Var(S_z)| = {_fmt(pair_c)} <= 1e-6", pair_c <= 1e-6),
        (f"|Var(L'_z) - Var(S'_z)| = {_fmt(pair_n)} <= 1e-6", pair_n <= 1e-6),
        ("canonical >= non-canonical at every a", ordered),
        (f"largest variance at a = 1e-3 is {_fmt(limit)} < 1e-2", limit < 1e-2),
        (f"grid refinement changes variances by {_fmt(drift)} < 1e-7", drift < 1e-7),
    ])


def test_criterion_4_transversality_commutators(criterion):
    t0 = time.perf_counter()
    rep = vf.check_transversality_commutators()
    elapsed = time.perf_counter() - t0
    s = _part(rep, "[i hbar A_k, pi]").value
    lpi = _part(rep, "[L_k, pi]").value
    jpi = _part(rep, "[J_k, pi]").value
    criterion(4, [
        (f"matrix [S, pi] residual {_fmt(s)} <= 1e-13", s <= 1e-13),
        (f"FD [L, pi] + [S, pi] residual {_fmt(lpi)} <= 1e-6", lpi <= 1e-6),
        (f"FD [J, pi] {_fmt(jpi)} <= 1e-6", jpi <= 1e-6),
        (f"{vf.VerifyConfig().n_points} seeded points (seed {rep.seed})", vf.VerifyConfig().n_points == 50),
        (f"runtime {elapsed:.2f} s < 5 s", elapsed < 5.0),
    ])


def test_criterion_5_non_canonical_commutators(criterion):
    rep = vf.check_primed_commutators()
    closed = _part(rep, "[L'_i,S'_j]").value
    wit = _part(rep, "|[L'_x,L'_y]").value
    criterion(5, [
        (f"FD [L'_i, S'_j] vs three-term closed form: {_fmt(closed)} <= 1e-6 "
         f"(i hbar eps_ijk S'_k fits to {_fmt(rep.details['vector_form_residual'])})", closed <= 1e-6),
        (f"|[L'_x, L'_y] f| witness {_fmt(wit)} > 1e-3", wit > 1e-3),
    ])


def test_criterion_6_eigensystem(criterion):
    frame = vf.check_frame_spectrum()
    eig = vf.check_Lz_prime_eigenfunctions()
    h = _part(frame, "H eigenvalues").value
    herm = _part(frame, "M(theta) Hermitian").value
    mu = _part(frame, "M eigenvalues").value
    slope = _part(frame, "M eigenvalue slopes").value
    res = _part(eig, "eigen-equation residual").value
    formula = eig.details["eigenvalue_formula"]
    ferr = eig.details["formula_errors"][formula]
    criterion(6, [
        (f"H eigenvalues vs {{-sin, 0, sin}} at 20 theta: {_fmt(h)} <= 1e-12", h <= 1e-12),
        (f"M Hermitian to {_fmt(herm)}", herm <= 1e-12),
        (f"M eigenvalues affine in cos(theta): {_fmt(mu)}, slopes {_fmt(slope)} <= 1e-8", mu <= 1e-8 and slope <= 1e-8),
        (f"v_(n,j) ring residual {_fmt(res)} <= 1e-8", res <= 1e-8),
        (f"recorded eigenvalue formula: {formula} (error {_fmt(ferr)})", ferr <= 1e-8),
    ])


def test_criterion_7_measure_properties(criterion):
    masses = vf.check_distribution_masses()
    dich = vf.check_povm_idempotence_dichotomy()
    mass = _part(masses, "total mass").value
    neg = _part(masses, "negated smallest").value
    idem = max(_part(dich, "S'_z projector").value, _part(dich, "L'_z projector").value)
    wit = _part(dich, "||(F^2 - F) psi||").value
    criterion(7, [
        (f"unit mass within {_fmt(mass)} <= 1e-6", mass <= 1e-6),
        ("non-negative entries", neg <= 0.0),
        (f"S'_z / L'_z projector idempotence {_fmt(idem)} <= 1e-10", idem <= 1e-10),
        (f"joint POVM non-idempotence witness {_fmt(wit)} > 1e-3 at {dich.witness}", wit > 1e-3),
    ])


def test_criterion_8_variance_excess(criterion):
    smallest = np.inf
    for a in SWEEP_A + (1e-2, 1e-3):
        psi = _state(a)
        smallest = min(smallest, st.variance_excess("Sz", psi), st.variance_excess("Lz", psi))
    paraxial = max(st.variance_excess(o, _state(1e-3)) for o in ("Sz", "Lz"))
    criterion(8, [
        (f"smallest excess {_fmt(smallest)} >= -1e-12", smallest >= -1e-12),
        (f"excess at a = 1e-3 is {_fmt(paraxial)} < 5e-3", paraxial < 5e-3),
    ])


def test_criterion_9_oracle_equivalence(criterion):
    worst = 0.0
    for a in (0.1, 0.5):
        psi = _state(a)
        joint = sp.joint_povm_Lz_Sz(psi)
        tables = {"Lz": sp.marginal(joint, "OAM"), "Sz": sp.marginal(joint, "SAM"),
                  "Szp": sp.pvm_Sz_prime(psi), "Lzp": sp.pvm_Lz_prime(psi)}
        for o, tab in tables.items():
            mean, var = _moments(o, psi)
            worst = max(worst, abs(tab.mean() - mean), abs(tab.moment(2) - (var + mean * mean)))
    criterion(9, [(f"max moment difference {_fmt(worst)} <= 1e-5", worst <= 1e-5)])
