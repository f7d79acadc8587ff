"""Coupled-mode propagator against a direct ODE integration, and the
fitting/spectrum helpers built on it."""

import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

import qpic
from qpic.cmt import (CmtState, CouplerFit, cmt_evolve, compose_sections,
                      conversion_fraction, coupling_matrix, fit_coupler,
                      load_coupler_fit, pbs_angles, pc_spectrum, peak_fwhm,
                      save_coupler_fit, splitting_ratio, switch_map)
from qpic.dispersion import pc_matched_wavelength
from tests.conftest import bundled


def ode_oracle(kappa, sections, length):
    """Integrate the two coupled amplitudes directly.

    sections: list of detunings, each acting over an equal slice of the
    total length. Returns the 2x2 transfer matrix.
    """
    edges = np.linspace(0.0, length * len(sections), len(sections) + 1)
    started = np.concatenate([[0.0], np.cumsum(np.asarray(sections) * length)])

    def rhs(z, y):
        idx = min(int(z // length), len(sections) - 1)
        db = sections[idx]
        # the frame phase is the running integral of the detuning
        phase = started[idx] + db * (z - edges[idx])
        return [-1j * kappa * y[1] * np.exp(1j * phase),
                -1j * kappa * y[0] * np.exp(-1j * phase)]

    cols = []
    for start in (np.array([1.0 + 0j, 0.0j]), np.array([0.0j, 1.0 + 0j])):
        sol = solve_ivp(rhs, (edges[0], edges[-1]), start, method="DOP853",
                        rtol=1e-12, atol=1e-13, dense_output=False)
        cols.append(sol.y[:, -1])
    return np.stack(cols, axis=1)


@pytest.mark.parametrize("kappa,dbeta,length", [
    (2e-4, 0.0, 3000.0),
    (2e-4, 5e-4, 3000.0),
    (1e-3, -3e-4, 1500.0),
    (5e-5, 2e-3, 8000.0),
])
def test_single_section_matches_ode(kappa, dbeta, length):
    analytic = coupling_matrix(kappa, dbeta, length)
    numeric = ode_oracle(kappa, [dbeta], length)
    assert np.max(np.abs(analytic - numeric)) < 1e-8


def test_two_sections_match_ode():
    kappa = 2.0e-4
    half = 2500.0
    for db1, db2 in [(4e-4, -4e-4), (3e-4, 3e-4), (0.0, 6e-4)]:
        analytic = compose_sections(kappa, (db1, db2), half)
        numeric = ode_oracle(kappa, [db1, db2], half)
        assert np.max(np.abs(analytic - numeric)) < 1e-8


def test_compose_single_section_is_closed_form():
    kappa, db, length = 3e-4, 2e-4, 4000.0
    a = compose_sections(kappa, (db,), length)
    b = coupling_matrix(kappa, db, length)
    assert np.max(np.abs(a - b)) < 1e-15


def test_compose_swap_symmetric_magnitudes():
    # swapping the two section detunings must not change transfer powers
    kappa = math.pi / 16000.0
    half = 4000.0
    fwd = compose_sections(kappa, (3e-4, -1e-4), half)
    rev = compose_sections(kappa, (-1e-4, 3e-4), half)
    assert np.max(np.abs(np.abs(fwd) ** 2 - np.abs(rev) ** 2)) < 1e-12


def test_coupling_matrix_unitary():
    u = coupling_matrix(4e-4, 7e-4, 6000.0)
    assert np.max(np.abs(u.conj().T @ u - np.eye(2))) < 1e-12


def test_full_conversion():
    length = 5000.0
    kappa = math.pi / (2 * length)
    u = coupling_matrix(kappa, 0.0, length)
    assert abs(u[1, 0]) ** 2 == pytest.approx(1.0, abs=1e-12)


def test_cmt_evolve_conserves_power():
    state = CmtState(a_te=1.0 + 0j, a_tm=0.0j, z=0.0)
    for _ in range(200):
        state = cmt_evolve(state, 3e-4, 2e-4, 25.0)
    assert state.power == pytest.approx(1.0, abs=1e-9)
    assert state.z == pytest.approx(5000.0)


def test_cmt_evolve_matches_matrix():
    kappa, db = 2.5e-4, -1.5e-4
    state = CmtState(a_te=1.0 + 0j, a_tm=0.0j, z=0.0)
    n, dz = 400, 10.0
    for _ in range(n):
        state = cmt_evolve(state, kappa, db, dz)
    u = coupling_matrix(kappa, db, n * dz)
    assert abs(state.a_te - u[0, 0]) < 1e-8
    assert abs(state.a_tm - u[1, 0]) < 1e-8


def test_conversion_fraction_matched(model):
    length = 7600.0
    kappa = math.pi / (2 * length)
    lam0 = pc_matched_wavelength(model, 21.4)
    assert conversion_fraction(model, 21.4, length, kappa, lam0) == pytest.approx(
        1.0, abs=1e-9)
    assert conversion_fraction(model, 21.4, length, 0.5 * kappa, lam0) == pytest.approx(
        math.sin(math.pi / 4) ** 2, abs=1e-9)


def test_pc_spectrum_frozen_width(model):
    length = 7600.0
    kappa = math.pi / (2 * length)
    lam, frac = pc_spectrum(model, 21.4, length, kappa)
    width_nm = peak_fwhm(lam, frac) * 1e3
    assert width_nm == pytest.approx(3.1766, abs=0.01)
    assert np.max(frac) == pytest.approx(1.0, abs=1e-6)


def test_pc_spectrum_width_halves_with_length(model):
    l1 = 7600.0
    lam1, f1 = pc_spectrum(model, 21.4, l1, math.pi / (2 * l1))
    lam2, f2 = pc_spectrum(model, 21.4, 2 * l1, math.pi / (4 * l1))
    ratio = peak_fwhm(lam2, f2) / peak_fwhm(lam1, f1)
    assert ratio == pytest.approx(0.5, abs=0.02)


def test_peak_fwhm_gaussian():
    x = np.linspace(-5, 5, 4001)
    sigma = 0.7
    y = np.exp(-x ** 2 / (2 * sigma ** 2))
    expect = 2 * math.sqrt(2 * math.log(2)) * sigma
    assert peak_fwhm(x, y) == pytest.approx(expect, rel=1e-5)


def test_peak_fwhm_needs_flanks():
    x = np.linspace(0, 1, 50)
    y = 1.0 - 0.1 * x  # never drops to half
    with pytest.raises(qpic.NumericalError):
        peak_fwhm(x, y)


def test_switch_map_symmetry_and_extremes():
    half = 4000.0
    kappa_c = math.pi / (4 * half)
    volts = np.linspace(-40.0, 40.0, 41)
    bar = switch_map(kappa_c, half, volts, volts)
    assert bar.shape == (41, 41)
    assert np.max(np.abs(bar - bar.T)) < 1e-12
    # zero volts: full crossing; strong detuning: light stays put
    mid = np.argmin(np.abs(volts))
    assert bar[mid, mid] < 0.01
    assert np.max(bar) > 0.99
    assert np.all(bar >= -1e-12) and np.all(bar <= 1 + 1e-12)


def synth_ratios(beat, offset, lengths, rng):
    clean = np.sin(np.pi * (lengths - offset) / (2 * beat)) ** 2
    return np.clip(clean + rng.normal(0, 1e-3, lengths.shape), 0, 1)


def test_fit_coupler_recovers_parameters(rng):
    lengths = np.arange(100.0, 1301.0, 50.0)
    r_te = synth_ratios(900.0, 450.0, lengths, rng)
    r_tm = synth_ratios(850.0, 530.0, lengths, rng)
    fit = fit_coupler(lengths, r_te, lengths, r_tm)
    assert fit.beat_te == pytest.approx(900.0, rel=0.02)
    assert fit.offset_te == pytest.approx(450.0, abs=20.0)
    assert fit.beat_tm == pytest.approx(850.0, rel=0.02)
    assert fit.offset_tm == pytest.approx(530.0, abs=20.0)


def load_csv(name):
    import csv
    with open(bundled(name), newline="") as fh:
        rows = list(csv.reader(fh))
    data = np.array(rows[1:], dtype=float)
    return data[:, 0], data[:, 1]


def test_bundled_coupler_data_anchor():
    l_te, r_te = load_csv("coupler_ratios_te.csv")
    l_tm, r_tm = load_csv("coupler_ratios_tm.csv")
    fit = fit_coupler(l_te, r_te, l_tm, r_tm)
    # cross ratios at the 500 um working length stay small for both pols
    assert splitting_ratio(fit, 500.0, "H") == pytest.approx(0.0076, abs=0.02)
    assert splitting_ratio(fit, 500.0, "V") == pytest.approx(0.0031, abs=0.02)


def test_pbs_angles_from_fit():
    fit = CouplerFit(beat_te=900.0, offset_te=450.0,
                     beat_tm=850.0, offset_tm=530.0)
    alpha, beta = pbs_angles(fit, 500.0)
    r_h = splitting_ratio(fit, 500.0, "H")
    r_v = splitting_ratio(fit, 500.0, "V")
    assert math.sin(alpha) ** 2 == pytest.approx(1.0 - r_h, abs=1e-12)
    assert math.sin(beta) ** 2 == pytest.approx(1.0 - r_v, abs=1e-12)


def test_coupler_fit_roundtrip(tmp_path):
    fit = CouplerFit(beat_te=912.5, offset_te=448.25,
                     beat_tm=851.75, offset_tm=531.5)
    path = tmp_path / "fit.txt"
    save_coupler_fit(fit, path)
    again = load_coupler_fit(path)
    assert again == fit
