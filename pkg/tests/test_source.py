"""Biphoton joint spectral amplitude on the rotated (sum, difference) grid."""

import dataclasses

import numpy as np
import pytest

import qpic
from qpic.dispersion import pdc_mismatch
from qpic.source import (GridSpec, PumpSpec, build_jsa,
                         jsa_exchange_asymmetry, marginal_spectra)


def test_normalized(jsa_medium):
    assert jsa_medium.norm == pytest.approx(1.0, abs=1e-12)


def test_grid_shapes(jsa_medium):
    assert jsa_medium.amplitude.shape == (256, 256)
    assert jsa_medium.sum_grid.shape == (256,)
    assert jsa_medium.diff_grid.shape == (256,)
    assert jsa_medium.weights.shape == (256, 256)
    assert np.all(jsa_medium.weights >= 0)


def test_diff_grid_exactly_antisymmetric(jsa_medium):
    d = jsa_medium.diff_grid
    assert np.array_equal(d, -d[::-1])


def test_sum_grid_centred_on_pump(jsa_medium):
    centre = 0.5 * (jsa_medium.sum_grid[0] + jsa_medium.sum_grid[-1])
    assert centre == pytest.approx(jsa_medium.pump.omega_pump, rel=1e-12)


def test_exchange_is_exact_grid_flip(jsa_medium):
    flipped = jsa_medium.exchanged()
    assert np.array_equal(flipped, jsa_medium.amplitude[:, ::-1])


def test_signal_idler_frequencies(jsa_medium):
    ws = jsa_medium.signal_frequencies
    wi = jsa_medium.idler_frequencies
    s = jsa_medium.sum_grid[:, None]
    d = jsa_medium.diff_grid[None, :]
    assert np.allclose(ws + wi, np.broadcast_to(s, ws.shape), atol=1e-9)
    assert np.allclose(ws - wi, np.broadcast_to(d, ws.shape), atol=1e-9)


def test_peak_sits_on_phase_matching_ridge(jsa_medium):
    mag = np.abs(jsa_medium.amplitude)
    i, j = np.unravel_index(np.argmax(mag), mag.shape)
    assert i in (127, 128)
    jc = np.argmin(np.abs(jsa_medium.diff_grid - jsa_medium.ridge_offset))
    assert abs(j - jc) <= 1


def test_phase_equals_accumulated_mismatch(chip, jsa_medium):
    # on the central ridge the amplitude phase is mismatch * length / 2
    i = 128
    for j in (100, 128, 156):
        ws = 0.5 * (jsa_medium.sum_grid[i] + jsa_medium.diff_grid[j])
        wi = 0.5 * (jsa_medium.sum_grid[i] - jsa_medium.diff_grid[j])
        u = pdc_mismatch(chip.model, chip.phase_spec, ws, wi) \
            * chip.phase_spec.pdc_length / 2.0
        got = np.angle(jsa_medium.amplitude[i, j])
        want = np.mod(u + np.pi, 2 * np.pi) - np.pi
        if np.cos(want) > 0:  # stay off the sinc sign flips
            assert got == pytest.approx(want, abs=1e-9)


def test_long_pulse_nearly_exchange_symmetric(jsa_medium):
    assert jsa_exchange_asymmetry(jsa_medium) < 0.05


def test_short_pulse_strongly_asymmetric(chip):
    pump = PumpSpec(pump_wavelength=0.775, pulse_duration=1.0)
    jsa = build_jsa(chip.model, pump, chip.phase_spec, GridSpec(256, 256))
    assert jsa_exchange_asymmetry(jsa) > 0.5


def test_short_pulse_sum_profile_is_pump_gaussian(chip):
    pump = PumpSpec(pump_wavelength=0.775, pulse_duration=1.0)
    jsa = build_jsa(chip.model, pump, chip.phase_spec, GridSpec(256, 256))
    prof = np.sum(jsa.weights * np.abs(jsa.amplitude) ** 2, axis=1)
    s = jsa.sum_grid
    mu = np.sum(s * prof) / np.sum(prof)
    sigma = np.sqrt(np.sum((s - mu) ** 2 * prof) / np.sum(prof))
    # intensity profile of a Gaussian pulse: sigma = bandwidth / sqrt(2)
    assert sigma == pytest.approx(pump.bandwidth / np.sqrt(2), rel=1e-3)
    assert mu == pytest.approx(pump.omega_pump, abs=1e-3 * pump.bandwidth)


def test_refinement_norm_drift(chip):
    coarse = build_jsa(chip.model, chip.pump, chip.phase_spec, GridSpec(128, 128))
    fine = build_jsa(chip.model, chip.pump, chip.phase_spec, GridSpec(256, 256))
    drift = abs(fine.meta["raw_norm"] - coarse.meta["raw_norm"]) / fine.meta["raw_norm"]
    assert drift < 1e-4


def test_marginals_normalized_and_peaked(jsa_medium):
    m = marginal_spectra(jsa_medium)
    for sd in (m.signal, m.idler):
        total = np.trapezoid(sd.density, sd.omega)
        assert total == pytest.approx(1.0, abs=1e-4)
        assert sd.peak_wavelength == pytest.approx(1.55, abs=1e-3)
        assert np.all(sd.density >= 0)


def test_marginal_width_scales_inversely_with_length(chip, jsa_medium):
    half = dataclasses.replace(chip.phase_spec, pdc_length=10350.0)
    jh = build_jsa(chip.model, chip.pump, half, GridSpec(256, 256))
    def width(jsa):
        sd = marginal_spectra(jsa).signal
        return qpic.peak_fwhm(sd.wavelength[::-1], sd.intensity[::-1])
    ratio = width(jsa_medium) / width(jh)
    assert ratio == pytest.approx(0.5, abs=0.02)


def test_long_waveguide_marginal_below_nanometre(chip):
    spec = dataclasses.replace(chip.phase_spec, pdc_length=30000.0)
    jsa = build_jsa(chip.model, chip.pump, spec, GridSpec(256, 256))
    sd = marginal_spectra(jsa).signal
    width_nm = qpic.peak_fwhm(sd.wavelength[::-1], sd.intensity[::-1]) * 1e3
    assert width_nm < 1.0


def test_truncated_support_raises(chip):
    grid = GridSpec(128, 128, sum_half_width=0.002)
    with pytest.raises(qpic.SupportTruncationError) as info:
        build_jsa(chip.model, chip.pump, chip.phase_spec, grid)
    assert info.value.suggested_half_width is not None
    assert info.value.suggested_half_width > 0.002


def test_pump_wavelength_mismatch_raises(chip):
    pump = PumpSpec(pump_wavelength=0.78, pulse_duration=1000.0)
    with pytest.raises(qpic.ValidationError):
        build_jsa(chip.model, pump, chip.phase_spec)


def test_pump_spec_derived_quantities():
    pump = PumpSpec(pump_wavelength=0.775, pulse_duration=2.0)
    assert pump.bandwidth == pytest.approx(0.5)
    assert pump.omega_pump == pytest.approx(
        qpic.omega_from_wavelength(0.775), rel=1e-14)


def test_flip_diff_matches_exchange(jsa_medium):
    probe = np.cos(jsa_medium.diff_grid / 3.0) + 1j * jsa_medium.diff_grid
    grid = np.broadcast_to(probe, jsa_medium.amplitude.shape)
    assert np.array_equal(jsa_medium.flip_diff(grid), grid[:, ::-1])
