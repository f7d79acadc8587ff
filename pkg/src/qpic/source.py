"""Joint spectral amplitude of the type-II downconversion source.

The two-photon amplitude of a pulsed, quasi-phase-matched type-II process
factorises into a Gaussian pump envelope in the total frequency and a
sinc phase-matching profile:

    F(w_s, w_i) = C exp[-(w_s + w_i - w_p)^2 / (2 Omega^2)]
                    * Sinc(dk L / 2) * exp(i dk L / 2),

with Sinc(x) = sin(x)/x, dk the type-II mismatch and L the poled length.
Because the pump envelope pins w_s + w_i to a band that is orders of
magnitude narrower than the phase-matching band for long pulses, the
amplitude is sampled on a rotated grid: one axis is the total frequency
Sigma = w_s + w_i, the other the difference d = w_s - w_i. Signal/idler
exchange is then an exact reversal of the difference axis, and quadrature
weights carry the Jacobian 1/2 of the change of variables.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .dispersion import (MaterialModel, PhaseMatchSpec, group_velocity,
                         omega_from_wavelength, pdc_mismatch,
                         wavelength_from_omega)
from .errors import (RangeError, SupportTruncationError, ValidationError)

SUM_SIGMA_FACTOR = 6.0  # default pump-axis half width, in units of Omega
SINC_LOBES = 4  # cover the side-lobes out to the 4th zero
EDGE_FLOOR = 1e-3  # boundary amplitude allowed relative to the peak
MIN_SUM_FACTOR = np.sqrt(2.0 * np.log(1.0 / EDGE_FLOOR))  # ~3.72


@dataclass(frozen=True)
class PumpSpec:
    """Pulsed pump: centre wavelength (um) and duration tau (ps).

    The spectral envelope is exp[-(w - w_p)^2 / (2 Omega^2)] with
    Omega = 1/tau (rad/ps).
    """

    pump_wavelength: float
    pulse_duration: float

    def __post_init__(self):
        if not self.pulse_duration > 0.0:
            raise RangeError(
                f"pulse duration {self.pulse_duration} ps must be > 0")
        if not 0.6 <= self.pump_wavelength <= 0.9:
            raise RangeError(
                f"pump wavelength {self.pump_wavelength} um outside "
                f"[0.6, 0.9] um")

    @property
    def bandwidth(self) -> float:
        """Gaussian spectral std Omega = 1/tau, rad/ps."""
        return 1.0 / self.pulse_duration

    @property
    def omega_pump(self) -> float:
        return float(omega_from_wavelength(self.pump_wavelength))


@dataclass(frozen=True)
class GridSpec:
    """Sampling of the rotated (sum, difference) frequency plane.

    Half widths are in rad/ps; None picks physics-based defaults (6 Omega
    along the sum axis, the 4th sinc zero plus ridge margins along the
    difference axis).
    """

    size_sum: int = 512
    size_diff: int = 512
    sum_half_width: float | None = None
    diff_half_width: float | None = None

    def __post_init__(self):
        if self.size_sum < 3 or self.size_diff < 3:
            raise ValidationError("grid needs at least 3 points per axis")
        for label, value in (("sum_half_width", self.sum_half_width),
                             ("diff_half_width", self.diff_half_width)):
            if value is not None and not value > 0.0:
                raise ValidationError(f"{label} must be > 0, got {value}")


@dataclass
class JointSpectralAmplitude:
    """Normalised two-photon amplitude on the rotated frequency grid.

    ``amplitude[i, j]`` is F at Sigma = sum_grid[i], d = diff_grid[j], so
    the signal frequency is (Sigma + d)/2 and the idler (Sigma - d)/2.
    ``weights`` are trapezoid quadrature weights including the Jacobian
    1/2; sum(weights * |amplitude|^2) == 1.
    """

    sum_grid: np.ndarray
    diff_grid: np.ndarray
    amplitude: np.ndarray
    weights: np.ndarray
    normalization: float  # C, applied to the raw product form
    pump: PumpSpec
    phase_spec: PhaseMatchSpec
    model: MaterialModel
    temperature: float
    ridge_offset: float = 0.0  # difference-axis centre of the sinc ridge
    meta: dict = field(default_factory=dict)

    @property
    def signal_frequencies(self) -> np.ndarray:
        """2D map of w_s over the grid, shape (size_sum, size_diff)."""
        return (self.sum_grid[:, None] + self.diff_grid[None, :]) / 2.0

    @property
    def idler_frequencies(self) -> np.ndarray:
        return (self.sum_grid[:, None] - self.diff_grid[None, :]) / 2.0

    def exchanged(self) -> np.ndarray:
        """Amplitude with signal and idler swapped (exact axis reversal)."""
        return self.amplitude[:, ::-1]

    def flip_diff(self, values: np.ndarray) -> np.ndarray:
        """Reverse any grid-shaped array along the difference axis."""
        return values[..., ::-1]

    @property
    def norm(self) -> float:
        return float(np.sum(self.weights * np.abs(self.amplitude) ** 2))


def _trapezoid_weights(grid):
    w = np.full(grid.shape, grid[1] - grid[0], dtype=float)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def _ridge_offset(model, spec, omega_p, temperature, search=50.0):
    """Difference-axis location of the phase-matching ridge at Sigma = w_p."""

    def mismatch(d):
        return pdc_mismatch(model, spec, (omega_p + d) / 2.0,
                            (omega_p - d) / 2.0, temperature)

    xs = np.linspace(-search, search, 1001)
    ys = np.array([mismatch(x) for x in xs])
    sign_change = np.nonzero(np.diff(np.sign(ys)) != 0)[0]
    if len(sign_change) == 0:
        warnings.warn("phase-matching ridge not found near the pump line; "
                      "centring the difference axis on zero", stacklevel=3)
        return 0.0
    i = sign_change[np.argmin(np.abs(xs[sign_change]))]
    return brentq(mismatch, xs[i], xs[i + 1], xtol=1e-12)


def build_jsa(model: MaterialModel, pump: PumpSpec, spec: PhaseMatchSpec,
              grid: GridSpec | None = None,
              temperature=None) -> JointSpectralAmplitude:
    """Sample and normalise the joint spectral amplitude.

    Raises SupportTruncationError when the pump-axis edges still carry
    more than 1e-3 of the peak amplitude.
    """
    if grid is None:
        grid = GridSpec()
    if abs(pump.pump_wavelength - spec.pump_wavelength) > 1e-12:
        raise ValidationError(
            f"pump wavelength mismatch: pulse says {pump.pump_wavelength} um,"
            f" phase matching says {spec.pump_wavelength} um")
    t = float(model.temperature if temperature is None else temperature)
    omega_p = pump.omega_pump
    omega_bar = omega_p / 2.0
    bw = pump.bandwidth

    s_half = grid.sum_half_width
    if s_half is None:
        s_half = SUM_SIGMA_FACTOR * bw

    d_star = _ridge_offset(model, spec, omega_p, t)
    d_half = grid.diff_half_width
    if d_half is None:
        # group-velocity walk-off sets the sinc lobe spacing along d
        vg_h = group_velocity(model, "H", omega_bar + d_star / 2.0, t)
        vg_v = group_velocity(model, "V", omega_bar - d_star / 2.0, t)
        vg_p = group_velocity(model, "H", omega_p, t)
        walkoff = abs(1.0 / vg_h - 1.0 / vg_v)
        lobe_span = 4.0 * SINC_LOBES * np.pi / (walkoff * spec.pdc_length)
        # the ridge drifts along d as Sigma moves off the pump line
        tilt = abs(2.0 * (1.0 / vg_p - (1.0 / vg_h + 1.0 / vg_v) / 2.0)
                   / (1.0 / vg_h - 1.0 / vg_v))
        d_half = abs(d_star) + lobe_span + tilt * s_half

    sum_grid = np.linspace(omega_p - s_half, omega_p + s_half, grid.size_sum)
    diff_grid = np.linspace(-d_half, d_half, grid.size_diff)
    # force exact antisymmetry so signal/idler exchange is a pure reversal
    diff_grid = 0.5 * (diff_grid - diff_grid[::-1])

    omega_s = (sum_grid[:, None] + diff_grid[None, :]) / 2.0
    omega_i = (sum_grid[:, None] - diff_grid[None, :]) / 2.0
    if np.any(omega_i <= 0.0) or np.any(omega_s <= 0.0):
        raise RangeError("difference-axis span reaches non-positive "
                         "frequencies; narrow the grid")

    dk = pdc_mismatch(model, spec, omega_s, omega_i, t)
    u = dk * spec.pdc_length / 2.0
    envelope = np.exp(-((sum_grid - omega_p) ** 2) / (2.0 * bw ** 2))
    raw = envelope[:, None] * np.sinc(u / np.pi) * np.exp(1j * u)

    peak = float(np.max(np.abs(raw)))
    edge = float(max(np.max(np.abs(raw[0, :])), np.max(np.abs(raw[-1, :]))))
    if peak == 0.0 or edge > EDGE_FLOOR * peak:
        needed = max(MIN_SUM_FACTOR * bw * 1.05, 2.0 * s_half)
        raise SupportTruncationError(
            f"sum-axis half width {s_half:.4g} rad/ps clips the pump "
            f"envelope (edge/peak = {edge / peak if peak else np.inf:.2e}); "
            f"use at least {needed:.4g} rad/ps",
            suggested_half_width=needed)

    weights = 0.5 * np.outer(_trapezoid_weights(sum_grid),
                             _trapezoid_weights(diff_grid))
    total = float(np.sum(weights * np.abs(raw) ** 2))
    if not np.isfinite(total) or total <= 0.0:
        raise SupportTruncationError(
            "amplitude integral is not positive and finite on this grid")
    c = 1.0 / np.sqrt(total)
    return JointSpectralAmplitude(
        sum_grid=sum_grid, diff_grid=diff_grid, amplitude=c * raw,
        weights=weights, normalization=c, pump=pump, phase_spec=spec,
        model=model, temperature=t, ridge_offset=float(d_star),
        meta={"raw_norm": total, "sum_half_width": float(s_half),
              "diff_half_width": float(d_half)})


def jsa_exchange_asymmetry(jsa: JointSpectralAmplitude) -> float:
    """Quadrature-weighted L2 asymmetry of |F| under signal/idler exchange.

    The centre phase exp(i dk L / 2) is a pure group delay compensated by
    the interferometer, so the spectral shape alone is compared:
    || |F| - |F_exchanged| ||_2 / || F ||_2.
    """
    mag = np.abs(jsa.amplitude)
    diff = mag - mag[:, ::-1]
    num = np.sqrt(np.sum(jsa.weights * diff ** 2))
    den = np.sqrt(np.sum(jsa.weights * mag ** 2))
    return float(num / den)


@dataclass(frozen=True)
class SpectralDensity:
    """Single-photon marginal: density over angular frequency plus a
    wavelength-parameterised, peak-normalised profile."""

    omega: np.ndarray  # rad/ps
    density: np.ndarray  # 1/(rad/ps), integrates to 1
    wavelength: np.ndarray  # um, decreasing with omega
    intensity: np.ndarray  # density / max(density)

    @property
    def peak_wavelength(self) -> float:
        return float(self.wavelength[int(np.argmax(self.density))])

    @property
    def peak_omega(self) -> float:
        return float(self.omega[int(np.argmax(self.density))])


@dataclass(frozen=True)
class MarginalSpectra:
    signal: SpectralDensity
    idler: SpectralDensity


def marginal_spectra(jsa: JointSpectralAmplitude,
                     n_points: int = 2048) -> MarginalSpectra:
    """Marginal intensity spectra of the two photons.

    Integrates |F|^2 over the other photon's frequency; rows of the
    rotated grid are resampled onto a common frequency axis by linear
    interpolation. Each density integrates to 1 up to interpolation error.
    """
    mag2 = np.abs(jsa.amplitude) ** 2
    w_sum = _trapezoid_weights(jsa.sum_grid)
    half_sum = jsa.sum_grid / 2.0
    half_diff = jsa.diff_grid / 2.0

    def marginal(sign):
        lo = float(half_sum[0] + min(sign * half_diff[0],
                                     sign * half_diff[-1]))
        hi = float(half_sum[-1] + max(sign * half_diff[0],
                                      sign * half_diff[-1]))
        omega = np.linspace(lo, hi, n_points)
        acc = np.zeros(n_points)
        # at fixed w_s the other photon's measure dw_i equals dSigma, so
        # the marginal is a plain Sigma sum along resampled rows
        for r in range(len(jsa.sum_grid)):
            d_needed = sign * (2.0 * omega - jsa.sum_grid[r])
            acc += w_sum[r] * np.interp(d_needed, jsa.diff_grid, mag2[r, :],
                                        left=0.0, right=0.0)
        return SpectralDensity(
            omega=omega, density=acc,
            wavelength=np.asarray(wavelength_from_omega(omega)),
            intensity=acc / float(np.max(acc)))

    return MarginalSpectra(signal=marginal(+1), idler=marginal(-1))
