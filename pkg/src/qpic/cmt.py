"""Coupled-mode propagation in poled and electro-optic two-mode sections.

Closed-form evolution of two co-propagating amplitudes (TE, TM or the two
channels of a directional coupler) under constant coupling kappa and
phase mismatch dbeta:

    A_te(z) = {A_te(0) [cos sz - i (dbeta/2s) sin sz]
               - i (kappa/s) A_tm(0) sin sz} e^{+i dbeta z / 2}
    A_tm(z) = {A_tm(0) [cos sz + i (dbeta/2s) sin sz]
               - i (kappa/s) A_te(0) sin sz} e^{-i dbeta z / 2}

with s = sqrt(kappa^2 + (dbeta/2)^2). Total power is conserved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

from .dispersion import MaterialModel, pc_matched_wavelength, pc_mismatch
from .errors import NumericalError, RangeError, ValidationError


@dataclass(frozen=True)
class CmtState:
    """Two complex mode amplitudes at position z (um)."""

    a_te: complex
    a_tm: complex
    z: float = 0.0

    @property
    def power(self) -> float:
        return abs(self.a_te) ** 2 + abs(self.a_tm) ** 2


def coupling_matrix(kappa, dbeta, z):
    """Transfer matrix of one uniform section, acting on (A_te, A_tm).

    Broadcasts over array-valued kappa, dbeta or z; the matrix axes are
    appended, so the result has shape ``broadcast_shape + (2, 2)``.
    """
    kappa = np.asarray(kappa, dtype=float)
    dbeta = np.asarray(dbeta, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any(z < 0.0):
        raise RangeError("section length must be >= 0")
    s = np.hypot(kappa, dbeta / 2.0)
    s_safe = np.where(s == 0.0, 1.0, s)
    phase = s * z
    cosp = np.cos(phase)
    sinp = np.sin(phase)
    d = (dbeta / 2.0) / s_safe * sinp
    b = kappa / s_safe * sinp
    e = np.exp(1j * dbeta * z / 2.0)
    shape = np.broadcast_shapes(kappa.shape, dbeta.shape, z.shape)
    out = np.empty(shape + (2, 2), dtype=complex)
    out[..., 0, 0] = (cosp - 1j * d) * e
    out[..., 0, 1] = -1j * b * e
    out[..., 1, 0] = -1j * b * np.conj(e)
    out[..., 1, 1] = (cosp + 1j * d) * np.conj(e)
    return out


def _symmetric_core(kappa, dbeta, z):
    # constant-coefficient propagator in the co-rotating frame; the frame
    # phases diag(e^{i dbeta z/2}, e^{-i dbeta z/2}) are applied outside
    kappa = np.asarray(kappa, dtype=float)
    dbeta = np.asarray(dbeta, dtype=float)
    z = np.asarray(z, dtype=float)
    s = np.hypot(kappa, dbeta / 2.0)
    s_safe = np.where(s == 0.0, 1.0, s)
    phase = s * z
    cosp = np.cos(phase)
    sinp = np.sin(phase)
    d = (dbeta / 2.0) / s_safe * sinp
    b = kappa / s_safe * sinp
    shape = np.broadcast_shapes(kappa.shape, dbeta.shape, z.shape)
    out = np.empty(shape + (2, 2), dtype=complex)
    out[..., 0, 0] = cosp - 1j * d
    out[..., 0, 1] = -1j * b
    out[..., 1, 0] = -1j * b
    out[..., 1, 1] = cosp + 1j * d
    return out


def compose_sections(kappa, dbetas, length):
    """Transfer matrix of consecutive sections with stepwise detuning.

    The rotating frame accumulates continuously across the boundaries, so
    the result is diag(e^{i phi/2}, e^{-i phi/2}) applied to the product
    of the symmetric per-section cores, phi = sum(dbeta_k) * length.
    Broadcasts over arrays inside ``dbetas``.
    """
    if np.any(np.asarray(length, dtype=float) < 0.0):
        raise RangeError("section length must be >= 0")
    total = None
    phi = 0.0
    for dbeta in dbetas:
        core = _symmetric_core(kappa, dbeta, length)
        total = core if total is None else core @ total
        phi = phi + np.asarray(dbeta, dtype=float) * length
    if total is None:
        raise ValidationError("compose_sections needs at least one section")
    frame = np.zeros(total.shape, dtype=complex)
    frame[..., 0, 0] = np.exp(1j * phi / 2.0)
    frame[..., 1, 1] = np.exp(-1j * phi / 2.0)
    return frame @ total


def cmt_evolve(state: CmtState, kappa: float, dbeta: float,
               dz: float) -> CmtState:
    """Propagate a state forward by dz (um) through a uniform section."""
    if dz < 0.0:
        raise RangeError(f"propagation step {dz} um must be >= 0")
    m = coupling_matrix(kappa, dbeta, dz)
    # the rotating-frame phase is anchored at the current position, not at
    # zero; conjugate the step by diag(f, 1/f) so repeated small steps
    # reproduce one long section exactly
    f = np.exp(1j * dbeta * state.z / 2.0)
    a_te = m[0, 0] * state.a_te + f * f * m[0, 1] * state.a_tm
    a_tm = m[1, 0] * state.a_te / (f * f) + m[1, 1] * state.a_tm
    return CmtState(a_te=complex(a_te), a_tm=complex(a_tm), z=state.z + dz)


def conversion_fraction(model: MaterialModel, poling_period: float,
                        length: float, kappa: float, wavelength,
                        temperature=None):
    """TE -> TM converted power fraction of a poled section.

    Equals (kappa/s)^2 sin^2(s L) with the wavelength-dependent mismatch
    of the conversion grating.
    """
    if not length > 0.0:
        raise RangeError(f"section length {length} um must be > 0")
    if kappa < 0.0:
        raise RangeError(f"coupling {kappa} rad/um must be >= 0")
    lam = np.asarray(wavelength, dtype=float)
    dk = np.asarray(pc_mismatch(model, poling_period, lam, temperature))
    s = np.hypot(kappa, dk / 2.0)
    s_safe = np.where(s == 0.0, 1.0, s)
    frac = (kappa / s_safe * np.sin(s * length)) ** 2
    return frac if lam.ndim else float(frac)


def pc_spectrum(model: MaterialModel, poling_period: float, length: float,
                kappa: float, temperature=None, wavelengths=None,
                n_points: int = 2001, span_fwhm: float = 4.0):
    """Conversion spectrum of a poled section.

    Returns (wavelengths, fraction). When no wavelength grid is given, one
    is centred on the matched wavelength and spans ``span_fwhm`` times the
    estimated sinc width on each side.
    """
    if wavelengths is None:
        centre = pc_matched_wavelength(model, poling_period, temperature)
        # FWHM of sin^2(dk L / 2)/..: dk L spans ~ 5.57 rad across half max
        h = centre * 1e-4
        slope = abs(pc_mismatch(model, poling_period, centre + h, temperature)
                    - pc_mismatch(model, poling_period, centre - h,
                                  temperature)) / (2.0 * h)
        fwhm = 2.0 * 2.783 / (length * slope)
        half = span_fwhm * fwhm
        wavelengths = np.linspace(centre - half, centre + half, n_points)
    else:
        wavelengths = np.asarray(wavelengths, dtype=float)
    frac = conversion_fraction(model, poling_period, length, kappa,
                               wavelengths, temperature)
    return wavelengths, frac


def peak_fwhm(x, y):
    """Full width at half maximum of a single-peaked sampled curve.

    Linear interpolation on both flanks of the global maximum. Raises
    NumericalError when either half-maximum crossing is outside the grid.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    i = int(np.argmax(y))
    half = y[i] / 2.0
    if i == 0 or i == len(y) - 1 or y[0] > half or y[-1] > half:
        raise NumericalError("peak half-maximum crossings not bracketed by "
                             "the sampled grid")
    j = i
    while y[j] > half:
        j -= 1
    left = x[j] + (x[j + 1] - x[j]) * (half - y[j]) / (y[j + 1] - y[j])
    j = i
    while y[j] > half:
        j += 1
    right = x[j - 1] + (x[j] - x[j - 1]) * (half - y[j - 1]) / (y[j] - y[j - 1])
    return right - left


def switch_map(kappa_c: float, half_length: float, u1_values, u2_values,
               dbeta_per_volt: float | None = None):
    """Bar-state power of a two-section electro-optic coupler vs voltages.

    Returns an array of shape (len(u1), len(u2)) with the power staying in
    the launch channel after sections driven at u1 then u2.
    """
    from .elements import EO_BS_DBETA_PER_VOLT  # local to avoid a cycle
    if dbeta_per_volt is None:
        dbeta_per_volt = EO_BS_DBETA_PER_VOLT
    u1 = np.asarray(u1_values, dtype=float)
    u2 = np.asarray(u2_values, dtype=float)
    d1 = dbeta_per_volt * u1[:, None]
    d2 = dbeta_per_volt * u2[None, :]
    total = compose_sections(kappa_c, (d1, d2), half_length)
    return np.abs(total[..., 0, 0]) ** 2


# ---------------------------------------------------------------------------
# directional-coupler splitting model and fit

@dataclass(frozen=True)
class CouplerFit:
    """Per-polarisation sin^2 model of a coupler's unwanted-port ratio.

    ratio(L_c) = sin^2( pi (L_c - offset) / (2 beat) ), zero at the
    optimum length ``offset`` and unity one beat length later.
    """

    beat_te: float
    offset_te: float
    beat_tm: float
    offset_tm: float

    def __post_init__(self):
        if self.beat_te <= 0.0 or self.beat_tm <= 0.0:
            raise RangeError("beat lengths must be > 0")


def _ratio_model(length, beat, offset):
    return np.sin(np.pi * (length - offset) / (2.0 * beat)) ** 2


def splitting_ratio(fit: CouplerFit, coupler_length, pol: str):
    """Unwanted-port power fraction at a given coupler length."""
    length = np.asarray(coupler_length, dtype=float)
    if pol == "H":
        r = _ratio_model(length, fit.beat_te, fit.offset_te)
    elif pol == "V":
        r = _ratio_model(length, fit.beat_tm, fit.offset_tm)
    else:
        raise ValidationError(f"polarisation must be 'H' or 'V', got {pol!r}")
    return r if length.ndim else float(r)


def _fit_branch(lengths, ratios):
    lengths = np.asarray(lengths, dtype=float)
    ratios = np.asarray(ratios, dtype=float)
    if lengths.size < 3:
        raise ValidationError("coupler fit needs at least 3 points per "
                              "polarisation")
    if np.any((ratios < 0.0) | (ratios > 1.0)):
        raise ValidationError("splitting ratios must lie in [0, 1]")
    span = lengths.max() - lengths.min()
    p0 = (max(span, 1.0), float(lengths[int(np.argmin(ratios))]))
    popt, _ = curve_fit(_ratio_model, lengths, ratios, p0=p0,
                        bounds=([1e-3, lengths.min() - span],
                                [1e5, lengths.max() + span]),
                        maxfev=20000)
    return float(popt[0]), float(popt[1])


def fit_coupler(lengths_te, ratios_te, lengths_tm, ratios_tm) -> CouplerFit:
    """Least-squares fit of the sin^2 model, one branch per polarisation."""
    beat_te, offset_te = _fit_branch(lengths_te, ratios_te)
    beat_tm, offset_tm = _fit_branch(lengths_tm, ratios_tm)
    return CouplerFit(beat_te=beat_te, offset_te=offset_te,
                      beat_tm=beat_tm, offset_tm=offset_tm)


def pbs_angles(fit: CouplerFit, coupler_length: float):
    """Map measured splitting ratios to splitter angles (alpha, beta).

    The complement of each unwanted-port ratio is the designed routing
    probability: sin^2 alpha = 1 - r_H, sin^2 beta = 1 - r_V.
    """
    r_h = splitting_ratio(fit, coupler_length, "H")
    r_v = splitting_ratio(fit, coupler_length, "V")
    return (math.asin(math.sqrt(1.0 - r_h)),
            math.asin(math.sqrt(1.0 - r_v)))


def save_coupler_fit(fit: CouplerFit, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"beat_te = {fit.beat_te!r}\n")
        fh.write(f"offset_te = {fit.offset_te!r}\n")
        fh.write(f"beat_tm = {fit.beat_tm!r}\n")
        fh.write(f"offset_tm = {fit.offset_tm!r}\n")


def load_coupler_fit(path) -> CouplerFit:
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(
                    f"{path}: line {lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            try:
                values[key] = float(value)
            except ValueError as exc:
                raise ValidationError(
                    f"{path}: line {lineno}: {exc}") from exc
    try:
        return CouplerFit(**values)
    except TypeError as exc:
        raise ValidationError(f"{path}: {exc}") from exc
