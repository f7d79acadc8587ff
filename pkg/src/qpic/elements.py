"""Frequency-dependent 4x4 transfer matrices of the on-chip elements.

Mode basis, in fixed order: (channel 1, H), (channel 1, V), (channel 2, H),
(channel 2, V). Matrices map input mode amplitudes to output mode
amplitudes, U[out, in]; the column index is the input mode. Composition of
a chip is left-multiplication in listed order (first element acts first).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import cmt
from .dispersion import (C_UM_PS, MaterialModel, index, pc_mismatch,
                         wavelength_from_omega)
from .errors import RangeError, ValidationError

BASIS = ("1H", "1V", "2H", "2V")


def mode_index(channel: int, pol: str) -> int:
    """Index of (channel, polarisation) in the fixed mode basis."""
    if channel not in (1, 2):
        raise ValidationError(f"channel must be 1 or 2, got {channel!r}")
    if pol not in ("H", "V"):
        raise ValidationError(f"polarisation must be 'H' or 'V', got {pol!r}")
    return (channel - 1) * 2 + (0 if pol == "H" else 1)


@dataclass(frozen=True)
class ElementMatrix:
    """A labelled, frequency-resolved 4x4 unitary.

    ``evaluate(omega)`` accepts a scalar or any-shaped array of angular
    frequencies (rad/ps) and returns shape ``omega.shape + (4, 4)``.
    """

    label: str
    _fn: Callable[[np.ndarray], np.ndarray]

    def evaluate(self, omega):
        w = np.asarray(omega, dtype=float)
        out = self._fn(w)
        return out


def _constant(label: str, matrix: np.ndarray) -> ElementMatrix:
    m = np.asarray(matrix, dtype=complex)

    def fn(w):
        out = np.empty(w.shape + (4, 4), dtype=complex)
        out[...] = m
        return out

    return ElementMatrix(label, fn)


def _check_finite(label, **params):
    for key, value in params.items():
        if not math.isfinite(value):
            raise ValidationError(f"{label}: {key} must be finite, got {value}")


def pbs_matrix(alpha: float, beta: float) -> ElementMatrix:
    """Polarising splitter between the two channels.

    alpha mixes the H modes, beta the V modes. The ideal setting
    alpha = beta = pi/2 keeps H in its channel (phase i) and swaps V
    across channels. Angles outside [0, pi/2] only trigger a warning.
    """
    _check_finite("pbs", alpha=alpha, beta=beta)
    if not (0.0 <= alpha <= math.pi / 2 and 0.0 <= beta <= math.pi / 2):
        warnings.warn("pbs angles outside [0, pi/2]; matrix stays unitary "
                      "but the setting is outside the calibrated range",
                      stacklevel=2)
    sa, ca = math.sin(alpha), math.cos(alpha)
    sb, cb = math.sin(beta), math.cos(beta)
    m = [[1j * sa, 0, ca, 0],
         [0, 1j * cb, 0, sb],
         [ca, 0, 1j * sa, 0],
         [0, sb, 0, 1j * cb]]
    return _constant("pbs", m)


def bs_matrix(theta: float, xi: float) -> ElementMatrix:
    """Polarisation-insensitive coupler between the channels.

    theta couples the H modes, xi the V modes; theta = xi = pi/4 is the
    balanced setting. Angles outside [0, pi/4] only trigger a warning.
    """
    _check_finite("bs", theta=theta, xi=xi)
    if not (0.0 <= theta <= math.pi / 4 and 0.0 <= xi <= math.pi / 4):
        warnings.warn("bs angles outside [0, pi/4]; matrix stays unitary "
                      "but the setting is outside the calibrated range",
                      stacklevel=2)
    st, ct = math.sin(theta), math.cos(theta)
    sx, cx = math.sin(xi), math.cos(xi)
    m = [[ct, 0, 1j * st, 0],
         [0, cx, 0, 1j * sx],
         [1j * st, 0, ct, 0],
         [0, 1j * sx, 0, cx]]
    return _constant("bs", m)


def pm_matrix(phi_h: float, phi_v: float) -> ElementMatrix:
    """Channel-1 phase shifter: phases phi_h and phi_v on 1H and 1V."""
    _check_finite("pm", phi_h=phi_h, phi_v=phi_v)
    m = np.diag([np.exp(1j * phi_h), np.exp(1j * phi_v), 1.0, 1.0])
    return _constant("pm", m)


def pc_matrix(model: MaterialModel, poling_period: float, length: float,
              kappa: float, temperature=None) -> ElementMatrix:
    """Polarisation converter in channel 1 (poled H <-> V coupling).

    The 2x2 channel-1 block follows from coupled-mode evolution over
    ``length`` with coupling ``kappa`` (rad/um) and wavelength-dependent
    mismatch set by ``poling_period``; channel 2 is untouched.
    """
    _check_finite("pc", poling_period=poling_period, length=length,
                  kappa=kappa)
    if not length > 0.0:
        raise RangeError(f"pc length {length} um must be > 0")
    if kappa < 0.0:
        raise RangeError(f"pc coupling {kappa} rad/um must be >= 0")

    def fn(w):
        lam = wavelength_from_omega(w)
        dk = np.asarray(pc_mismatch(model, poling_period, lam, temperature))
        s = np.hypot(kappa, dk / 2.0)
        s_safe = np.where(s == 0.0, 1.0, s)
        a = (dk / 2.0) / s_safe
        b = kappa / s_safe
        phase = s * length
        cosp = np.cos(phase)
        sinp = np.sin(phase)
        out = np.zeros(w.shape + (4, 4), dtype=complex)
        out[..., 0, 0] = cosp + 1j * a * sinp
        out[..., 0, 1] = -b * sinp
        out[..., 1, 0] = b * sinp
        out[..., 1, 1] = cosp - 1j * a * sinp
        out[..., 2, 2] = 1.0
        out[..., 3, 3] = 1.0
        return out

    return ElementMatrix("pc", fn)


def fp_matrix(model: MaterialModel, l1: float, l2: float,
              temperature=None) -> ElementMatrix:
    """Two parallel dispersive straights: length l1 in channel 1, l2 in 2.

    Pure diagonal phases exp(i w n_pol(w) l / c) per mode.
    """
    _check_finite("fp", l1=l1, l2=l2)
    if l1 < 0.0 or l2 < 0.0:
        raise RangeError(f"fp lengths ({l1}, {l2}) um must be >= 0")

    def fn(w):
        lam = wavelength_from_omega(w)
        nh = np.asarray(index(model, "H", lam, temperature))
        nv = np.asarray(index(model, "V", lam, temperature))
        kh = nh * w / C_UM_PS
        kv = nv * w / C_UM_PS
        out = np.zeros(w.shape + (4, 4), dtype=complex)
        out[..., 0, 0] = np.exp(1j * kh * l1)
        out[..., 1, 1] = np.exp(1j * kv * l1)
        out[..., 2, 2] = np.exp(1j * kh * l2)
        out[..., 3, 3] = np.exp(1j * kv * l2)
        return out

    return ElementMatrix("fp", fn)


def eo_bs_matrix(kappa_c: float, half_length: float, dbeta_1: float,
                 dbeta_2: float, dbeta_1_v: float | None = None,
                 dbeta_2_v: float | None = None) -> ElementMatrix:
    """Electro-optically tuned directional coupler between the channels.

    Two sections of length ``half_length`` with detunings dbeta_1 then
    dbeta_2 (rad/um); each polarisation sees the same coupler unless the
    V-mode detunings are overridden. Frequency independent within a pulse
    bandwidth, so evaluate() broadcasts a constant matrix.
    """
    _check_finite("eobs", kappa_c=kappa_c, half_length=half_length,
                  dbeta_1=dbeta_1, dbeta_2=dbeta_2)
    if kappa_c < 0.0:
        raise RangeError(f"eobs coupling {kappa_c} rad/um must be >= 0")
    if not half_length > 0.0:
        raise RangeError(f"eobs half length {half_length} um must be > 0")
    if dbeta_1_v is None:
        dbeta_1_v = dbeta_1
    if dbeta_2_v is None:
        dbeta_2_v = dbeta_2

    mh = cmt.compose_sections(kappa_c, (dbeta_1, dbeta_2), half_length)
    mv = cmt.compose_sections(kappa_c, (dbeta_1_v, dbeta_2_v), half_length)
    m = np.zeros((4, 4), dtype=complex)
    # H modes live at indices (0, 2), V modes at (1, 3)
    m[np.ix_((0, 2), (0, 2))] = mh
    m[np.ix_((1, 3), (1, 3))] = mv
    return _constant("eobs", m)


# ---------------------------------------------------------------------------
# voltage calibration layers

PM_U_PI = 5.0  # V for a pi shift on the V mode
PC_U_OFFSET = 5.5  # V, residual-birefringence bias of the converter
PC_KAPPA_PER_VOLT = math.pi / (2.0 * 7600.0 * 20.0)  # rad/(um V)
EO_BS_DBETA_PER_VOLT = 2e-5  # rad/(um V)


def pm_phases(voltage: float, u_pi: float = PM_U_PI):
    """Electrode voltage to (phi_h, phi_v) for the phase shifter.

    The V mode picks up pi per u_pi volts; the H mode is three times
    stiffer on this cut, phi_h = phi_v / 3.
    """
    _check_finite("pm_phases", voltage=voltage, u_pi=u_pi)
    if not u_pi > 0.0:
        raise RangeError(f"u_pi {u_pi} V must be > 0")
    phi_v = math.pi * voltage / u_pi
    return phi_v / 3.0, phi_v


def pc_kappa(voltage: float, u_offset: float = PC_U_OFFSET,
             kappa_per_volt: float = PC_KAPPA_PER_VOLT) -> float:
    """Converter drive voltage to coupling strength kappa (rad/um).

    Conversion vanishes at ``u_offset`` and grows linearly with the
    detuning from it; the sign of the drive only flips the coupling phase,
    so the magnitude is returned.
    """
    _check_finite("pc_kappa", voltage=voltage, u_offset=u_offset,
                  kappa_per_volt=kappa_per_volt)
    return abs(kappa_per_volt * (voltage - u_offset))


def eo_bs_dbeta(voltage: float,
                dbeta_per_volt: float = EO_BS_DBETA_PER_VOLT) -> float:
    """Section electrode voltage to propagation-constant detuning."""
    _check_finite("eo_bs_dbeta", voltage=voltage,
                  dbeta_per_volt=dbeta_per_volt)
    return dbeta_per_volt * voltage
