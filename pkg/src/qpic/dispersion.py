"""Temperature-dependent dispersion of Ti-indiffused PPLN waveguides.

Effective indices are modelled as bulk congruent lithium niobate Sellmeier
curves plus a constant waveguide increment per polarisation. The H (TE)
polarisation rides the ordinary branch, V (TM) the extraordinary branch,
and the pump is H-polarised. Units throughout: lengths in um, time in ps,
angular frequency in rad/ps, temperature in degrees C.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import NumericalError, PhaseMatchError, RangeError, ValidationError

C_UM_PS = 299.792458  # speed of light, um/ps

LAMBDA_MIN = 0.4  # um, Sellmeier validity
LAMBDA_MAX = 2.0
TEMP_MIN = 0.0  # C
TEMP_MAX = 200.0
RESIDUAL_TOL = 1e-10  # rad/um, accepted |mismatch| at a reported root


def omega_from_wavelength(wavelength):
    """Vacuum wavelength (um) to angular frequency (rad/ps)."""
    return 2.0 * np.pi * C_UM_PS / np.asarray(wavelength, dtype=float)


def wavelength_from_omega(omega):
    """Angular frequency (rad/ps) to vacuum wavelength (um)."""
    return 2.0 * np.pi * C_UM_PS / np.asarray(omega, dtype=float)


def _ordinary_shifted_pole(a, b, lam, t):
    # Single-pole fit with temperature folded into the pole and a constant
    # term: n^2 = a1 + (a2 + b1 F)/(lam^2 - (a3 + b2 F)^2) + b3 F - a4 lam^2,
    # F = (T - 24.5)(T + 570.5).
    f = (t - 24.5) * (t + 570.5)
    a1, a2, a3, a4 = a
    b1, b2, b3 = b
    n2 = a1 + (a2 + b1 * f) / (lam ** 2 - (a3 + b2 * f) ** 2) + b3 * f - a4 * lam ** 2
    return np.sqrt(n2)


def _extraordinary_two_pole(a, b, lam, t):
    # Two-pole fit, f = (T - 24.5)(T + 570.82); the second (infrared) pole
    # is temperature independent except through its strength.
    f = (t - 24.5) * (t + 570.82)
    a1, a2, a3, a4, a5, a6 = a
    b1, b2, b3, b4 = b
    n2 = (a1 + b1 * f
          + (a2 + b2 * f) / (lam ** 2 - (a3 + b3 * f) ** 2)
          + (a4 + b4 * f) / (lam ** 2 - a5 ** 2)
          - a6 * lam ** 2)
    return np.sqrt(n2)


# form name -> (evaluator, len(a), len(b))
_SELLMEIER_FORMS = {
    "edwards-lawrence-1984": (_ordinary_shifted_pole, 4, 3),
    "jundt-1997": (_extraordinary_two_pole, 6, 4),
}


@dataclass(frozen=True)
class SellmeierSet:
    """One branch of the bulk dispersion: a named functional form plus its
    wavelength coefficients ``a`` and temperature coefficients ``b``."""

    form: str
    a: tuple
    b: tuple

    def __post_init__(self):
        if self.form not in _SELLMEIER_FORMS:
            raise ValidationError(
                f"unknown Sellmeier form '{self.form}'; "
                f"known forms: {sorted(_SELLMEIER_FORMS)}")
        _, na, nb = _SELLMEIER_FORMS[self.form]
        if len(self.a) != na or len(self.b) != nb:
            raise ValidationError(
                f"form '{self.form}' needs {na} 'a' and {nb} 'b' coefficients, "
                f"got {len(self.a)} and {len(self.b)}")

    def evaluate(self, wavelength, temperature):
        fn, _, _ = _SELLMEIER_FORMS[self.form]
        return fn(self.a, self.b, np.asarray(wavelength, dtype=float),
                  float(temperature))


# Congruent lithium niobate. Ordinary branch: Edwards & Lawrence 1984;
# extraordinary branch: Jundt 1997.
_ORDINARY = SellmeierSet(
    form="edwards-lawrence-1984",
    a=(4.9048, 0.11775, 0.21802, 0.027153),
    b=(2.2314e-8, -2.9671e-8, 2.1429e-8),
)
_EXTRAORDINARY = SellmeierSet(
    form="jundt-1997",
    a=(5.35583, 0.100473, 0.20692, 100.0, 11.34927, 0.015334),
    b=(4.629e-7, 3.862e-8, -0.89e-8, 2.657e-5),
)

DELTA_N_MAX = 0.05


@dataclass(frozen=True)
class MaterialModel:
    """Waveguide material: two bulk branches plus constant index increments.

    ``delta_n_h`` is added to the ordinary branch (H/TE modes and the pump),
    ``delta_n_v`` to the extraordinary branch (V/TM modes).
    """

    ordinary: SellmeierSet = field(default=_ORDINARY)
    extraordinary: SellmeierSet = field(default=_EXTRAORDINARY)
    delta_n_h: float = 0.01
    delta_n_v: float = 0.01
    temperature: float = 24.5  # C, default evaluation temperature
    name: str = "congruent LiNbO3, Ti-indiffused"

    def __post_init__(self):
        for label, value in (("delta_n_h", self.delta_n_h),
                             ("delta_n_v", self.delta_n_v)):
            if not 0.0 <= value <= DELTA_N_MAX:
                raise RangeError(
                    f"{label} = {value} outside [0, {DELTA_N_MAX}]")
        _check_temperature(self.temperature)


def default_material() -> MaterialModel:
    """The bundled congruent-LN model with 0.01 waveguide increments."""
    return MaterialModel()


def _check_temperature(temperature):
    t = float(temperature)
    if not TEMP_MIN <= t <= TEMP_MAX:
        raise RangeError(
            f"temperature {t} C outside validity range "
            f"[{TEMP_MIN}, {TEMP_MAX}] C")
    return t


def _check_wavelength(wavelength):
    lam = np.asarray(wavelength, dtype=float)
    if lam.size and (np.any(lam < LAMBDA_MIN) or np.any(lam > LAMBDA_MAX)):
        bad = lam.flat[int(np.argmax((lam < LAMBDA_MIN) | (lam > LAMBDA_MAX)))]
        raise RangeError(
            f"wavelength {bad} um outside validity range "
            f"[{LAMBDA_MIN}, {LAMBDA_MAX}] um")
    return lam


def index(model: MaterialModel, pol: str, wavelength, temperature=None):
    """Effective index for polarisation ``pol`` ('H' or 'V').

    ``wavelength`` in um (scalar or array), ``temperature`` in C (defaults
    to the model's). Raises RangeError outside the validity box.
    """
    lam = _check_wavelength(wavelength)
    t = _check_temperature(model.temperature if temperature is None
                           else temperature)
    if pol == "H":
        n = model.ordinary.evaluate(lam, t) + model.delta_n_h
    elif pol == "V":
        n = model.extraordinary.evaluate(lam, t) + model.delta_n_v
    else:
        raise ValidationError(f"polarisation must be 'H' or 'V', got {pol!r}")
    return n if lam.ndim else float(n)


def wavevector(model: MaterialModel, pol: str, omega, temperature=None):
    """Propagation constant k = n(omega) * omega / c in rad/um."""
    w = np.asarray(omega, dtype=float)
    if np.any(w <= 0.0):
        raise RangeError("angular frequency must be positive, got "
                         f"{float(np.min(w))} rad/ps")
    n = index(model, pol, wavelength_from_omega(w), temperature)
    k = n * w / C_UM_PS
    return k if w.ndim else float(k)


def group_velocity(model: MaterialModel, pol: str, omega, temperature=None):
    """Group velocity dw/dk in um/ps via a central difference in omega."""
    w = np.asarray(omega, dtype=float)
    h = w * 1e-6
    kp = wavevector(model, pol, w + h, temperature)
    km = wavevector(model, pol, w - h, temperature)
    vg = 2.0 * h / (np.asarray(kp) - np.asarray(km))
    if not np.all(np.isfinite(vg)):
        raise NumericalError(
            "group velocity derivative is not finite at "
            f"omega = {float(np.ravel(w)[0])} rad/ps")
    return vg if w.ndim else float(vg)


def group_index(model: MaterialModel, pol: str, omega, temperature=None):
    """c / group_velocity; convenient for delay bookkeeping."""
    return C_UM_PS / group_velocity(model, pol, omega, temperature)


PUMP_LAMBDA_MIN = 0.6  # um, telecom-band type-II downconversion pumps
PUMP_LAMBDA_MAX = 0.9

PROCESSES = ("typeII-PDC",)


@dataclass(frozen=True)
class PhaseMatchSpec:
    """Quasi-phase-matching configuration of the downconversion section."""

    poling_period: float  # um
    pdc_length: float  # um
    pump_wavelength: float  # um
    process: str = "typeII-PDC"

    def __post_init__(self):
        if self.process not in PROCESSES:
            raise ValidationError(
                f"unknown process {self.process!r}; known: {PROCESSES}")
        if not self.poling_period > 0.0:
            raise RangeError(
                f"poling period {self.poling_period} um must be > 0")
        if not self.pdc_length > 0.0:
            raise RangeError(f"pdc length {self.pdc_length} um must be > 0")
        if not PUMP_LAMBDA_MIN <= self.pump_wavelength <= PUMP_LAMBDA_MAX:
            raise RangeError(
                f"pump wavelength {self.pump_wavelength} um outside "
                f"[{PUMP_LAMBDA_MIN}, {PUMP_LAMBDA_MAX}] um")


def pdc_mismatch(model: MaterialModel, spec: PhaseMatchSpec,
                 omega_signal, omega_idler, temperature=None):
    """Phase mismatch of H-pump -> H-signal + V-idler downconversion.

    delta_k = k_p(w_s + w_i) - k_H(w_s) - k_V(w_i) - 2 pi / poling_period,
    in rad/um. The grating term is oriented to absorb the excess pump
    momentum of normally dispersive material, so a positive poling period
    around 9 um phase-matches 1.55 um degeneracy.
    """
    ws = np.asarray(omega_signal, dtype=float)
    wi = np.asarray(omega_idler, dtype=float)
    kp = wavevector(model, "H", ws + wi, temperature)
    ks = wavevector(model, "H", ws, temperature)
    ki = wavevector(model, "V", wi, temperature)
    dk = (np.asarray(kp) - np.asarray(ks) - np.asarray(ki)
          - 2.0 * np.pi / spec.poling_period)
    return dk if (ws.ndim or wi.ndim) else float(dk)


def pc_mismatch(model: MaterialModel, poling_period: float, wavelength,
                temperature=None):
    """Phase mismatch of the H <-> V polarisation-conversion grating.

    delta_k = (2 pi / lambda)(n_H - n_V) - 2 pi / poling_period, rad/um.
    """
    if not poling_period > 0.0:
        raise RangeError(f"poling period {poling_period} um must be > 0")
    lam = np.asarray(wavelength, dtype=float)
    nh = index(model, "H", lam, temperature)
    nv = index(model, "V", lam, temperature)
    dk = 2.0 * np.pi * (np.asarray(nh) - np.asarray(nv)) / lam \
        - 2.0 * np.pi / poling_period
    return dk if lam.ndim else float(dk)


def _bracketed_roots(fn, lo, hi, samples):
    """All sign-change roots of fn on [lo, hi] from a coarse scan."""
    xs = np.linspace(lo, hi, samples)
    ys = np.array([fn(x) for x in xs])
    roots = []
    for i in range(len(xs) - 1):
        y0, y1 = ys[i], ys[i + 1]
        if y0 == 0.0:
            roots.append(xs[i])
        elif y0 * y1 < 0.0:
            roots.append(brentq(fn, xs[i], xs[i + 1],
                                xtol=1e-14, rtol=8.9e-16))
    if len(ys) and ys[-1] == 0.0:
        roots.append(xs[-1])
    return roots


def _verify_residual(fn, root, what):
    res = abs(fn(root))
    if res > RESIDUAL_TOL:
        raise NumericalError(
            f"{what} root residual {res:.3e} rad/um exceeds "
            f"{RESIDUAL_TOL:.0e}")
    return root


def degenerate_wavelength(model: MaterialModel, poling_period: float,
                          temperature=None, bracket=(1.4, 1.7)):
    """Degenerate downconversion wavelength for a given poling period.

    Solves delta_k(w/2 + w/2) = 0 for the common signal/idler wavelength
    inside ``bracket`` (um). Raises PhaseMatchError when no root exists.
    """
    t = model.temperature if temperature is None else temperature

    def mismatch(lam):
        np_pump = index(model, "H", lam / 2.0, t)
        nh = index(model, "H", lam, t)
        nv = index(model, "V", lam, t)
        return (2.0 * np.pi / lam) * (2.0 * np_pump - nh - nv) \
            - 2.0 * np.pi / poling_period

    roots = _bracketed_roots(mismatch, bracket[0], bracket[1], 301)
    if not roots:
        raise PhaseMatchError(
            f"no phase-matching in band [{bracket[0]}, {bracket[1]}] um for "
            f"poling period {poling_period} um at {float(t)} C")
    if len(roots) > 1:
        warnings.warn(
            "multiple phase-matched wavelengths in bracket; "
            "returning the one closest to 1.55 um", stacklevel=2)
    root = min(roots, key=lambda x: abs(x - 1.55))
    return _verify_residual(mismatch, root, "degenerate wavelength")


def pc_matched_wavelength(model: MaterialModel, poling_period: float,
                          temperature=None, bracket=(1.4, 1.75)):
    """Wavelength where the polarisation-conversion grating is matched."""

    def mismatch(lam):
        return pc_mismatch(model, poling_period, lam, temperature)

    roots = _bracketed_roots(mismatch, bracket[0], bracket[1], 301)
    if not roots:
        raise PhaseMatchError(
            f"no phase-matching in band [{bracket[0]}, {bracket[1]}] um for "
            f"conversion poling period {poling_period} um")
    if len(roots) > 1:
        warnings.warn(
            "multiple conversion-matched wavelengths in bracket; "
            "returning the one closest to 1.55 um", stacklevel=2)
    root = min(roots, key=lambda x: abs(x - 1.55))
    return _verify_residual(mismatch, root, "conversion wavelength")


@dataclass(frozen=True)
class TuningCurve:
    """Signal/idler emission wavelengths versus pump wavelength."""

    pump: np.ndarray  # um
    signal: np.ndarray  # um, H-polarised branch
    idler: np.ndarray  # um, V-polarised branch
    omitted: tuple  # pump wavelengths with no phase-matched pair in band


def tuning_curve(model: MaterialModel, spec: PhaseMatchSpec, temperature,
                 pump_wavelengths, signal_bracket=(1.35, 1.8)):
    """Solve the energy-conserving pair for each pump wavelength.

    For each pump, finds the frequency offset x with signal at w/2 + x and
    idler at w/2 - x where the mismatch vanishes; the root closest to
    degeneracy is kept. Pumps without a root land in ``omitted``.
    """
    t = model.temperature if temperature is None else temperature
    pumps, sigs, idls, omitted = [], [], [], []
    w_lo = omega_from_wavelength(signal_bracket[1])
    w_hi = omega_from_wavelength(signal_bracket[0])
    for lam_p in np.atleast_1d(np.asarray(pump_wavelengths, dtype=float)):
        w_p = float(omega_from_wavelength(lam_p))
        w_half = w_p / 2.0
        x_max = min(w_half - w_lo, w_hi - w_half)
        if x_max <= 0.0:
            omitted.append(float(lam_p))
            continue

        def mismatch(x):
            return pdc_mismatch(model, spec, w_half + x, w_half - x, t)

        roots = _bracketed_roots(mismatch, -x_max, x_max, 401)
        if not roots:
            omitted.append(float(lam_p))
            continue
        x = min(roots, key=abs)
        _verify_residual(mismatch, x, "tuning curve")
        pumps.append(float(lam_p))
        sigs.append(float(wavelength_from_omega(w_half + x)))
        idls.append(float(wavelength_from_omega(w_half - x)))
    return TuningCurve(pump=np.array(pumps), signal=np.array(sigs),
                       idler=np.array(idls), omitted=tuple(omitted))


# ---------------------------------------------------------------------------
# material file parsing

_SECTION_KEYS = {
    "ordinary": {"form", "a", "b"},
    "extraordinary": {"form", "a", "b"},
    "waveguide": {"delta_n_h", "delta_n_v"},
}


def load_material(path) -> MaterialModel:
    """Parse a material description file.

    Format: an optional top-level ``name = ...`` line, then sections
    ``[ordinary]``, ``[extraordinary]`` (keys: form, a, b with whitespace
    separated coefficient lists) and optional ``[waveguide]`` (keys:
    delta_n_h, delta_n_v). '#' starts a comment.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    sections: dict[str, dict[str, str]] = {}
    current = None
    name = "unnamed material"
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            if current not in _SECTION_KEYS:
                raise ValidationError(
                    f"{path}: line {lineno}: unknown section [{current}]")
            if current in sections:
                raise ValidationError(
                    f"{path}: line {lineno}: duplicate section [{current}]")
            sections[current] = {}
            continue
        if "=" not in line:
            raise ValidationError(
                f"{path}: line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lower()
        if current is None:
            if key != "name":
                raise ValidationError(
                    f"{path}: line {lineno}: only 'name' may appear before "
                    f"the first section, got {key!r}")
            name = value
            continue
        if key not in _SECTION_KEYS[current]:
            raise ValidationError(
                f"{path}: line {lineno}: unknown key {key!r} in "
                f"section [{current}]")
        if key in sections[current]:
            raise ValidationError(
                f"{path}: line {lineno}: duplicate key {key!r}")
        sections[current][key] = value

    def build_branch(section):
        if section not in sections:
            raise ValidationError(f"{path}: missing section [{section}]")
        entries = sections[section]
        for req in ("form", "a", "b"):
            if req not in entries:
                raise ValidationError(
                    f"{path}: section [{section}] missing key {req!r}")
        try:
            a = tuple(float(v) for v in entries["a"].split())
            b = tuple(float(v) for v in entries["b"].split())
        except ValueError as exc:
            raise ValidationError(
                f"{path}: section [{section}]: bad coefficient: {exc}") from exc
        return SellmeierSet(form=entries["form"], a=a, b=b)

    wg = sections.get("waveguide", {})
    try:
        dn_h = float(wg.get("delta_n_h", "0.01"))
        dn_v = float(wg.get("delta_n_v", "0.01"))
    except ValueError as exc:
        raise ValidationError(f"{path}: section [waveguide]: {exc}") from exc
    return MaterialModel(ordinary=build_branch("ordinary"),
                         extraordinary=build_branch("extraordinary"),
                         delta_n_h=dn_h, delta_n_v=dn_v, name=name)
