"""Physical input types and time-dependent field/detuning evaluation.

Units
-----
Every user-facing frequency (Rabi frequencies, detunings, decay rates) is a
plain frequency in MHz, chirp rates are in MHz/us and times are in us. The
equations of motion consume angular frequencies (rad/us); the conversion is
done once, through a :class:`UnitConvention`, when a scheme is packed for the
integrator. The default convention multiplies every frequency by 2*pi.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi

#: Gaussian fields must fit inside the integration window to this many widths.
WINDOW_WIDTHS = 5.0


class SchemeError(ValueError):
    """Raised when a field, atom or scheme violates its invariants."""


class WindowWarning(UserWarning):
    """The integration window truncates a Gaussian pulse."""


class Shape(enum.Enum):
    GAUSSIAN = "gaussian"
    CW = "cw"


class CaseTag(enum.Enum):
    BOTH_CHIRPED = "both_chirped"
    PUMP_ONLY_CHIRPED = "pump_only_chirped"
    PUMP_CHIRPED_STOKES_CW = "pump_chirped_stokes_cw"


@dataclass(frozen=True)
class UnitConvention:
    """Which plain-MHz quantities are multiplied by 2*pi before propagation.

    ``detuning`` covers both the one-photon and the two-photon static
    detunings. The default applies 2*pi everywhere.
    """

    rabi: bool = True
    detuning: bool = True
    chirp: bool = True
    decay: bool = True

    def factor(self, kind: str) -> float:
        return TWO_PI if getattr(self, kind) else 1.0

    @property
    def label(self) -> str:
        flags = [k for k in ("rabi", "detuning", "chirp", "decay") if getattr(self, k)]
        return "+".join(flags) if flags else "plain"


ANGULAR = UnitConvention()


@dataclass(frozen=True)
class FieldSpec:
    """One laser field.

    Parameters
    ----------
    shape : Shape
        Gaussian pulse or constant (CW) amplitude.
    peak_rabi : float
        Peak Rabi frequency, MHz.
    center_time : float
        Pulse center, us.
    width : float
        Gaussian width tau in ``exp(-(t - t_c)**2 / (2 tau**2))``, us.
        Ignored for CW fields.
    chirp_rate : float
        Linear frequency ramp, MHz/us. Zero or negative is allowed.
    chirp_center : float
        Time at which the chirp offset vanishes, us.
    """

    shape: Shape = Shape.GAUSSIAN
    peak_rabi: float = 0.0
    center_time: float = 0.0
    width: float = 1.0
    chirp_rate: float = 0.0
    chirp_center: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "shape", Shape(self.shape))
        for name in ("peak_rabi", "center_time", "width", "chirp_rate", "chirp_center"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise SchemeError(f"field {name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if self.peak_rabi < 0:
            raise SchemeError(f"peak_rabi must be >= 0, got {self.peak_rabi}")
        if self.shape is Shape.GAUSSIAN and self.width <= 0:
            raise SchemeError(f"Gaussian width must be > 0, got {self.width}")


@dataclass(frozen=True)
class AtomSpec:
    """Static detunings (MHz) and population decay rates (MHz) of the ladder.

    ``gamma_ig`` is the decay rate of the intermediate state (i -> g),
    ``gamma_ri`` that of the Rydberg state (r -> i).
    """

    delta0: float = 1500.0
    small_delta0: float = 0.0
    gamma_ig: float = 0.0
    gamma_ri: float = 0.0

    def __post_init__(self):
        for name in ("delta0", "small_delta0", "gamma_ig", "gamma_ri"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise SchemeError(f"atom {name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if self.gamma_ig < 0 or self.gamma_ri < 0:
            raise SchemeError("decay rates must be >= 0")


@dataclass(frozen=True)
class SchemeSpec:
    """A complete experiment: two fields, the atom and the time window."""

    pump: FieldSpec
    stokes: FieldSpec
    atom: AtomSpec
    t_start: float
    t_end: float
    case_tag: CaseTag = CaseTag.BOTH_CHIRPED
    units: UnitConvention = field(default=ANGULAR)

    def __post_init__(self):
        object.__setattr__(self, "case_tag", CaseTag(self.case_tag))
        object.__setattr__(self, "t_start", float(self.t_start))
        object.__setattr__(self, "t_end", float(self.t_end))
        if not self.t_start < self.t_end:
            raise SchemeError(f"t_start ({self.t_start}) must be < t_end ({self.t_end})")
        _check_case(self)
        for name, f in (("pump", self.pump), ("stokes", self.stokes)):
            if f.shape is not Shape.GAUSSIAN:
                continue
            lo = f.center_time - WINDOW_WIDTHS * f.width
            hi = f.center_time + WINDOW_WIDTHS * f.width
            if lo < self.t_start or hi > self.t_end:
                warnings.warn(
                    f"{name} pulse [{lo:g}, {hi:g}] us is not covered by the "
                    f"window [{self.t_start:g}, {self.t_end:g}] us",
                    WindowWarning,
                    stacklevel=3,
                )

    @property
    def fields(self) -> tuple[FieldSpec, FieldSpec]:
        return self.pump, self.stokes


def _check_case(scheme: SchemeSpec) -> None:
    pump, stokes, tag = scheme.pump, scheme.stokes, scheme.case_tag
    if pump.shape is not Shape.GAUSSIAN:
        raise SchemeError(f"{tag.value}: pump must be a Gaussian pulse")
    if tag is CaseTag.PUMP_CHIRPED_STOKES_CW:
        if stokes.shape is not Shape.CW:
            raise SchemeError(f"{tag.value}: stokes must be CW")
        if stokes.chirp_rate != 0:
            raise SchemeError(f"{tag.value}: stokes chirp_rate must be 0")
        return
    if stokes.shape is not Shape.GAUSSIAN:
        raise SchemeError(f"{tag.value}: stokes must be a Gaussian pulse")
    if tag is CaseTag.PUMP_ONLY_CHIRPED and stokes.chirp_rate != 0:
        raise SchemeError(f"{tag.value}: stokes chirp_rate must be 0")


def to_angular(value):
    """Plain frequency (MHz) to angular frequency (rad/us)."""
    return TWO_PI * value


def rabi_at(f: FieldSpec, t):
    """Rabi frequency of ``f`` at time(s) ``t`` in MHz."""
    t = np.asarray(t, dtype=float)
    if f.shape is Shape.CW:
        out = np.full_like(t, f.peak_rabi)
    else:
        x = (t - f.center_time) / f.width
        out = f.peak_rabi * np.exp(-0.5 * x * x)
    return out[()] if out.ndim == 0 else out


def detunings_at(scheme: SchemeSpec, t):
    """One- and two-photon detunings (MHz) at time(s) ``t``.

    ``Delta(t) = Delta0 - alpha (t - t0_p)`` and
    ``delta(t) = delta0 - alpha (t - t0_p) - beta (t - t0_S)``; with a common
    chirp center this is ``delta0 - (alpha + beta)(t - t0)``.
    """
    t = np.asarray(t, dtype=float)
    pump, stokes = scheme.pump, scheme.stokes
    pump_offset = pump.chirp_rate * (t - pump.chirp_center)
    stokes_offset = stokes.chirp_rate * (t - stokes.chirp_center)
    big = scheme.atom.delta0 - pump_offset
    small = scheme.atom.small_delta0 - pump_offset - stokes_offset
    if big.ndim == 0:
        return float(big), float(small)
    return big, small


def angular_detunings(scheme: SchemeSpec, t):
    """Like :func:`detunings_at` but in rad/us under ``scheme.units``."""
    t = np.asarray(t, dtype=float)
    u = scheme.units
    det, chirp = u.factor("detuning"), u.factor("chirp")
    pump, stokes = scheme.pump, scheme.stokes
    pump_offset = chirp * pump.chirp_rate * (t - pump.chirp_center)
    stokes_offset = chirp * stokes.chirp_rate * (t - stokes.chirp_center)
    big = det * scheme.atom.delta0 - pump_offset
    small = det * scheme.atom.small_delta0 - pump_offset - stokes_offset
    return big, small


def pack(scheme: SchemeSpec) -> np.ndarray:
    """Flatten a scheme into the float64 parameter vector used by the kernels.

    All frequencies are converted according to ``scheme.units``.
    """
    u = scheme.units
    rabi, chirp = u.factor("rabi"), u.factor("chirp")
    p = np.zeros(16)
    for k, f in enumerate(scheme.fields):
        o = 6 * k
        p[o] = 0.0 if f.shape is Shape.GAUSSIAN else 1.0
        p[o + 1] = rabi * f.peak_rabi
        p[o + 2] = f.center_time
        p[o + 3] = f.width
        p[o + 4] = chirp * f.chirp_rate
        p[o + 5] = f.chirp_center
    det = u.factor("detuning")
    p[12] = det * scheme.atom.delta0
    p[13] = det * scheme.atom.small_delta0
    decay = u.factor("decay")
    p[14] = decay * scheme.atom.gamma_ig
    p[15] = decay * scheme.atom.gamma_ri
    return p
