"""Preset schemes for the three excitation cases and the parameter-sweep engine."""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .dynamics import (
    DEFAULT_ATOL,
    DEFAULT_RTOL,
    IntegrationError,
    InvariantError,
    Model,
    Trajectory,
    propagate,
)
from .effective import EliminationError, adiabaticity_report
from .model import (
    ANGULAR,
    AtomSpec,
    CaseTag,
    FieldSpec,
    SchemeError,
    SchemeSpec,
    Shape,
    UnitConvention,
)

# 87Rb: 5P3/2 intermediate state and 97d5/2 Rydberg state
RB87_GAMMA_IG = 6.0
RB87_GAMMA_RI = 3e-3
DELTA0 = 1500.0

#: Stokes Rabi frequency held fixed during the case-1 ratio sweep (MHz).
CASE1_RATIO_STOKES = 70.0


def _atom() -> AtomSpec:
    return AtomSpec(delta0=DELTA0, small_delta0=0.0, gamma_ig=RB87_GAMMA_IG, gamma_ri=RB87_GAMMA_RI)


def preset_case1(peak_rabi: float = 100.0, units: UnitConvention = ANGULAR) -> SchemeSpec:
    """Both fields pulsed and chirped: tau = 1 us, alpha = beta = 4.2 MHz/us."""
    pulse = FieldSpec(Shape.GAUSSIAN, peak_rabi, 0.0, 1.0, 4.2, 0.0)
    return SchemeSpec(pulse, pulse, _atom(), -5.0, 5.0, CaseTag.BOTH_CHIRPED, units)


def preset_case2(units: UnitConvention = ANGULAR) -> SchemeSpec:
    """Both fields pulsed, only the pump chirped."""
    pump = FieldSpec(Shape.GAUSSIAN, 25.0, 0.0, 0.45, 2.0, 0.0)
    stokes = FieldSpec(Shape.GAUSSIAN, 25.0, 0.0, 0.45, 0.0, 0.0)
    return SchemeSpec(pump, stokes, _atom(), -2.5, 2.5, CaseTag.PUMP_ONLY_CHIRPED, units)


def preset_case3(units: UnitConvention = ANGULAR) -> SchemeSpec:
    """Pulsed, chirped pump with a CW Stokes field."""
    pump = FieldSpec(Shape.GAUSSIAN, 35.0, 0.0, 0.34, 2.0, -0.26)
    stokes = FieldSpec(Shape.CW, 17.0, 0.0, 1.0, 0.0, -0.26)
    return SchemeSpec(pump, stokes, _atom(), -2.0, 2.0, CaseTag.PUMP_CHIRPED_STOKES_CW, units)


PRESETS = {"case1": preset_case1, "case2": preset_case2, "case3": preset_case3}


def without_decay(scheme: SchemeSpec) -> SchemeSpec:
    return replace(scheme, atom=replace(scheme.atom, gamma_ig=0.0, gamma_ri=0.0))


class Parameter(enum.Enum):
    EQUAL_PEAK_RABI = "equal_peak_rabi"
    PUMP_TO_STOKES_RATIO = "ratio"
    CHIRP_RATE = "chirp_rate"
    PULSE_WIDTH = "pulse_width"


@dataclass(frozen=True)
class SweepSpec:
    """A one-dimensional sweep over ``steps`` uniform points of ``[lo, hi]``.

    ``stokes_ref`` (MHz) is the fixed Stokes Rabi frequency for ratio sweeps.
    """

    template: SchemeSpec
    parameter: Parameter
    lo: float
    hi: float
    steps: int
    stokes_ref: float | None = None
    model: Model = Model.LINDBLAD
    rel_tol: float = DEFAULT_RTOL
    abs_tol: float = DEFAULT_ATOL
    n_samples: int = 101

    def __post_init__(self):
        object.__setattr__(self, "parameter", Parameter(self.parameter))
        object.__setattr__(self, "model", Model(self.model))
        if not self.lo < self.hi:
            raise ValueError(f"sweep range needs lo < hi, got [{self.lo}, {self.hi}]")
        if self.steps < 2:
            raise ValueError("sweep needs at least 2 steps")
        if self.parameter is Parameter.PUMP_TO_STOKES_RATIO and self.stokes_ref is None:
            raise ValueError("ratio sweeps need a bound stokes_ref value")

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.steps)

    def scheme_at(self, value: float) -> SchemeSpec:
        t = self.template
        pump, stokes = t.pump, t.stokes
        p = self.parameter
        if p is Parameter.EQUAL_PEAK_RABI:
            return replace(t, pump=replace(pump, peak_rabi=value), stokes=replace(stokes, peak_rabi=value))
        if p is Parameter.PUMP_TO_STOKES_RATIO:
            return replace(
                t,
                pump=replace(pump, peak_rabi=value * self.stokes_ref),
                stokes=replace(stokes, peak_rabi=self.stokes_ref),
            )
        if p is Parameter.CHIRP_RATE:
            if t.case_tag is CaseTag.BOTH_CHIRPED:
                stokes = replace(stokes, chirp_rate=value)
            return replace(t, pump=replace(pump, chirp_rate=value), stokes=stokes)
        # pulse width: widen the window if the pulses would be cut off
        fields = [
            replace(f, width=value) if f.shape is Shape.GAUSSIAN else f for f in (pump, stokes)
        ]
        lo = min([t.t_start] + [f.center_time - 5 * f.width for f in fields if f.shape is Shape.GAUSSIAN])
        hi = max([t.t_end] + [f.center_time + 5 * f.width for f in fields if f.shape is Shape.GAUSSIAN])
        return replace(t, pump=fields[0], stokes=fields[1], t_start=lo, t_end=hi)

    def metadata(self) -> dict:
        meta = {
            "parameter": self.parameter.value,
            "range": [self.lo, self.hi],
            "steps": self.steps,
            "model": self.model.value,
            "case": self.template.case_tag.value,
            "units": self.template.units.label,
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "gamma_ig_mhz": self.template.atom.gamma_ig,
            "gamma_ri_mhz": self.template.atom.gamma_ri,
        }
        if self.stokes_ref is not None:
            meta["stokes_ref_mhz"] = self.stokes_ref
        return meta


class FinalPopulations(NamedTuple):
    g: float
    i: float
    r: float
    peak_i: float


def final_populations(traj: Trajectory) -> FinalPopulations:
    """Last-sample populations plus the largest intermediate population seen."""
    g, i, r = (float(x) for x in traj.populations[-1])
    if traj.peaks is not None:
        peak_i = float(traj.peaks[1])
    else:
        peak_i = float(traj.populations[:, 1].max())
    return FinalPopulations(g, i, r, peak_i)


@dataclass(frozen=True)
class SweepRow:
    value: float
    p_g: float
    p_i: float
    p_r: float
    peak_i: float
    lz_probability: float
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass
class SweepResult:
    rows: list[SweepRow]
    metadata: dict = field(default_factory=dict)

    @property
    def failures(self) -> list[SweepRow]:
        return [r for r in self.rows if r.failed]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])


def _run_point(spec: SweepSpec, value: float) -> SweepRow:
    nan = math.nan
    try:
        scheme = spec.scheme_at(float(value))
        traj = propagate(
            spec.model, scheme, rel_tol=spec.rel_tol, abs_tol=spec.abs_tol, n_samples=spec.n_samples
        )
    except (SchemeError, EliminationError, IntegrationError, InvariantError) as exc:
        return SweepRow(float(value), nan, nan, nan, nan, nan, error=f"{type(exc).__name__}: {exc}")
    pops = final_populations(traj)
    lz = adiabaticity_report(scheme).lz_probability
    return SweepRow(float(value), pops.g, pops.i, pops.r, pops.peak_i, lz)


def run_sweep(spec: SweepSpec, jobs: int = 1) -> SweepResult:
    """Evaluate every grid point; failures are recorded in-row.

    With ``jobs > 1`` points run on a thread pool (the integrator releases
    the GIL); rows are always returned in grid order.
    """
    values = spec.values
    if jobs <= 1:
        rows = [_run_point(spec, v) for v in values]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(lambda v: _run_point(spec, v), values))
    return SweepResult(rows, spec.metadata())


def rabi_sweep_case1(model: Model = Model.LINDBLAD, **kw) -> SweepSpec:
    """Case 1, equal pump and Stokes Rabi frequencies over [0, 120] MHz."""
    return SweepSpec(preset_case1(), Parameter.EQUAL_PEAK_RABI, 0.0, 120.0, 61, model=model, **kw)


def ratio_sweep_case1(model: Model = Model.LINDBLAD, stokes_ref: float = CASE1_RATIO_STOKES, **kw) -> SweepSpec:
    """Case 1, pump/Stokes ratio over [0.3, 2.0] at fixed Stokes amplitude."""
    return SweepSpec(
        preset_case1(), Parameter.PUMP_TO_STOKES_RATIO, 0.3, 2.0, 35, stokes_ref=stokes_ref, model=model, **kw
    )


def ratio_sweep_case3(model: Model = Model.LINDBLAD, **kw) -> SweepSpec:
    """Case 3, pump/Stokes ratio over [0.5, 3.5] with the CW Stokes at 17 MHz."""
    return SweepSpec(
        preset_case3(), Parameter.PUMP_TO_STOKES_RATIO, 0.5, 3.5, 31, stokes_ref=17.0, model=model, **kw
    )


def calibration_matrix(conventions=None, model: Model = Model.LINDBLAD) -> list[dict]:
    """Final Rydberg population of the three presets under several unit conventions.

    By default all 16 combinations of 2*pi on {rabi, detuning, chirp, decay}
    are evaluated.
    """
    if conventions is None:
        flags = [(a, b, c, d) for a in (True, False) for b in (True, False) for c in (True, False) for d in (True, False)]
        conventions = [UnitConvention(*f) for f in flags]
    out = []
    for units in conventions:
        row = {"units": units.label}
        for name, make in (("case1", preset_case1), ("case2", preset_case2), ("case3", preset_case3)):
            traj = propagate(model, make(units=units), rel_tol=1e-8, n_samples=11)
            row[name] = final_populations(traj).r
        out.append(row)
    return out
