"""Two-photon adiabatic rapid passage to a Rydberg state in a three-level ladder."""

from .dynamics import Model, Trajectory, propagate
from .effective import adiabaticity_report, snapshot
from .experiments import (
    Parameter,
    SweepSpec,
    final_populations,
    preset_case1,
    preset_case2,
    preset_case3,
    run_sweep,
)
from .model import (
    ANGULAR,
    AtomSpec,
    CaseTag,
    FieldSpec,
    SchemeSpec,
    Shape,
    UnitConvention,
    detunings_at,
    rabi_at,
    to_angular,
)

__version__ = "0.1.0"

__all__ = [
    "ANGULAR",
    "AtomSpec",
    "CaseTag",
    "FieldSpec",
    "Model",
    "Parameter",
    "SchemeSpec",
    "Shape",
    "SweepSpec",
    "Trajectory",
    "UnitConvention",
    "adiabaticity_report",
    "detunings_at",
    "final_populations",
    "preset_case1",
    "preset_case2",
    "preset_case3",
    "propagate",
    "rabi_at",
    "run_sweep",
    "snapshot",
    "to_angular",
]
