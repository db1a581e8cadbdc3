"""Run configuration: TOML config files and ``--set key=value`` overrides.

Every physical key carries its unit in the name (``peak_rabi_mhz``,
``width_us``, ``chirp_rate_mhz_per_us``). In config files the suffix is
mandatory; on the command line the bare name (``pump.peak_rabi``) is also
accepted. A wrong suffix or an unknown key is a hard error.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

from .dynamics import DEFAULT_ATOL, DEFAULT_RTOL, DEFAULT_SAMPLES, Model
from .experiments import CASE1_RATIO_STOKES, PRESETS, Parameter
from .model import AtomSpec, CaseTag, FieldSpec, SchemeError, SchemeSpec, Shape, UnitConvention
from .output import FORMATS

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

COMMANDS = ("simulate", "sweep", "dressed", "check")
UNITS = ("mhz", "us", "mhz_per_us")

_FIELD_KEYS = {
    "shape": None,
    "peak_rabi": "mhz",
    "center_time": "us",
    "width": "us",
    "chirp_rate": "mhz_per_us",
    "chirp_center": "us",
}

#: key path -> unit suffix (None for dimensionless / enum keys)
SCHEMA: dict[str, str | None] = {
    **{f"pump.{k}": u for k, u in _FIELD_KEYS.items()},
    **{f"stokes.{k}": u for k, u in _FIELD_KEYS.items()},
    "atom.delta0": "mhz",
    "atom.small_delta0": "mhz",
    "atom.gamma_ig": "mhz",
    "atom.gamma_ri": "mhz",
    "window.t_start": "us",
    "window.t_end": "us",
    "case": None,
    "units.rabi": None,
    "units.detuning": None,
    "units.chirp": None,
    "units.decay": None,
    "run.model": None,
    "run.out": None,
    "run.format": None,
    "run.samples": None,
    "run.jobs": None,
    "run.rel_tol": None,
    "run.abs_tol": None,
    "run.plot_script": None,
    "run.coherences": None,
    "sweep.parameter": None,
    "sweep.lo": None,
    "sweep.hi": None,
    "sweep.steps": None,
    "sweep.stokes_ref": "mhz",
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key path."""


def resolve_key(raw: str, require_unit: bool) -> str:
    """Map a possibly unit-suffixed key to its canonical schema path."""
    raw = raw.strip()
    if raw in SCHEMA:
        if require_unit and SCHEMA[raw] is not None:
            raise ConfigError(f"{raw}: missing unit suffix, expected {raw}_{SCHEMA[raw]}")
        return raw
    for unit in sorted(UNITS, key=len, reverse=True):
        suffix = "_" + unit
        if raw.endswith(suffix):
            base = raw[: -len(suffix)]
            if base in SCHEMA:
                expected = SCHEMA[base]
                if expected == unit:
                    return base
                want = f"{base}_{expected}" if expected else base
                raise ConfigError(f"{raw}: unit-suffix mismatch, expected {want}")
    raise ConfigError(f"{raw}: unknown key")


def _flatten(table: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in table.items():
        path = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, path + "."))
        else:
            out[path] = v
    return out


def parse_value(text: str):
    """Literal for a ``--set`` value: bool, int, float or bare string."""
    s = text.strip()
    if s.lower() in ("true", "false"):
        return s.lower() == "true"
    for cast in (int, float):
        try:
            return cast(s)
        except ValueError:
            pass
    if len(s) >= 2 and s[0] == s[-1] and s[0] in "\"'":
        return s[1:-1]
    return s


def scheme_to_flat(s: SchemeSpec) -> dict:
    flat = {}
    for name, f in (("pump", s.pump), ("stokes", s.stokes)):
        flat[f"{name}.shape"] = f.shape.value
        for k in ("peak_rabi", "center_time", "width", "chirp_rate", "chirp_center"):
            flat[f"{name}.{k}"] = getattr(f, k)
    for k in ("delta0", "small_delta0", "gamma_ig", "gamma_ri"):
        flat[f"atom.{k}"] = getattr(s.atom, k)
    flat["window.t_start"] = s.t_start
    flat["window.t_end"] = s.t_end
    flat["case"] = s.case_tag.value
    for k in ("rabi", "detuning", "chirp", "decay"):
        flat[f"units.{k}"] = getattr(s.units, k)
    return flat


def _number(flat, key):
    v = flat[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {v!r}")
    return float(v)


def _flag(flat, key):
    v = flat[key]
    if not isinstance(v, bool):
        raise ConfigError(f"{key}: expected true/false, got {v!r}")
    return v


def _choice(key, value, enum_cls):
    try:
        return enum_cls(str(value).lower())
    except ValueError:
        allowed = ", ".join(e.value for e in enum_cls)
        raise ConfigError(f"{key}: {value!r} is not one of {allowed}") from None


def scheme_from_flat(flat: dict) -> SchemeSpec:
    for key in ("window.t_start", "window.t_end"):
        if key not in flat:
            raise ConfigError(f"{key}: required (with unit suffix _us) when no preset is given")
    fields = {}
    for name in ("pump", "stokes"):
        kw = {}
        for k in _FIELD_KEYS:
            key = f"{name}.{k}"
            if key not in flat:
                continue
            kw[k] = _choice(key, flat[key], Shape) if k == "shape" else _number(flat, key)
        fields[name] = kw
    atom = {
        k: _number(flat, f"atom.{k}")
        for k in ("delta0", "small_delta0", "gamma_ig", "gamma_ri")
        if f"atom.{k}" in flat
    }
    units = {
        k: _flag(flat, f"units.{k}")
        for k in ("rabi", "detuning", "chirp", "decay")
        if f"units.{k}" in flat
    }
    case = _choice("case", flat.get("case", CaseTag.BOTH_CHIRPED.value), CaseTag)
    try:
        return SchemeSpec(
            FieldSpec(**fields["pump"]),
            FieldSpec(**fields["stokes"]),
            AtomSpec(**atom),
            _number(flat, "window.t_start"),
            _number(flat, "window.t_end"),
            case,
            UnitConvention(**units),
        )
    except SchemeError as exc:
        raise ConfigError(f"scheme: {exc}") from None


@dataclass
class RunConfig:
    command: str
    scheme: SchemeSpec
    source: str
    model: Model = Model.LINDBLAD
    out: str | None = None
    fmt: str = "csv"
    samples: int = DEFAULT_SAMPLES
    jobs: int = 1
    rel_tol: float = DEFAULT_RTOL
    abs_tol: float = DEFAULT_ATOL
    plot_script: str | None = None
    coherences: bool = False
    sweep: dict = field(default_factory=dict)


def load_file(path) -> dict:
    """Read a TOML config file into ``{canonical key: value}``.

    A top-level ``preset = "caseN"`` is returned under the key ``"preset"``.
    """
    try:
        with open(path, "rb") as fh:
            table = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"{path}: config file not found") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    out = {}
    for raw, value in _flatten(table).items():
        if raw == "preset":
            out["preset"] = value
            continue
        out[resolve_key(raw, require_unit=True)] = value
    return out


def parse_overrides(pairs) -> dict:
    out = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise ConfigError(f"{pair}: expected key=value")
        key, value = pair.split("=", 1)
        out[resolve_key(key, require_unit=False)] = parse_value(value)
    return out


_RUN_DEFAULTS = {
    "run.model": Model.LINDBLAD.value,
    "run.out": None,
    "run.format": "csv",
    "run.samples": DEFAULT_SAMPLES,
    "run.jobs": 1,
    "run.rel_tol": DEFAULT_RTOL,
    "run.abs_tol": DEFAULT_ATOL,
    "run.plot_script": None,
    "run.coherences": False,
}


def build_config(
    command: str,
    preset: str | None = None,
    config_path=None,
    overrides=None,
    flags: dict | None = None,
) -> RunConfig:
    """Resolve a run configuration.

    Precedence, lowest first: preset or config file, ``--set`` overrides,
    dedicated command-line flags (``flags``, keyed by schema path).
    """
    if command not in COMMANDS:
        raise ConfigError(f"command: {command!r} is not one of {', '.join(COMMANDS)}")
    if (preset is None) == (config_path is None):
        raise ConfigError("scheme source: give exactly one of --preset or --config")

    values: dict = {}
    if config_path is not None:
        values = load_file(config_path)
        source = str(Path(config_path))
        base = values.pop("preset", None)
    else:
        source, base = f"preset:{preset}", preset
    if base is not None and base not in PRESETS:
        raise ConfigError(f"preset: unknown preset {base!r}; expected one of {', '.join(PRESETS)}")
    flat = scheme_to_flat(PRESETS[base]()) if base is not None else {}
    flat.update(values)
    flat.update(overrides or {})
    for k, v in (flags or {}).items():
        if v is not None:
            flat[resolve_key(k, require_unit=False)] = v

    scheme = scheme_from_flat({k: v for k, v in flat.items() if not k.startswith(("run.", "sweep."))})
    run = {**_RUN_DEFAULTS, **{k: v for k, v in flat.items() if k.startswith("run.")}}

    fmt_name = str(run["run.format"]).lower()
    if fmt_name == "json-lines":
        fmt_name = "jsonl"
    if fmt_name not in FORMATS:
        raise ConfigError(f"run.format: {fmt_name!r} is not one of {', '.join(FORMATS)}")
    cfg = RunConfig(
        command=command,
        scheme=scheme,
        source=source,
        model=_choice("run.model", run["run.model"], Model),
        out=None if run["run.out"] is None else str(run["run.out"]),
        fmt=fmt_name,
        samples=_positive_int(run, "run.samples", 2),
        jobs=_positive_int(run, "run.jobs", 1),
        rel_tol=_tolerance(run, "run.rel_tol"),
        abs_tol=_tolerance(run, "run.abs_tol"),
        plot_script=None if run["run.plot_script"] is None else str(run["run.plot_script"]),
        coherences=bool(run["run.coherences"]),
        sweep={k.split(".", 1)[1]: v for k, v in flat.items() if k.startswith("sweep.")},
    )
    if command == "sweep":
        sweep_spec(cfg)  # validate early
    return cfg


def _positive_int(run, key, minimum):
    v = run[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise ConfigError(f"{key}: expected an integer >= {minimum}, got {v!r}")
    return v


def _tolerance(run, key):
    v = run[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not 0 < v <= 1e-3:
        raise ConfigError(f"{key}: expected a number in (0, 1e-3], got {v!r}")
    return float(v)


_SWEEP_DEFAULTS = {
    Parameter.EQUAL_PEAK_RABI: (0.0, 120.0, 61),
    Parameter.PUMP_TO_STOKES_RATIO: (0.3, 2.0, 35),
    Parameter.CHIRP_RATE: (0.5, 10.0, 20),
    Parameter.PULSE_WIDTH: (0.2, 2.0, 19),
}


def sweep_spec(cfg: RunConfig):
    """Build the :class:`~arpsim.experiments.SweepSpec` described by ``cfg.sweep``."""
    from .experiments import SweepSpec

    s = cfg.sweep
    param = _choice("sweep.parameter", s.get("parameter", Parameter.EQUAL_PEAK_RABI.value), Parameter)
    lo, hi, steps = _SWEEP_DEFAULTS[param]
    lo = float(s.get("lo", lo))
    hi = float(s.get("hi", hi))
    steps = s.get("steps", steps)
    if isinstance(steps, bool) or not isinstance(steps, int):
        raise ConfigError(f"sweep.steps: expected an integer, got {steps!r}")
    stokes_ref = s.get("stokes_ref")
    if param is Parameter.PUMP_TO_STOKES_RATIO and stokes_ref is None:
        if cfg.scheme.case_tag is CaseTag.BOTH_CHIRPED:
            stokes_ref = CASE1_RATIO_STOKES
        else:
            stokes_ref = cfg.scheme.stokes.peak_rabi
    try:
        return SweepSpec(
            cfg.scheme,
            param,
            lo,
            hi,
            steps,
            stokes_ref=None if stokes_ref is None else float(stokes_ref),
            model=cfg.model,
            rel_tol=cfg.rel_tol,
            abs_tol=cfg.abs_tol,
        )
    except ValueError as exc:
        raise ConfigError(f"sweep: {exc}") from None
