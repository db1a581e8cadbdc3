"""Deterministic text serialisation of trajectories, sweeps and dressed-state tables.

Numbers are written with 12 significant digits and LF line endings, so the
same result always produces the same bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .dynamics import Trajectory
from .effective import DressedSnapshot
from .experiments import SweepResult

TRAJECTORY_COLUMNS = ("t_us", "P_g", "P_i", "P_r")
COHERENCE_COLUMNS = ("abs_rho_gi", "abs_rho_ir", "abs_rho_gr")
SWEEP_COLUMNS = ("swept_value", "P_g_final", "P_i_final", "P_r_final", "P_i_peak", "lz_probability")
FORMATS = ("csv", "jsonl")


def fmt(x: float) -> str:
    return f"{float(x):.12g}"


def _json_number(x: float):
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(fmt(x))


def _render(columns, rows, fmt_name: str, extra=None) -> str:
    buf = io.StringIO()
    if fmt_name == "csv":
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    elif fmt_name == "jsonl":
        for k, row in enumerate(rows):
            obj = {c: _json_number(v) for c, v in zip(columns, row)}
            if extra is not None and extra[k] is not None:
                obj.update(extra[k])
            buf.write(json.dumps(obj, sort_keys=False) + "\n")
    else:
        raise ValueError(f"unknown output format {fmt_name!r}; expected one of {FORMATS}")
    return buf.getvalue()


def write_text(text: str, path) -> None:
    """Write ``text`` with LF endings; ``None`` or ``'-'`` means stdout."""
    if path is None or str(path) == "-":
        import sys

        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def trajectory_text(traj: Trajectory, fmt_name: str = "csv", coherences: bool = False) -> str:
    columns = TRAJECTORY_COLUMNS + (COHERENCE_COLUMNS if coherences else ())
    data = [traj.times[:, None], traj.populations]
    if coherences:
        data.append(traj.coherences)
    return _render(columns, np.hstack(data).tolist(), fmt_name)


def emit_trajectory(traj: Trajectory, fmt_name: str = "csv", path=None, coherences: bool = False) -> None:
    write_text(trajectory_text(traj, fmt_name, coherences), path)


def read_trajectory_csv(path) -> dict[str, np.ndarray]:
    """Parse a trajectory CSV back into ``{column: array}``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in r] for r in body]) if body else np.empty((0, len(header)))
    return {name: data[:, k] for k, name in enumerate(header)}


def sweep_text(result: SweepResult, fmt_name: str = "csv") -> str:
    rows = [(r.value, r.p_g, r.p_i, r.p_r, r.peak_i, r.lz_probability) for r in result.rows]
    extra = [{"error": r.error} if r.failed else None for r in result.rows]
    return _render(SWEEP_COLUMNS, rows, fmt_name, extra)


def emit_sweep(result: SweepResult, fmt_name: str = "csv", path=None) -> None:
    write_text(sweep_text(result, fmt_name), path)


def metadata_text(meta: dict) -> str:
    return json.dumps(meta, indent=2, sort_keys=True) + "\n"


def dressed_text(snaps: list[DressedSnapshot], fmt_name: str = "csv") -> str:
    return _render(DressedSnapshot.FIELDS, [s.row() for s in snaps], fmt_name)


_PLOT_TEMPLATE = '''\
"""{title}

Generated by arpsim. Run with: python {name}
"""
import matplotlib.pyplot as plt

x = {x}
curves = {{
    "|g>": {g},
    "|i>": {i},
    "|r>": {r},
}}
colors = {{"|g>": "black", "|i>": "red", "|r>": "blue"}}

fig, ax = plt.subplots(figsize=(6, 4))
for label, y in curves.items():
    ax.plot(x, y, color=colors[label], label=label)
ax.set_xlabel("{xlabel}")
ax.set_ylabel("{ylabel}")
ax.set_ylim(-0.02, 1.02)
ax.legend()
fig.tight_layout()
fig.savefig("{png}", dpi=150)
'''


def _pylist(values) -> str:
    return "[" + ", ".join(fmt(v) if math.isfinite(v) else "float('nan')" for v in values) + "]"


def plot_script_text(obj, name: str = "plot.py") -> str:
    """A standalone matplotlib script reproducing the population figure."""
    if isinstance(obj, SweepResult):
        x = obj.column("value")
        g, i, r = obj.column("p_g"), obj.column("p_i"), obj.column("p_r")
        param = obj.metadata.get("parameter", "swept value")
        xlabel = {"equal_peak_rabi": "Rabi frequency (MHz)", "ratio": "pump / Stokes Rabi ratio"}.get(
            param, param
        )
        title, ylabel = f"Final populations versus {param}", "final population"
    else:
        x = obj.times
        g, i, r = obj.populations.T
        title, xlabel, ylabel = "Populations versus time", "t (us)", "population"
    png = Path(name).with_suffix(".png").name
    return _PLOT_TEMPLATE.format(
        title=title,
        name=Path(name).name,
        x=_pylist(x),
        g=_pylist(g),
        i=_pylist(i),
        r=_pylist(r),
        xlabel=xlabel,
        ylabel=ylabel,
        png=png,
    )


def emit_plot_script(obj, path) -> None:
    write_text(plot_script_text(obj, str(path)), path)
