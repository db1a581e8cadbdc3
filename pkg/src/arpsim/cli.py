"""``arpsim`` command-line front end.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings

import numpy as np

from . import output
from .config import COMMANDS, ConfigError, RunConfig, build_config, parse_overrides, sweep_spec
from .dynamics import IntegrationError, InvariantError, propagate
from .effective import EliminationError, adiabaticity_report, dressed_series
from .experiments import final_populations, run_sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="arpsim",
        description="Two-photon adiabatic rapid passage to a Rydberg state.",
    )
    p.add_argument("command", choices=COMMANDS)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--preset", choices=("case1", "case2", "case3"))
    src.add_argument("--config", metavar="FILE", help="TOML config file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--model", choices=("lindblad", "schrodinger", "effective"))
    p.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    p.add_argument("--format", dest="fmt", choices=("csv", "jsonl"))
    p.add_argument("--samples", type=int)
    p.add_argument("--jobs", type=int, help="worker threads for sweeps")
    p.add_argument("--rel-tol", type=float)
    p.add_argument("--abs-tol", type=float)
    p.add_argument("--plot-script", metavar="PATH")
    p.add_argument("--coherences", action="store_true", default=None)
    return p


def parse_config(argv=None) -> RunConfig:
    """Parse command-line arguments into a validated :class:`RunConfig`."""
    args = build_parser().parse_args(argv)
    flags = {
        "run.model": args.model,
        "run.out": args.out,
        "run.format": args.fmt,
        "run.samples": args.samples,
        "run.jobs": args.jobs,
        "run.rel_tol": args.rel_tol,
        "run.abs_tol": args.abs_tol,
        "run.plot_script": args.plot_script,
        "run.coherences": args.coherences,
    }
    return build_config(
        args.command,
        preset=args.preset,
        config_path=args.config,
        overrides=parse_overrides(args.overrides),
        flags=flags,
    )


def _meta_path(out: str) -> str:
    return out + ".meta.json"


def cmd_simulate(cfg: RunConfig) -> int:
    traj = propagate(cfg.model, cfg.scheme, rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol, n_samples=cfg.samples)
    output.emit_trajectory(traj, cfg.fmt, cfg.out, coherences=cfg.coherences)
    if cfg.plot_script:
        output.emit_plot_script(traj, cfg.plot_script)
    if cfg.out:
        pops = final_populations(traj)
        print(
            f"final P_g={output.fmt(pops.g)} P_i={output.fmt(pops.i)} P_r={output.fmt(pops.r)} "
            f"peak P_i={output.fmt(pops.peak_i)} steps={traj.stats['steps']}"
        )
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    spec = sweep_spec(cfg)
    result = run_sweep(spec, jobs=cfg.jobs)
    output.emit_sweep(result, cfg.fmt, cfg.out)
    if cfg.out:
        meta = dict(result.metadata, source=cfg.source)
        output.write_text(output.metadata_text(meta), _meta_path(cfg.out))
    if cfg.plot_script:
        output.emit_plot_script(result, cfg.plot_script)
    for row in result.failures:
        print(f"sweep point {output.fmt(row.value)} failed: {row.error}", file=sys.stderr)
    return EXIT_NUMERICAL if result.failures else EXIT_OK


def cmd_dressed(cfg: RunConfig) -> int:
    times = np.linspace(cfg.scheme.t_start, cfg.scheme.t_end, cfg.samples)
    snaps = dressed_series(cfg.scheme, times)
    output.write_text(output.dressed_text(snaps, cfg.fmt), cfg.out)
    return EXIT_OK


def check_text(report) -> str:
    lines = ["adiabaticity report"]
    if report.flags:
        lines += [f"  {flag}" for flag in report.flags]
    v = report.verdicts()

    def line(label, value, key=None):
        verdict = f"  [{v[key]}]" if key in v else ""
        shown = "n/a" if value is None else output.fmt(value)
        lines.append(f"  {label:<37}{shown}{verdict}")

    line("alpha_eff (MHz/us)", report.alpha_eff)
    line("|alpha| tau_p^2", report.chirp_area_pump, "chirp_area_pump")
    line("|beta| tau_S^2", report.chirp_area_stokes, "chirp_area_stokes")
    line("peak effective Rabi (MHz)", report.omega_eff_peak)
    line("|alpha_eff| / Omega_eff^2 (plain)", report.sweep_ratio_plain)
    line("|alpha_eff| / Omega_eff^2 (angular)", report.sweep_ratio_angular)
    line("max |dD_eff/dt| / Omega_eff^2", report.max_local_ratio)
    line("Landau-Zener P_diabatic", report.lz_probability, "landau_zener")
    overall = "ARP inapplicable" if report.flags else ("warn" if "warn" in v.values() else "pass")
    lines.append(f"  verdict: {overall}")
    return "\n".join(lines) + "\n"


def cmd_check(cfg: RunConfig) -> int:
    report = adiabaticity_report(cfg.scheme)
    data = report.as_dict()
    sys.stdout.write(check_text(report))
    if cfg.out:
        output.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", cfg.out)
    return EXIT_OK


COMMAND_FUNCS = {"simulate": cmd_simulate, "sweep": cmd_sweep, "dressed": cmd_dressed, "check": cmd_check}


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        print(f"arpsim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # argparse
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            return COMMAND_FUNCS[cfg.command](cfg)
    except (IntegrationError, InvariantError, EliminationError) as exc:
        print(f"arpsim: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"arpsim: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"arpsim: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
