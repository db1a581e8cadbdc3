"""Two-level description after eliminating the far-detuned intermediate state.

With the intermediate amplitude slaved to ``c_i ~ (W_p c_g + W_S c_r) / 2D``
the ground/Rydberg pair evolves under

    i d/dt (c_g, c_r) = [[-D_g, -W/2], [-W/2, d - D_r]] (c_g, c_r)

with Stark shifts ``D_g = W_p**2 / 4D``, ``D_r = W_S**2 / 4D`` and the
two-photon Rabi frequency ``W = W_p W_S / 2D``. Everything here works in
plain MHz unless a function says otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import SchemeSpec, Shape, angular_detunings, detunings_at, rabi_at


class EliminationError(ValueError):
    """Adiabatic elimination is undefined or invalid (e.g. zero detuning)."""


def _require_detuning(delta) -> None:
    if np.any(np.asarray(delta) == 0):
        raise EliminationError("one-photon detuning is zero; elimination undefined")


def effective_rabi(omega_p, omega_s, delta):
    """Two-photon Rabi frequency ``W_p W_S / 2D``."""
    _require_detuning(delta)
    return omega_p * omega_s / (2.0 * delta)


def stark_shifts(omega_p, omega_s, delta):
    """Light shifts ``(W_p**2 / 4D, W_S**2 / 4D)`` of ground and Rydberg state."""
    _require_detuning(delta)
    return omega_p * omega_p / (4.0 * delta), omega_s * omega_s / (4.0 * delta)


def effective_detuning(small_delta, omega_p, omega_s, delta):
    """Two-photon detuning corrected for both light shifts."""
    _require_detuning(delta)
    return small_delta - (omega_s * omega_s - omega_p * omega_p) / (4.0 * delta)


def dressed_energies(delta_g, delta_r, small_delta, omega_eff):
    """Eigenvalues ``(lambda_plus, lambda_minus)`` of the effective Hamiltonian."""
    half = 0.5 * (small_delta - delta_r + delta_g)
    root = np.hypot(half, 0.5 * omega_eff)
    mid = -delta_g + half
    return mid + root, mid - root


def mixing_angle(omega_eff, delta_eff):
    """Dressed-state rotation angle from ``tan(theta) = (R - D_eff) / W``.

    ``R = sqrt(W**2 + D_eff**2)``. For ``D_eff > 0`` the numerator is
    rewritten as ``W**2 / (R + D_eff)`` to avoid cancellation. The result is
    in [0, pi/2] for ``W >= 0``; at ``W == 0`` the limits 0 (red detuned) and
    pi/2 (blue detuned) are returned.
    """
    w = np.asarray(omega_eff, dtype=float)
    d = np.asarray(delta_eff, dtype=float)
    if np.any((w == 0) & (d == 0)):
        raise ValueError("mixing angle undefined for omega_eff = delta_eff = 0")
    r = np.hypot(w, d)
    with np.errstate(invalid="ignore", divide="ignore"):
        num = np.where(d > 0, w * w / (r + d), r - d)
    theta = np.sign(w + (w == 0)) * np.arctan2(num, np.abs(w))
    return theta[()] if theta.ndim == 0 else theta


def dressed_coefficients(theta):
    """``(c_g+, c_r+, c_g-, c_r-)`` for ``|+> = sin|g> - cos|r>``, ``|-> = cos|g> + sin|r>``."""
    s, c = np.sin(theta), np.cos(theta)
    return s, -c, c, s


@dataclass(frozen=True)
class DressedSnapshot:
    t: float
    omega_eff: float
    stark_g: float
    stark_r: float
    delta_eff: float
    lambda_plus: float
    lambda_minus: float
    theta: float
    coeffs: tuple[float, float, float, float]

    FIELDS = (
        "t_us",
        "omega_eff_mhz",
        "stark_g_mhz",
        "stark_r_mhz",
        "delta_eff_mhz",
        "lambda_plus_mhz",
        "lambda_minus_mhz",
        "theta_rad",
        "c_g_plus",
        "c_r_plus",
        "c_g_minus",
        "c_r_minus",
    )

    def row(self) -> tuple[float, ...]:
        return (
            self.t,
            self.omega_eff,
            self.stark_g,
            self.stark_r,
            self.delta_eff,
            self.lambda_plus,
            self.lambda_minus,
            self.theta,
            *self.coeffs,
        )


def snapshot(scheme: SchemeSpec, t: float) -> DressedSnapshot:
    """Evaluate the fields at ``t`` and chain the effective-model quantities."""
    wp = float(rabi_at(scheme.pump, t))
    ws = float(rabi_at(scheme.stokes, t))
    big, small = detunings_at(scheme, t)
    w = effective_rabi(wp, ws, big)
    sg, sr = stark_shifts(wp, ws, big)
    d_eff = effective_detuning(small, wp, ws, big)
    lp, lm = dressed_energies(sg, sr, small, w)
    theta = float(mixing_angle(w, d_eff))
    coeffs = tuple(float(c) for c in dressed_coefficients(theta))
    return DressedSnapshot(float(t), w, sg, sr, d_eff, float(lp), float(lm), theta, coeffs)


def dressed_series(scheme: SchemeSpec, times) -> list[DressedSnapshot]:
    return [snapshot(scheme, t) for t in times]


@dataclass
class AdiabaticityReport:
    """Adiabaticity diagnostics of a scheme.

    ``chirp_area_pump`` / ``chirp_area_stokes`` are ``|rate| * tau**2`` with
    the plain MHz/us rate (``None`` for a CW field). ``sweep_ratio_*`` is
    ``|alpha_eff| / W_peak**2`` and ``max_local_ratio`` the largest
    ``|dD_eff/dt| / W(t)**2`` where ``W(t) >= 1%`` of its peak, both angular.
    """

    alpha_eff: float
    chirp_area_pump: float | None
    chirp_area_stokes: float | None
    omega_eff_peak: float
    sweep_ratio_plain: float
    sweep_ratio_angular: float
    max_local_ratio: float
    lz_probability: float
    flags: list[str] = field(default_factory=list)

    @property
    def applicable(self) -> bool:
        return not self.flags

    def verdicts(self) -> dict[str, str]:
        """``pass``/``warn`` per check; chirp-area checks only for chirped pulses."""
        out = {}
        if not self.applicable:
            out["arp"] = "warn"
            return out
        for name, area in (("pump", self.chirp_area_pump), ("stokes", self.chirp_area_stokes)):
            if area is not None and area > 0:
                out[f"chirp_area_{name}"] = "pass" if area >= 3.0 else "warn"
        out["landau_zener"] = "pass" if self.lz_probability <= 0.01 else "warn"
        return out

    def as_dict(self) -> dict:
        return {
            "alpha_eff_mhz_per_us": self.alpha_eff,
            "chirp_area_pump": self.chirp_area_pump,
            "chirp_area_stokes": self.chirp_area_stokes,
            "omega_eff_peak_mhz": self.omega_eff_peak,
            "sweep_ratio_plain": self.sweep_ratio_plain,
            "sweep_ratio_angular": self.sweep_ratio_angular,
            "max_local_ratio": self.max_local_ratio,
            "lz_probability": self.lz_probability,
            "flags": list(self.flags),
            "verdicts": self.verdicts(),
        }


def adiabaticity_report(scheme: SchemeSpec, n_grid: int = 4001) -> AdiabaticityReport:
    if n_grid < 2:
        raise ValueError("n_grid must be >= 2")
    rabi_f, chirp_f = scheme.units.factor("rabi"), scheme.units.factor("chirp")
    pump, stokes = scheme.pump, scheme.stokes

    def area(f):
        if f.shape is not Shape.GAUSSIAN:
            return None
        return abs(f.chirp_rate) * f.width**2

    alpha_eff = pump.chirp_rate + stokes.chirp_rate
    t = np.linspace(scheme.t_start, scheme.t_end, n_grid)
    wp, ws = rabi_at(pump, t), rabi_at(stokes, t)
    w = effective_rabi(wp, ws, detunings_at(scheme, t)[0])
    big_a, small_a = angular_detunings(scheme, t)
    w_ang = np.abs(effective_rabi(rabi_f * wp, rabi_f * ws, big_a))
    d_ang = effective_detuning(small_a, rabi_f * wp, rabi_f * ws, big_a)
    peak = float(np.max(np.abs(w)))
    peak_ang = float(np.max(w_ang))

    flags = []
    if pump.chirp_rate == 0 and stokes.chirp_rate == 0:
        flags.append("no sweep; ARP inapplicable")
    elif alpha_eff == 0:
        flags.append("chirps cancel; no two-photon sweep")
    if peak == 0:
        flags.append("no two-photon coupling")

    if flags:
        ratio_plain = ratio_ang = max_local = lz = math.nan
    else:
        ratio_plain = abs(alpha_eff) / peak**2
        ratio_ang = chirp_f * abs(alpha_eff) / peak_ang**2
        mask = w_ang >= 0.01 * peak_ang
        rate = np.abs(np.gradient(d_ang, t))
        max_local = float(np.max(rate[mask] / w_ang[mask] ** 2))
        lz = math.exp(-math.pi * peak_ang**2 / (2.0 * chirp_f * abs(alpha_eff)))
    return AdiabaticityReport(
        alpha_eff=alpha_eff,
        chirp_area_pump=area(pump),
        chirp_area_stokes=area(stokes),
        omega_eff_peak=peak,
        sweep_ratio_plain=ratio_plain,
        sweep_ratio_angular=ratio_ang,
        max_local_ratio=max_local,
        lz_probability=lz,
        flags=flags,
    )
