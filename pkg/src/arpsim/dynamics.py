"""Time propagation of the ladder system.

Three equations of motion share one adaptive Dormand-Prince 5(4) integrator
with PI step-size control (see :mod:`arpsim._kernels`):

* ``Model.SCHRODINGER`` - rotating-frame amplitudes ``(c_g, c_i, c_r)``;
* ``Model.LINDBLAD`` - 3x3 density matrix with decay channels r -> i and i -> g;
* ``Model.EFFECTIVE`` - ``(c_g, c_r)`` with the intermediate state eliminated.

States are plain numpy arrays: a length-3 (or 2) complex vector for the pure
models and a 3x3 complex matrix for the density matrix.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .effective import EliminationError
from .model import SchemeSpec, pack

DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-12
DEFAULT_SAMPLES = 2000
MAX_STEPS = 200_000_000

#: elimination is refused unless |Delta(t)| exceeds this multiple of the peak Rabi frequency
ELIMINATION_MARGIN = 10.0


class Model(enum.Enum):
    SCHRODINGER = "schrodinger"
    LINDBLAD = "lindblad"
    EFFECTIVE = "effective"

    @property
    def kind(self) -> int:
        return {
            Model.SCHRODINGER: _kernels.SCHRODINGER,
            Model.LINDBLAD: _kernels.LINDBLAD,
            Model.EFFECTIVE: _kernels.EFFECTIVE,
        }[self]


class IntegrationError(RuntimeError):
    """The integrator could not reach the end of the window."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} at t = {time:.9g} us")
        self.time = time


class InvariantError(RuntimeError):
    """A conserved quantity (norm, trace, positivity) drifted too far."""


def ground_state(model: Model) -> np.ndarray:
    if model is Model.LINDBLAD:
        rho = np.zeros((3, 3), dtype=complex)
        rho[0, 0] = 1.0
        return rho
    state = np.zeros(2 if model is Model.EFFECTIVE else 3, dtype=complex)
    state[0] = 1.0
    return state


def schrodinger_rhs(state, scheme: SchemeSpec, t: float) -> np.ndarray:
    """d(c_g, c_i, c_r)/dt in rad/us."""
    y = np.ascontiguousarray(state, dtype=complex)
    return _kernels.rhs_once(_kernels.SCHRODINGER, float(t), y, pack(scheme))


def lindblad_rhs(rho, scheme: SchemeSpec, t: float) -> np.ndarray:
    """d(rho)/dt for a 3x3 density matrix over (g, i, r)."""
    y = np.ascontiguousarray(np.asarray(rho, dtype=complex).ravel())
    return _kernels.rhs_once(_kernels.LINDBLAD, float(t), y, pack(scheme)).reshape(3, 3)


def effective_rhs(c2, scheme: SchemeSpec, t: float) -> np.ndarray:
    """d(c_g, c_r)/dt of the eliminated two-level model."""
    y = np.ascontiguousarray(c2, dtype=complex)
    return _kernels.rhs_once(_kernels.EFFECTIVE, float(t), y, pack(scheme))


def check_elimination(scheme: SchemeSpec) -> None:
    """Refuse the effective model unless the intermediate state is far detuned.

    Delta(t) is affine, so its extremes over the window sit at the endpoints.
    """
    p = pack(scheme)
    big_lo, _ = _kernels.detunings(p, scheme.t_start)
    big_hi, _ = _kernels.detunings(p, scheme.t_end)
    if big_lo * big_hi <= 0:
        raise EliminationError(
            f"one-photon detuning crosses zero inside [{scheme.t_start:g}, {scheme.t_end:g}] us"
        )
    peak = max(p[1], p[7])
    closest = min(abs(big_lo), abs(big_hi))
    if closest <= ELIMINATION_MARGIN * peak:
        raise EliminationError(
            f"|Delta| = {closest:.6g} rad/us is not > {ELIMINATION_MARGIN:g} x "
            f"peak Rabi frequency {peak:.6g} rad/us"
        )


@dataclass
class Trajectory:
    """Sampled solution of one propagation.

    ``states`` holds the raw state at each sample time (vectors for the pure
    models, flattened density matrices for Lindblad). ``peaks`` are the
    largest g/i/r populations seen at any accepted integrator step, not only
    at the samples.
    """

    times: np.ndarray
    states: np.ndarray
    model: Model
    scheme: SchemeSpec | None = None
    stats: dict = field(default_factory=dict)
    peaks: np.ndarray | None = None

    @property
    def populations(self) -> np.ndarray:
        s = self.states
        if self.model is Model.LINDBLAD:
            return s[:, [0, 4, 8]].real.copy()
        p = np.abs(s) ** 2
        if self.model is Model.EFFECTIVE:
            return np.column_stack([p[:, 0], np.zeros(len(p)), p[:, 1]])
        return p

    @property
    def coherences(self) -> np.ndarray:
        """``|rho_gi|, |rho_ir|, |rho_gr|`` per sample (zeros where undefined)."""
        s = self.states
        if self.model is Model.LINDBLAD:
            return np.abs(s[:, [1, 5, 2]])
        if self.model is Model.EFFECTIVE:
            zero = np.zeros(len(s))
            return np.column_stack([zero, zero, np.abs(s[:, 0] * s[:, 1].conj())])
        return np.abs(
            np.column_stack(
                [s[:, 0] * s[:, 1].conj(), s[:, 1] * s[:, 2].conj(), s[:, 0] * s[:, 2].conj()]
            )
        )

    @property
    def final_state(self) -> np.ndarray:
        last = self.states[-1]
        return last.reshape(3, 3) if self.model is Model.LINDBLAD else last

    @property
    def error_estimate(self) -> float:
        return self.stats.get("error_estimate", float("nan"))

    def density_matrices(self) -> np.ndarray:
        if self.model is not Model.LINDBLAD:
            raise ValueError("density matrices are only stored for the Lindblad model")
        return self.states.reshape(-1, 3, 3)


def _check_invariants(traj: Trajectory, limit: float) -> dict:
    """Measure drift of conserved quantities; raise beyond ``limit``."""
    if traj.model is Model.LINDBLAD:
        rhos = traj.density_matrices()
        trace = np.abs(np.trace(rhos, axis1=1, axis2=2) - 1.0).max()
        herm = np.abs(rhos - rhos.conj().transpose(0, 2, 1)).max()
        min_eig = float(np.linalg.eigvalsh(0.5 * (rhos + rhos.conj().transpose(0, 2, 1))).min())
        drift = {"trace_drift": float(trace), "hermiticity": float(herm), "min_eigenvalue": min_eig}
        bad = trace > limit or herm > limit or min_eig < -limit
    else:
        norm = np.abs((np.abs(traj.states) ** 2).sum(axis=1) - 1.0).max()
        drift = {"norm_drift": float(norm)}
        bad = norm > limit
    if bad:
        raise InvariantError(f"invariant violation beyond {limit:.3g}: {drift}")
    return drift


def propagate(
    model: Model | str,
    scheme: SchemeSpec,
    initial=None,
    rel_tol: float = DEFAULT_RTOL,
    abs_tol: float = DEFAULT_ATOL,
    n_samples: int = DEFAULT_SAMPLES,
    *,
    max_steps: int = MAX_STEPS,
    check: bool = True,
) -> Trajectory:
    """Integrate ``scheme`` over its window and sample ``n_samples`` uniform times.

    Raises :class:`IntegrationError` on step underflow or a non-finite state,
    :class:`InvariantError` if norm/trace/positivity drift exceeds 100x the
    larger of the tolerance and the accumulated local error estimate, and
    :class:`~arpsim.effective.EliminationError` if the effective model is
    requested outside its validity range.
    """
    model = Model(model)
    if not (0 < rel_tol <= 1e-3 and 0 < abs_tol <= 1e-3):
        raise ValueError("tolerances must lie in (0, 1e-3]")
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    if model is Model.EFFECTIVE:
        check_elimination(scheme)

    y0 = ground_state(model) if initial is None else np.asarray(initial, dtype=complex)
    expected = (3, 3) if model is Model.LINDBLAD else ((2,) if model is Model.EFFECTIVE else (3,))
    if y0.shape != expected:
        raise ValueError(f"initial state for {model.value} must have shape {expected}")
    if model is Model.LINDBLAD:
        if abs(np.trace(y0) - 1) > 1e-10 or np.abs(y0 - y0.conj().T).max() > 1e-10:
            raise ValueError("initial density matrix must be Hermitian with unit trace")
        if np.linalg.eigvalsh(y0).min() < -1e-8:
            raise ValueError("initial density matrix must be positive semidefinite")
    elif abs(np.vdot(y0, y0).real - 1) > 1e-10:
        raise ValueError("initial amplitudes must be normalised")

    times = np.linspace(scheme.t_start, scheme.t_end, int(n_samples))
    states, status, t_stop, n_acc, n_rej, err_sum, peaks = _kernels.dopri5(
        model.kind,
        pack(scheme),
        np.ascontiguousarray(y0.ravel()),
        times,
        float(rel_tol),
        float(abs_tol),
        int(max_steps),
    )
    if status == _kernels.STEP_UNDERFLOW:
        raise IntegrationError("step size underflow (stiff or singular problem)", t_stop)
    if status == _kernels.MAX_STEPS:
        raise IntegrationError(f"exceeded {max_steps} integrator steps", t_stop)
    if status == _kernels.NON_FINITE:
        raise IntegrationError("non-finite state", t_stop)

    traj = Trajectory(
        times=times,
        states=states,
        model=model,
        scheme=scheme,
        stats={
            "steps": int(n_acc),
            "rejected": int(n_rej),
            "error_estimate": float(err_sum),
            "rel_tol": float(rel_tol),
            "abs_tol": float(abs_tol),
        },
        peaks=peaks,
    )
    if check:
        # local tolerances do not bound global drift; the accumulated estimate does
        limit = 100.0 * max(rel_tol, abs_tol, err_sum)
        traj.stats.update(_check_invariants(traj, limit))
    return traj
