import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import erf

from arpsim.dynamics import (
    IntegrationError,
    Model,
    effective_rhs,
    lindblad_rhs,
    propagate,
    schrodinger_rhs,
)
from arpsim.effective import EliminationError
from arpsim.experiments import preset_case1, preset_case2, without_decay
from arpsim.model import AtomSpec, CaseTag, FieldSpec, SchemeSpec, Shape, to_angular

TWO_PI = 2 * math.pi
cplx = st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False)


def field(peak=0.0, width=0.05, chirp=0.0, center=0.0):
    return FieldSpec(Shape.GAUSSIAN, peak, center, width, chirp, 0.0)


def dark(delta0=1500.0, small=0.0, gamma_ig=0.0, gamma_ri=0.0, t=(0.0, 0.5), alpha=0.0):
    return SchemeSpec(field(chirp=alpha, center=0.25), field(center=0.25),
                      AtomSpec(delta0, small, gamma_ig, gamma_ri), *t)


def rabi_scheme(peak=10.0, tau=0.1):
    # two-level reduction: resonant pump only, no decay, Delta = 0
    return SchemeSpec(field(peak, tau), field(0.0, tau), AtomSpec(0.0), -5 * tau, 5 * tau)


def rabi_oracle(t, peak, tau, t0):
    """sin^2(A/2) with the pulse area accumulated from the window start ``t0``."""
    z = math.sqrt(2) * tau
    area = TWO_PI * peak * tau * math.sqrt(math.pi / 2) * (erf(t / z) - erf(t0 / z))
    return np.sin(area / 2) ** 2


# --- right-hand sides -------------------------------------------------------

def test_schrodinger_free_evolution():
    s = dark(delta0=1500.0, small=3.0)
    c = np.array([0.6, 0.64j, 0.48], dtype=complex)
    d = schrodinger_rhs(c, s, 0.0)
    assert d[0] == 0
    assert d[1] == pytest.approx(-1j * to_angular(1500.0) * c[1])
    assert d[2] == pytest.approx(-1j * to_angular(3.0) * c[2])


def test_schrodinger_ground_state_coupling():
    s = SchemeSpec(field(20.0, 0.1), field(0.0, 0.1), AtomSpec(1500.0), -1, 1)
    d = schrodinger_rhs(np.array([1, 0, 0], dtype=complex), s, 0.0)
    assert d[0] == 0
    assert d[1] == pytest.approx(1j * to_angular(20.0) / 2)
    assert d[2] == 0


@given(a=cplx, b=cplx, c=cplx, t=st.floats(-5, 5))
def test_schrodinger_norm_derivative_vanishes(a, b, c, t):
    y = np.array([a, b, c])
    d = schrodinger_rhs(y, preset_case1(), t)
    assert abs(2 * np.vdot(y, d).real) <= 1e-9 * (1 + np.abs(d).sum())


def test_lindblad_pure_decay():
    s = dark(gamma_ig=6.0)
    rho = np.diag([0, 1, 0]).astype(complex)
    d = lindblad_rhs(rho, s, 0.0)
    assert d[1, 1] == pytest.approx(-TWO_PI * 6.0)
    assert d[0, 0] == pytest.approx(TWO_PI * 6.0)


def test_lindblad_coherence_broadening():
    s = dark(delta0=1500.0, gamma_ig=6.0)
    rho = np.zeros((3, 3), dtype=complex)
    rho[0, 1], rho[1, 0] = 0.3 + 0.1j, 0.3 - 0.1j
    d = lindblad_rhs(rho, s, 0.0)
    expected = (1j * to_angular(1500.0) - TWO_PI * 6.0 / 2) * rho[0, 1]
    assert d[0, 1] == pytest.approx(expected)


def test_lindblad_ir_coherence_rate():
    # gamma_ir = (Gamma_ig + Gamma_ri) / 2
    s = dark(delta0=0.0, gamma_ig=6.0, gamma_ri=0.5)
    rho = np.zeros((3, 3), dtype=complex)
    rho[1, 2] = rho[2, 1] = 0.2
    d = lindblad_rhs(rho, s, 0.0)
    assert d[1, 2].real == pytest.approx(-TWO_PI * (6.0 + 0.5) / 2 * 0.2)


@given(st.lists(cplx, min_size=9, max_size=9), st.floats(-5, 5))
def test_lindblad_trace_preserving(entries, t):
    m = np.array(entries).reshape(3, 3)
    rho = m @ m.conj().T
    d = lindblad_rhs(rho, preset_case1(), t)
    assert abs(np.trace(d)) <= 1e-9 * (1 + np.abs(d).max())
    assert np.abs(d - d.conj().T).max() <= 1e-9 * (1 + np.abs(d).max())


def test_effective_rhs_frozen_when_fields_off():
    s = dark(small=0.0)
    assert np.all(effective_rhs(np.array([0.6, 0.8j]), s, 0.25) == 0)


def test_effective_rhs_matches_formula():
    s = preset_case1()
    t = 0.3
    wp = to_angular(100 * math.exp(-t**2 / 2))
    big = to_angular(1500 - 4.2 * t)
    small = to_angular(-8.4 * t)
    w, sg, sr = wp * wp / (2 * big), wp * wp / (4 * big), wp * wp / (4 * big)
    c = np.array([0.6, 0.8j])
    h = np.array([[-sg, -w / 2], [-w / 2, small - sr]])
    assert effective_rhs(c, s, t) == pytest.approx(-1j * h @ c, rel=1e-12)


# --- analytic oracles -------------------------------------------------------

def test_resonant_rabi_oscillation():
    peak, tau = 10.0, 0.1
    traj = propagate(Model.SCHRODINGER, rabi_scheme(peak, tau), n_samples=401)
    err = np.abs(traj.populations[:, 1] - rabi_oracle(traj.times, peak, tau, -5 * tau)).max()
    assert err <= 1e-6


def test_resonant_rabi_lindblad():
    peak, tau = 10.0, 0.1
    traj = propagate(Model.LINDBLAD, rabi_scheme(peak, tau), n_samples=401)
    err = np.abs(traj.populations[:, 1] - rabi_oracle(traj.times, peak, tau, -5 * tau)).max()
    assert err <= 1e-6


def test_pi_pulse_inverts():
    # area 2 pi * peak * tau * sqrt(2 pi) = pi  <=>  peak * tau = 1 / (2 sqrt(2 pi))
    tau = 0.1
    peak = 1 / (2 * math.sqrt(2 * math.pi) * tau)
    traj = propagate(Model.SCHRODINGER, rabi_scheme(peak, tau), n_samples=11)
    assert traj.populations[-1, 1] == pytest.approx(1.0, abs=1e-6)


def test_exponential_decay():
    s = dark(gamma_ig=6.0)
    rho0 = np.diag([0, 1, 0]).astype(complex)
    traj = propagate(Model.LINDBLAD, s, initial=rho0, n_samples=51)
    p_i = traj.populations[:, 1]
    assert np.abs(p_i - np.exp(-TWO_PI * 6.0 * traj.times)).max() <= 1e-6
    assert p_i[10] == pytest.approx(0.0231, abs=5e-5)
    assert traj.populations[:, 0] + p_i == pytest.approx(np.ones(51), abs=1e-9)


def test_rydberg_cascade_decay():
    # r -> i -> g with rates b, a: P_i(t) = b/(a-b) (e^{-bt} - e^{-at})
    a, b = TWO_PI * 6.0, TWO_PI * 2.0
    s = dark(gamma_ig=6.0, gamma_ri=2.0)
    traj = propagate(Model.LINDBLAD, s, initial=np.diag([0, 0, 1]).astype(complex), n_samples=51)
    t = traj.times
    assert np.abs(traj.populations[:, 2] - np.exp(-b * t)).max() <= 1e-6
    assert np.abs(traj.populations[:, 1] - b / (a - b) * (np.exp(-b * t) - np.exp(-a * t))).max() <= 1e-6


# --- cross-model consistency ------------------------------------------------

def test_lindblad_without_decay_matches_schrodinger():
    s = without_decay(preset_case2())
    a = propagate(Model.SCHRODINGER, s, n_samples=201)
    b = propagate(Model.LINDBLAD, s, n_samples=201)
    assert np.abs(a.populations - b.populations).max() <= 1e-6


def test_effective_matches_full_case1():
    s = without_decay(preset_case1())
    full = propagate(Model.SCHRODINGER, s, n_samples=11)
    eff = propagate(Model.EFFECTIVE, s, n_samples=11)
    assert abs(full.populations[-1, 2] - eff.populations[-1, 2]) <= 0.02


def test_tolerance_convergence_random_schemes():
    rng = np.random.default_rng(7)
    for _ in range(20):
        peak_p, peak_s = rng.uniform(5, 40, 2)
        tau = rng.uniform(0.2, 0.5)
        alpha = rng.uniform(-5, 5)
        delta0 = rng.choice([-1, 1]) * rng.uniform(300, 1500)
        s = SchemeSpec(field(peak_p, tau, alpha), field(peak_s, tau), AtomSpec(delta0),
                       -5 * tau, 5 * tau, CaseTag.PUMP_ONLY_CHIRPED)
        coarse = propagate(Model.SCHRODINGER, s, rel_tol=1e-8, n_samples=2)
        fine = propagate(Model.SCHRODINGER, s, rel_tol=5e-9, n_samples=2)
        change = np.abs(coarse.populations[-1] - fine.populations[-1]).max()
        assert change < coarse.error_estimate


# --- trajectory contract ----------------------------------------------------

def test_trajectory_contract():
    traj = propagate(Model.LINDBLAD, preset_case2(), n_samples=300)
    assert traj.times.shape == (300,)
    assert np.all(np.diff(traj.times) > 0)
    p = traj.populations
    assert p.min() >= -1e-8 and p.max() <= 1 + 1e-8
    assert p.sum(axis=1) == pytest.approx(np.ones(300), abs=1e-8)
    assert traj.stats["steps"] > 0 and traj.stats["rejected"] >= 0
    assert traj.final_state.shape == (3, 3)
    assert traj.peaks[1] >= p[:, 1].max()


def test_ground_state_without_fields_stays_put():
    traj = propagate(Model.SCHRODINGER, dark(), n_samples=5)
    assert traj.populations[-1] == pytest.approx([1, 0, 0], abs=1e-15)


def test_coherences_shape():
    traj = propagate(Model.SCHRODINGER, rabi_scheme(), n_samples=21)
    coh = traj.coherences
    assert coh.shape == (21, 3)
    p = traj.populations
    assert coh[:, 0] == pytest.approx(np.sqrt(p[:, 0] * p[:, 1]), abs=1e-12)


# --- error paths ------------------------------------------------------------

def test_max_steps_reports_time():
    with pytest.raises(IntegrationError) as info:
        propagate(Model.SCHRODINGER, preset_case1(), max_steps=100)
    assert preset_case1().t_start <= info.value.time < preset_case1().t_end
    assert "t =" in str(info.value)


@pytest.mark.parametrize("rtol,atol", [(0.0, 1e-12), (1e-2, 1e-12), (1e-9, 0.0)])
def test_tolerance_validation(rtol, atol):
    with pytest.raises(ValueError):
        propagate(Model.SCHRODINGER, dark(), rel_tol=rtol, abs_tol=atol)


@pytest.mark.parametrize("model,state", [
    (Model.SCHRODINGER, np.array([1, 0], dtype=complex)),
    (Model.SCHRODINGER, np.array([1, 1, 0], dtype=complex)),
    (Model.LINDBLAD, np.diag([1, 1, 0]).astype(complex)),
    (Model.LINDBLAD, np.diag([1.5, -0.5, 0]).astype(complex)),
    (Model.EFFECTIVE, np.array([1, 0, 0], dtype=complex)),
])
def test_initial_state_validation(model, state):
    with pytest.raises(ValueError):
        propagate(model, preset_case1(), initial=state)


def test_elimination_refused_when_near_resonant():
    s = SchemeSpec(field(100.0, 1.0), field(100.0, 1.0), AtomSpec(500.0), -5, 5)
    with pytest.raises(EliminationError, match="not >"):
        propagate(Model.EFFECTIVE, s)


def test_elimination_refused_when_detuning_crosses_zero():
    s = SchemeSpec(field(1.0, 1.0, chirp=4.2), field(1.0, 1.0, chirp=4.2), AtomSpec(5.0), -5, 5)
    with pytest.raises(EliminationError, match="crosses zero"):
        propagate(Model.EFFECTIVE, s)
