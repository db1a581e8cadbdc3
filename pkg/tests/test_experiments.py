import math
from dataclasses import replace

import numpy as np
import pytest

from arpsim.dynamics import Model, propagate
from arpsim.experiments import (
    PRESETS,
    Parameter,
    SweepSpec,
    calibration_matrix,
    rabi_sweep_case1,
    ratio_sweep_case1,
    ratio_sweep_case3,
    final_populations,
    preset_case1,
    preset_case2,
    preset_case3,
    run_sweep,
    without_decay,
)
from arpsim.model import ANGULAR, CaseTag, Shape
from arpsim.output import sweep_text


def with_chirps(scheme, alpha, beta):
    return replace(
        scheme,
        pump=replace(scheme.pump, chirp_rate=alpha),
        stokes=replace(scheme.stokes, chirp_rate=beta),
    )


def test_preset_case1():
    s = preset_case1()
    assert s.pump.width == 1.0 and s.stokes.width == 1.0
    assert s.pump.chirp_rate + s.stokes.chirp_rate == pytest.approx(8.4)
    assert s.case_tag is CaseTag.BOTH_CHIRPED
    assert (s.pump.peak_rabi, s.stokes.peak_rabi) == (100.0, 100.0)
    assert (s.atom.delta0, s.atom.small_delta0) == (1500.0, 0.0)
    assert (s.atom.gamma_ig, s.atom.gamma_ri) == (6.0, 3e-3)
    assert (s.t_start, s.t_end) == (-5.0, 5.0)
    assert preset_case1(55.0).pump.peak_rabi == 55.0


def test_preset_case2():
    s = preset_case2()
    for f in (s.pump, s.stokes):
        assert (f.shape, f.peak_rabi, f.width, f.center_time) == (Shape.GAUSSIAN, 25.0, 0.45, 0.0)
    assert s.pump.chirp_center == 0.0
    assert s.atom.delta0 == 1500.0
    assert (s.pump.chirp_rate, s.stokes.chirp_rate) == (2.0, 0.0)
    assert s.case_tag is CaseTag.PUMP_ONLY_CHIRPED


def test_preset_case3():
    s = preset_case3()
    assert (s.pump.peak_rabi, s.pump.width, s.pump.center_time) == (35.0, 0.34, 0.0)
    assert s.pump.chirp_center == -0.26 and s.pump.chirp_rate == 2.0
    assert (s.stokes.shape, s.stokes.peak_rabi, s.stokes.chirp_rate) == (Shape.CW, 17.0, 0.0)
    assert s.case_tag is CaseTag.PUMP_CHIRPED_STOKES_CW
    assert 1.95 < s.pump.peak_rabi / s.stokes.peak_rabi < 2.5


def test_presets_registry():
    assert set(PRESETS) == {"case1", "case2", "case3"}
    assert PRESETS["case2"]() == preset_case2()
    assert preset_case2().units is ANGULAR


def test_without_decay():
    s = without_decay(preset_case1())
    assert (s.atom.gamma_ig, s.atom.gamma_ri) == (0.0, 0.0)
    assert s.pump == preset_case1().pump


def test_final_populations_fields_off():
    traj = propagate(Model.LINDBLAD, preset_case1(0.0), n_samples=3)
    pops = final_populations(traj)
    assert (pops.g, pops.i, pops.r) == pytest.approx((1, 0, 0), abs=1e-15)
    assert pops.peak_i == pytest.approx(0.0, abs=1e-15)


def test_case3_transient_intermediate_small():
    traj = propagate(Model.LINDBLAD, preset_case3(), n_samples=101)
    assert final_populations(traj).peak_i < 0.01


# --- sweep spec -------------------------------------------------------------

@pytest.mark.parametrize("kw", [
    {"lo": 1.0, "hi": 1.0, "steps": 3},
    {"lo": 0.0, "hi": 1.0, "steps": 1},
])
def test_sweep_spec_validation(kw):
    with pytest.raises(ValueError):
        SweepSpec(preset_case1(), Parameter.EQUAL_PEAK_RABI, **kw)


def test_ratio_sweep_needs_stokes_reference():
    with pytest.raises(ValueError, match="stokes_ref"):
        SweepSpec(preset_case1(), Parameter.PUMP_TO_STOKES_RATIO, 0.5, 1.5, 3)


def test_scheme_at_each_parameter():
    t = preset_case1()
    s = SweepSpec(t, Parameter.EQUAL_PEAK_RABI, 0, 1, 2).scheme_at(42.0)
    assert (s.pump.peak_rabi, s.stokes.peak_rabi) == (42.0, 42.0)
    s = SweepSpec(t, Parameter.PUMP_TO_STOKES_RATIO, 0, 1, 2, stokes_ref=70.0).scheme_at(0.5)
    assert (s.pump.peak_rabi, s.stokes.peak_rabi) == (35.0, 70.0)
    s = SweepSpec(t, Parameter.CHIRP_RATE, 0, 1, 2).scheme_at(3.0)
    assert (s.pump.chirp_rate, s.stokes.chirp_rate) == (3.0, 3.0)
    s = SweepSpec(preset_case2(), Parameter.CHIRP_RATE, 0, 1, 2).scheme_at(3.0)
    assert (s.pump.chirp_rate, s.stokes.chirp_rate) == (3.0, 0.0)
    s = SweepSpec(t, Parameter.PULSE_WIDTH, 0.5, 2, 2).scheme_at(2.0)
    assert s.pump.width == 2.0 and (s.t_start, s.t_end) == (-10.0, 10.0)


def test_named_sweep_defaults():
    b = rabi_sweep_case1()
    assert (b.lo, b.hi, b.steps, b.model) == (0.0, 120.0, 61, Model.LINDBLAD)
    c = ratio_sweep_case1()
    assert (c.lo, c.hi, c.stokes_ref) == (0.3, 2.0, 70.0)
    assert ratio_sweep_case1().metadata()["stokes_ref_mhz"] == 70.0
    d = ratio_sweep_case3()
    assert d.template.case_tag is CaseTag.PUMP_CHIRPED_STOKES_CW and d.stokes_ref == 17.0


# --- sweep engine -----------------------------------------------------------

@pytest.fixture(scope="module")
def small_sweep():
    return SweepSpec(preset_case2(), Parameter.EQUAL_PEAK_RABI, 0.0, 40.0, 5, n_samples=11)


def test_sweep_zero_field_point(small_sweep):
    res = run_sweep(small_sweep)
    assert res.rows[0].p_r == 0.0
    assert [r.value for r in res.rows] == list(small_sweep.values)
    for r in res.rows:
        assert -1e-6 <= min(r.p_g, r.p_i, r.p_r) and max(r.p_g, r.p_i, r.p_r) <= 1 + 1e-6
    assert res.metadata["parameter"] == "equal_peak_rabi"


def test_sweep_deterministic(small_sweep):
    assert sweep_text(run_sweep(small_sweep)) == sweep_text(run_sweep(small_sweep))


def test_sweep_threaded_matches_serial(small_sweep):
    assert sweep_text(run_sweep(small_sweep, jobs=3)) == sweep_text(run_sweep(small_sweep, jobs=1))


def test_sweep_failures_recorded_in_row():
    spec = SweepSpec(preset_case2(), Parameter.EQUAL_PEAK_RABI, 20.0, 200.0, 2,
                     model=Model.EFFECTIVE, n_samples=5)
    res = run_sweep(spec)
    ok, bad = res.rows
    assert not ok.failed and bad.failed
    assert "EliminationError" in bad.error
    assert math.isnan(bad.p_r)
    assert res.failures == [bad]


# --- physical properties ----------------------------------------------------

@pytest.mark.parametrize("model", [Model.SCHRODINGER, Model.LINDBLAD])
def test_chirp_sign_flip_keeps_transfer(model):
    s = with_chirps(preset_case1(), -4.2, -4.2)
    assert final_populations(propagate(model, s, n_samples=11)).r > 0.99


@pytest.mark.parametrize("model", [Model.SCHRODINGER, Model.LINDBLAD])
def test_zero_chirp_collapses_transfer(model):
    s = with_chirps(preset_case1(), 0.0, 0.0)
    assert final_populations(propagate(model, s, n_samples=11)).r < 0.5


def test_case3_ratio_window():
    spec = SweepSpec(preset_case3(), Parameter.PUMP_TO_STOKES_RATIO, 1.0, 3.5, 2,
                     stokes_ref=17.0, n_samples=11)
    p = {v: final_populations(propagate(Model.LINDBLAD, spec.scheme_at(v), n_samples=11)).r
         for v in (1.0, 2.2, 3.5)}
    assert p[2.2] > p[1.0]
    assert p[2.2] > p[3.5]


def test_calibration_matrix_single_convention():
    (row,) = calibration_matrix([ANGULAR])
    assert row["units"] == "rabi+detuning+chirp+decay"
    assert set(row) == {"units", "case1", "case2", "case3"}
    assert 0.0 <= row["case1"] <= 1.0
