import numpy as np
import pytest

from idealcurve.errors import BadParams, ImmersionLost, StepFloorReached
from idealcurve.flow import (DIAGNOSTICS_HEADER, SCHEMES, FlowConfig, FlowState,
                             diagnostics_csv, directional_derivative, el_operator,
                             first_variation_check, read_diagnostics_csv, run, step)
from idealcurve.geometry import build_geometry
from idealcurve.presets import preset_curve
from idealcurve.validators import fit_exponential_decay

from oracles import curve_oracle, el_operator_oracle, hausdorff, polar_sources, trig_dense


def test_el_operator_vanishes_on_circle():
    field = el_operator(build_geometry(preset_curve("circle", {"r": 2.0}, 128)))
    assert np.max(np.abs(field.values)) < 1e-8
    assert field.l2_norm_sq == pytest.approx(0.0, abs=1e-16)


def test_el_operator_matches_symbolic_oracle():
    curve = preset_curve("fourier_perturbed_circle", {"m": 2, "eps": 0.01}, 128)
    g = build_geometry(curve)
    field = el_operator(g)
    src = polar_sources("1 + 0.01*cos(2*theta)")
    ref = el_operator_oracle(*src, curve.parameters)
    speed, _ = curve_oracle(*src, curve.parameters, 0)
    ref_norm = np.sum(ref**2 * speed) * 2 * np.pi / curve.n_samples
    assert field.l2_norm_sq == pytest.approx(ref_norm, rel=1e-4)
    assert np.max(np.abs(field.values - ref)) < 1e-7 * np.max(np.abs(ref))


def test_el_operator_scales_like_rho_minus_five():
    curve = preset_curve("fourier_perturbed_circle", {"m": 3, "eps": 0.05}, 128)
    base = el_operator(build_geometry(curve)).values
    scaled = el_operator(build_geometry(curve.scaled(2.0))).values
    assert np.max(np.abs(scaled - base / 32)) <= 1e-10 * np.max(np.abs(base / 32))


def test_first_variation_converges_at_first_order_on_ellipse():
    curve = preset_curve("ellipse", {"a": 1.3, "b": 1.0}, 128)
    rep = first_variation_check(curve, np.cos(2 * curve.parameters), [1e-4, 1e-5])
    ratio = rep.deviations[0] / rep.deviations[1]
    assert 8 <= ratio <= 12
    assert rep.orders[0] == pytest.approx(1.0, abs=0.05)


def test_first_variation_on_circle_is_zero():
    curve = preset_curve("circle", {}, 64)
    u = curve.parameters
    rep = first_variation_check(curve, 1 + np.cos(3 * u) + 0.5 * np.sin(2 * u),
                                [1e-2, 1e-3, 1e-4])
    assert rep.reference == 0
    est = np.abs(rep.estimates)
    assert est[2] < est[1] < est[0]


def test_uniform_inflation_of_circle():
    r = 1.5
    curve = preset_curve("circle", {"r": r}, 64)
    rep = first_variation_check(curve, np.ones(64), [1e-2, 1e-4])
    # inward normal: gamma + h nu is the circle of radius r - h
    assert rep.length_reference == pytest.approx(-2 * np.pi, rel=1e-12)
    assert rep.length_estimates == pytest.approx((-2 * np.pi, -2 * np.pi), rel=1e-10)
    assert np.max(np.abs(rep.estimates)) < 1e-10


def test_first_variation_argument_checks():
    curve = preset_curve("circle", {}, 64)
    u = curve.parameters
    with pytest.raises(BadParams):
        first_variation_check(curve, np.cos(20 * u), [1e-3])
    with pytest.raises(BadParams):
        first_variation_check(curve, np.cos(2 * u), [1e-4, 1e-3])
    with pytest.raises(ImmersionLost):
        # radius 1 - h (1 + cos(u) / 2) vanishes at u = 0
        first_variation_check(curve, 1 + 0.5 * np.cos(u), [1 / 1.5])


def test_directional_derivative_matches_variation_reference():
    curve = preset_curve("limacon", {"a": 0.5, "b": 1.0}, 128)
    v = np.sin(3 * curve.parameters)
    rep = first_variation_check(curve, v, [1e-5])
    assert directional_derivative(build_geometry(curve), v) == rep.reference


def test_config_validation_and_round_trip():
    cfg = FlowConfig(t_end=3.0, scheme="explicit_rk4")
    assert FlowConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(BadParams):
        FlowConfig(scheme="euler")
    with pytest.raises(BadParams):
        FlowConfig(dt_min=1.0, dt_initial=1e-3)
    with pytest.raises(BadParams):
        FlowConfig(small_energy_threshold=0.0)
    with pytest.raises(BadParams):
        FlowConfig.from_dict({"dt": 1.0})


def test_step_keeps_circle_fixed():
    state = FlowState.initial(preset_curve("circle", {}, 64))
    new = step(state, FlowConfig(), dt=1e-2)
    assert np.max(np.abs(new.curve.points - state.curve.points)) < 1e-8
    assert new.energy == 0


def test_ellipse_energy_strictly_decreases_over_100_steps():
    state = FlowState.initial(preset_curve("ellipse", {"a": 1.1, "b": 1.0}, 128))
    cfg = FlowConfig()
    energies = [state.energy]
    for _ in range(100):
        state = step(state, cfg)
        energies.append(state.energy)
    assert np.all(np.diff(energies) < 0)


def test_rk4_controller_halves_oversized_steps():
    state = FlowState.initial(preset_curve("ellipse", {"a": 1.1, "b": 1.0}, 256))
    cfg = FlowConfig(scheme="explicit_rk4", dt_min=1e-14)
    new = step(state, cfg, dt=1e-2)
    assert new.dt < 1e-2
    assert np.log2(1e-2 / new.dt) == pytest.approx(round(np.log2(1e-2 / new.dt)))
    assert new.energy <= state.energy
    # dt = 1e-2 tangles the curve, 1e-4 is rejected on energy
    with pytest.raises(ImmersionLost):
        step(state, FlowConfig(scheme="explicit_rk4", dt_min=5e-3, dt_initial=5e-3), dt=1e-2)
    with pytest.raises(StepFloorReached):
        step(state, FlowConfig(scheme="explicit_rk4", dt_min=1e-4, dt_initial=1e-4), dt=1e-4)


def test_imex_and_rk4_agree_on_short_trajectory():
    curve = preset_curve("ellipse", {"a": 1.1, "b": 1.0}, 64)
    finals = {}
    for scheme in SCHEMES:
        cfg = FlowConfig(scheme=scheme, dt_initial=1e-6, dt_max=1e-6, dt_min=1e-12,
                         dt_growth=1.0, t_end=1e-5, resample_every=0,
                         stop_on_convergence=False)
        result = run(curve, cfg)
        assert result.termination == "t_end"
        assert result.state.t == pytest.approx(1e-5)
        finals[scheme] = result.state.curve.points
    assert np.max(np.abs(finals["imex_spectral"] - finals["explicit_rk4"])) < 1e-6


@pytest.mark.parametrize("omega", [1, 2, 3])
def test_omega_circles_stay_fixed_for_1000_steps(omega):
    curve = preset_curve("omega_circle", {"omega": omega}, 64)
    cfg = FlowConfig(t_end=1e9, max_steps=1000, stop_on_convergence=False)
    result = run(curve, cfg)
    assert result.state.step == 1000
    assert hausdorff(trig_dense(result.state.curve.points), trig_dense(curve.points)) < 1e-6


def test_circle_converges_immediately():
    result = run(preset_curve("circle", {}, 64), FlowConfig(t_end=0.01))
    assert result.converged and result.termination == "converged"
    assert len(result.records) == 10


def test_dissipation_balance_is_first_order_in_dt():
    curve = preset_curve("ellipse", {"a": 1.1, "b": 1.0}, 128)
    residuals = []
    for dt in (4e-3, 2e-3, 1e-3):
        cfg = FlowConfig(dt_initial=dt, dt_max=dt, dt_growth=1.0, t_end=0.2,
                         stop_on_convergence=False)
        result = run(curve, cfg)
        residuals.append(abs(result.state.balance_residual - result.records[0].E))
    ratios = [a / b for a, b in zip(residuals, residuals[1:])]
    assert all(1.8 < r < 2.6 for r in ratios)


def test_perturbed_circle_converges_to_round():
    result = run(preset_curve("fourier_perturbed_circle", {"m": 2, "eps": 0.05}, 128),
                 FlowConfig(t_end=5.0))
    assert result.converged
    k = result.state.cache.k
    assert np.max(k) - np.min(k) < 1e-6
    assert result.records[-1].circle_residual < 1e-6


def test_lemniscate_does_not_converge():
    result = run(preset_curve("lemniscate", {}, 128), FlowConfig(t_end=0.05))
    assert result.termination == "t_end" and not result.converged
    assert {r.winding for r in result.records} == {0}
    assert all(np.isfinite(r.Q_blowup) for r in result.records)


def test_blowup_integral_decays_after_convergence():
    result = run(preset_curve("ellipse", {"a": 1.1, "b": 1.0}, 128),
                 FlowConfig(t_end=2.0, stop_on_convergence=False))
    assert result.converged_at is not None
    tail = [r.Q_blowup - r.L for r in result.records if r.t >= result.converged_at]
    assert np.all(np.diff(tail) <= 0)


def test_snapshot_stride_and_callbacks():
    seen = []
    result = run(preset_curve("ellipse", {"a": 1.1, "b": 1.0}, 64),
                 FlowConfig(t_end=0.05, snapshot_stride=3), on_record=seen.append)
    steps = [r.step for r in result.records]
    assert steps[0] == 0 and all(s % 3 == 0 for s in steps[1:-1])
    assert seen == result.records


def test_diagnostics_csv_round_trip():
    result = run(preset_curve("ellipse", {"a": 1.1, "b": 1.0}, 64), FlowConfig(t_end=0.01))
    text = diagnostics_csv(result.records)
    assert text.splitlines()[0] == ",".join(DIAGNOSTICS_HEADER)
    back = read_diagnostics_csv(text)
    assert [r.row() for r in back] == [r.row() for r in result.records]
    with pytest.raises(BadParams):
        read_diagnostics_csv("t,L\n0,1\n")


@pytest.mark.parametrize("dt", [1e-2, 1e-3])
def test_late_decay_rate_matches_linearised_scheme(dt):
    # radial mode m = 2 on the unit circle: the linearised normal speed damps it at
    # m^2 (m^2 - 1)^2 = 36; the IMEX step treats m^6 = 64 implicitly and the
    # remainder 36 - 64 explicitly, so E contracts by ((1 + 28 dt) / (1 + 64 dt))^2
    # per step of size dt
    result = run(preset_curve("fourier_perturbed_circle", {"m": 2, "eps": 0.02}, 128),
                 FlowConfig(t_end=10.0, dt_max=dt))
    predicted = 2 * np.log((1 + 64 * dt) / (1 + 28 * dt)) / dt
    assert fit_exponential_decay(result.records).rate == pytest.approx(predicted, rel=1e-2)
