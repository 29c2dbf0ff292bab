import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from idealcurve.errors import AmbiguousWinding, BadParams, NonFinite, NotImmersed
from idealcurve.geometry import (CurveState, arclength_spacing_error, build_geometry,
                                 curve_from_csv, curve_from_json, curve_to_csv, curve_to_json,
                                 load_curve, resample_uniform_arclength, save_curve,
                                 winding_number)
from idealcurve.presets import preset_curve

from oracles import (curve_oracle, dense_energy, ellipse_arclength, ellipse_perimeter,
                     ellipse_sources)


def test_unit_circle_n128():
    g = build_geometry(preset_curve("circle", {}, 128))
    assert g.length == pytest.approx(2 * np.pi, abs=1e-10)
    assert np.max(np.abs(g.k - 1)) < 1e-10
    assert np.max(np.abs(g.k_s)) < 1e-10
    assert g.energy < 1e-10
    assert winding_number(g) == 1


def test_double_circle_n256():
    g = build_geometry(preset_curve("omega_circle", {"r": 1, "omega": 2}, 256))
    assert g.length == pytest.approx(4 * np.pi, abs=1e-10)
    assert np.max(np.abs(g.k - 1)) < 1e-10
    assert g.energy < 1e-10
    assert winding_number(g) == 2


def test_higher_derivatives_vanish_on_offset_circle():
    g = build_geometry(preset_curve("circle", {"r": 3.0, "cx": 2.0, "cy": -1.0}, 64))
    assert np.max(np.abs(g.k - 1 / 3)) < 1e-13
    assert np.max(np.abs(g.k_derivs[1:])) < 1e-12


def test_frame_is_orthonormal():
    g = build_geometry(preset_curve("ellipse", {"a": 2.0, "b": 1.0}, 128))
    assert np.max(np.abs(np.hypot(g.tangent[:, 0], g.tangent[:, 1]) - 1)) < 1e-12
    assert np.max(np.abs(np.sum(g.tangent * g.normal, axis=1))) < 1e-12


def test_normal_points_inward_and_curvature_positive_for_ccw():
    g = build_geometry(preset_curve("circle", {}, 64))
    assert np.allclose(g.normal, -g.curve.points, atol=1e-13)
    cw = build_geometry(CurveState(g.curve.points[::-1]))
    assert np.allclose(cw.k, -1, atol=1e-12)
    assert cw.winding == -1


def test_ellipse_energy_matches_dense_quadrature():
    e_dense, e_dense2 = dense_energy(*ellipse_sources(1.2, 1.0))
    assert abs(e_dense - e_dense2) < 1e-14 * e_dense  # oracle itself converged
    g = build_geometry(preset_curve("ellipse", {"a": 1.2, "b": 1.0}, 256))
    assert g.energy == pytest.approx(e_dense, rel=1e-8)


def test_spectral_convergence_of_curvature_derivative():
    # max error of k_s against the symbolic value on a 3:1 ellipse; each
    # doubling of N must cut the error by 10^3 until rounding level
    errors = []
    for n in (64, 128, 256):
        g = build_geometry(preset_curve("ellipse", {"a": 3.0, "b": 1.0}, n))
        _, (k, k_s) = curve_oracle(*ellipse_sources(3.0, 1.0), g.curve.parameters, 1)
        errors.append(np.max(np.abs(g.k_s - k_s)) / np.max(np.abs(k_s)))
    for coarse, fine in zip(errors, errors[1:]):
        assert fine < max(coarse / 1e3, 1e-12)


@pytest.mark.parametrize("rho", [0.5, 2.0, 7.0])
def test_scaling_laws(rho):
    curve = preset_curve("fourier_perturbed_circle", {"m": 3, "eps": 0.05}, 128)
    g1, g = build_geometry(curve), build_geometry(curve.scaled(rho))
    assert g.length == pytest.approx(rho * g1.length, rel=1e-10)
    assert g.energy == pytest.approx(rho**-3 * g1.energy, rel=1e-10)
    assert g.scale_invariant_energy == pytest.approx(g1.scale_invariant_energy, rel=1e-10)
    for order in range(6):
        ref = rho ** (-1 - order) * g1.k_derivs[order]
        assert np.max(np.abs(g.k_derivs[order] - ref)) <= 1e-10 * np.max(np.abs(ref))


@settings(max_examples=25, deadline=None)
@given(angle=st.floats(-np.pi, np.pi), dx=st.floats(-10, 10), dy=st.floats(-10, 10),
       rho=st.floats(0.3, 8.0))
def test_rigid_motion_and_scaling_invariance(angle, dx, dy, rho):
    curve = preset_curve("limacon", {"a": 0.4, "b": 1.0}, 128)
    g0 = build_geometry(curve)
    g = build_geometry(curve.transformed(angle, (dx, dy)))
    assert np.max(np.abs(g.k - g0.k)) < 1e-10 * np.max(np.abs(g0.k))
    assert g.energy == pytest.approx(g0.energy, rel=1e-10)
    assert g.length == pytest.approx(g0.length, rel=1e-10)
    gs = build_geometry(curve.scaled(rho))
    assert gs.scale_invariant_energy == pytest.approx(g0.scale_invariant_energy, rel=1e-10)


def test_errors_on_bad_input():
    pts = preset_curve("circle", {}, 32).points.copy()
    pts[5, 0] = np.nan
    with pytest.raises(NonFinite):
        build_geometry(CurveState(pts))
    with pytest.raises(NonFinite):
        resample_uniform_arclength(CurveState(pts))
    with pytest.raises(BadParams):
        CurveState(np.zeros((8, 2)))
    with pytest.raises(BadParams):
        CurveState(np.zeros((32, 3)))
    # cardioid sampled through its cusp: zero speed at t = pi
    t = 2 * np.pi * np.arange(64) / 64
    r = 1 + np.cos(t)
    with pytest.raises(NotImmersed):
        build_geometry(CurveState(np.column_stack([r * np.cos(t), r * np.sin(t)])))


def test_winding_numbers():
    assert winding_number(build_geometry(preset_curve("lemniscate", {}, 256))) == 0
    assert winding_number(build_geometry(preset_curve("omega_circle", {"omega": 3}, 128))) == 3
    g = build_geometry(preset_curve("circle", {}, 64))
    bent = dataclasses.replace(g, total_curvature=2 * np.pi * 1.3)
    with pytest.raises(AmbiguousWinding):
        winding_number(bent)


def test_resample_circle_is_identity():
    curve = preset_curve("circle", {"r": 2.0}, 128)
    out = resample_uniform_arclength(curve)
    assert np.max(np.abs(out.points - curve.points)) < 1e-12


def test_resample_ellipse_against_elliptic_integrals():
    a, b, n = 2.0, 1.0, 128
    curve = preset_curve("ellipse", {"a": a, "b": b}, n)
    out = resample_uniform_arclength(curve)
    perimeter = ellipse_perimeter(a, b)
    theta = np.mod(np.arctan2(out.points[:, 1] / b, out.points[:, 0] / a), 2 * np.pi)
    s = ellipse_arclength(a, b, theta)
    gap = np.mod(s - perimeter * np.arange(n) / n + perimeter / 2, perimeter) - perimeter / 2
    assert np.max(np.abs(gap)) < 1e-8 * perimeter
    g_in, g_out = build_geometry(curve), build_geometry(out)
    assert g_in.length == pytest.approx(perimeter, rel=1e-12)
    assert g_out.length == pytest.approx(perimeter, rel=1e-8)
    assert g_out.energy == pytest.approx(g_in.energy, rel=1e-8)
    assert g_out.winding == 1
    assert arclength_spacing_error(out) < 1e-8
    # samples lie on the original ellipse
    assert np.max(np.abs((out.points[:, 0] / a) ** 2 + (out.points[:, 1] / b) ** 2 - 1)) < 1e-10


def test_resample_to_other_size():
    curve = preset_curve("ellipse", {"a": 1.5, "b": 1.0}, 64)
    out = resample_uniform_arclength(curve, 128)
    assert out.n_samples == 128
    assert build_geometry(out).length == pytest.approx(build_geometry(curve).length, rel=1e-10)


def test_json_and_csv_round_trip(tmp_path):
    curve = preset_curve("limacon", {}, 64)
    assert np.array_equal(curve_from_json(curve_to_json(curve)).points, curve.points)
    assert np.array_equal(curve_from_csv(curve_to_csv(curve)).points, curve.points)
    for name in ("c.json", "c.csv"):
        save_curve(curve, tmp_path / name)
        assert np.array_equal(load_curve(tmp_path / name).points, curve.points)


def test_malformed_exchange_files():
    with pytest.raises(BadParams):
        curve_from_json('{"n": 3, "points": [[0, 0], [1, 0]]}')
    with pytest.raises(BadParams):
        curve_from_json("not json")
    with pytest.raises(BadParams):
        curve_from_csv("a,b\n1,2\n")
    with pytest.raises(BadParams):
        curve_from_csv("x,y\n1,zz\n")


def test_points_are_immutable():
    curve = preset_curve("circle", {}, 32)
    with pytest.raises(ValueError):
        curve.points[0, 0] = 5.0
