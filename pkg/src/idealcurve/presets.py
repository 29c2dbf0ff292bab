"""Catalogue of analytic initial curves, addressable by string id + parameters.

A preset spec string looks like ``"ellipse:a=1.1,b=1"``; an ``n=`` entry in
the parameter list overrides the sample count.
"""

from __future__ import annotations

import numpy as np

from .errors import BadParams, NotImmersed, UnknownPreset
from .geometry import CurveState, build_geometry

# id -> (parameter defaults, one-line description)
PRESETS = {
    "circle": ({"r": 1.0, "cx": 0.0, "cy": 0.0}, "round circle of radius r centred at (cx, cy)"),
    "omega_circle": ({"r": 1.0, "omega": 2}, "circle of radius r traversed omega times"),
    "ellipse": ({"a": 1.2, "b": 1.0}, "ellipse with semi-axes a (x) and b (y)"),
    "limacon": ({"a": 1.0, "b": 1.5},
                "limacon r = b + a cos(t); inner loop (winding 2) when a > b"),
    "lemniscate": ({"a": 1.0}, "figure-eight (a cos t, a sin t cos t), winding 0"),
    "fourier_perturbed_circle": ({"r": 1.0, "m": 2, "eps": 0.05, "omega": 1},
                                 "radius r + eps cos(m u) traced omega times"),
}

DEFAULT_N = 128
_INTEGER_PARAMS = {"m", "omega", "n"}


def _grid(n):
    return 2.0 * np.pi * np.arange(n) / n


def _polar(radius, angle):
    return np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])


def preset_curve(name: str, params: dict | None = None, n: int = DEFAULT_N) -> CurveState:
    """Sample the named preset at ``n`` uniform parameter values."""
    if name not in PRESETS:
        raise UnknownPreset(f"unknown preset {name!r}; known: {', '.join(PRESETS)}")
    defaults, _ = PRESETS[name]
    params = dict(params or {})
    unknown = set(params) - set(defaults)
    if unknown:
        raise BadParams(f"preset {name!r} has no parameter(s) {sorted(unknown)}")
    p = {**defaults, **params}
    n = int(n)
    if n < 16:
        raise BadParams("n must be at least 16")
    u = _grid(n)

    if name == "circle":
        _positive(p, "r")
        pts = _polar(p["r"], u) + [p["cx"], p["cy"]]
    elif name == "omega_circle":
        _positive(p, "r")
        omega = _positive_int(p, "omega")
        if 2 * omega >= n // 2:
            raise BadParams("omega too large for the sample count")
        pts = _polar(p["r"], omega * u)
    elif name == "ellipse":
        _positive(p, "a")
        _positive(p, "b")
        pts = np.column_stack([p["a"] * np.cos(u), p["b"] * np.sin(u)])
    elif name == "limacon":
        a, b = float(p["a"]), float(p["b"])
        if a <= 0 or b <= 0:
            raise BadParams("limacon needs a > 0 and b > 0")
        if abs(a - b) < 1e-3 * max(a, b):
            raise BadParams("a == b is a cardioid, which has a cusp")
        pts = _polar(b + a * np.cos(u), u)
    elif name == "lemniscate":
        _positive(p, "a")
        a = float(p["a"])
        pts = np.column_stack([a * np.cos(u), a * np.sin(u) * np.cos(u)])
    else:
        _positive(p, "r")
        omega = _positive_int(p, "omega")
        m = int(p["m"])
        if m < 0 or float(p["m"]) != m:
            raise BadParams("m must be a non-negative integer")
        eps = float(p["eps"])
        radius = p["r"] + eps * np.cos(m * u)
        if np.min(radius) <= 0:
            raise BadParams("perturbation makes the radius non-positive")
        pts = _polar(radius, omega * u)

    curve = CurveState(pts)
    try:
        build_geometry(curve)
    except NotImmersed as exc:
        raise BadParams(f"preset {name!r} with {p} is not immersed: {exc}") from exc
    return curve


def random_band_limited(rng, *, omega: int = 1, r: float = 1.0, eps: float = 0.05,
                        max_mode: int = 6, n: int = 128) -> CurveState:
    """Circle of radius ``r`` traced ``omega`` times with a random radial perturbation.

    The perturbation is a random trigonometric polynomial in the parameter
    with modes 2..max_mode, rescaled so its sup-norm equals ``eps * r``.
    """
    if max_mode < 2:
        raise BadParams("max_mode must be at least 2")
    u = _grid(n)
    modes = np.arange(2, max_mode + 1)
    coeff = rng.standard_normal((modes.size, 2)) / modes[:, None] ** 2
    bump = coeff[:, 0] @ np.cos(np.outer(modes, u)) + coeff[:, 1] @ np.sin(np.outer(modes, u))
    bump *= eps * r / np.max(np.abs(bump))
    return CurveState(_polar(r + bump, omega * u))


def parse_preset_spec(spec: str) -> tuple[str, dict, int]:
    """Split ``"name:k=v,k=v"`` into ``(name, params, n)``."""
    name, _, rest = spec.partition(":")
    name = name.strip()
    params = {}
    n = DEFAULT_N
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise BadParams(f"malformed preset parameter {item!r} (expected key=value)")
        key = key.strip()
        try:
            num = float(value)
        except ValueError as exc:
            raise BadParams(f"parameter {key!r} is not a number: {value!r}") from exc
        if key == "n":
            n = int(num)
        else:
            params[key] = int(num) if key in _INTEGER_PARAMS and num.is_integer() else num
    return name, params, n


def curve_from_spec(spec: str) -> CurveState:
    name, params, n = parse_preset_spec(spec)
    return preset_curve(name, params, n)


def _positive(p, key):
    if not float(p[key]) > 0:
        raise BadParams(f"parameter {key} must be positive, got {p[key]}")


def _positive_int(p, key):
    val = p[key]
    if float(val) != int(val) or int(val) < 1:
        raise BadParams(f"parameter {key} must be a positive integer, got {val}")
    return int(val)
