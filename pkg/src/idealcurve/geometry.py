"""Closed planar curves sampled uniformly in parameter, and their intrinsic geometry.

A curve is stored as N samples gamma(u_i), u_i = 2*pi*i/N, of a periodic map
S^1 -> R^2.  Every derivative is spectral: d/du acts by multiplication with
i*p on the Fourier coefficients, and arc-length derivatives follow from the
recursion d/ds = v^{-1} d/du with v = |gamma_u|.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import spectral
from .errors import AmbiguousWinding, BadParams, NonFinite, NotImmersed

MIN_SAMPLES = 16
IMMERSION_RATIO = 1e-6
WINDING_TOL = 1e-4
# Highest arc-length derivative of curvature kept in the cache (k_{s^5}).
MAX_K_ORDER = 5


@dataclass(frozen=True, eq=False)
class CurveState:
    """N uniformly parametrised samples of a closed planar curve.

    ``points`` has shape ``(N, 2)``; row i is gamma(2*pi*i/N).  Indexing is
    periodic, so the first point is not repeated at the end.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float, copy=True)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise BadParams(f"points must have shape (N, 2), got {pts.shape}")
        if pts.shape[0] < MIN_SAMPLES:
            raise BadParams(f"need at least {MIN_SAMPLES} samples, got {pts.shape[0]}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n_samples(self) -> int:
        return self.points.shape[0]

    @property
    def closed(self) -> bool:
        return True

    @property
    def parameters(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_samples) / self.n_samples

    def scaled(self, rho: float) -> "CurveState":
        return CurveState(rho * self.points)

    def transformed(self, angle: float = 0.0, shift=(0.0, 0.0)) -> "CurveState":
        """Rotate by ``angle`` about the origin, then translate by ``shift``."""
        c, s = np.cos(angle), np.sin(angle)
        rot = np.array([[c, -s], [s, c]])
        return CurveState(self.points @ rot.T + np.asarray(shift, dtype=float))

    def __len__(self):
        return self.n_samples


@dataclass(frozen=True, eq=False)
class GeometryCache:
    """Intrinsic geometry of a :class:`CurveState`, all arrays per sample.

    ``k_derivs[l]`` holds the l-th arc-length derivative of curvature for
    l = 0..5, so ``k_derivs[0]`` is k itself.  The scale-invariant energy
    stored everywhere in this package is L^3 * E (not L^3 * ||k_s||^2 = 2 L^3 E).
    """

    curve: CurveState
    tangent: np.ndarray
    normal: np.ndarray
    speed: np.ndarray
    k_derivs: np.ndarray
    length: float
    total_curvature: float
    energy: float
    winding: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "winding", int(np.rint(self.total_curvature / (2.0 * np.pi))))

    @property
    def n_samples(self) -> int:
        return self.speed.shape[0]

    @property
    def du(self) -> float:
        return 2.0 * np.pi / self.n_samples

    @property
    def k(self):
        return self.k_derivs[0]

    @property
    def k_s(self):
        return self.k_derivs[1]

    @property
    def k_ss(self):
        return self.k_derivs[2]

    @property
    def k_s3(self):
        return self.k_derivs[3]

    @property
    def k_s4(self):
        return self.k_derivs[4]

    @property
    def k_s5(self):
        return self.k_derivs[5]

    @property
    def scale_invariant_energy(self) -> float:
        return self.length**3 * self.energy

    @property
    def winding_residual(self) -> float:
        return abs(self.total_curvature / (2.0 * np.pi) - self.winding)

    @property
    def min_speed(self) -> float:
        return float(self.speed.min())

    def integrate(self, f) -> float:
        """Arc-length integral of per-sample values ``f`` (int f ds)."""
        return spectral.quadrature(f, self.speed)

    def l2_norm_sq(self, f) -> float:
        return self.integrate(np.asarray(f) ** 2)


def _check_finite(points):
    if not np.all(np.isfinite(points)):
        raise NonFinite("curve contains NaN or infinite samples")


def build_geometry(curve: CurveState) -> GeometryCache:
    """Compute tangent, normal, speed, curvature derivatives, L, E and winding.

    Curvature is k = <gamma_ss, nu> with nu = (-tau_2, tau_1), i.e.
    k = (x_u y_uu - y_u x_uu) / v^3.  For a counter-clockwise circle of radius r
    this gives k = 1/r and an inward normal.
    """
    pts = curve.points
    _check_finite(pts)
    d1, d2 = spectral.derivatives(pts, 2)
    speed = np.hypot(d1[:, 0], d1[:, 1])
    mean_speed = speed.mean()
    if not mean_speed > 0 or speed.min() < IMMERSION_RATIO * mean_speed:
        raise NotImmersed(
            f"min speed {speed.min():.3e} below {IMMERSION_RATIO:g} x mean speed {mean_speed:.3e}"
        )
    tangent = d1 / speed[:, None]
    normal = np.column_stack([-tangent[:, 1], tangent[:, 0]])
    cross = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]

    k_derivs = np.empty((MAX_K_ORDER + 1, pts.shape[0]))
    k_derivs[0] = cross / speed**3
    for order in range(1, MAX_K_ORDER + 1):
        k_derivs[order] = spectral.differentiate(k_derivs[order - 1]) / speed

    length = spectral.quadrature(speed)
    total_curvature = spectral.quadrature(k_derivs[0], speed)
    energy = 0.5 * spectral.quadrature(k_derivs[1] ** 2, speed)
    if not (np.isfinite(energy) and np.isfinite(length)):
        raise NonFinite("geometry evaluation produced non-finite values")
    for arr in (tangent, normal, speed, k_derivs):
        arr.setflags(write=False)
    return GeometryCache(
        curve=curve,
        tangent=tangent,
        normal=normal,
        speed=speed,
        k_derivs=k_derivs,
        length=float(length),
        total_curvature=float(total_curvature),
        energy=float(energy),
    )


def winding_number(cache: GeometryCache, tol: float = WINDING_TOL) -> int:
    """Return round(int k ds / 2 pi), refusing residuals above ``tol``."""
    if cache.winding_residual > tol:
        raise AmbiguousWinding(
            f"total curvature / 2pi = {cache.total_curvature / (2 * np.pi):.6f} "
            f"is not within {tol:g} of an integer"
        )
    return cache.winding


def resample_uniform_arclength(curve: CurveState, n_out: int | None = None, *,
                               tol: float = 1e-13, max_iter: int = 50) -> CurveState:
    """Resample onto ``n_out`` points equally spaced in arc length.

    The new samples lie on the trigonometric interpolant of the input.  The
    first output point is gamma(0), so a curve that is already uniform maps
    to itself.  Parameter values are found by Newton iteration on the
    spectrally integrated arc-length function s(u).
    """
    cache = build_geometry(curve)
    n_out = curve.n_samples if n_out is None else int(n_out)
    if n_out < MIN_SAMPLES:
        raise BadParams(f"n_out must be at least {MIN_SAMPLES}")
    speed = cache.speed
    length = cache.length
    targets = length * np.arange(n_out) / n_out
    u = 2.0 * np.pi * np.arange(n_out) / n_out
    for _ in range(max_iter):
        s_u = spectral.periodic_antiderivative(speed, u)
        v_u = spectral.interpolate(speed, u)
        delta = (s_u - targets) / v_u
        u = u - delta
        if np.max(np.abs(delta)) < tol:
            break
    return CurveState(spectral.interpolate(curve.points, u))


def arclength_spacing_error(curve: CurveState) -> float:
    """Max deviation of consecutive arc-length gaps from L/N, relative to L."""
    cache = build_geometry(curve)
    n = curve.n_samples
    u = curve.parameters
    s = spectral.periodic_antiderivative(cache.speed, u)
    gaps = np.diff(np.append(s, cache.length))
    return float(np.max(np.abs(gaps - cache.length / n)) / cache.length)


# -- curve exchange formats --------------------------------------------------

def curve_to_json(curve: CurveState) -> str:
    return json.dumps({"n": curve.n_samples, "points": curve.points.tolist()})


def curve_from_json(text: str) -> CurveState:
    try:
        payload = json.loads(text)
        pts = np.asarray(payload["points"], dtype=float)
    except (ValueError, KeyError, TypeError) as exc:
        raise BadParams(f"malformed curve JSON: {exc}") from exc
    if "n" in payload and int(payload["n"]) != pts.shape[0]:
        raise BadParams(f"curve JSON declares n={payload['n']} but has {pts.shape[0]} points")
    return CurveState(pts)


def curve_to_csv(curve: CurveState) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x", "y"])
    for x, y in curve.points:
        writer.writerow([repr(float(x)), repr(float(y))])
    return buf.getvalue()


def curve_from_csv(text: str) -> CurveState:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["x", "y"]:
        raise BadParams("curve CSV must start with header 'x,y'")
    try:
        rows = [(float(a), float(b)) for a, b in (r for r in reader if r)]
    except ValueError as exc:
        raise BadParams(f"malformed curve CSV: {exc}") from exc
    return CurveState(np.array(rows, dtype=float).reshape(-1, 2))


def load_curve(path) -> CurveState:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".csv":
        return curve_from_csv(text)
    return curve_from_json(text)


def save_curve(curve: CurveState, path) -> None:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        path.write_text(curve_to_csv(curve))
    else:
        path.write_text(curve_to_json(curve))
