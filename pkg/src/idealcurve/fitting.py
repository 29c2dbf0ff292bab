"""Algebraic circle fit and log-linear decay fit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFit, InsufficientData, NonPositiveEnergy


@dataclass(frozen=True)
class CircleFit:
    center: tuple
    radius: float
    residual: float


def fit_circle(points) -> CircleFit:
    """Least-squares circle minimising sum((|p_i - c|^2 - r^2)^2).

    Writing |p|^2 = 2 c.p + (r^2 - |c|^2) makes the problem linear in
    (c_x, c_y, r^2 - |c|^2).  Coordinates are centred first for conditioning.
    The residual is rms(|p_i - c| - r) / r.
    """
    pts = np.asarray(getattr(points, "points", points), dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise DegenerateFit("need at least three planar points")
    shift = pts.mean(axis=0)
    q = pts - shift
    scale = np.sqrt(np.mean(np.sum(q**2, axis=1)))
    if not scale > 0:
        raise DegenerateFit("all points coincide")
    q = q / scale
    A = np.column_stack([2.0 * q, np.ones(len(q))])
    rhs = np.sum(q**2, axis=1)
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[-1] < 1e-10 * sv[0]:
        raise DegenerateFit("points are collinear")
    sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    c = sol[:2]
    r2 = sol[2] + c @ c
    if not r2 > 0:
        raise DegenerateFit("fitted radius is not real")
    r = np.sqrt(r2)
    dist = np.hypot(q[:, 0] - c[0], q[:, 1] - c[1])
    residual = float(np.sqrt(np.mean((dist - r) ** 2)) / r)
    center = c * scale + shift
    return CircleFit(center=(float(center[0]), float(center[1])), radius=float(r * scale),
                     residual=residual)


@dataclass(frozen=True)
class DecayFit:
    rate: float
    amplitude: float
    residual: float
    n_samples: int
    window: tuple


def fit_exponential(t, values, *, min_samples: int = 20) -> DecayFit:
    """Fit values ~ A exp(-c t) by least squares on (t, log values).

    ``residual`` is the rms of the log residuals, i.e. the typical relative
    deviation of the data from the fitted exponential.  The fit is done in
    time shifted to the window start and the amplitude mapped back, which
    keeps it exact under time translation.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(values, dtype=float)
    if t.size < min_samples:
        raise InsufficientData(f"need at least {min_samples} samples, got {t.size}")
    if np.any(~(y > 0)):
        raise NonPositiveEnergy("decay fit needs strictly positive values")
    t0 = t[0]
    tau = t - t0
    logy = np.log(y)
    A = np.column_stack([np.ones_like(tau), tau])
    (b0, b1), *_ = np.linalg.lstsq(A, logy, rcond=None)
    rate = -b1
    amplitude = np.exp(b0 + rate * t0)
    resid = logy - (b0 + b1 * tau)
    return DecayFit(rate=float(rate), amplitude=float(amplitude),
                    residual=float(np.sqrt(np.mean(resid**2))), n_samples=int(t.size),
                    window=(float(t[0]), float(t[-1])))
