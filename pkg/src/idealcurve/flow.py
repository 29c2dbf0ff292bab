"""The L2-gradient flow of E = 1/2 int k_s^2 ds and its time integrators.

The normal velocity is the Euler-Lagrange operator

    K = k_{s^4} + k^2 k_ss - 1/2 k k_s^2,      d/dt gamma = K nu,

with nu the (inward, for counter-clockwise curves) unit normal.  Along the
flow dE/dt = -||K||_2^2.

Two schemes are provided.  ``imex_spectral`` writes the curve as z = x + iy
and splits K nu = S + R, where the stiff part S is a sixth arc-length
derivative with the speed frozen at v = L/2pi, taken in the frame rotating
with the winding number w: diagonal in Fourier space with symbol
-((q - w)/v)^6.  S is implicit, R explicit.  Algebraically the step reduces to

    z_hat_new = z_hat + dt * (K nu)_hat / (1 + dt ((q - w)/v)^6),

which is what is evaluated (the form never differentiates z six times, so
nothing amplifies its rounding noise).  ``explicit_rk4`` is classical RK4
on d/dt gamma = K nu and exists to cross-check the IMEX scheme at tiny dt.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Callable

import numpy as np

from . import spectral
from .errors import (BadParams, ImmersionLost, IdealCurveError, NonFinite, NotImmersed,
                     StepFloorReached)
from .fitting import fit_circle
from .geometry import CurveState, GeometryCache, build_geometry, resample_uniform_arclength

log = logging.getLogger(__name__)

SCHEMES = ("imex_spectral", "explicit_rk4")
DIAGNOSTICS_HEADER = ("t", "L", "E", "L3E", "K_l2sq", "k_sup", "Q_blowup",
                      "circle_residual", "min_speed")


@dataclass(frozen=True, eq=False)
class ElOperatorField:
    values: np.ndarray
    l2_norm_sq: float


def el_operator(cache: GeometryCache) -> ElOperatorField:
    """K = k_{s^4} + k^2 k_ss - 1/2 k k_s^2 per sample, with int K^2 ds."""
    k, k_s, k_ss, k_s4 = cache.k, cache.k_s, cache.k_ss, cache.k_s4
    values = k_s4 + k**2 * k_ss - 0.5 * k * k_s**2
    values.setflags(write=False)
    return ElOperatorField(values=values, l2_norm_sq=cache.l2_norm_sq(values))


def normal_perturbation(curve: CurveState, v_field, h: float,
                        cache: GeometryCache | None = None) -> CurveState:
    """The curve gamma + h V nu."""
    cache = build_geometry(curve) if cache is None else cache
    v_field = np.asarray(v_field, dtype=float)
    return CurveState(curve.points + h * v_field[:, None] * cache.normal)


def directional_derivative(cache: GeometryCache, v_field) -> float:
    """First variation of E in the normal direction V: -int V K ds."""
    field_ = el_operator(cache)
    return -cache.integrate(np.asarray(v_field, dtype=float) * field_.values)


@dataclass(frozen=True)
class VariationReport:
    """Forward-difference check of the first variation of E (and of L).

    ``deviations[i]`` is (E[gamma + h_i V nu] - E[gamma]) / h_i minus the
    analytic value -int V K ds.  ``extrapolated_floor`` is the smallest
    magnitude of the linear h -> 0 extrapolation over consecutive pairs of h,
    relative to ``scale``; for a first-order difference it measures how far
    the deviations settle from zero once the O(h) term is removed.
    """

    h: tuple
    reference: float
    estimates: tuple
    deviations: tuple
    scale: float
    orders: tuple
    extrapolated_floor: float
    length_reference: float
    length_estimates: tuple

    @property
    def relative_deviations(self):
        return tuple(abs(d) / self.scale for d in self.deviations)


def first_variation_check(curve: CurveState, v_field, h_list) -> VariationReport:
    """Compare difference quotients of E along gamma + h V nu with -int V K ds.

    ``v_field`` must be band-limited to wavenumbers <= N/8 in the parameter;
    ``h_list`` is a decreasing list of step sizes.
    """
    cache = build_geometry(curve)
    n = curve.n_samples
    v_field = np.asarray(v_field, dtype=float)
    if v_field.shape != (n,):
        raise BadParams(f"v_field must have shape ({n},)")
    vh = np.fft.fft(v_field)
    high = np.abs(spectral.wavenumbers(n)) > n // 8
    if np.sum(np.abs(vh[high]) ** 2) > 1e-20 * max(np.sum(np.abs(vh) ** 2), 1e-300):
        raise BadParams("v_field is not band-limited to p <= N/8")
    h_list = [float(h) for h in h_list]
    if any(b >= a for a, b in zip(h_list, h_list[1:])):
        raise BadParams("h_list must be strictly decreasing")

    el = el_operator(cache)
    reference = -cache.integrate(v_field * el.values)
    length_reference = -cache.integrate(cache.k * v_field)
    scale = max(abs(reference), np.sqrt(cache.l2_norm_sq(v_field) * el.l2_norm_sq), 1e-300)

    estimates, length_estimates = [], []
    for h in h_list:
        try:
            moved = build_geometry(normal_perturbation(curve, v_field, h, cache))
        except NotImmersed as exc:
            raise ImmersionLost(f"perturbation with h={h:g} broke immersion") from exc
        estimates.append((moved.energy - cache.energy) / h)
        length_estimates.append((moved.length - cache.length) / h)
    deviations = [e - reference for e in estimates]

    orders = []
    floor = np.inf
    for (h1, d1), (h2, d2) in zip(zip(h_list, deviations), zip(h_list[1:], deviations[1:])):
        if d1 != 0 and d2 != 0:
            orders.append(float(np.log(abs(d1) / abs(d2)) / np.log(h1 / h2)))
        else:
            orders.append(float("nan"))
        extrap = (h1 * d2 - h2 * d1) / (h1 - h2)
        floor = min(floor, abs(extrap) / scale)
    if not np.isfinite(floor):
        floor = abs(deviations[-1]) / scale
    return VariationReport(
        h=tuple(h_list), reference=float(reference), estimates=tuple(estimates),
        deviations=tuple(deviations), scale=float(scale), orders=tuple(orders),
        extrapolated_floor=float(floor), length_reference=float(length_reference),
        length_estimates=tuple(length_estimates),
    )


@dataclass(frozen=True)
class FlowConfig:
    """Scheme and controller parameters.

    Times are in units of length^6; the defaults suit curves of length O(1-10).
    ``energy_floor`` is an allowance in scale-invariant units: a step may
    raise E by at most tol * dt * ||K||^2 + energy_floor / L^3.
    """

    dt_initial: float = 1e-4
    dt_min: float = 1e-14
    dt_max: float = 1e-2
    scheme: str = "imex_spectral"
    energy_increase_tolerance: float = 0.0
    energy_floor: float = 1e-14
    resample_every: int = 10
    t_end: float = 1.0
    snapshot_stride: int = 1
    small_energy_threshold: float = 10.0
    dt_growth: float = 1.25
    max_steps: int = 200_000
    tol_conv: float = 1e-10
    tol_circ: float = 1e-6
    converge_consecutive: int = 10
    stop_on_convergence: bool = True

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise BadParams(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not (0 < self.dt_min <= self.dt_initial <= self.dt_max):
            raise BadParams("need 0 < dt_min <= dt_initial <= dt_max")
        if not self.small_energy_threshold > 0:
            raise BadParams("small_energy_threshold must be positive")
        if self.snapshot_stride < 1 or self.resample_every < 0:
            raise BadParams("snapshot_stride >= 1 and resample_every >= 0 required")
        if self.dt_growth < 1:
            raise BadParams("dt_growth must be >= 1")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise BadParams(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True, eq=False)
class FlowState:
    curve: CurveState
    cache: GeometryCache
    el: ElOperatorField
    t: float = 0.0
    step: int = 0
    dissipation: float = 0.0
    dt: float = 0.0

    @classmethod
    def initial(cls, curve: CurveState, t: float = 0.0, dissipation: float = 0.0,
                dt: float = 0.0, step: int = 0) -> "FlowState":
        cache = build_geometry(curve)
        return cls(curve=curve, cache=cache, el=el_operator(cache), t=t, step=step,
                   dissipation=dissipation, dt=dt)

    @property
    def energy(self) -> float:
        return self.cache.energy

    @property
    def balance_residual(self) -> float:
        """E(t) + D(t); compare against E(0) for the dissipation balance."""
        return self.cache.energy + self.dissipation


def _imex_update(curve, cache, el, dt):
    # The stiff symbol acts on z = x + iy with wavenumbers shifted by the
    # winding number, so radial mode p of an omega-circle (complex modes
    # omega +- p) sees exactly (p/v)^6.  Unshifted Cartesian symbols leave
    # low radial modes under-damped and the step only conditionally stable.
    vel = el.values * (cache.normal[:, 0] + 1j * cache.normal[:, 1])
    n = curve.n_samples
    vbar = cache.length / (2.0 * np.pi)
    q = spectral.wavenumbers(n) - cache.winding
    damp = 1.0 / (1.0 + dt * (q / vbar) ** 6)
    incr = np.fft.ifft(np.fft.fft(vel) * damp)
    return curve.points + dt * np.column_stack([incr.real, incr.imag])


def _velocity(points):
    cache = build_geometry(CurveState(points))
    return el_operator(cache).values[:, None] * cache.normal


def _rk4_update(curve, cache, el, dt):
    x = curve.points
    k1 = el.values[:, None] * cache.normal
    k2 = _velocity(x + 0.5 * dt * k1)
    k3 = _velocity(x + 0.5 * dt * k2)
    k4 = _velocity(x + dt * k3)
    return x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


_UPDATES = {"imex_spectral": _imex_update, "explicit_rk4": _rk4_update}


def _try_step(state: FlowState, config: FlowConfig, dt: float):
    """Attempt one step of size dt; return (new_state, None) or (None, reason)."""
    update = _UPDATES[config.scheme]
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            pts = update(state.curve, state.cache, state.el, dt)
        if not np.all(np.isfinite(pts)):
            return None, "nonfinite"
        curve = CurveState(pts)
        cache = build_geometry(curve)
        el = el_operator(cache)
    except NotImmersed:
        return None, "immersion"
    except NonFinite:
        return None, "nonfinite"
    allowance = (config.energy_increase_tolerance * dt * state.el.l2_norm_sq
                 + config.energy_floor / cache.length**3)
    if not cache.energy <= state.cache.energy + allowance:
        return None, "energy"
    if cache.winding != state.cache.winding:
        return None, "immersion"
    dissipation = state.dissipation + 0.5 * dt * (state.el.l2_norm_sq + el.l2_norm_sq)
    new = FlowState(curve=curve, cache=cache, el=el, t=state.t + dt, step=state.step + 1,
                    dissipation=dissipation, dt=dt)
    return new, None


def step(state: FlowState, config: FlowConfig, dt: float | None = None) -> FlowState:
    """Advance by one accepted step, halving dt on rejection.

    ``dt`` defaults to the state's last accepted dt grown by
    ``config.dt_growth`` (or ``config.dt_initial`` on the first step), capped
    at ``config.dt_max``.  A step is rejected when it produces non-finite
    values, loses immersion, changes the winding number, or raises E by more
    than the configured allowance.
    """
    if dt is None:
        dt = config.dt_initial if state.dt <= 0 else state.dt * config.dt_growth
        dt = min(dt, config.dt_max)
    last_reason = None
    while dt >= config.dt_min:
        new, reason = _try_step(state, config, dt)
        if new is not None:
            if config.resample_every and new.step % config.resample_every == 0:
                new = _resampled(new)
            return new
        last_reason = reason
        log.debug("rejected dt=%.3e at t=%.6e (%s)", dt, state.t, reason)
        dt *= 0.5
    if last_reason == "immersion":
        raise ImmersionLost(f"immersion lost at t={state.t:.6e}; dt fell below {config.dt_min:g}")
    raise StepFloorReached(
        f"no acceptable step with dt >= {config.dt_min:g} at t={state.t:.6e} (last: {last_reason})"
    )


def _resampled(state: FlowState) -> FlowState:
    try:
        curve = resample_uniform_arclength(state.curve)
    except NotImmersed as exc:
        raise ImmersionLost(str(exc)) from exc
    cache = build_geometry(curve)
    return replace(state, curve=curve, cache=cache, el=el_operator(cache))


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    L: float
    E: float
    L3E: float
    K_l2sq: float
    k_sup: float
    Q_blowup: float
    circle_residual: float
    min_speed: float
    step: int = 0
    winding: int = 0

    def row(self):
        return [getattr(self, name) for name in DIAGNOSTICS_HEADER]


def diagnose(state: FlowState) -> DiagnosticsRecord:
    cache = state.cache
    try:
        residual = fit_circle(state.curve.points).residual
    except IdealCurveError:
        residual = float("inf")
    return DiagnosticsRecord(
        t=state.t, L=cache.length, E=cache.energy, L3E=cache.scale_invariant_energy,
        K_l2sq=state.el.l2_norm_sq, k_sup=float(np.max(np.abs(cache.k))),
        Q_blowup=cache.length + cache.l2_norm_sq(cache.k_s5), circle_residual=residual,
        min_speed=cache.min_speed, step=state.step, winding=cache.winding,
    )


def is_stationary(record: DiagnosticsRecord, config: FlowConfig) -> bool:
    return (record.K_l2sq * record.L**9 < config.tol_conv
            and record.circle_residual < config.tol_circ)


@dataclass
class RunResult:
    records: list
    state: FlowState
    termination: str
    converged: bool
    message: str = ""
    converged_at: float | None = None


def run(initial: CurveState | FlowState, config: FlowConfig,
        on_record: Callable[[DiagnosticsRecord], None] | None = None,
        on_snapshot: Callable[[FlowState], None] | None = None) -> RunResult:
    """Integrate until t_end, convergence, or a controller failure.

    Emits a record at t=0 and then every ``snapshot_stride`` accepted steps.
    Convergence is declared once ``converge_consecutive`` successive records
    satisfy L^9 ||K||^2 < tol_conv and circle residual < tol_circ.  Failures
    do not raise: they end the run with termination ``step_floor`` or
    ``immersion_lost`` and the last good state.
    """
    state = initial if isinstance(initial, FlowState) else FlowState.initial(initial)
    if config.resample_every and state.step == 0:
        # the stiff symbol assumes uniform speed, so start from an arc-length parametrisation
        state = _resampled(state)
    records = []
    streak = 0
    converged_at = None

    def emit(s):
        nonlocal streak, converged_at
        rec = diagnose(s)
        records.append(rec)
        if on_record is not None:
            on_record(rec)
        if on_snapshot is not None:
            on_snapshot(s)
        streak = streak + 1 if is_stationary(rec, config) else 0
        if streak >= config.converge_consecutive and converged_at is None:
            converged_at = rec.t
        return rec

    emit(state)
    termination, message = "t_end", ""
    next_dt = config.dt_initial if state.dt <= 0 else min(state.dt * config.dt_growth,
                                                          config.dt_max)
    while True:
        if converged_at is not None and config.stop_on_convergence:
            break
        remaining = config.t_end - state.t
        if remaining <= 1e-14 * max(1.0, abs(config.t_end)):
            break
        if state.step >= config.max_steps:
            termination, message = "max_steps", f"stopped after {state.step} steps"
            break
        take = min(next_dt, remaining)
        try:
            state = step(state, config, dt=take)
        except StepFloorReached as exc:
            termination, message = "step_floor", str(exc)
            break
        except ImmersionLost as exc:
            termination, message = "immersion_lost", str(exc)
            break
        if state.dt < take or take == next_dt:
            # rejected at least once, or a full-size step: grow from what was accepted
            next_dt = min(state.dt * config.dt_growth, config.dt_max)
        if state.step % config.snapshot_stride == 0:
            emit(state)
    if not records or records[-1].step != state.step:
        emit(state)
    if converged_at is not None:
        termination = "converged"
    return RunResult(records=records, state=state, termination=termination,
                     converged=converged_at is not None, message=message,
                     converged_at=converged_at)


def diagnostics_csv(records) -> str:
    """Fixed-header CSV, floats at 17 significant digits."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(DIAGNOSTICS_HEADER)
    for rec in records:
        writer.writerow([f"{x:.17g}" for x in rec.row()])
    return buf.getvalue()


def read_diagnostics_csv(text: str) -> list:
    reader = csv.reader(io.StringIO(text))
    header = tuple(next(reader))
    if header != DIAGNOSTICS_HEADER:
        raise BadParams(f"unexpected diagnostics header {header}")
    out = []
    for row in reader:
        if row:
            vals = dict(zip(header, map(float, row)))
            out.append(DiagnosticsRecord(**vals))
    return out
