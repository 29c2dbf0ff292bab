"""Fourier analysis of curvature in arc length and the linearised operator K0.

Around an omega-circle of length L the flow linearises to

    K0 = k_{s^4} + (2 pi omega / L)^2 k_ss,

which acts on the arc-length Fourier series k = sum_p a_p exp(2 pi i p s / L)
by the multiplier (2 pi / L)^4 p^2 (p^2 - omega^2).  The modes p = 0 and
|p| = omega are its kernel; the rest are bounded below by a gap constant
C_omega relative to the top-order quantity P = int k_{s^4}^2 ds.
"""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from dataclasses import asdict, dataclass

import numpy as np

from .errors import BadWinding, TruncationTooHigh
from .geometry import GeometryCache, build_geometry, resample_uniform_arclength


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Curvature coefficients a_p = (1/L) int k exp(-2 pi i p s/L) ds, |p| <= p_max.

    ``coefficients[p + p_max]`` is a_p.  The sign of the exponent is the
    analysis convention matching k = sum_p a_p exp(+2 pi i p s/L); moduli are
    the same either way.
    """

    coefficients: np.ndarray
    length: float
    winding: int
    p_max: int

    @property
    def orders(self):
        return np.arange(-self.p_max, self.p_max + 1)

    def coefficient(self, p: int) -> complex:
        if abs(p) > self.p_max:
            raise TruncationTooHigh(f"|p|={abs(p)} exceeds p_max={self.p_max}")
        return complex(self.coefficients[p + self.p_max])

    def parseval(self) -> float:
        """L * sum |a_p|^2, which approximates int k^2 ds."""
        return float(self.length * np.sum(np.abs(self.coefficients) ** 2))

    def weighted_sum(self, multiplier) -> float:
        """L * sum_p multiplier(p) |a_p|^2."""
        p = self.orders.astype(float)
        return float(self.length * np.sum(multiplier(p) * np.abs(self.coefficients) ** 2))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["p", "re", "im"])
        for p, a in zip(self.orders, self.coefficients):
            writer.writerow([int(p), f"{a.real:.17g}", f"{a.imag:.17g}"])
        return buf.getvalue()


def decompose_curvature(cache: GeometryCache, p_max: int | None = None) -> SpectralDecomposition:
    """Fourier coefficients of curvature with respect to arc length.

    The curve is first resampled to uniform arc length so that the discrete
    transform realises the arc-length integral directly.  ``p_max`` defaults
    to N/4 and may not exceed N/2 - 1.
    """
    n = cache.n_samples
    if p_max is None:
        p_max = n // 4
    p_max = int(p_max)
    if p_max < 0 or p_max > n // 2 - 1:
        raise TruncationTooHigh(f"p_max={p_max} outside [0, {n // 2 - 1}] for N={n}")
    uniform = build_geometry(resample_uniform_arclength(cache.curve))
    ah = np.fft.fft(uniform.k) / n
    idx = np.arange(-p_max, p_max + 1) % n
    coeffs = ah[idx]
    coeffs.setflags(write=False)
    return SpectralDecomposition(coefficients=coeffs, length=uniform.length,
                                 winding=uniform.winding, p_max=p_max)


def k0_multiplier(p, length: float, omega: int):
    """Squared Fourier multiplier of K0 on mode p, times nothing else."""
    return (2.0 * np.pi / length) ** 8 * p**4 * (p**2 - omega**2) ** 2


def k0_operator(cache: GeometryCache) -> np.ndarray:
    """K0 = k_{s^4} + (2 pi omega / L)^2 k_ss sampled on the curve."""
    omega = cache.winding
    values = cache.k_s4 + (2.0 * np.pi * omega / cache.length) ** 2 * cache.k_ss
    values.setflags(write=False)
    return values


def k0_norm_sq_spectral(decomp: SpectralDecomposition, omega: int | None = None) -> float:
    """sum_p |a_p|^2 (4 pi^2/L^2)^4 p^4 (p^2 - omega^2)^2 L."""
    omega = decomp.winding if omega is None else omega
    return decomp.weighted_sum(lambda p: k0_multiplier(p, decomp.length, omega))


def top_order_spectral(decomp: SpectralDecomposition) -> float:
    """P = int k_{s^4}^2 ds from the spectrum: sum (4 pi^2/L^2)^4 p^8 |a_p|^2 L."""
    return decomp.weighted_sum(lambda p: (2.0 * np.pi * p / decomp.length) ** 8)


def c_omega(omega: int) -> float:
    """Gap constant min over |p| not in {0, omega} of (1 - omega^2/p^2)^2.

    The minimum is attained at a neighbour p = omega +- 1.  For omega = 1 the
    neighbour p = 0 is excluded from the sum, so only p = 2 remains.
    """
    if int(omega) != omega or omega <= 0:
        raise BadWinding(f"C_omega needs a positive integer winding, got {omega}")
    omega = int(omega)
    # exact rational arithmetic, so e.g. omega = 2 returns the double nearest 25/81
    candidates = [(1 - Fraction(omega**2, (omega + 1) ** 2)) ** 2]
    if omega > 1:
        candidates.append((1 - Fraction(omega**2, (omega - 1) ** 2)) ** 2)
    return float(min(candidates))


@dataclass(frozen=True)
class ModeGapReport:
    """Both sides of int K0^2 ds >= C_omega P - 4^5 omega^8 pi^8 L^-3 E^2.

    ``a_omega`` is max(|a_omega|, |a_-omega|), checked separately against the
    intermediate bound 2 L^2 E.
    """

    lhs: float
    top_order: float
    c_omega: float
    slack: float
    energy: float
    length: float
    omega: int
    a_omega: float
    a_bound: float
    tolerance: float

    @property
    def rhs(self) -> float:
        return self.c_omega * self.top_order - 4.0**5 * self.omega**8 * np.pi**8 * self.energy**2 / self.length**3

    @property
    def passed(self) -> bool:
        return self.slack >= -self.tolerance

    @property
    def a_bound_holds(self) -> bool:
        return self.a_omega <= self.a_bound * (1.0 + 1e-12) + 1e-300

    def to_dict(self):
        d = asdict(self)
        d.update(rhs=self.rhs, passed=self.passed, a_bound_holds=self.a_bound_holds)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def mode_gap_report(cache: GeometryCache, rtol: float = 1e-8) -> ModeGapReport:
    """Evaluate the Fourier mode-gap inequality on one curve.

    Orientation is irrelevant (only omega^2 and |a_{+-omega}| enter), so the
    absolute winding number is used; winding zero raises BadWinding.
    """
    omega = abs(cache.winding)
    c = c_omega(omega)
    L, E = cache.length, cache.energy
    lhs = cache.l2_norm_sq((cache.k_s4 + (2.0 * np.pi * omega / L) ** 2 * cache.k_ss))
    top = cache.l2_norm_sq(cache.k_s4)
    rhs = c * top - 4.0**5 * omega**8 * np.pi**8 * E**2 / L**3
    decomp = decompose_curvature(cache, p_max=max(omega, 1))
    a_omega = max(abs(decomp.coefficient(omega)), abs(decomp.coefficient(-omega)))
    return ModeGapReport(lhs=lhs, top_order=top, c_omega=c, slack=lhs - rhs, energy=E, length=L,
                         omega=omega, a_omega=a_omega, a_bound=2.0 * L**2 * E,
                         tolerance=rtol * max(1.0, c * top))
