"""Fourier tools for periodic samples on the uniform grid u_i = 2*pi*i/N.

All routines act along axis 0, so a curve stored as an ``(N, 2)`` array is
differentiated coordinate-wise in one call.
"""

import numpy as np

# Coefficients below this fraction of the largest one are treated as rounding
# noise.  Without this, five arc-length derivatives of curvature amplify the
# FFT noise floor by roughly (N/2)**7.
CHOP_TOL = 1e-14


def wavenumbers(n):
    """Integer wavenumbers in FFT order, Nyquist included as -n/2 for even n."""
    return np.fft.fftfreq(n, d=1.0 / n)


def chop(coeffs, tol=CHOP_TOL):
    """Zero Fourier coefficients that sit at the rounding-noise floor.

    The threshold is relative to the largest coefficient magnitude (taken
    jointly over trailing axes, so both coordinates of a curve share it).
    """
    mag = np.abs(coeffs)
    if mag.ndim > 1:
        mag = np.sqrt(np.sum(mag**2, axis=tuple(range(1, mag.ndim))))
    top = mag.max() if mag.size else 0.0
    if top == 0.0:
        return coeffs
    keep = mag > tol * top
    shape = (-1,) + (1,) * (coeffs.ndim - 1)
    return coeffs * keep.reshape(shape)


def differentiate(f, order=1, tol=CHOP_TOL):
    """Spectral derivative d^order f / du^order of real periodic samples."""
    f = np.asarray(f, dtype=float)
    n = f.shape[0]
    fh = np.fft.fft(f, axis=0)
    if tol is not None:
        fh = chop(fh, tol)
    p = wavenumbers(n)
    sym = (1j * p) ** order
    if n % 2 == 0:
        sym[n // 2] = 0.0
    shape = (-1,) + (1,) * (f.ndim - 1)
    return np.fft.ifft(fh * sym.reshape(shape), axis=0).real


def derivatives(f, max_order, tol=CHOP_TOL):
    """Return ``[f', f'', ..., f^(max_order)]`` from a single forward FFT."""
    f = np.asarray(f, dtype=float)
    n = f.shape[0]
    fh = np.fft.fft(f, axis=0)
    if tol is not None:
        fh = chop(fh, tol)
    p = wavenumbers(n)
    shape = (-1,) + (1,) * (f.ndim - 1)
    out = []
    for order in range(1, max_order + 1):
        sym = (1j * p) ** order
        if n % 2 == 0:
            sym[n // 2] = 0.0
        out.append(np.fft.ifft(fh * sym.reshape(shape), axis=0).real)
    return out


def smooth(f, tol=CHOP_TOL):
    """Project samples onto their resolved Fourier modes."""
    f = np.asarray(f, dtype=float)
    return np.fft.ifft(chop(np.fft.fft(f, axis=0), tol), axis=0).real


def _symmetric_coefficients(f):
    """Normalised coefficients with the Nyquist mode split evenly between +-n/2."""
    n = f.shape[0]
    fh = np.fft.fft(f, axis=0) / n
    p = wavenumbers(n)
    if n % 2 == 0:
        nyq = fh[n // 2].copy()
        fh = np.concatenate([fh, nyq[None] * 0.5], axis=0)
        fh[n // 2] = nyq * 0.5
        p = np.concatenate([p, [n // 2]])
    return fh, p


def interpolate(f, u):
    """Evaluate the trigonometric interpolant of samples ``f`` at parameters ``u``.

    Direct summation, O(N * len(u)); fine for the grid sizes used here.
    """
    f = np.asarray(f, dtype=float)
    fh, p = _symmetric_coefficients(f)
    basis = np.exp(1j * np.outer(np.asarray(u, dtype=float), p))
    return (basis @ fh).real


def interpolate_with_derivative(f, u):
    """Interpolant and its first u-derivative at ``u``."""
    f = np.asarray(f, dtype=float)
    fh, p = _symmetric_coefficients(f)
    basis = np.exp(1j * np.outer(np.asarray(u, dtype=float), p))
    value = (basis @ fh).real
    shape = (-1,) + (1,) * (f.ndim - 1)
    slope = (basis @ (fh * (1j * p).reshape(shape))).real
    return value, slope


def periodic_antiderivative(f, u):
    """Evaluate F(u) = int_0^u f(w) dw for periodic samples ``f`` at points ``u``.

    The mean of ``f`` contributes the secular term mean * u; the oscillating
    part is integrated mode by mode.
    """
    f = np.asarray(f, dtype=float)
    u = np.asarray(u, dtype=float)
    fh, p = _symmetric_coefficients(f)
    mean = fh[0].real
    nz = p != 0
    gh = np.zeros_like(fh)
    gh[nz] = fh[nz] / (1j * p[nz])
    basis = np.exp(1j * np.outer(u, p))
    g = (basis @ gh).real
    g0 = gh.sum().real
    return mean * u + g - g0


def quadrature(f, weight=None):
    """Rectangle rule over one period in u; spectrally exact on the grid."""
    f = np.asarray(f, dtype=float)
    n = f.shape[0]
    if weight is not None:
        f = f * weight
    return float(np.sum(f) * (2.0 * np.pi / n))
