"""Gradient flow of the curvature-derivative energy E = 1/2 int k_s^2 ds on closed plane curves.

The submodules are:

geometry    curves, spectral curvature derivatives, arc-length resampling, I/O
analysis    arc-length Fourier coefficients of curvature and the mode-gap check
flow        the Euler-Lagrange operator, time steppers, runs and diagnostics
validators  inequality checks over curves and trajectories
checkpoint  binary flow-state checkpoints
svg         per-frame SVG rendering
cli         the ``idealcurve`` command
"""

__version__ = "0.1.0"

from .errors import IdealCurveError  # noqa: E402
from .geometry import CurveState, GeometryCache, build_geometry  # noqa: E402
from .presets import preset_curve  # noqa: E402
from .flow import FlowConfig, FlowState, el_operator, run  # noqa: E402

__all__ = ["__version__", "IdealCurveError", "CurveState", "GeometryCache", "build_geometry",
           "preset_curve", "FlowConfig", "FlowState", "el_operator", "run"]
