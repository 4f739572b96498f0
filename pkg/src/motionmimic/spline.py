"""Natural cubic spline interpolation through per-joint knots.

Each spline is a C2 piecewise cubic through the knots with zero second
derivative at both end knots.  The tridiagonal system for the interior
second derivatives is solved with the Thomas algorithm; strictly
increasing knot times make the system diagonally dominant, so no
pivoting is needed.
"""

import numpy as np

from .errors import OutOfRangeError, ValidationError


class CubicSpline:
    """Piecewise cubic a + b*d + c*d^2 + e*d^3 with d = t - t_segment_start.

    Immutable after construction; use :func:`build_spline` to create one.
    """

    def __init__(self, knot_times: np.ndarray, coeffs: np.ndarray):
        self.knot_times = knot_times
        self.coeffs = coeffs  # (segments, 4) columns a, b, c, d

    @property
    def n_segments(self) -> int:
        return len(self.knot_times) - 1

    def _segments(self, t):
        idx = np.searchsorted(self.knot_times, t, side="right") - 1
        return np.clip(idx, 0, self.n_segments - 1)

    def _check_range(self, t):
        lo, hi = self.knot_times[0], self.knot_times[-1]
        if np.any(t < lo) or np.any(t > hi):
            raise OutOfRangeError(f"query time outside knot range [{lo}, {hi}]")

    def eval(self, t):
        """Spline value at time t (scalar or array)."""
        ts = np.asarray(t, dtype=float)
        self._check_range(ts)
        i = self._segments(ts)
        d = ts - self.knot_times[i]
        a, b, c, e = (self.coeffs[i, k] for k in range(4))
        out = a + d * (b + d * (c + d * e))
        return float(out) if np.ndim(t) == 0 else out

    def eval_derivatives(self, t):
        """First and second derivative at time t: (velocity, acceleration)."""
        ts = np.asarray(t, dtype=float)
        self._check_range(ts)
        i = self._segments(ts)
        d = ts - self.knot_times[i]
        b, c, e = (self.coeffs[i, k] for k in range(1, 4))
        vel = b + d * (2.0 * c + 3.0 * e * d)
        acc = 2.0 * c + 6.0 * e * d
        if np.ndim(t) == 0:
            return float(vel), float(acc)
        return vel, acc


def build_spline(times, values) -> CubicSpline:
    """Build the natural cubic spline through (times[i], values[i]).

    Requires at least 2 knots, strictly increasing times, and finite
    values; raises ValidationError otherwise.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if t.ndim != 1 or y.ndim != 1 or t.shape != y.shape:
        raise ValidationError("knot times and values must be 1-D and equally long")
    if t.size < 2:
        raise ValidationError("spline needs at least 2 knots")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
        raise ValidationError("knot times and values must be finite")
    h = np.diff(t)
    if np.any(h <= 0):
        raise ValidationError("knot times must be strictly increasing")

    m = _interior_second_derivatives(t, y, h)
    a = y[:-1].copy()
    b = np.diff(y) / h - h * (2.0 * m[:-1] + m[1:]) / 6.0
    c = m[:-1] / 2.0
    d = (m[1:] - m[:-1]) / (6.0 * h)
    return CubicSpline(t.copy(), np.stack([a, b, c, d], axis=1))


def _interior_second_derivatives(t, y, h):
    """Second derivatives at the knots, natural ends pinned to zero."""
    n = t.size
    m = np.zeros(n)
    if n == 2:
        return m
    diag = 2.0 * (h[:-1] + h[1:])
    band = h[1:-1]  # sub- and super-diagonal entries coincide
    rhs = 6.0 * np.diff(np.diff(y) / h)
    for r in range(1, n - 2):
        w = band[r - 1] / diag[r - 1]
        diag[r] -= w * band[r - 1]
        rhs[r] -= w * rhs[r - 1]
    m[n - 2] = rhs[n - 3] / diag[n - 3]
    for r in range(n - 4, -1, -1):
        m[r + 1] = (rhs[r] - band[r] * m[r + 2]) / diag[r]
    return m
