"""Input histories ``u_t(theta) = u(t + theta)`` and integrals over the window.

The initial segment on ``[-h, 0)`` is user data (piecewise constant table,
constant, or callable).  From ``t = 0`` on, the simulator appends one
control value per step and values in between are linearly interpolated.
Past the newest sample the last value is held.  The history may jump at
``t = 0`` and at the breaks of the initial table; window integrals insert
those jump locations as extra quadrature nodes and use one-sided values
there, so a jump is never smeared across a quadrature cell.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, DomainError
from .matrix_ops import trapezoid_pairs

__all__ = [
    "InitialHistory",
    "InputHistory",
    "HistoryView",
    "as_view",
    "Window",
    "window_integral",
    "window_quadratic",
]

_SNAP = 1e-9


class InitialHistory:
    """Input on ``[-h, 0)`` before the loop is closed.

    Use :meth:`zeros`, :meth:`constant`, :meth:`table` or
    :meth:`from_callable` to build one.
    """

    def __init__(self, input_dim, *, times=None, values=None, func=None,
                 discontinuities=()):
        self.input_dim = int(input_dim)
        self.func = func
        if times is not None:
            times = np.asarray(times, dtype=float)
            values = np.asarray(values, dtype=float).reshape(times.size, -1)
            if values.shape[1] != self.input_dim:
                raise DimensionError(
                    f"table values have width {values.shape[1]}, expected {self.input_dim}")
            if times.ndim != 1 or times.size < 1 or np.any(np.diff(times) <= 0):
                raise DomainError("table times must be strictly increasing")
            if times[-1] >= 0:
                raise DomainError("table times must lie in [-h, 0)")
            self.times, self.values = times, values
            self.breaks = tuple(float(t) for t in times[1:])
            self.start = float(times[0])
        else:
            self.times = self.values = None
            self.breaks = tuple(sorted(float(t) for t in discontinuities if t < 0))
            self.start = -np.inf

    @classmethod
    def zeros(cls, input_dim):
        return cls.constant(np.zeros(int(input_dim)))

    @classmethod
    def constant(cls, value):
        value = np.atleast_1d(np.asarray(value, dtype=float))
        hist = cls(value.size, func=lambda s, _v=value: _v)
        hist.constant_value = value
        return hist

    constant_value = None

    @classmethod
    def table(cls, times, values):
        """Piecewise constant: ``values[k]`` holds on ``[times[k], times[k+1])``."""
        values = np.asarray(values, dtype=float)
        width = 1 if values.ndim == 1 else values.shape[1]
        return cls(width, times=times, values=values)

    @classmethod
    def from_callable(cls, func, input_dim, discontinuities=()):
        return cls(input_dim, func=func, discontinuities=discontinuities)

    def evaluate(self, s, side="right"):
        """Values at times ``s < 0`` (``s = 0`` means the left limit ``0-``)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        tol = _SNAP * max(1.0, float(np.max(np.abs(s), initial=0.0)))
        if np.any(s < self.start - tol):
            raise DomainError(
                f"history starts at {self.start:.6g}, requested {float(np.min(s)):.6g}")
        if self.times is not None:
            s = np.maximum(s, self.start)
            idx = np.searchsorted(self.times, s, side="right" if side == "right" else "left") - 1
            return self.values[np.clip(idx, 0, self.times.size - 1)]
        if self.constant_value is not None:
            return np.broadcast_to(self.constant_value, (s.size, self.input_dim)).copy()
        out = np.empty((s.size, self.input_dim))
        if self.breaks:
            brk = np.asarray(self.breaks)
        for k, sk in enumerate(s):
            if self.breaks:
                near = np.abs(brk - sk) <= tol
                if np.any(near):
                    sk = sk + tol if side == "right" else sk - tol
            sk = min(sk, -tol) if sk >= 0 else sk
            out[k] = np.asarray(self.func(sk), dtype=float).reshape(-1)
        return out

    def sq_l2_norm(self, h, n_points=4001):
        """``int_{-h}^0 |u(s)|^2 ds``."""
        hist = InputHistory(self, 1.0)
        return window_quadratic(np.linspace(-h, 0.0, n_points), hist.view(0.0))


class InputHistory:
    """Growing record of the applied input, sampled at ``k * dt`` for ``k >= 0``."""

    def __init__(self, initial, dt):
        self.initial = initial
        self.input_dim = initial.input_dim
        self.dt = float(dt)
        self._buf = np.zeros((64, self.input_dim))
        self._n = 0

    def __len__(self):
        return self._n

    @property
    def last_time(self):
        return (self._n - 1) * self.dt

    def append(self, u):
        u = np.asarray(u, dtype=float).reshape(self.input_dim)
        if self._n == self._buf.shape[0]:
            self._buf = np.concatenate([self._buf, np.zeros_like(self._buf)])
        self._buf[self._n] = u
        self._n += 1

    @property
    def samples(self):
        return self._buf[: self._n]

    @property
    def breaks(self):
        return self.initial.breaks + (0.0,)

    def evaluate(self, s, side="right"):
        """Input at absolute times ``s`` from the requested side."""
        s = np.atleast_1d(np.asarray(s, dtype=float)).copy()
        scale = _SNAP * max(1.0, float(np.max(np.abs(s), initial=0.0)))
        for b in self.breaks:
            s[np.abs(s - b) <= scale] = b
        past = (s < 0) | ((s == 0) & (side == "left"))
        if self._n == 0:
            past[:] = True
            s = np.minimum(s, 0.0)
        out = np.empty((s.size, self.input_dim))
        if np.any(past):
            out[past] = self.initial.evaluate(s[past], side)
        live = ~past
        if np.any(live):
            pos = np.minimum(s[live] / self.dt, self._n - 1)
            i = np.minimum(np.floor(pos).astype(int), max(self._n - 2, 0))
            frac = (pos - i)[:, None]
            nxt = np.minimum(i + 1, self._n - 1)
            out[live] = (1 - frac) * self._buf[i] + frac * self._buf[nxt]
        return out

    def value_at(self, s, side="right"):
        """Single-time lookup; same semantics as :meth:`evaluate`."""
        s = float(s)
        tol = _SNAP * max(1.0, abs(s))
        if abs(s) <= tol:
            s = 0.0
        if s < 0 or (s == 0 and side == "left") or self._n == 0:
            return self.evaluate(s, side)[0]
        pos = min(s / self.dt, self._n - 1)
        i = min(int(pos), max(self._n - 2, 0))
        frac = pos - i
        if frac == 0.0 or self._n == 1:
            return self._buf[i]
        return (1 - frac) * self._buf[i] + frac * self._buf[i + 1]

    def evaluate_sides(self, s):
        """``(right, left)`` values; they differ only on history breaks."""
        s = np.atleast_1d(np.asarray(s, dtype=float)).copy()
        scale = _SNAP * max(1.0, float(np.max(np.abs(s), initial=0.0)))
        on_break = np.zeros(s.size, dtype=bool)
        for b in self.breaks:
            hit = np.abs(s - b) <= scale
            s[hit] = b
            on_break |= hit
        right = self.evaluate(s, "right")
        left = right.copy()
        if np.any(on_break):
            left[on_break] = self.evaluate(s[on_break], "left")
        return right, left

    def view(self, t):
        return HistoryView(self, t)


class HistoryView:
    """The window ``theta -> u(t + theta)`` of a history at time ``t``."""

    def __init__(self, history, t):
        self.history = history
        self.t = float(t)

    def relative(self, theta, side="right"):
        return self.history.evaluate(self.t + np.asarray(theta, dtype=float), side)

    def relative_sides(self, theta):
        return self.history.evaluate_sides(self.t + np.asarray(theta, dtype=float))

    def breaks_relative(self):
        return tuple(b - self.t for b in self.history.breaks)


def as_view(u_hist):
    """Accept a view, a history (viewed at its newest sample) or an initial segment."""
    if isinstance(u_hist, HistoryView):
        return u_hist
    if isinstance(u_hist, InputHistory):
        return u_hist.view(max(u_hist.last_time, 0.0))
    if isinstance(u_hist, InitialHistory):
        return InputHistory(u_hist, 1.0).view(0.0)
    raise TypeError(f"cannot interpret {type(u_hist).__name__} as an input history")


def _merged_nodes(points, view):
    """Grid nodes plus interior history jumps; returns nodes and insertion map."""
    lo, hi = points[0], points[-1]
    tol = _SNAP * max(1.0, -lo)
    extra = []
    for b in view.breaks_relative():
        if lo + tol < b < hi - tol:
            j = np.searchsorted(points, b)
            if abs(points[j] - b) > tol and abs(points[j - 1] - b) > tol:
                extra.append(b)
    if not extra:
        return points, None
    extra = np.asarray(sorted(extra))
    return np.insert(points, np.searchsorted(points, extra), extra), extra


class Window:
    """Input samples on a grid merged with the history's interior jumps."""

    def __init__(self, points, view):
        self.points = np.asarray(points, dtype=float)
        self.nodes, self.extra = _merged_nodes(self.points, view)
        self.u_right, self.u_left = view.relative_sides(self.nodes)

    def kernel_sides(self, k_right, k_left):
        """Kernel samples extended to the merged nodes by linear interpolation."""
        if self.extra is None:
            return k_right, k_left
        pts = self.points
        j = np.searchsorted(pts, self.extra) - 1
        frac = ((self.extra - pts[j]) / (pts[j + 1] - pts[j]))[:, None, None]
        k_mid = (1 - frac) * k_right[j] + frac * k_left[j + 1]
        return (np.insert(k_right, j + 1, k_mid, axis=0),
                np.insert(k_left, j + 1, k_mid, axis=0))


def window_integral(points, k_right, k_left, view, window=None):
    """``int K(theta) u(t + theta) dtheta`` over the grid ``points``.

    ``k_right``/``k_left`` are ``(N, n, r)`` one-sided kernel samples on
    ``points``; the kernel is interpolated linearly at inserted jump nodes.
    """
    if view.history.input_dim != k_right.shape[2]:
        raise DimensionError(
            f"history width {view.history.input_dim}, kernel expects {k_right.shape[2]}")
    win = window if window is not None else Window(points, view)
    k_r, k_l = win.kernel_sides(k_right, k_left)
    f_r = np.einsum("kij,kj->ki", k_r, win.u_right)
    f_l = np.einsum("kij,kj->ki", k_l, win.u_left)
    return trapezoid_pairs(win.nodes, f_r, f_l)


def window_quadratic(points, view, weight=None, wmat=None, window=None):
    """``int weight(theta) u^T W u dtheta``; defaults give ``|u_t|^2``."""
    win = window if window is not None else Window(points, view)
    u_r, u_l = win.u_right, win.u_left
    if wmat is None:
        q_r = np.sum(u_r * u_r, axis=1)
        q_l = np.sum(u_l * u_l, axis=1)
    else:
        q_r = np.einsum("ki,ij,kj->k", u_r, wmat, u_r)
        q_l = np.einsum("ki,ij,kj->k", u_l, wmat, u_l)
    if weight is not None:
        wv = weight(win.nodes)
        q_r, q_l = q_r * wv, q_l * wv
    return float(trapezoid_pairs(win.nodes, q_r, q_l))
