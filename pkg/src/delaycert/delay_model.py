"""Linear plants with discrete and distributed input delays.

A plant is ``x' = A x + sum_i B_i u(t - h_i) + int_{-h_int}^0 B_int(s) u(t + s) ds``,
which collects into a single Stieltjes integral ``int_{-h}^0 dbeta(s) u(t + s)``
against the matrix measure ``beta``.  The Heaviside step at each tap is
right-continuous (``chi(0) = 1``), so the atom ``B_i`` sits at ``-h_i`` and is
included in ``beta(-h_i)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, DimensionError, DomainError
from .matrix_ops import QuadratureGrid, trapezoid_integrate

__all__ = [
    "Tap",
    "SampledKernel",
    "IntegralKernel",
    "DelaySystem",
    "ControllerSpec",
    "beta_eval",
    "shared_horizon",
    "with_shared_horizon",
]

_SIDE_EPS = 1e-12


def _as_matrix(m, name):
    m = np.asarray(m, dtype=float)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be a matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError(f"{name} has non-finite entries")
    return m


@dataclass(frozen=True)
class Tap:
    """Discrete input tap: gain ``B_i`` applied to ``u(t - delay)``."""

    gain: np.ndarray
    delay: float

    def __post_init__(self):
        object.__setattr__(self, "gain", _as_matrix(self.gain, "tap gain"))
        delay = float(self.delay)
        if not (np.isfinite(delay) and delay >= 0):
            raise DomainError(f"tap delay must be a nonnegative real, got {self.delay}")
        object.__setattr__(self, "delay", delay)


class SampledKernel:
    """Piecewise-linear ``B_int`` given as a table.

    ``theta`` is nondecreasing; a value repeated twice marks a jump, the
    first row being the left limit and the second the value from the right.
    """

    def __init__(self, theta, values):
        theta = np.asarray(theta, dtype=float)
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None, None]
        if theta.ndim != 1 or theta.size < 2 or values.shape[0] != theta.size or values.ndim != 3:
            raise DimensionError("kernel table needs >= 2 rows of n x r matrices")
        d = np.diff(theta)
        if np.any(d < 0):
            raise ConfigurationError("kernel table theta must be nondecreasing")
        if np.any((d[1:] == 0) & (d[:-1] == 0)):
            raise ConfigurationError("a kernel table point may appear at most twice")
        if d[0] == 0 or d[-1] == 0:
            raise ConfigurationError("kernel table cannot jump at its end points")
        self.theta = theta
        self.values = values

    @property
    def discontinuities(self):
        d = np.diff(self.theta)
        return tuple(float(t) for t in self.theta[1:][d == 0])

    @property
    def breakpoints(self):
        return tuple(float(t) for t in np.unique(self.theta))

    def side_value(self, theta, side="right"):
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        pts = self.theta
        idx = np.searchsorted(pts, th, side="right" if side == "right" else "left")
        idx = np.clip(idx, 1, pts.size - 1)
        lo, hi = idx - 1, idx
        span = pts[hi] - pts[lo]
        frac = np.where(span > 0, (th - pts[lo]) / np.where(span > 0, span, 1.0), 0.0)
        frac = np.clip(frac, 0.0, 1.0)[:, None, None]
        out = (1 - frac) * self.values[lo] + frac * self.values[hi]
        return out if np.ndim(theta) else out[0]

    def __call__(self, theta):
        return self.side_value(theta, "right")


@dataclass(frozen=True)
class IntegralKernel:
    """Distributed-delay kernel ``B_int`` on ``[-span, 0]``.

    ``func`` maps a scalar ``theta`` to an ``n x r`` matrix and is taken as
    zero outside ``[-span, 0]``.  Discontinuities must be declared so
    quadrature never straddles one.
    """

    span: float
    func: Callable
    discontinuities: tuple = ()

    def __post_init__(self):
        span = float(self.span)
        if not (np.isfinite(span) and span >= 0):
            raise DomainError(f"kernel span must be nonnegative, got {self.span}")
        disc = set(float(p) for p in self.discontinuities)
        disc |= set(getattr(self.func, "discontinuities", ()))
        for p in disc:
            if p < -span - 1e-12 or p > 1e-12:
                raise ConfigurationError(f"kernel discontinuity {p} outside [-{span}, 0]")
        object.__setattr__(self, "span", span)
        object.__setattr__(self, "discontinuities", tuple(sorted(disc)))

    @property
    def value_shape(self):
        if hasattr(self.func, "values"):
            return self.func.values.shape[1:]
        return np.atleast_2d(np.asarray(self.func(0.0), dtype=float)).shape

    @property
    def split_points(self):
        pts = set(self.discontinuities) | {-self.span}
        pts |= set(getattr(self.func, "breakpoints", ()))
        return tuple(sorted(pts))

    def sample(self, thetas, side="right"):
        """Stack of ``B_int(theta)`` values; ``side`` picks the one-sided limit."""
        thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
        inside = (thetas >= -self.span) & (thetas <= 0.0)
        if side == "left":
            inside &= thetas > -self.span
        out = np.zeros((thetas.size,) + self.value_shape)
        if not np.any(inside):
            return out
        if hasattr(self.func, "side_value"):
            out[inside] = self.func.side_value(thetas[inside], side)
            return out
        disc = np.asarray(self.discontinuities + (-self.span,))
        nudge = _SIDE_EPS * max(1.0, self.span)
        for k in np.flatnonzero(inside):
            th = thetas[k]
            if disc.size and np.min(np.abs(disc - th)) <= nudge:
                th = th + nudge if side == "right" else th - nudge
                th = min(max(th, -self.span), 0.0)
            out[k] = np.atleast_2d(np.asarray(self.func(th), dtype=float))
        return out


@dataclass(frozen=True)
class DelaySystem:
    """LTI plant with discrete taps and an optional distributed kernel.

    ``horizon`` defaults to the largest delay present; ``input_dim`` is
    inferred from the gains when omitted.
    """

    a_matrix: np.ndarray
    discrete_taps: Sequence[Tap] = ()
    integral_kernel: Optional[IntegralKernel] = None
    horizon: Optional[float] = None
    input_dim: Optional[int] = None
    state_dim: int = field(init=False)

    def __post_init__(self):
        a = _as_matrix(self.a_matrix, "A")
        n = a.shape[0]
        if a.shape != (n, n):
            raise DimensionError(f"A must be square, got {a.shape}")
        taps = tuple(t if isinstance(t, Tap) else Tap(*t) for t in self.discrete_taps)

        r = self.input_dim
        if r is None:
            if taps:
                r = taps[0].gain.shape[1]
            elif self.integral_kernel is not None:
                r = self.integral_kernel.value_shape[1]
            else:
                raise DimensionError("input_dim is required for a system without inputs")
        r = int(r)
        if r < 1:
            raise DimensionError("input_dim must be positive")
        for t in taps:
            if t.gain.shape != (n, r):
                raise DimensionError(f"tap gain shape {t.gain.shape}, expected {(n, r)}")
        delays = [t.delay for t in taps]
        if len(set(delays)) != len(delays):
            raise ConfigurationError("discrete tap delays must be pairwise distinct")
        kern = self.integral_kernel
        if kern is not None:
            shape = tuple(kern.value_shape)
            if shape != (n, r):
                raise DimensionError(f"kernel value shape {shape}, expected {(n, r)}")

        max_delay = max(delays + ([kern.span] if kern is not None else []), default=0.0)
        h = max_delay if self.horizon is None else float(self.horizon)
        if not h > 0:
            raise ConfigurationError("horizon must be positive (the system has no delay)")
        if h < max_delay:
            raise ConfigurationError(f"horizon {h} is shorter than the largest delay {max_delay}")

        object.__setattr__(self, "a_matrix", a)
        object.__setattr__(self, "discrete_taps", taps)
        object.__setattr__(self, "horizon", h)
        object.__setattr__(self, "input_dim", r)
        object.__setattr__(self, "state_dim", n)

    @property
    def delays(self):
        out = [t.delay for t in self.discrete_taps]
        if self.integral_kernel is not None:
            out.append(self.integral_kernel.span)
        return out

    @property
    def split_points(self):
        """Points of ``[-h, 0]`` where ``beta`` or its density is not smooth."""
        pts = {-t.delay for t in self.discrete_taps}
        if self.integral_kernel is not None:
            pts |= set(self.integral_kernel.split_points)
        return tuple(sorted(pts))

    def with_horizon(self, h):
        return DelaySystem(self.a_matrix, self.discrete_taps, self.integral_kernel,
                           horizon=h, input_dim=self.input_dim)


@dataclass(frozen=True)
class ControllerSpec:
    """Predictor controller: the estimated model it predicts with and gain ``F``."""

    model: DelaySystem
    gain: np.ndarray

    def __post_init__(self):
        f = _as_matrix(self.gain, "F")
        if f.shape != (self.model.input_dim, self.model.state_dim):
            raise DimensionError(
                f"F has shape {f.shape}, expected {(self.model.input_dim, self.model.state_dim)}")
        object.__setattr__(self, "gain", f)


def beta_eval(sys, theta, n_points=2001):
    """Evaluate the delay measure ``beta(theta)`` for ``theta`` in ``[-h, 0]``."""
    theta = float(theta)
    h = sys.horizon
    tol = 1e-12 * max(1.0, h)
    if theta < -h - tol or theta > tol:
        raise DomainError(f"theta={theta} outside [-{h}, 0]")
    out = np.zeros((sys.state_dim, sys.input_dim))
    for tap in sys.discrete_taps:
        if theta + tap.delay >= -tol:
            out += tap.gain
    kern = sys.integral_kernel
    if kern is not None and kern.span > 0 and theta > -kern.span:
        upper = min(theta, 0.0)
        # grid on [-(upper + span), 0], shifted by ``upper`` onto [-span, upper]
        splits = [p - upper for p in kern.split_points if -kern.span <= p <= upper]
        grid = QuadratureGrid.build(upper + kern.span, n_points, splits)
        thetas = grid.points + upper
        out += trapezoid_integrate(grid, kern.sample(thetas, "right"),
                                   kern.sample(thetas, "left"))
    return out


def shared_horizon(plant, model):
    """Largest delay over both systems, the horizon both must be declared with."""
    return float(max(plant.delays + model.delays, default=0.0))


def with_shared_horizon(plant, model):
    """Re-declare ``plant`` and ``model`` on a common horizon."""
    h = max(shared_horizon(plant, model), plant.horizon, model.horizon)
    return plant.with_horizon(h), model.with_horizon(h)
