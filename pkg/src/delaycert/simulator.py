"""Fixed-step simulation of the plant closed by the (mismatched) predictor.

The plant state is advanced with classical RK4.  The control is an output,
not a state: at the start of each step it is computed once from the state
and the stored input history, appended to the history, and held for the
remaining stages of that step.  Delayed inputs are read from the history
by linear interpolation, so delays need not be multiples of ``dt``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigurationError, DimensionError, DivergenceError, DomainError
from .history import (InitialHistory, InputHistory, Window, as_view,
                      window_integral, window_quadratic)
from .reduction import DEFAULT_GRID_POINTS, compute_kernel, kernel_grid_for

__all__ = [
    "SimConfig",
    "Trajectory",
    "EnvelopeReport",
    "control_output",
    "plant_rhs",
    "simulate",
    "evaluate_functional",
    "verify_envelope",
]

DIVERGENCE_LIMIT = 1e12


@dataclass
class SimConfig:
    dt: float
    t_final: float
    x0: np.ndarray
    u_init: Optional[InitialHistory] = None
    record_stride: int = 1

    def __post_init__(self):
        self.dt = float(self.dt)
        self.t_final = float(self.t_final)
        self.x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        if not self.dt > 0:
            raise ConfigurationError("dt must be positive")
        if self.t_final < self.dt * (1 - 1e-9):
            raise ConfigurationError("t_final must be at least one step")
        if int(self.record_stride) < 1:
            raise ConfigurationError("record_stride must be a positive integer")
        self.record_stride = int(self.record_stride)

    @property
    def n_steps(self):
        return max(int(round(self.t_final / self.dt)), 1)


@dataclass
class Trajectory:
    """Samples taken at the start of recorded steps, after ``u(t)`` is known."""

    times: np.ndarray
    x_samples: np.ndarray
    u_samples: np.ndarray
    y_samples: np.ndarray
    v_samples: Optional[np.ndarray]
    u_hist_l2: np.ndarray
    sigma_hat: Optional[float] = None
    history: Optional[InputHistory] = field(default=None, repr=False)

    def __len__(self):
        return self.times.size

    @property
    def bound_v(self):
        """``v(0) exp(-sigma_hat t)``, the decay the certificate promises."""
        if self.v_samples is None or self.sigma_hat is None:
            return None
        return self.v_samples[0] * np.exp(-self.sigma_hat * self.times)


class _PlantInput:
    """Input term ``int dbeta(theta) u(t + theta)`` of a plant on a fixed grid."""

    def __init__(self, sys, grid):
        self.taps = [(t.gain, t.delay) for t in sys.discrete_taps]
        kern = sys.integral_kernel
        self.points = grid.points
        if kern is not None and kern.span > 0:
            self.b_r = kern.sample(grid.points, "right")
            self.b_l = kern.sample(grid.points, "left")
        else:
            self.b_r = None
        self.n = sys.state_dim

    def __call__(self, history, t, side):
        out = np.zeros(self.n)
        for gain, delay in self.taps:
            out += gain @ history.value_at(t - delay, side)
        if self.b_r is not None:
            out += window_integral(self.points, self.b_r, self.b_l, history.view(t))
        return out


def control_output(x, u_hist, q_hat, f):
    """``u = F (x + int Q_hat(theta) u(t + theta) dtheta)``.

    The window is read up to ``t-``, so the rule is explicit.
    """
    view = as_view(u_hist)
    x = np.asarray(x, dtype=float).reshape(-1)
    z = x + window_integral(q_hat.points, q_hat.samples, q_hat.left_samples, view)
    return np.asarray(f, dtype=float) @ z


def plant_rhs(x, u_hist, sys, grid=None, side="right"):
    """``A x + int dbeta(theta) u(t + theta)`` at the time of the history view.

    A tap with zero delay reads the newest available input.
    """
    view = as_view(u_hist)
    if grid is None:
        grid = kernel_grid_for(sys)
    x = np.asarray(x, dtype=float).reshape(-1)
    return sys.a_matrix @ x + _PlantInput(sys, grid)(view.history, view.t, side)


def evaluate_functional(x, u_hist, kernel, v_mat, w_dprime, sigma):
    """Lyapunov-Krasovskii functional value for state ``x`` and window ``u_hist``."""
    view = as_view(u_hist)
    x = np.asarray(x, dtype=float).reshape(-1)
    y = x + window_integral(kernel.points, kernel.samples, kernel.left_samples, view)
    tail = window_quadratic(kernel.points, view, weight=lambda th: np.exp(sigma * th),
                            wmat=np.atleast_2d(w_dprime))
    return float(y @ np.atleast_2d(v_mat) @ y + tail)


def simulate(plant, controller, cfg, cert=None, n_points=DEFAULT_GRID_POINTS):
    """Integrate ``plant`` closed by ``controller`` from ``cfg.x0`` and ``cfg.u_init``.

    With a certificate, ``v(t)`` is recorded too (using its kernels and
    weights).  Raises :class:`DivergenceError` once ``|x|`` leaves
    ``[0, 1e12]`` or turns non-finite.
    """
    model, f = controller.model, controller.gain
    n, r = plant.state_dim, plant.input_dim
    h = plant.horizon
    if cfg.x0.size != n:
        raise DimensionError(f"x0 has {cfg.x0.size} entries, expected {n}")
    if cfg.dt > h / 10 * (1 + 1e-12):
        raise ConfigurationError(f"dt={cfg.dt} exceeds h/10={h / 10}")
    if cert is not None:
        q, q_hat = cert.kernel, cert.model_kernel
        if abs(q.horizon - h) > 1e-12 * max(1.0, h):
            raise ConfigurationError("certificate was computed for another horizon")
    else:
        grid = kernel_grid_for(plant, model, n_points=n_points)
        q, q_hat = compute_kernel(plant, grid), compute_kernel(model, grid)
    grid = q.grid
    u_init = cfg.u_init if cfg.u_init is not None else InitialHistory.zeros(r)
    if u_init.input_dim != r:
        raise DimensionError(f"u_init has width {u_init.input_dim}, expected {r}")
    if u_init.start > -h + 1e-12 * max(1.0, h):
        raise DomainError(f"initial history starts at {u_init.start}, needs to cover -{h}")

    hist = InputHistory(u_init, cfg.dt)
    plant_input = _PlantInput(plant, grid)
    a = plant.a_matrix
    dt = cfg.dt
    steps = cfg.n_steps
    weight = (lambda th: np.exp(cert.sigma * th)) if cert is not None else None

    rec_t, rec_x, rec_u, rec_y, rec_v, rec_l2 = [], [], [], [], [], []
    x = cfg.x0.copy()
    for k in range(steps):
        t = k * dt
        view = hist.view(t)
        u = f @ (x + window_integral(q_hat.points, q_hat.samples, q_hat.left_samples, view))
        hist.append(u)

        if k % cfg.record_stride == 0:
            win = Window(q.points, view)
            y = x + window_integral(q.points, q.samples, q.left_samples, view, win)
            rec_t.append(t)
            rec_x.append(x.copy())
            rec_u.append(u)
            rec_y.append(y)
            rec_l2.append(window_quadratic(q.points, view, window=win))
            if cert is not None:
                rec_v.append(float(y @ cert.v_matrix @ y) + window_quadratic(
                    q.points, view, weight=weight, wmat=cert.w_dprime, window=win))

        g0 = plant_input(hist, t, "right")
        g_mid = plant_input(hist, t + 0.5 * dt, "right")
        g1 = plant_input(hist, t + dt, "left")
        k1 = a @ x + g0
        k2 = a @ (x + 0.5 * dt * k1) + g_mid
        k3 = a @ (x + 0.5 * dt * k2) + g_mid
        k4 = a @ (x + dt * k3) + g1
        x = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        size = float(np.linalg.norm(x))
        if not np.isfinite(size) or size > DIVERGENCE_LIMIT:
            raise DivergenceError(t + dt, size)

    return Trajectory(
        times=np.asarray(rec_t),
        x_samples=np.asarray(rec_x).reshape(-1, n),
        u_samples=np.asarray(rec_u).reshape(-1, r),
        y_samples=np.asarray(rec_y).reshape(-1, n),
        v_samples=np.asarray(rec_v) if cert is not None else None,
        u_hist_l2=np.asarray(rec_l2),
        sigma_hat=cert.sigma_hat if cert is not None else None,
        history=hist,
    )


@dataclass(frozen=True)
class EnvelopeReport:
    """Worst ratios of simulated quantities to their certified envelopes.

    Each ratio must stay at or below ``1 + tolerance``.
    """

    ratio_v: float
    ratio_x: float
    ratio_u: float
    tolerance: float

    @property
    def passed(self):
        lim = 1.0 + self.tolerance
        return self.ratio_v <= lim and self.ratio_x <= lim and self.ratio_u <= lim


def verify_envelope(traj, cert, x0_norm_sq, u0_norm_sq, tolerance=0.01):
    """Compare a recorded run against ``v(0) e^{-sigma_hat t}`` and both decay envelopes."""
    if traj.v_samples is None:
        raise DomainError("trajectory carries no functional values; simulate with a certificate")
    decay = np.exp(cert.sigma_hat * traj.times)
    v0 = traj.v_samples[0]
    init = float(x0_norm_sq) + float(u0_norm_sq)
    ratio_v = float(np.max(traj.v_samples * decay) / v0) if v0 > 0 else 0.0
    if init > 0:
        xs = np.sum(traj.x_samples ** 2, axis=1)
        ratio_x = float(np.max(xs * decay) / (cert.envelope_x * init))
        ratio_u = float(np.max(traj.u_hist_l2 * decay) / (cert.envelope_u * init))
    else:
        ratio_x = ratio_u = 0.0
    return EnvelopeReport(ratio_v, ratio_x, ratio_u, float(tolerance))
