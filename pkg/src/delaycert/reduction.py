"""Reduction kernel ``Q`` and the quantities built from it.

``Q(theta) = int_{-h}^{theta} expm(A (tau - theta)) dbeta(tau)`` maps the
input window to the reduced state ``y = x + int Q(theta) u(t + theta) dtheta``,
in which the predictor loop is delay free: ``y' = A y + Q(0) u``.

``Q`` jumps by ``B_i`` at every tap location ``-h_i`` and is right-continuous,
so a :class:`KernelGrid` stores both one-sided values at every node.  Tap
contributions are evaluated in closed form; only the distributed part goes
through quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DimensionError, DomainError
from .history import as_view, window_integral
from .matrix_ops import QuadratureGrid, expm_stack, matrix_norm, trapezoid_pairs

__all__ = [
    "KernelGrid",
    "kernel_grid_for",
    "compute_kernel",
    "q_at_zero",
    "reduce_state",
    "gram_matrix",
    "delta_kernel_norm",
    "single_delay_delta_bound",
]

DEFAULT_GRID_POINTS = 2001


@dataclass(frozen=True)
class KernelGrid:
    """``Q`` sampled on a quadrature grid, with both one-sided limits per node."""

    grid: QuadratureGrid
    samples: np.ndarray          # Q(theta_j), right-continuous values, (N, n, r)
    left_samples: np.ndarray     # Q(theta_j-), (N, n, r)
    atom_locations: tuple = ()

    @property
    def points(self):
        return self.grid.points

    @property
    def horizon(self):
        return self.grid.horizon

    def max_norm(self, kind="spectral"):
        """``max ||Q(theta)||`` over the grid, both sides of each atom included."""
        stack = np.concatenate([self.samples, self.left_samples])
        if kind == "spectral":
            norms = np.linalg.norm(stack, ord=2, axis=(1, 2))
        else:
            norms = np.sqrt(np.sum(stack ** 2, axis=(1, 2)))
        return float(np.max(norms, initial=0.0))


def kernel_grid_for(*systems, n_points=DEFAULT_GRID_POINTS):
    """Grid on the common horizon with every tap and kernel break as a node."""
    if not systems:
        raise ConfigurationError("need at least one system")
    h = systems[0].horizon
    for s in systems[1:]:
        if abs(s.horizon - h) > 1e-12 * max(1.0, h):
            raise ConfigurationError(
                f"systems declare different horizons ({h} vs {s.horizon}); "
                "re-declare them on the shared horizon first")
    splits = set()
    for s in systems:
        splits |= set(s.split_points)
    return QuadratureGrid.build(h, n_points, sorted(p for p in splits if p >= -h))


def _node_index(points, theta):
    j = int(np.searchsorted(points, theta))
    for k in (j - 1, j):
        if 0 <= k < points.size and points[k] == theta:
            return k
    raise ConfigurationError(f"point {theta} is not a node of the kernel grid")


def compute_kernel(sys, grid):
    """Sample the reduction kernel of ``sys`` on ``grid``."""
    pts = grid.points
    if abs(grid.horizon - sys.horizon) > 1e-12 * max(1.0, sys.horizon):
        raise ConfigurationError(
            f"grid spans [-{grid.horizon}, 0] but the system horizon is {sys.horizon}")
    n, r = sys.state_dim, sys.input_dim
    a = sys.a_matrix
    right = np.zeros((pts.size, n, r))
    left = np.zeros((pts.size, n, r))

    atoms = []
    for tap in sys.discrete_taps:
        j0 = _node_index(pts, -tap.delay)
        atoms.append(-tap.delay)
        s = pts[j0:] + tap.delay
        contrib = expm_stack(-a[None, :, :] * s[:, None, None]) @ tap.gain
        right[j0:] += contrib
        left[j0 + 1:] += contrib[1:]

    kern = sys.integral_kernel
    if kern is not None and kern.span > 0:
        for p in kern.split_points:
            _node_index(pts, p)
        b_r = kern.sample(pts, "right")
        b_l = kern.sample(pts, "left")
        dx = np.diff(pts)
        prop = expm_stack(-a[None, :, :] * dx[:, None, None])
        # P(theta) = int_{-h}^{theta} expm(A (tau - theta)) B_int(tau) dtau is continuous
        p_val = np.zeros((n, r))
        for j in range(dx.size):
            p_val = prop[j] @ (p_val + 0.5 * dx[j] * b_r[j]) + 0.5 * dx[j] * b_l[j + 1]
            right[j + 1] += p_val
            left[j + 1] += p_val
    return KernelGrid(grid, right, left, tuple(sorted(atoms)))


def q_at_zero(kernel):
    """``Q(0)``, the input matrix of the reduced system."""
    return kernel.samples[-1].copy()


def reduce_state(x, u_hist, kernel):
    """Reduced state ``y = x + int_{-h}^0 Q(theta) u(t + theta) dtheta``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != kernel.samples.shape[1]:
        raise DimensionError(f"x has {x.size} entries, expected {kernel.samples.shape[1]}")
    view = as_view(u_hist)
    return x + window_integral(kernel.points, kernel.samples, kernel.left_samples, view)


def gram_matrix(kernel):
    """``G = int Q(theta) Q(theta)^T dtheta``, symmetric positive semidefinite."""
    qr, ql = kernel.samples, kernel.left_samples
    g = trapezoid_pairs(kernel.points, qr @ qr.transpose(0, 2, 1), ql @ ql.transpose(0, 2, 1))
    return 0.5 * (g + g.T)


def _stack_norms(stack, kind):
    if kind == "spectral":
        return np.linalg.norm(stack, ord=2, axis=(1, 2))
    if kind == "frobenius":
        return np.sqrt(np.sum(stack ** 2, axis=(1, 2)))
    raise ValueError(f"unknown norm kind {kind!r}")


def delta_kernel_norm(q, q_hat, kind="spectral"):
    """``||Q_hat - Q||`` in ``L2([-h, 0])`` with pointwise matrix norms."""
    if q.points.shape != q_hat.points.shape or not np.array_equal(q.points, q_hat.points):
        raise DimensionError("kernels live on different grids")
    if q.samples.shape != q_hat.samples.shape:
        raise DimensionError(f"kernel shapes differ: {q.samples.shape} vs {q_hat.samples.shape}")
    d_r = _stack_norms(q_hat.samples - q.samples, kind) ** 2
    d_l = _stack_norms(q_hat.left_samples - q.left_samples, kind) ** 2
    return float(np.sqrt(max(trapezoid_pairs(q.points, d_r, d_l), 0.0)))


def single_delay_delta_bound(a, b, delta, delta_hat, kind="spectral"):
    """Closed-form upper bound on ``||Delta Q||^2`` for a single delayed tap.

    The plant is ``x' = A x + B u(t - delta)`` and the predictor uses
    ``delta_hat`` with the exact ``A`` and ``B``.
    """
    delta, delta_hat = float(delta), float(delta_hat)
    if delta < 0 or delta_hat < 0:
        raise DomainError("delays must be nonnegative")
    na = matrix_norm(np.atleast_2d(a), kind)
    nb2 = matrix_norm(np.atleast_2d(b), kind) ** 2
    d = abs(delta_hat - delta)
    if d == 0:
        return 0.0
    if na == 0:
        return nb2 * d
    h = max(delta, delta_hat)
    c = nb2 / (2.0 * na)
    return float(c * np.expm1(2 * na * d) + c * np.expm1(2 * na * h) * np.expm1(na * d) ** 2)
