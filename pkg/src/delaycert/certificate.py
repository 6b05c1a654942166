"""Lyapunov-Krasovskii constants and the robustness certificate.

For the reduced loop the functional is
``v(x, phi) = ||x + int Q phi||_V^2 + int exp(sigma theta) ||phi(theta)||_{W''}^2``
with ``V`` the Lyapunov matrix of ``A + Q(0) F``.  The certificate collects
its quadratic bounds and the degraded decay rate
``sigma_hat = sigma - k1 ||dQ|| - k2 ||dQ||^2`` under model mismatch.

``certified = False`` means "not certified by this functional", never
"unstable": the test is sufficient only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import CertificationError, DimensionError, DomainError, NumericalError
from .matrix_ops import (HURWITZ_MARGIN, expm, matrix_norm, solve_lyapunov,
                         spectral_abscissa, sym_eig_extremes)
from .reduction import (DEFAULT_GRID_POINTS, KernelGrid, compute_kernel,
                        delta_kernel_norm, gram_matrix, kernel_grid_for, q_at_zero)

__all__ = [
    "WeightChoice",
    "RobustnessCertificate",
    "CorollaryBound",
    "lyapunov_matrix",
    "decay_rate_sigma",
    "upper_bound_m",
    "lower_bounds",
    "robustness_gains",
    "robustness_threshold",
    "degraded_rate",
    "certify",
    "corollary_single_delay",
]


def _spd(m, name):
    m = np.atleast_2d(np.asarray(m, dtype=float))
    lo, _ = sym_eig_extremes(m)
    if not lo > 0:
        raise DomainError(f"{name} must be positive definite (lambda_min={lo:.3g})")
    return m


@dataclass(frozen=True)
class WeightChoice:
    """The free weights ``W'`` (n x n) and ``W''`` (r x r), both SPD."""

    w_prime: np.ndarray
    w_dprime: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "w_prime", _spd(self.w_prime, "W'"))
        object.__setattr__(self, "w_dprime", _spd(self.w_dprime, "W''"))

    @classmethod
    def default(cls, n, r):
        return cls(np.eye(n), 0.5 * np.eye(r))

    def scaled(self, c):
        return WeightChoice(c * self.w_prime, c * self.w_dprime)


@dataclass(frozen=True)
class RobustnessCertificate:
    v_matrix: np.ndarray
    sigma: float
    upper_m: float
    m_u: float
    m_x: float
    gram: np.ndarray
    k1: float
    k2: float
    k3: Optional[float]
    delta_q_norm: float
    sigma_hat: float
    threshold_sq: float
    certified: bool
    envelope_x: float
    envelope_u: float
    horizon: float
    closed_loop_abscissa: float
    grid_points: int
    norm: str
    w_prime: np.ndarray = field(repr=False)
    w_dprime: np.ndarray = field(repr=False)
    kernel: KernelGrid = field(repr=False)
    model_kernel: KernelGrid = field(repr=False)


@dataclass(frozen=True)
class CorollaryBound:
    """Single-delay delay-mismatch bound and the constants behind it."""

    k1: float
    k2: float
    k3: float
    sigma: float
    threshold_sq: float
    delay_bound: float
    horizon: float
    delay_mismatch: float
    certified: bool


def lyapunov_matrix(a, q0, f, w):
    """``V`` solving ``(A + Q0 F)^T V + V (A + Q0 F) = -(W' + 2 F^T W'' F)``."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    q0 = np.atleast_2d(np.asarray(q0, dtype=float))
    f = np.atleast_2d(np.asarray(f, dtype=float))
    if q0.shape[0] != a.shape[0] or f.shape != (q0.shape[1], a.shape[0]):
        raise DimensionError(f"shapes A {a.shape}, Q0 {q0.shape}, F {f.shape} do not chain")
    a_cl = a + q0 @ f
    alpha = spectral_abscissa(a_cl)
    if not alpha < -HURWITZ_MARGIN:
        raise CertificationError(
            f"closed-loop matrix not Hurwitz (spectral abscissa {alpha:.6g})")
    rhs = w.w_prime + 2.0 * f.T @ w.w_dprime @ f
    return solve_lyapunov(a_cl, 0.5 * (rhs + rhs.T))


def decay_rate_sigma(v, w_prime):
    """``lambda_min(W') / lambda_max(V)``."""
    return sym_eig_extremes(w_prime)[0] / sym_eig_extremes(v)[1]


def upper_bound_m(v, w_dprime, a, kernel, h, kind="spectral"):
    """Constant ``M`` with ``v(x, phi) <= M (|x|^2 + ||phi||^2)``.

    The state coefficient is ``2 lambda_max(V) max(1, ||expm(A h)||^2)``.
    The ``max(1, .)`` keeps the bound valid when ``||expm(A h)|| < 1``: with
    ``phi = 0`` the functional equals ``|x|_V^2``, which can exceed
    ``2 lambda_max(V) ||expm(A h)||^2 |x|^2`` for a contractive ``A``.
    """
    lam_v = sym_eig_extremes(v)[1]
    grow = matrix_norm(expm(np.atleast_2d(a) * h), kind) ** 2
    first = 2.0 * lam_v * max(1.0, grow)
    second = sym_eig_extremes(w_dprime)[1] + 2.0 * h * lam_v * kernel.max_norm(kind) ** 2
    return max(first, second)


def lower_bounds(v, w_dprime, sigma, h, gram):
    """``(m_u, m_x)``: ``v >= m_u ||phi||^2`` and ``v >= m_x |x|^2``."""
    m_u = math.exp(-sigma * h) * sym_eig_extremes(w_dprime)[0]
    n = v.shape[0]
    try:
        v_inv = np.linalg.solve(v, np.eye(n))
        inner = v_inv + np.asarray(gram) / m_u
        outer = np.linalg.solve(0.5 * (inner + inner.T), np.eye(n))
    except np.linalg.LinAlgError as exc:
        raise NumericalError("singular matrix in the lower bound") from exc
    m_x = sym_eig_extremes(0.5 * (outer + outer.T))[0]
    return m_u, m_x


def robustness_gains(v, q0, f, w_dprime, m_u, kind="spectral"):
    """``(k1, k2)`` weighting ``||dQ||`` and ``||dQ||^2`` in the decay-rate loss."""
    if not m_u > 0:
        raise DomainError("m_u must be positive")
    vqf = np.atleast_2d(v) @ np.atleast_2d(q0) @ np.atleast_2d(f)
    k1 = matrix_norm(vqf, kind) / min(sym_eig_extremes(v)[0], m_u)
    k2 = 2.0 * sym_eig_extremes(w_dprime)[1] * matrix_norm(f, kind) ** 2 / m_u
    return k1, k2


def robustness_threshold(sigma, k1, k2):
    """Square of the positive root of ``k2 z^2 + k1 z - sigma``.

    ``||dQ||^2`` below this value keeps ``sigma_hat`` positive.  Returns
    ``inf`` when both gains vanish.
    """
    if not sigma > 0:
        raise CertificationError(f"sigma must be positive, got {sigma}")
    if k2 == 0:
        return (sigma / k1) ** 2 if k1 > 0 else math.inf
    # 2 sigma / (sqrt(k1^2 + 4 k2 sigma) + k1) avoids cancellation for large k1
    z = 2.0 * sigma / (math.sqrt(k1 * k1 + 4.0 * k2 * sigma) + k1)
    return z * z


def degraded_rate(sigma, k1, k2, dq):
    return sigma - k1 * dq - k2 * dq * dq


def certify(plant, controller, weights=None, n_points=DEFAULT_GRID_POINTS, norm="spectral"):
    """Certify exponential stability of ``plant`` under the mismatched predictor.

    Both ``plant`` and ``controller.model`` must be declared on the same
    horizon (see :func:`delaycert.delay_model.with_shared_horizon`).
    """
    model, f = controller.model, controller.gain
    if (model.state_dim, model.input_dim) != (plant.state_dim, plant.input_dim):
        raise DimensionError("plant and controller model dimensions differ")
    if weights is None:
        weights = WeightChoice.default(plant.state_dim, plant.input_dim)
    grid = kernel_grid_for(plant, model, n_points=n_points)
    h = grid.horizon
    q = compute_kernel(plant, grid)
    q_hat = compute_kernel(model, grid)
    q0 = q_at_zero(q)
    alpha = spectral_abscissa(plant.a_matrix + q0 @ f)

    v = lyapunov_matrix(plant.a_matrix, q0, f, weights)
    sigma = decay_rate_sigma(v, weights.w_prime)
    big_m = upper_bound_m(v, weights.w_dprime, plant.a_matrix, q, h, norm)
    gram = gram_matrix(q)
    m_u, m_x = lower_bounds(v, weights.w_dprime, sigma, h, gram)
    k1, k2 = robustness_gains(v, q0, f, weights.w_dprime, m_u, norm)
    dq = delta_kernel_norm(q, q_hat, norm)
    thr = robustness_threshold(sigma, k1, k2)

    k3 = None
    if len(plant.discrete_taps) == 1 and plant.integral_kernel is None:
        nb = matrix_norm(plant.discrete_taps[0].gain, norm)
        na = matrix_norm(plant.a_matrix, norm)
        k3 = 2.0 * na / nb ** 2 * thr if nb > 0 else math.inf

    return RobustnessCertificate(
        v_matrix=v, sigma=sigma, upper_m=big_m, m_u=m_u, m_x=m_x, gram=gram,
        k1=k1, k2=k2, k3=k3, delta_q_norm=dq,
        sigma_hat=degraded_rate(sigma, k1, k2, dq), threshold_sq=thr,
        certified=bool(dq * dq < thr and alpha < -HURWITZ_MARGIN),
        envelope_x=big_m / m_x, envelope_u=big_m / m_u,
        horizon=h, closed_loop_abscissa=alpha, grid_points=len(grid), norm=norm,
        w_prime=weights.w_prime, w_dprime=weights.w_dprime,
        kernel=q, model_kernel=q_hat,
    )


def corollary_single_delay(a, b, f, delta, delta_hat_probe, weights=None, norm="spectral"):
    """Delay-mismatch bound for ``x' = A x + B u(t - delta)``.

    The predictor is built with the exact ``A`` and ``B`` but delay
    ``delta_hat_probe``; ``certified`` is ``|delta_hat - delta| < delay_bound``.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    f = np.atleast_2d(np.asarray(f, dtype=float))
    delta, delta_hat = float(delta), float(delta_hat_probe)
    if delta < 0 or delta_hat < 0:
        raise DomainError("delays must be nonnegative")
    if weights is None:
        weights = WeightChoice.default(a.shape[0], b.shape[1])
    h = max(delta, delta_hat)
    q0 = expm(-a * delta) @ b
    v = lyapunov_matrix(a, q0, f, weights)
    sigma = decay_rate_sigma(v, weights.w_prime)
    m_u = math.exp(-sigma * h) * sym_eig_extremes(weights.w_dprime)[0]
    k1, k2 = robustness_gains(v, q0, f, weights.w_dprime, m_u, norm)
    thr = robustness_threshold(sigma, k1, k2)

    na = matrix_norm(a, norm)
    nb2 = matrix_norm(b, norm) ** 2
    if nb2 == 0 or math.isinf(thr):
        k3, bound = (0.0 if na == 0 else math.inf), math.inf
    elif na == 0:
        k3, bound = 0.0, thr / nb2
    else:
        k3 = 2.0 * na / nb2 * thr
        growth = math.exp(min(2.0 * na * h, 700.0))
        # (sqrt(1 + k3 E) - 1) / E rewritten without cancellation
        bound = math.log1p(k3 / (math.sqrt(1.0 + k3 * growth) + 1.0)) / na
    mismatch = abs(delta_hat - delta)
    return CorollaryBound(k1=k1, k2=k2, k3=k3, sigma=sigma, threshold_sq=thr,
                          delay_bound=bound, horizon=h, delay_mismatch=mismatch,
                          certified=bool(mismatch < bound))
