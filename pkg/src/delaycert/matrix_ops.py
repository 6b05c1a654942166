"""Dense linear-algebra kernels and trapezoid quadrature on [-h, 0].

Everything here works on small dense matrices (n of order ten at most).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (CertificationError, ConfigurationError, DimensionError,
                     DomainError, NumericalError)

__all__ = [
    "expm",
    "expm_stack",
    "solve_lyapunov",
    "sym_eig_extremes",
    "spectral_norm",
    "matrix_norm",
    "spectral_abscissa",
    "QuadratureGrid",
    "trapezoid_integrate",
    "trapezoid_pairs",
]

HURWITZ_MARGIN = 1e-9

# Pade(13) numerator coefficients and the 1-norm bound below which the
# approximant is accurate to double precision without scaling.
_PADE13 = np.array([
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
])
_THETA13 = 5.371920351148152


def _pade13(a):
    b = _PADE13
    ident = np.broadcast_to(np.eye(a.shape[-1]), a.shape)
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a4 @ a2
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
             + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
    v = (a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
         + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident)
    return u, v


def expm_stack(ms):
    """Matrix exponential of every matrix in a ``(..., n, n)`` stack.

    Scaling and squaring around the degree-13 Pade approximant; each
    matrix gets its own number of squarings.
    """
    ms = np.asarray(ms, dtype=float)
    if ms.ndim < 2 or ms.shape[-1] != ms.shape[-2]:
        raise DimensionError(f"expm needs square matrices, got shape {ms.shape}")
    if not np.all(np.isfinite(ms)):
        raise DomainError("expm input has non-finite entries")
    batch_shape = ms.shape[:-2]
    n = ms.shape[-1]
    flat = ms.reshape((-1, n, n))
    if flat.shape[0] == 0:
        return ms.copy()

    norms = np.abs(flat).sum(axis=-2).max(axis=-1)
    with np.errstate(divide="ignore"):
        s = np.where(norms > _THETA13, np.ceil(np.log2(norms / _THETA13)), 0.0)
    s = s.astype(int)
    scaled = flat / (2.0 ** s)[:, None, None]

    u, v = _pade13(scaled)
    try:
        r = np.linalg.solve(v - u, v + u)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("Pade denominator is singular") from exc
    for j in range(int(s.max())):
        sel = s > j
        r[sel] = r[sel] @ r[sel]
    return r.reshape(batch_shape + (n, n))


def expm(m):
    """Matrix exponential of a single square matrix."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise DimensionError(f"expm needs a 2-D square matrix, got shape {m.shape}")
    return expm_stack(m)


def spectral_abscissa(m):
    """Largest real part among the eigenvalues of ``m``."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"square matrix required, got {m.shape}")
    return float(np.max(np.linalg.eigvals(m).real))


def _check_symmetric(m, name="matrix"):
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got {m.shape}")
    scale = max(np.linalg.norm(m), 1.0)
    if np.max(np.abs(m - m.T), initial=0.0) > 1e-12 * scale:
        raise DomainError(f"{name} is not symmetric")
    return m


def sym_eig_extremes(m):
    """Return ``(lambda_min, lambda_max)`` of a symmetric matrix."""
    m = _check_symmetric(m)
    w = np.linalg.eigvalsh(0.5 * (m + m.T))
    return float(w[0]), float(w[-1])


def spectral_norm(m):
    """Largest singular value (induced Euclidean norm)."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def matrix_norm(m, kind="spectral"):
    """Matrix norm used in the certificate constants.

    ``kind`` is ``"spectral"`` (default) or ``"frobenius"``; the latter
    dominates the former and gives a more conservative certificate.
    """
    if kind == "spectral":
        return spectral_norm(m)
    if kind == "frobenius":
        m = np.atleast_2d(np.asarray(m, dtype=float))
        scale = float(np.max(np.abs(m), initial=0.0))
        if scale == 0.0:
            return 0.0
        # rescale so tiny entries do not underflow when squared
        return scale * float(np.linalg.norm(m / scale, "fro"))
    raise ValueError(f"unknown norm kind {kind!r}")


def solve_lyapunov(a_cl, w):
    """Solve ``a_cl.T @ V + V @ a_cl = -w`` for symmetric positive-definite V.

    The equation is vectorized with Kronecker products and solved densely,
    which is fine for the state dimensions this package targets.

    Raises
    ------
    CertificationError
        If ``a_cl`` is not Hurwitz.
    """
    a_cl = np.atleast_2d(np.asarray(a_cl, dtype=float))
    w = _check_symmetric(w, "w")
    n = a_cl.shape[0]
    if a_cl.shape != (n, n) or w.shape != (n, n):
        raise DimensionError(f"shape mismatch: a_cl {a_cl.shape}, w {w.shape}")
    if np.linalg.eigvalsh(w)[0] <= 0:
        raise DomainError("w must be positive definite")
    alpha = spectral_abscissa(a_cl)
    if not alpha < -HURWITZ_MARGIN:
        raise CertificationError(
            f"closed-loop matrix not Hurwitz (spectral abscissa {alpha:.6g})")

    eye = np.eye(n)
    # column-major vec: vec(A^T V) = (I kron A^T) vec V, vec(V A) = (A^T kron I) vec V
    lhs = np.kron(eye, a_cl.T) + np.kron(a_cl.T, eye)
    try:
        vec = np.linalg.solve(lhs, -w.reshape(-1, order="F"))
    except np.linalg.LinAlgError as exc:
        raise NumericalError("Lyapunov system is singular") from exc
    v = vec.reshape((n, n), order="F")
    return 0.5 * (v + v.T)


@dataclass(frozen=True)
class QuadratureGrid:
    """Trapezoid grid on ``[-h, 0]`` whose intervals never straddle a split point."""

    points: np.ndarray
    split_points: tuple = ()
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ConfigurationError("grid needs at least two points")
        if not np.all(np.diff(pts) > 0):
            raise ConfigurationError("grid points must be strictly increasing")
        if pts[-1] != 0.0:
            raise ConfigurationError("grid must end at 0")
        splits = tuple(sorted(float(p) for p in self.split_points))
        for p in splits:
            if not np.any(pts == p):
                raise ConfigurationError(f"split point {p} is not a grid point")
        dx = np.diff(pts)
        wts = np.zeros_like(pts)
        wts[:-1] += 0.5 * dx
        wts[1:] += 0.5 * dx
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "split_points", splits)
        object.__setattr__(self, "weights", wts)

    @property
    def horizon(self):
        return -float(self.points[0])

    def __len__(self):
        return self.points.size

    @classmethod
    def build(cls, h, n_points=2001, split_points=()):
        """Uniform ``n_points`` grid on ``[-h, 0]`` augmented with ``split_points``.

        Uniform nodes closer than ``1e-9 * h`` to a split point are dropped
        so the split point is kept exactly.
        """
        h = float(h)
        if not h > 0:
            raise ConfigurationError(f"horizon must be positive, got {h}")
        if n_points < 2:
            raise ConfigurationError("n_points must be at least 2")
        tol = 1e-9 * h
        splits = sorted({float(p) for p in split_points} | {-h, 0.0})
        for p in splits:
            if p < -h - tol or p > tol:
                raise ConfigurationError(f"split point {p} outside [-{h}, 0]")
        splits = sorted({min(max(p, -h), 0.0) for p in splits})
        base = np.linspace(-h, 0.0, int(n_points))
        arr = np.asarray(splits)
        keep = np.min(np.abs(base[:, None] - arr[None, :]), axis=1) > tol
        pts = np.union1d(base[keep], arr)
        pts[0], pts[-1] = -h, 0.0
        return cls(pts, tuple(splits))


def trapezoid_pairs(points, right, left=None):
    """Composite trapezoid with one-sided samples.

    Interval ``[p_j, p_{j+1}]`` uses ``right[j]`` at its left end and
    ``left[j+1]`` at its right end, so jumps located exactly on nodes are
    integrated without smearing.
    """
    points = np.asarray(points, dtype=float)
    right = np.asarray(right, dtype=float)
    left = right if left is None else np.asarray(left, dtype=float)
    if right.shape[0] != points.size or left.shape != right.shape:
        raise DimensionError(
            f"{right.shape[0]} samples for {points.size} grid points")
    dx = np.diff(points).reshape((-1,) + (1,) * (right.ndim - 1))
    return 0.5 * np.sum(dx * (right[:-1] + left[1:]), axis=0)


def trapezoid_integrate(grid, samples, left_samples=None):
    """Integrate samples aligned with ``grid.points`` by the trapezoid rule.

    Scalars come back as floats, matrix-valued samples as arrays.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.shape[0] != len(grid):
        raise DimensionError(
            f"{samples.shape[0]} samples for {len(grid)} grid points")
    out = trapezoid_pairs(grid.points, samples, left_samples)
    return float(out) if np.ndim(out) == 0 else out
