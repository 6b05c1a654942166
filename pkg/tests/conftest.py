import numpy as np
import pytest
from scipy.linalg import solve_continuous_are

from delaycert import (ControllerSpec, DelaySystem, IntegralKernel, SampledKernel, Tap,
                       WeightChoice, compute_kernel, kernel_grid_for, q_at_zero)


def s1_pair(delta_hat=1.0, f=-1.0):
    """Scalar integrator with unit delay; model delay ``delta_hat``."""
    h = max(1.0, delta_hat)
    plant = DelaySystem([[0.0]], [Tap([[1.0]], 1.0)], horizon=h)
    model = DelaySystem([[0.0]], [Tap([[1.0]], delta_hat)], horizon=h)
    return plant, ControllerSpec(model, [[f]]), WeightChoice([[1.0]], [[0.5]])


@pytest.fixture
def s1():
    return s1_pair()


def random_kernel(rng, n, r, span):
    """Piecewise-linear kernel table, sometimes with an interior jump."""
    k = int(rng.integers(2, 5))
    theta = np.linspace(-span, 0.0, k)
    vals = rng.normal(scale=0.4, size=(k, n, r))
    if rng.random() < 0.5 and k > 2:
        j = int(rng.integers(1, k - 1))
        theta = np.insert(theta, j, theta[j])
        vals = np.insert(vals, j, rng.normal(scale=0.4, size=(n, r)), axis=0)
    return IntegralKernel(span, SampledKernel(theta, vals))


def random_plant(rng, n=None, r=None, max_taps=2, kernel=True, h_max=1.5):
    n = n or int(rng.integers(1, 5))
    r = r or int(rng.integers(1, 3))
    a = rng.normal(scale=0.5, size=(n, n))
    taps = []
    delays = rng.choice(np.round(np.linspace(0.1, h_max, 15), 4),
                        size=int(rng.integers(1, max_taps + 1)), replace=False)
    for d in delays:
        taps.append(Tap(rng.normal(size=(n, r)), float(d)))
    kern = random_kernel(rng, n, r, float(rng.uniform(0.2, h_max))) if kernel else None
    return DelaySystem(a, taps, kern)


def perturbed(rng, sys, scale=0.02):
    """Controller model close to ``sys``: nudged gains and delays."""
    taps = [Tap(t.gain + scale * rng.normal(size=t.gain.shape),
                max(t.delay + scale * rng.uniform(-1, 1), 0.01)) for t in sys.discrete_taps]
    delays = [t.delay for t in taps]
    if len(set(delays)) != len(delays):
        taps = list(sys.discrete_taps)
    return DelaySystem(sys.a_matrix + scale * rng.normal(size=sys.a_matrix.shape), taps,
                       sys.integral_kernel)


def stabilizing_gain(plant, n_points=401):
    """LQR gain for the delay-free reduced pair ``(A, Q(0))``."""
    q0 = q_at_zero(compute_kernel(plant, kernel_grid_for(plant, n_points=n_points)))
    n, r = q0.shape
    p = solve_continuous_are(plant.a_matrix, q0, np.eye(n), np.eye(r))
    return -q0.T @ p


def random_suite(seed, count, **kw):
    """``count`` random plant/controller pairs sharing a horizon."""
    from delaycert import with_shared_horizon
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        plant = random_plant(rng, **kw)
        model = perturbed(rng, plant, scale=float(rng.choice([0.0, 0.005, 0.05])))
        plant, model = with_shared_horizon(plant, model)
        try:
            f = stabilizing_gain(plant)
        except (np.linalg.LinAlgError, ValueError):
            continue
        out.append((plant, ControllerSpec(model, f), rng))
    return out


ACCEPTANCE_LINES = []


def record_criterion(number, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
