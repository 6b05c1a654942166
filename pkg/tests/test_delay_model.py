import numpy as np
import pytest

from delaycert import (ControllerSpec, DelaySystem, IntegralKernel, SampledKernel, Tap,
                       beta_eval, shared_horizon, with_shared_horizon)
from delaycert.errors import ConfigurationError, DimensionError, DomainError


def two_taps():
    return DelaySystem([[0.0]], [Tap([[1.0]], 1.0), Tap([[0.5]], 0.5)])


def test_beta_is_right_continuous_at_atoms():
    sys = two_taps()
    assert beta_eval(sys, -1.0)[0, 0] == 1.0
    assert beta_eval(sys, -0.75)[0, 0] == 1.0
    assert beta_eval(sys, -0.5)[0, 0] == 1.5
    assert beta_eval(sys, 0.0)[0, 0] == 1.5


def test_beta_of_constant_kernel():
    kern = IntegralKernel(1.0, lambda th: np.array([[1.0]]))
    sys = DelaySystem([[0.0]], integral_kernel=kern)
    assert beta_eval(sys, -0.25)[0, 0] == pytest.approx(0.75, abs=1e-12)
    assert beta_eval(sys, -1.0)[0, 0] == pytest.approx(0.0, abs=1e-12)


def test_beta_of_kernel_with_jump():
    table = SampledKernel([-1.0, -0.5, -0.5, 0.0], [[[2.0]], [[2.0]], [[1.0]], [[1.0]]])
    sys = DelaySystem([[0.0]], integral_kernel=IntegralKernel(1.0, table))
    assert beta_eval(sys, -0.5)[0, 0] == pytest.approx(1.0, abs=1e-12)
    assert beta_eval(sys, 0.0)[0, 0] == pytest.approx(1.5, abs=1e-12)


def test_beta_outside_domain():
    with pytest.raises(DomainError):
        beta_eval(two_taps(), -1.5)


def test_sampled_kernel_sides():
    table = SampledKernel([-1.0, -0.5, -0.5, 0.0], [[[2.0]], [[2.0]], [[1.0]], [[3.0]]])
    assert table.discontinuities == (-0.5,)
    assert table.side_value(-0.5, "left")[0, 0] == 2.0
    assert table.side_value(-0.5, "right")[0, 0] == 1.0
    assert table(-0.25)[0, 0] == pytest.approx(2.0)


def test_horizon_defaults_and_validation():
    sys = two_taps()
    assert sys.horizon == 1.0 and sys.state_dim == 1 and sys.input_dim == 1
    assert sys.with_horizon(2.0).horizon == 2.0
    with pytest.raises(ConfigurationError):
        sys.with_horizon(0.5)
    with pytest.raises(ConfigurationError):
        DelaySystem([[0.0]], [Tap([[1.0]], 0.0)])


def test_duplicate_delays_rejected():
    with pytest.raises(ConfigurationError):
        DelaySystem([[0.0]], [Tap([[1.0]], 1.0), Tap([[2.0]], 1.0)])


def test_dimension_checks():
    with pytest.raises(DimensionError):
        DelaySystem(np.zeros((2, 3)), [Tap(np.ones((2, 1)), 1.0)])
    with pytest.raises(DimensionError):
        DelaySystem(np.zeros((2, 2)), [Tap(np.ones((2, 1)), 1.0), Tap(np.ones((2, 2)), 0.5)])
    with pytest.raises(DomainError):
        Tap([[1.0]], -0.1)
    with pytest.raises(DimensionError):
        ControllerSpec(two_taps(), np.ones((2, 1)))


def test_shared_horizon():
    plant = two_taps()
    model = DelaySystem([[0.0]], [Tap([[1.0]], 1.2)])
    assert shared_horizon(plant, model) == 1.2
    p, m = with_shared_horizon(plant, model)
    assert p.horizon == m.horizon == 1.2


def test_split_points_include_taps_and_kernel_jumps():
    table = SampledKernel([-0.8, -0.3, -0.3, 0.0], np.ones((4, 1, 1)))
    sys = DelaySystem([[0.0]], [Tap([[1.0]], 1.0)], IntegralKernel(0.8, table))
    assert set(sys.split_points) >= {-1.0, -0.8, -0.3}
