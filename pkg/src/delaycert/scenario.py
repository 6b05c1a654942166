"""JSON scenario files: plant, controller model, gain, weights, grid and run settings.

Serialization is canonical (fixed key order, every default written out), so
``dump(parse(dump(s))) == dump(s)`` byte for byte.

Example::

    {
      "plant": {"state_dim": 1, "input_dim": 1, "a_matrix": [[0.0]],
                "discrete_taps": [{"delay": 1.0, "gain": [[1.0]]}],
                "integral_kernel": null},
      "model": {...same layout...},
      "gain": [[-1.0]],
      "weights": {"w_prime": [[1.0]], "w_dprime": [[0.5]]},
      "grid_points": 2001,
      "sim": {"dt": 0.001, "t_final": 3.0, "x0": [1.0], "record_stride": 1,
              "u_init": null}
    }

``integral_kernel`` is a sampled table ``{"span", "theta", "values",
"discontinuities"}``; a repeated ``theta`` entry marks a jump and must be
listed in ``discontinuities``.  ``u_init`` is a piecewise-constant table
``{"times", "values"}`` starting at or before ``-h``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .certificate import WeightChoice
from .delay_model import (ControllerSpec, DelaySystem, IntegralKernel, SampledKernel,
                          Tap, shared_horizon)
from .errors import ConfigurationError, DimensionError
from .history import InitialHistory
from .reduction import DEFAULT_GRID_POINTS
from .simulator import SimConfig

__all__ = ["Scenario", "parse_scenario", "load_scenario", "scenario_to_dict",
           "dump_scenario"]


@dataclass(frozen=True)
class Scenario:
    plant: DelaySystem
    model: DelaySystem
    gain: np.ndarray
    weights: WeightChoice
    grid_points: int = DEFAULT_GRID_POINTS
    sim: Optional[SimConfig] = None

    @property
    def controller(self):
        return ControllerSpec(self.model, self.gain)

    @property
    def horizon(self):
        return self.plant.horizon

    def with_model(self, model):
        """Same scenario with another controller model, horizons re-shared."""
        h = shared_horizon(self.plant, model)
        return replace(self, plant=self.plant.with_horizon(h), model=model.with_horizon(h))

    def is_single_delay(self):
        return all(len(s.discrete_taps) == 1 and s.integral_kernel is None
                   for s in (self.plant, self.model))


def _matrix(obj, shape, name):
    m = np.asarray(obj, dtype=float)
    if m.shape != shape:
        raise DimensionError(f"{name} has shape {m.shape}, expected {shape}")
    return m


def _require(d, key, where):
    if key not in d:
        raise ConfigurationError(f"missing key {key!r} in {where}")
    return d[key]


def _parse_system(d, where):
    if not isinstance(d, dict):
        raise ConfigurationError(f"{where} must be an object")
    n = int(_require(d, "state_dim", where))
    r = int(_require(d, "input_dim", where))
    a = _matrix(_require(d, "a_matrix", where), (n, n), f"{where}.a_matrix")
    taps = []
    for k, t in enumerate(d.get("discrete_taps") or []):
        taps.append(Tap(_matrix(_require(t, "gain", where), (n, r), f"{where} tap {k}"),
                        float(_require(t, "delay", where))))
    kern = None
    kd = d.get("integral_kernel")
    if kd is not None:
        span = float(_require(kd, "span", f"{where}.integral_kernel"))
        theta = np.asarray(_require(kd, "theta", f"{where}.integral_kernel"), dtype=float)
        values = np.asarray(_require(kd, "values", f"{where}.integral_kernel"), dtype=float)
        values = values.reshape(theta.size, n, r) if values.size == theta.size * n * r else values
        table = SampledKernel(theta, values)
        if table.theta[0] != -span or table.theta[-1] != 0.0:
            raise ConfigurationError(f"{where}.integral_kernel table must span [-span, 0]")
        declared = tuple(sorted(float(p) for p in kd.get("discontinuities", [])))
        if declared != table.discontinuities:
            raise ConfigurationError(
                f"{where}.integral_kernel discontinuities {declared} do not match the "
                f"repeated table points {table.discontinuities}")
        kern = IntegralKernel(span, table)
    return DelaySystem(a, taps, kern, input_dim=r)


def _system_dict(sys, where):
    out = {
        "state_dim": sys.state_dim,
        "input_dim": sys.input_dim,
        "a_matrix": sys.a_matrix.tolist(),
        "discrete_taps": [{"delay": t.delay, "gain": t.gain.tolist()}
                          for t in sys.discrete_taps],
        "integral_kernel": None,
    }
    kern = sys.integral_kernel
    if kern is not None:
        if not isinstance(kern.func, SampledKernel):
            raise ConfigurationError(f"{where}: only sampled-table kernels can be serialized")
        out["integral_kernel"] = {
            "span": kern.span,
            "theta": kern.func.theta.tolist(),
            "values": kern.func.values.tolist(),
            "discontinuities": list(kern.func.discontinuities),
        }
    return out


def parse_scenario(d):
    """Build a :class:`Scenario` from a decoded JSON object."""
    if not isinstance(d, dict):
        raise ConfigurationError("scenario must be a JSON object")
    plant = _parse_system(_require(d, "plant", "scenario"), "plant")
    model = _parse_system(_require(d, "model", "scenario"), "model")
    if (plant.state_dim, plant.input_dim) != (model.state_dim, model.input_dim):
        raise DimensionError("plant and model dimensions differ")
    n, r = plant.state_dim, plant.input_dim
    h = max(shared_horizon(plant, model), float(d.get("horizon") or 0.0))
    if not h > 0:
        raise ConfigurationError("no delay in plant or model; horizon would be zero")
    plant, model = plant.with_horizon(h), model.with_horizon(h)
    gain = _matrix(_require(d, "gain", "scenario"), (r, n), "gain")

    wd = d.get("weights") or {}
    default = WeightChoice.default(n, r)
    weights = WeightChoice(
        _matrix(wd["w_prime"], (n, n), "w_prime") if "w_prime" in wd else default.w_prime,
        _matrix(wd["w_dprime"], (r, r), "w_dprime") if "w_dprime" in wd else default.w_dprime)

    sim = None
    sd = d.get("sim")
    if sd is not None:
        u_init = None
        ud = sd.get("u_init")
        if ud is not None:
            vals = np.asarray(_require(ud, "values", "sim.u_init"), dtype=float)
            times = np.asarray(_require(ud, "times", "sim.u_init"), dtype=float)
            u_init = InitialHistory.table(times, vals.reshape(times.size, r))
        sim = SimConfig(float(_require(sd, "dt", "sim")), float(_require(sd, "t_final", "sim")),
                        _matrix(_require(sd, "x0", "sim"), (n,), "sim.x0"),
                        u_init, int(sd.get("record_stride", 1)))
    return Scenario(plant, model, gain, weights,
                    int(d.get("grid_points", DEFAULT_GRID_POINTS)), sim)


def load_scenario(path):
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: not valid JSON ({exc})") from exc
    return parse_scenario(data)


def _u_init_dict(u_init, h):
    if u_init is None:
        return None
    if u_init.times is not None:
        return {"times": u_init.times.tolist(), "values": u_init.values.tolist()}
    if u_init.constant_value is not None:
        return {"times": [-h], "values": [u_init.constant_value.tolist()]}
    raise ConfigurationError("only tabulated or constant initial histories can be serialized")


def scenario_to_dict(sc):
    out = {
        "plant": _system_dict(sc.plant, "plant"),
        "model": _system_dict(sc.model, "model"),
        "gain": np.asarray(sc.gain, dtype=float).tolist(),
        "weights": {"w_prime": sc.weights.w_prime.tolist(),
                    "w_dprime": sc.weights.w_dprime.tolist()},
        "horizon": sc.horizon,
        "grid_points": int(sc.grid_points),
        "sim": None,
    }
    if sc.sim is not None:
        out["sim"] = {
            "dt": sc.sim.dt,
            "t_final": sc.sim.t_final,
            "x0": sc.sim.x0.tolist(),
            "record_stride": sc.sim.record_stride,
            "u_init": _u_init_dict(sc.sim.u_init, sc.horizon),
        }
    return out


def dump_scenario(sc):
    return json.dumps(scenario_to_dict(sc), indent=2) + "\n"


def save_scenario(sc, path):
    Path(path).write_text(dump_scenario(sc), encoding="utf-8")
