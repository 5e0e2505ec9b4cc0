"""Fixed-step time integration of the nonspatial system with event detection."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConfigError, IntegrationError
from .model import ModelParams, State

__all__ = ["Trajectory", "integrate", "EXTINCTION_THRESHOLD", "BLOWUP_THRESHOLD"]

EXTINCTION_THRESHOLD = _kernels.EXTINCTION_THRESHOLD
BLOWUP_THRESHOLD = _kernels.BLOWUP_THRESHOLD


@dataclass
class Trajectory:
    """Recorded states of one integration run.

    events holds (time, kind) pairs with kind in {"Extinction", "Blowup"}.
    An Extinction event marks the first time all components dropped below
    the extinction threshold; integration continues past it. A Blowup
    event halts the run.
    """

    times: np.ndarray
    states: np.ndarray
    events: list = field(default_factory=list)

    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def window(self, t_from: float, t_to: float = np.inf) -> np.ndarray:
        """States with times in [t_from, t_to]."""
        mask = (self.times >= t_from) & (self.times <= t_to)
        return self.states[mask]


def integrate(p: ModelParams, ic, dt: float = 1e-3, t_end: float = 100.0,
              record_stride: int = 1, method: str = "rk4",
              extinction_threshold: float = EXTINCTION_THRESHOLD
              ) -> Trajectory:
    """Integrate from ic over [0, t_end] with fixed step dt.

    method is "rk4" (default) or "euler". States are recorded every
    record_stride steps, always including t=0. Components that step to a
    negative value of roundoff magnitude are clamped to zero; a negative
    beyond that signals the step size is too large and raises
    IntegrationError.
    """
    if not (dt > 0 and np.isfinite(dt)):
        raise ConfigError("dt must be positive and finite")
    if not (t_end > 0 and np.isfinite(t_end)):
        raise ConfigError("t_end must be positive and finite")
    if record_stride < 1:
        raise ConfigError("record_stride must be >= 1")
    if method not in ("rk4", "euler"):
        raise ConfigError(f"unknown method {method!r}")
    if isinstance(ic, State):
        ic = ic.as_array()
    ic = np.asarray(ic, dtype=float)
    if ic.shape != (3,) or not np.all(np.isfinite(ic)) or np.any(ic < 0):
        raise ConfigError("initial condition must be three finite "
                          "nonnegative components")

    nsteps = int(round(t_end / dt))
    states, nrec, ext_step, blow_step, worst_neg = _kernels.ode_run(
        p.as_array(), ic[0], ic[1], ic[2], dt, nsteps,
        record_stride, method == "euler", extinction_threshold)
    if worst_neg < -_kernels.NEGATIVE_ROUNDOFF:
        raise IntegrationError(
            f"component stepped to {worst_neg:.3e}; negativity beyond "
            f"roundoff indicates dt={dt} is too large")

    times = np.arange(nrec) * (dt * record_stride)
    events = []
    if ext_step >= 0:
        events.append((ext_step * dt, "Extinction"))
    if blow_step >= 0:
        events.append((blow_step * dt, "Blowup"))
    return Trajectory(times=times, states=states, events=events)
