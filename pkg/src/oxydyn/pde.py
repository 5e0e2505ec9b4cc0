"""1D reaction-diffusion simulation on [0, L] with zero-flux boundaries.

Oxygen and phytoplankton diffuse with unit coefficient, zooplankton with
coefficient D. Space is discretized with a fourth-order five-point
Laplacian (mirror ghost nodes at the boundaries) and time with forward
Euler.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .equilibria import coexistence_equilibria
from .errors import ConfigError, GridError, IntegrationError
from .model import ModelParams, State, eval_rhs

__all__ = [
    "Grid1D",
    "FieldState",
    "SpaceTimeRecord",
    "laplacian_5pt",
    "apply_initial_condition",
    "step",
    "run",
    "stability_bound",
    "ANOXIA_FRACTION",
]

ANOXIA_FRACTION = 0.05


@dataclass(frozen=True)
class Grid1D:
    """Node-centered uniform grid on [0, L] with n = L/dx + 1 nodes."""

    L: float = 500.0
    dx: float = 1.0

    def __post_init__(self):
        if self.L <= 0 or self.dx <= 0:
            raise GridError("L and dx must be positive")
        ratio = self.L / self.dx
        if abs(ratio - round(ratio)) > 1e-9:
            raise GridError(f"L/dx = {ratio} must be an integer")
        if self.n < 11:
            raise GridError("grid needs at least 11 nodes for the stencil")

    @property
    def n(self) -> int:
        return int(round(self.L / self.dx)) + 1

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n) * self.dx


@dataclass
class FieldState:
    """The three fields over the grid at one instant."""

    c: np.ndarray
    u: np.ndarray
    v: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if not (self.c.shape == self.u.shape == self.v.shape):
            raise GridError("field arrays must share one shape")


@dataclass
class SpaceTimeRecord:
    """Snapshots plus spatial-mean time series of one PDE run.

    events holds (time, kind) with kind in {"GlobalAnoxia", "Blowup"};
    mean_series has one row (c_mean, u_mean, v_mean) per snapshot time,
    computed by trapezoidal integration over the grid.
    """

    grid: Grid1D
    times: np.ndarray
    snapshots: list
    mean_series: np.ndarray
    events: list = field(default_factory=list)

    def event_time(self, kind: str):
        for t, k in self.events:
            if k == kind:
                return t
        return None


def laplacian_5pt(f, dx: float) -> np.ndarray:
    """Fourth-order Laplacian (-1, 16, -30, 16, -1)/(12 dx^2) with even
    (mirror) ghost extension implementing zero flux."""
    f = np.asarray(f, dtype=float)
    if f.size < 5:
        raise GridError("laplacian_5pt needs at least 5 nodes")
    g = np.pad(f, 2, mode="reflect")
    return (-g[:-4] + 16.0 * g[1:-3] - 30.0 * g[2:-2]
            + 16.0 * g[3:-1] - g[4:]) / (12.0 * dx * dx)


def trapezoid_mean(f, dx: float, L: float) -> float:
    """Spatial mean by the trapezoid rule (half weights at both ends)."""
    f = np.asarray(f, dtype=float)
    return float((f.sum() - 0.5 * (f[0] + f[-1])) * dx / L)


def apply_initial_condition(grid: Grid1D, base, kind: str = "reference",
                            amp_c: float = 0.5, amp_u: float = 0.2,
                            half_width: float = 10.0,
                            params: ModelParams | None = None) -> FieldState:
    """Homogeneous base state with a rectangular perturbation of c and u
    on |x - L/2| < half_width; v stays unperturbed.

    kind "reference" uses the reference amplitudes (+0.5, +0.2, width 10);
    kind "bump" uses the given amplitudes. If params is supplied and base
    is not an equilibrium, a warning is issued (the run proceeds).
    """
    if kind not in ("reference", "bump"):
        raise ConfigError(f"unknown initial-condition kind {kind!r}")
    if kind == "reference":
        amp_c, amp_u, half_width = 0.5, 0.2, 10.0
    if isinstance(base, State):
        base = base.as_array()
    base = np.asarray(base, dtype=float)
    if params is not None:
        resid = np.max(np.abs(eval_rhs(params, base)))
        if resid > 1e-8:
            warnings.warn(f"initial-condition base state has residual "
                          f"{resid:.2e}; not an equilibrium", stacklevel=2)
    x = grid.x
    mask = np.abs(x - grid.L / 2.0) < half_width
    c = np.full(grid.n, base[0])
    u = np.full(grid.n, base[1])
    v = np.full(grid.n, base[2])
    c[mask] += amp_c
    u[mask] += amp_u
    return FieldState(c=c, u=u, v=v, time=0.0)


def stability_bound(grid: Grid1D, D: float) -> float:
    """Largest admissible forward-Euler step for the 5-point stencil with
    a safety factor of 0.3."""
    return 0.3 * grid.dx ** 2 * 12.0 / (30.0 * max(1.0, D))


def _reaction(p: ModelParams, c, u, v):
    F = p.A * u / (c + 1.0) - p.delta * u * c / (c + p.c2) \
        - p.nu * c * v / (c + p.c3) - c
    G = (p.B * c / (c + p.c1) - u) * u - u * v / (u + p.h) - p.sigma * u
    H = p.eta * c * c / (c * c + p.c4 * p.c4) * u * v / (u + p.h) \
        - p.mu1 * v - p.mu2 * v * v
    return F, G, p.eps * H


def step(p: ModelParams, D: float, grid: Grid1D, state: FieldState,
         dt: float) -> FieldState:
    """One forward-Euler step. Negative values arising from the update
    are clamped at zero; non-finite values raise with the node index."""
    if dt > stability_bound(grid, D):
        raise IntegrationError(
            f"dt={dt} exceeds the explicit stability bound "
            f"{stability_bound(grid, D):.6g} = 0.3*dx^2*12/(30*max(1,D))")
    F, G, H = _reaction(p, state.c, state.u, state.v)
    c = state.c + dt * (laplacian_5pt(state.c, grid.dx) + F)
    u = state.u + dt * (laplacian_5pt(state.u, grid.dx) + G)
    v = state.v + dt * (D * laplacian_5pt(state.v, grid.dx) + H)
    for name, arr in (("c", c), ("u", u), ("v", v)):
        bad = ~np.isfinite(arr)
        if np.any(bad):
            raise IntegrationError(
                f"non-finite {name} at node {int(np.flatnonzero(bad)[0])} "
                f"after step to t={state.time + dt}")
    # same clamp/flush policy as the compiled loop (negatives and
    # denormal-scale values go to exact zero)
    c[c < _kernels.TINY_FLUSH] = 0.0
    u[u < _kernels.TINY_FLUSH] = 0.0
    v[v < _kernels.TINY_FLUSH] = 0.0
    return FieldState(c=c, u=u, v=v, time=state.time + dt)


def _reference_cstar(p: ModelParams, ic: FieldState) -> float:
    """Oxygen level of the coexistence equilibrium nearest the initial
    fields, used as the anoxia reference."""
    target = np.array([np.median(ic.c), np.median(ic.u), np.median(ic.v)])
    reports = coexistence_equilibria(p)
    if not reports:
        return float(target[0])
    best = min(reports, key=lambda r: np.max(np.abs(
        r.location.as_array() - target)))
    return best.location.c


def run(p: ModelParams, D: float, grid: Grid1D, ic: FieldState,
        dt: float = 0.01, t_end: float = 2000.0,
        snapshot_stride: int | None = None, c_star: float | None = None,
        anoxia_fraction: float = ANOXIA_FRACTION,
        reaction_enabled: bool = True) -> SpaceTimeRecord:
    """Integrate to t_end, snapshotting every snapshot_stride steps
    (default: every 50 time units).

    A GlobalAnoxia event is recorded the first time the spatial max of c
    drops below anoxia_fraction * c_star; a Blowup event halts the run.
    c_star defaults to the nearest coexistence equilibrium's oxygen level.
    """
    if D <= 0:
        raise ConfigError("D must be positive")
    if dt <= 0 or t_end <= 0:
        raise ConfigError("dt and t_end must be positive")
    bound = stability_bound(grid, D)
    if dt > bound:
        raise IntegrationError(
            f"dt={dt} exceeds the explicit stability bound {bound:.6g} "
            f"= 0.3*dx^2*12/(30*max(1,D))")
    if ic.c.size != grid.n:
        raise GridError("initial condition does not match the grid")
    nsteps = int(round(t_end / dt))
    if snapshot_stride is None:
        snapshot_stride = max(1, int(round(50.0 / dt)))
    if snapshot_stride < 1:
        raise ConfigError("snapshot_stride must be >= 1")
    if c_star is None:
        c_star = _reference_cstar(p, ic)

    snaps, nsnap, anoxia_step, blow_step = _kernels.pde_run(
        p.as_array(), ic.c.copy(), ic.u.copy(), ic.v.copy(), float(D),
        grid.dx, dt, nsteps, snapshot_stride,
        anoxia_fraction * c_star, reaction_enabled)

    times = ic.time + np.arange(nsnap) * (snapshot_stride * dt)
    snapshots = [FieldState(c=snaps[k, 0], u=snaps[k, 1], v=snaps[k, 2],
                            time=float(times[k])) for k in range(nsnap)]
    means = np.array([[trapezoid_mean(s.c, grid.dx, grid.L),
                       trapezoid_mean(s.u, grid.dx, grid.L),
                       trapezoid_mean(s.v, grid.dx, grid.L)]
                      for s in snapshots])
    events = []
    if anoxia_step >= 0:
        events.append((ic.time + anoxia_step * dt, "GlobalAnoxia"))
    if blow_step >= 0:
        events.append((ic.time + blow_step * dt, "Blowup"))
    return SpaceTimeRecord(grid=grid, times=times, snapshots=snapshots,
                           mean_series=means, events=events)
