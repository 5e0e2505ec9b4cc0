"""Routh-Hurwitz analysis, Hopf and saddle-node thresholds, a numerical
criticality probe, and simulation-based one-parameter bifurcation diagrams.
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass, field

import numpy as np

from .equilibria import (EquilibriumReport, Stability,
                         coexistence_equilibria, boundary_equilibria,
                         extinction_state)
from .errors import BracketError, BranchError, ConfigError
from .integrate import EXTINCTION_THRESHOLD, integrate
from .model import Jacobian3, ModelParams, eval_jacobian

__all__ = [
    "CharPoly",
    "char_poly",
    "routh_hurwitz_stable",
    "hopf_threshold",
    "saddle_node_threshold",
    "Criticality",
    "CriticalityResult",
    "criticality_probe",
    "AttractorKind",
    "AttractorSummary",
    "attractor_classify",
    "ThresholdKind",
    "DiagramSample",
    "BifurcationDiagram",
    "bifurcation_diagram",
]

VARIABLE_PARAMS = ("mu1", "mu2")


@dataclass(frozen=True)
class CharPoly:
    """Coefficients of lambda^3 + p2*lambda^2 + p1*lambda + p0."""

    p2: float
    p1: float
    p0: float


def char_poly(J: Jacobian3) -> CharPoly:
    p2 = -J.trace()
    p1 = J.cofactor(0) + J.cofactor(1) + J.cofactor(2)
    p0 = -J.det()
    return CharPoly(p2=p2, p1=p1, p0=p0)


def routh_hurwitz_stable(cp: CharPoly) -> bool:
    """True iff all roots of the cubic have negative real part:
    p0 > 0, p2 > 0, p1*p2 > p0 (all strict)."""
    return cp.p0 > 0 and cp.p2 > 0 and cp.p1 * cp.p2 > cp.p0


def _with_param(p: ModelParams, which: str, value: float) -> ModelParams:
    if which not in VARIABLE_PARAMS:
        raise ConfigError(f"threshold parameter must be one of "
                          f"{VARIABLE_PARAMS}, got {which!r}")
    return dataclasses.replace(p, **{which: float(value)})


def _nearest(reports, ref: np.ndarray) -> EquilibriumReport:
    """Report whose location is nearest ref in max-norm; ties toward
    larger c."""
    return min(reports, key=lambda r: (np.max(np.abs(
        r.location.as_array() - ref)), -r.location.c))


class _BranchTracker:
    """Follows one coexistence branch continuously across parameter values,
    warm-starting the solver from everything found so far."""

    def __init__(self, p: ModelParams, which: str):
        self.p = p
        self.which = which
        self.count = None
        self.ref = None
        self._starts = []

    def solve(self, value: float):
        pv = _with_param(self.p, self.which, value)
        reports = coexistence_equilibria(pv, extra_starts=self._starts)
        locs = [r.location.as_array() for r in reports]
        self._starts = locs
        return pv, reports

    def track(self, value: float) -> tuple[ModelParams, EquilibriumReport]:
        pv, reports = self.solve(value)
        if not reports:
            raise BranchError(
                f"no coexistence equilibrium at {self.which}={value}")
        if self.count is None:
            self.count = len(reports)
        elif len(reports) != self.count:
            raise BranchError(
                f"equilibria count changed from {self.count} to "
                f"{len(reports)} at {self.which}={value}; branch lost")
        if self.ref is None:
            rep = reports[-1]  # largest c at the first value
        else:
            rep = _nearest(reports, self.ref)
        self.ref = rep.location.as_array()
        return pv, rep


def hopf_threshold(p: ModelParams, which: str, bracket,
                   tol: float = 1e-6, walk_steps: int = 16) -> float:
    """Locate the parameter value where p1*p2 - p0 = 0 on the tracked
    coexistence branch, by bisection to bracket width below tol.

    The branch with the largest c at the bracket start is followed by
    nearest-solution tracking; the bracket is first walked in walk_steps
    sub-steps so tracking stays continuous, then the sign-change
    sub-interval is bisected. At the root p1 > 0 is checked so the
    crossing is a genuine conjugate pair.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not (lo < hi):
        raise ConfigError("bracket must satisfy lo < hi")
    tracker = _BranchTracker(p, which)

    def h(value: float) -> float:
        pv, rep = tracker.track(value)
        cp = char_poly(eval_jacobian(pv, rep.location.as_array()))
        return cp.p1 * cp.p2 - cp.p0

    values = np.linspace(lo, hi, walk_steps + 1)
    hs = []
    walk_failure = None
    for v in values:
        try:
            hs.append(h(v))
        except BranchError as exc:
            # the branch may leave the feasible region past the crossing
            # (v* through 0); keep the walked prefix and look for the sign
            # change there
            walk_failure = exc
            break
    if len(hs) < 2:
        raise BracketError(
            f"coexistence branch not followable from {which}={lo}: "
            f"{walk_failure}")
    values = values[:len(hs)]
    sub = None
    for a, b, ha, hb in zip(values, values[1:], hs, hs[1:]):
        if ha == 0.0:
            sub = (a, a, ha, ha)
            break
        if ha * hb < 0:
            sub = (a, b, ha, hb)
            break
    if sub is None:
        if walk_failure is not None:
            raise BranchError(
                f"branch lost inside [{lo}, {hi}] before any sign change "
                f"of p1*p2 - p0: {walk_failure}")
        raise BracketError(
            f"p1*p2 - p0 does not change sign over [{lo}, {hi}] "
            f"(endpoint values {hs[0]:.3e}, {hs[-1]:.3e})")
    a, b, ha, hb = sub
    while b - a > tol:
        mid = 0.5 * (a + b)
        hm = h(mid)
        if ha * hm <= 0:
            b, hb = mid, hm
        else:
            a, ha = mid, hm
    root = 0.5 * (a + b)
    pv, rep = tracker.track(root)
    cp = char_poly(eval_jacobian(pv, rep.location.as_array()))
    if cp.p1 <= 0:
        raise BranchError(
            f"p1 = {cp.p1:.3e} <= 0 at the crossing; not a genuine Hopf "
            f"(no conjugate pair on the imaginary axis)")
    return root


def saddle_node_threshold(p: ModelParams, which: str, bracket,
                          tol: float = 1e-6) -> float:
    """Locate a change in the number of coexistence equilibria by
    bisection on the count."""
    lo, hi = float(bracket[0]), float(bracket[1])
    if not (lo < hi):
        raise ConfigError("bracket must satisfy lo < hi")

    def count(value: float) -> int:
        return len(coexistence_equilibria(_with_param(p, which, value)))

    n_lo, n_hi = count(lo), count(hi)
    if n_lo == n_hi:
        raise BracketError(
            f"coexistence count is {n_lo} at both bracket ends; "
            f"no saddle-node inside [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if count(mid) == n_hi:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


class AttractorKind(enum.Enum):
    STEADY_STATE = "SteadyState"
    LIMIT_CYCLE = "LimitCycle"
    EXTINCTION = "Extinction"


@dataclass(frozen=True)
class AttractorSummary:
    kind: AttractorKind
    c_mean: float
    c_min: float
    c_max: float
    period: float | None = None


def attractor_classify(p: ModelParams, ic, t_transient: float = 2000.0,
                       t_window: float = 1000.0,
                       dt: float = 1e-3) -> AttractorSummary:
    """Integrate past a transient and label the long-time behavior.

    Extinction when all components end below the extinction threshold;
    SteadyState when the peak-to-peak of c over the window is below 1e-4;
    LimitCycle otherwise, with the period estimated from successive maxima
    of c. Blow-up raises IntegrationError (from the integrator).
    """
    if t_transient < 500 or t_window < 500:
        raise ConfigError("t_transient and t_window must be >= 500")
    stride = max(1, int(round(0.1 / dt)))
    traj = integrate(p, ic, dt=dt, t_end=t_transient + t_window,
                     record_stride=stride)
    final = traj.final_state()
    if np.all(final < EXTINCTION_THRESHOLD):
        return AttractorSummary(kind=AttractorKind.EXTINCTION,
                                c_mean=0.0, c_min=0.0, c_max=0.0)
    window = traj.window(t_transient)
    cw = window[:, 0]
    c_mean = float(cw.mean())
    c_min, c_max = float(cw.min()), float(cw.max())
    if c_max - c_min < 1e-4:
        return AttractorSummary(kind=AttractorKind.STEADY_STATE,
                                c_mean=c_mean, c_min=c_min, c_max=c_max)
    interior = (cw[1:-1] > cw[:-2]) & (cw[1:-1] >= cw[2:])
    peaks = np.flatnonzero(interior) + 1
    period = None
    if len(peaks) >= 2:
        dt_rec = dt * stride
        period = float(np.mean(np.diff(peaks)) * dt_rec)
    return AttractorSummary(kind=AttractorKind.LIMIT_CYCLE, c_mean=c_mean,
                            c_min=c_min, c_max=c_max, period=period)


class Criticality(enum.Enum):
    SUPERCRITICAL = "Supercritical"
    SUBCRITICAL = "Subcritical"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class CriticalityResult:
    verdict: Criticality
    evidence: dict


def criticality_probe(p: ModelParams, which: str, threshold: float,
                      delta: float | None = None, small_disp: float = 1e-3,
                      large_disp: float = 0.2, amplitude_cut: float = 0.5,
                      t_transient: float = 2000.0, t_window: float = 1000.0,
                      dt: float = 1e-3) -> CriticalityResult:
    """Decide Hopf criticality by simulating on both sides of a threshold.

    On the linearly unstable side, a small perturbation that settles into
    a small-amplitude cycle around the equilibrium means supercritical;
    escape (extinction, a large cycle, or settling far from the
    equilibrium) means subcritical. The linearly stable side is checked
    for decay; for the subcritical case the stable side is additionally
    probed with a larger displacement and the outcome recorded as
    evidence.
    """
    if delta is None:
        delta = 1e-3 * max(abs(threshold), 1.0)
    tracker = _BranchTracker(p, which)
    _, rep0 = tracker.track(threshold)
    eq0 = rep0.location.as_array()

    sides = {}
    for sign in (-1.0, +1.0):
        value = threshold + sign * delta
        pv, reports = tracker.solve(value)
        if not reports:
            raise BranchError(
                f"no coexistence equilibrium at {which}={value}")
        rep = _nearest(reports, eq0)
        eq = rep.location.as_array()
        max_re = float(np.max(rep.eigenvalues.real))
        sides[sign] = (pv, eq, max_re)

    unstable_sign = max(sides, key=lambda s: sides[s][2])
    stable_sign = -unstable_sign
    evidence = {
        "threshold": threshold,
        "delta": delta,
        "unstable_side": threshold + unstable_sign * delta,
        "stable_side": threshold + stable_sign * delta,
        "max_re_unstable": sides[unstable_sign][2],
        "max_re_stable": sides[stable_sign][2],
    }
    if sides[unstable_sign][2] <= 0 or sides[stable_sign][2] >= 0:
        return CriticalityResult(Criticality.INDETERMINATE, evidence)

    def run(sign, disp):
        pv, eq, _ = sides[sign]
        ic = eq + np.array([disp, 0.0, 0.0])
        return pv, eq, attractor_classify(pv, ic, t_transient=t_transient,
                                          t_window=t_window, dt=dt)

    def near_eq(summary, eq):
        return abs(summary.c_mean - eq[0]) < 0.05 * max(1.0, abs(eq[0]))

    _, eq_u, unstable_out = run(unstable_sign, small_disp)
    evidence["unstable_small_disp"] = unstable_out
    if unstable_out.kind is AttractorKind.LIMIT_CYCLE \
            and unstable_out.c_max - unstable_out.c_min < amplitude_cut \
            and near_eq(unstable_out, eq_u):
        unstable_verdict = "small_cycle"
    elif unstable_out.kind is AttractorKind.STEADY_STATE \
            and near_eq(unstable_out, eq_u):
        unstable_verdict = "no_growth"
    else:
        unstable_verdict = "escape"
    evidence["unstable_verdict"] = unstable_verdict

    _, eq_s, stable_out = run(stable_sign, small_disp)
    evidence["stable_small_disp"] = stable_out
    decays = stable_out.kind is AttractorKind.STEADY_STATE \
        and near_eq(stable_out, eq_s)
    evidence["stable_decays"] = decays

    if unstable_verdict == "small_cycle" and decays:
        return CriticalityResult(Criticality.SUPERCRITICAL, evidence)
    if unstable_verdict == "escape" and decays:
        _, _, large_out = run(stable_sign, large_disp)
        evidence["stable_large_disp"] = large_out
        return CriticalityResult(Criticality.SUBCRITICAL, evidence)
    return CriticalityResult(Criticality.INDETERMINATE, evidence)


class ThresholdKind(enum.Enum):
    HOPF = "Hopf"
    SADDLE_NODE = "SaddleNode"
    CYCLE_DISAPPEARANCE = "CycleDisappearance"


@dataclass(frozen=True)
class DiagramSample:
    value: float
    equilibria: list
    near: AttractorSummary | None
    far: AttractorSummary | None
    error: str | None = None


@dataclass
class BifurcationDiagram:
    parameter: str
    values: np.ndarray
    samples: list
    thresholds: list = field(default_factory=list)


def bifurcation_diagram(p: ModelParams, which: str, prange, n_samples: int,
                        t_transient: float = 2000.0, t_window: float = 1000.0,
                        dt: float = 1e-3) -> BifurcationDiagram:
    """Sweep one parameter, recording equilibria and simulated attractors,
    and flag Hopf, saddle-node, and cycle-disappearance events between
    adjacent samples.

    The near seed is the tracked coexistence equilibrium displaced by
    1e-2 in c; the far seed is 1.5x the equilibrium. Per-sample failures
    are recorded on the sample and do not abort the sweep.
    """
    if n_samples < 2:
        raise ConfigError("n_samples must be >= 2")
    lo, hi = float(prange[0]), float(prange[1])
    if not (lo < hi):
        raise ConfigError("range must satisfy lo < hi")
    values = np.linspace(lo, hi, n_samples)

    samples = []
    ref = None
    starts = []
    for value in values:
        pv = _with_param(p, which, value)
        try:
            coex = coexistence_equilibria(pv, extra_starts=starts)
            starts = [r.location.as_array() for r in coex]
            reports = [extinction_state(pv)] + boundary_equilibria(pv) + coex
            near = far = None
            tracked = None
            if coex:
                tracked = coex[-1] if ref is None else _nearest(coex, ref)
                ref = tracked.location.as_array()
                near = attractor_classify(
                    pv, ref + np.array([1e-2, 0.0, 0.0]),
                    t_transient=t_transient, t_window=t_window, dt=dt)
                far = attractor_classify(
                    pv, 1.5 * ref, t_transient=t_transient,
                    t_window=t_window, dt=dt)
            samples.append(DiagramSample(value=float(value),
                                         equilibria=reports,
                                         near=near, far=far))
        except Exception as exc:  # noqa: BLE001 - samples fail independently
            samples.append(DiagramSample(value=float(value), equilibria=[],
                                         near=None, far=None,
                                         error=f"{type(exc).__name__}: {exc}"))

    thresholds = []
    for a, b in zip(samples, samples[1:]):
        if a.error or b.error:
            continue
        mid = 0.5 * (a.value + b.value)
        coex_a = [r for r in a.equilibria
                  if r.kind.value == "Coexistence"]
        coex_b = [r for r in b.equilibria
                  if r.kind.value == "Coexistence"]
        if len(coex_a) != len(coex_b):
            thresholds.append((mid, ThresholdKind.SADDLE_NODE))
            continue
        hopf_here = False
        if coex_a and coex_b:
            ra = _nearest(coex_a, coex_b[-1].location.as_array())
            rb = _nearest(coex_b, ra.location.as_array())
            if (ra.stability is Stability.STABLE) != \
                    (rb.stability is Stability.STABLE):
                pair_a = np.sum(np.abs(ra.eigenvalues.imag) > 1e-8)
                pair_b = np.sum(np.abs(rb.eigenvalues.imag) > 1e-8)
                if pair_a >= 2 or pair_b >= 2:
                    thresholds.append((mid, ThresholdKind.HOPF))
                    hopf_here = True
        if not hopf_here:
            for seed_a, seed_b in ((a.near, b.near), (a.far, b.far)):
                if seed_a is None or seed_b is None:
                    continue
                kinds = {seed_a.kind, seed_b.kind}
                if AttractorKind.LIMIT_CYCLE in kinds and len(kinds) == 2:
                    thresholds.append(
                        (mid, ThresholdKind.CYCLE_DISAPPEARANCE))
                    break

    return BifurcationDiagram(parameter=which, values=values,
                              samples=samples, thresholds=thresholds)
