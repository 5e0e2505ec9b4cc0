"""Slow-fast decomposition: critical manifold, folds, and the slow flow.

The critical manifold is the one-dimensional set {F=0, G=0} in (c, u, v)
space (it does not involve mu1, mu2, or eps). Points where the fast
Jacobian (the (c,u) block) is singular are fold points; the slow flow is
the reduced dynamics obtained by differentiating the constraints.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .errors import ConfigError, ManifoldError, SeedError
from .model import ModelParams, State, eval_fast_jacobian, eval_rhs

__all__ = [
    "ManifoldBranch",
    "FoldKind",
    "FoldPoint",
    "trace_critical_manifold",
    "find_folds",
    "trivial_manifold_eigs",
    "slow_flow_integrate",
]

MANIFOLD_RESIDUAL = 1e-10
FOLD_DET_TOL = 1e-7
CANARD_DEGENERACY_TOL = 1e-4
DOMAIN_LO, DOMAIN_HI = 0.0, 10.0


def _fg(p: ModelParams, x) -> np.ndarray:
    F, G, _ = eval_rhs(p, x)
    return np.array([F, G])


def _fg_grads(p: ModelParams, x):
    """Gradients of F and G with respect to (c, u, v)."""
    c, u, v = x
    Fc = -p.A * u / (c + 1.0) ** 2 - p.delta * u * p.c2 / (c + p.c2) ** 2 \
        - p.nu * v * p.c3 / (c + p.c3) ** 2 - 1.0
    Fu = p.A / (c + 1.0) - p.delta * c / (c + p.c2)
    Fv = -p.nu * c / (c + p.c3)
    Gc = p.B * p.c1 * u / (c + p.c1) ** 2
    Gu = p.B * c / (c + p.c1) - 2.0 * u - v * p.h / (u + p.h) ** 2 - p.sigma
    Gv = -u / (u + p.h)
    return np.array([Fc, Fu, Fv]), np.array([Gc, Gu, Gv])


def _refine_onto_manifold(p: ModelParams, x0, fixed_tangent=None):
    """Newton-refine a point onto {F=0, G=0}.

    Without a tangent the correction is least-norm (two equations, three
    unknowns). With one, the step stays in the plane orthogonal to it.
    """
    x = np.asarray(x0, dtype=float).copy()
    for _ in range(50):
        f = _fg(p, x)
        if np.max(np.abs(f)) < MANIFOLD_RESIDUAL:
            return x
        gF, gG = _fg_grads(p, x)
        J = np.stack([gF, gG])
        if fixed_tangent is None:
            dx, *_ = np.linalg.lstsq(J, -f, rcond=None)
        else:
            J3 = np.vstack([J, fixed_tangent])
            rhs = np.array([-f[0], -f[1], 0.0])
            try:
                dx = np.linalg.solve(J3, rhs)
            except np.linalg.LinAlgError:
                return None
        x = x + dx
        if not np.all(np.isfinite(x)):
            return None
    return None


def _tangent(p: ModelParams, x, prev=None) -> np.ndarray:
    """Unit tangent of the manifold: cross product of the two constraint
    gradients, oriented to continue prev when given."""
    gF, gG = _fg_grads(p, x)
    t = np.cross(gF, gG)
    norm = np.linalg.norm(t)
    if norm < 1e-14:
        raise ManifoldError("degenerate tangent (parallel gradients)")
    t = t / norm
    if prev is not None and np.dot(t, prev) < 0:
        t = -t
    return t


@dataclass
class ManifoldBranch:
    """An ordered polyline of points on the critical manifold.

    fast_eigs[i] holds the two eigenvalues of the fast Jacobian at
    points[i]; attracting[i] is True when both real parts are negative.
    fold_indices marks sign changes of the fast-Jacobian determinant
    between consecutive points.
    """

    points: np.ndarray
    fast_eigs: np.ndarray
    attracting: np.ndarray
    fold_indices: list


def _fast_det(p: ModelParams, x) -> float:
    m = eval_fast_jacobian(p, x)
    return float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])


def trace_critical_manifold(p: ModelParams, seed, arc_step: float = 0.01,
                            max_points: int = 2000) -> ManifoldBranch:
    """Trace {F=0, G=0} through a seed by pseudo-arclength continuation.

    Both directions from the seed are traced; the result is ordered along
    the curve. Tracing stops at max_points, when a coordinate leaves
    [0, 10], or when the Newton corrector fails.
    """
    if arc_step <= 0:
        raise ConfigError("arc_step must be positive")
    if isinstance(seed, State):
        seed = seed.as_array()
    x0 = _refine_onto_manifold(p, seed)
    if x0 is None:
        raise SeedError(f"seed {tuple(np.asarray(seed))} could not be "
                        f"refined onto the critical manifold")

    def march(direction):
        pts = []
        x = x0.copy()
        t = _tangent(p, x) * direction
        while len(pts) < max_points // 2:
            pred = x + arc_step * t
            nxt = _refine_onto_manifold(p, pred, fixed_tangent=t)
            if nxt is None:
                break
            if np.any(nxt < DOMAIN_LO) or np.any(nxt > DOMAIN_HI):
                break
            pts.append(nxt)
            t = _tangent(p, nxt, prev=t)
            x = nxt
        return pts

    backward = march(-1.0)
    forward = march(+1.0)
    pts = list(reversed(backward)) + [x0] + forward
    points = np.array(pts)

    fast_eigs = np.empty((len(points), 2), dtype=complex)
    attracting = np.empty(len(points), dtype=bool)
    dets = np.empty(len(points))
    for i, x in enumerate(points):
        m = eval_fast_jacobian(p, x)
        e = np.linalg.eigvals(m)
        fast_eigs[i] = e[np.argsort(e.real)]
        attracting[i] = bool(np.all(e.real < 0))
        dets[i] = _fast_det(p, x)
    fold_indices = [int(i) for i in np.flatnonzero(dets[:-1] * dets[1:] < 0)]
    return ManifoldBranch(points=points, fast_eigs=fast_eigs,
                          attracting=attracting, fold_indices=fold_indices)


class FoldKind(enum.Enum):
    JUMP = "Jump"
    CANARD = "Canard"


@dataclass(frozen=True)
class FoldPoint:
    location: State
    kind: FoldKind
    degeneracy: tuple
    det_residual: float


def _degeneracy_values(p: ModelParams, x) -> tuple:
    """The two combinations (Fv*Gu - Fu*Gv, Fv*Gc - Fc*Gv) whose joint
    vanishing at a fold marks a canard point."""
    gF, gG = _fg_grads(p, x)
    Fc, Fu, Fv = gF
    Gc, Gu, Gv = gG
    return (float(Fv * Gu - Fu * Gv), float(Fv * Gc - Fc * Gv))


def find_folds(branch: ManifoldBranch, p: ModelParams) -> list:
    """Fold points of a traced branch, refined by bisection along the
    connecting segments until |det| <= 1e-7.

    A fold is classified Jump when either degeneracy value exceeds 1e-4
    in magnitude, else Canard; the raw values are always reported.
    """
    if len(branch.points) < 2:
        raise ConfigError("branch must contain at least 2 points")
    folds = []
    for i in branch.fold_indices:
        a = branch.points[i].copy()
        b = branch.points[i + 1].copy()
        da = _fast_det(p, a)
        x = 0.5 * (a + b)
        for _ in range(200):
            x = _refine_onto_manifold(p, 0.5 * (a + b))
            if x is None:
                break
            dx = _fast_det(p, x)
            if abs(dx) <= FOLD_DET_TOL:
                break
            if da * dx < 0:
                b = x
            else:
                a, da = x, dx
        if x is None or abs(_fast_det(p, x)) > FOLD_DET_TOL:
            continue
        deg = _degeneracy_values(p, x)
        kind = FoldKind.JUMP if max(abs(deg[0]), abs(deg[1])) \
            > CANARD_DEGENERACY_TOL else FoldKind.CANARD
        folds.append(FoldPoint(location=State.from_array(x), kind=kind,
                               degeneracy=deg,
                               det_residual=abs(_fast_det(p, x))))
    return folds


def trivial_manifold_eigs(p: ModelParams, v: float) -> tuple:
    """Fast eigenvalues on the trivial manifold {c=0, u=0}:
    (-1 - nu*v/c3, -v/h - sigma). Both are negative for all v >= 0."""
    if v < 0:
        raise ConfigError("v must be nonnegative")
    return (-1.0 - p.nu * v / p.c3, -v / p.h - p.sigma)


def _slow_rates(p: ModelParams, x):
    gF, gG = _fg_grads(p, x)
    Fc, Fu, Fv = gF
    Gc, Gu, Gv = gG
    H = eval_rhs(p, x)[2] / p.eps
    denom = Fc * Gu - Fu * Gc
    dc = -(Fv * Gu - Fu * Gv) / denom * H
    du = -(Fv * Gc - Fc * Gv) / (Gc * Fu - Gu * Fc) * H
    return np.array([dc, du, H]), denom


def slow_flow_integrate(p: ModelParams, start, dtau: float = 1e-3,
                        t_end: float = 10.0):
    """Integrate the reduced slow flow on the critical manifold with RK4,
    projecting back onto {F=0, G=0} after every step.

    Returns (times, states, reason) with reason "Completed" or
    "FoldSingularity" (the reduced vector field blows up where the fast
    Jacobian determinant Fc*Gu - Fu*Gc vanishes).
    """
    if dtau <= 0 or t_end <= 0:
        raise ConfigError("dtau and t_end must be positive")
    if isinstance(start, State):
        start = start.as_array()
    x = np.asarray(start, dtype=float).copy()
    if np.max(np.abs(_fg(p, x))) > 1e-8:
        raise SeedError("start point is not on the critical manifold")

    nsteps = int(round(t_end / dtau))
    times = [0.0]
    states = [x.copy()]
    reason = "Completed"
    for i in range(nsteps):
        r1, den = _slow_rates(p, x)
        if abs(den) < 1e-5:
            reason = "FoldSingularity"
            break
        r2 = _slow_rates(p, x + 0.5 * dtau * r1)[0]
        r3 = _slow_rates(p, x + 0.5 * dtau * r2)[0]
        r4 = _slow_rates(p, x + dtau * r3)[0]
        cand = x + dtau / 6.0 * (r1 + 2.0 * r2 + 2.0 * r3 + r4)
        proj = _refine_onto_manifold(p, cand)
        if proj is None:
            raise ManifoldError(
                f"projection onto the critical manifold failed at "
                f"tau={times[-1] + dtau:.4f}")
        den_new = _slow_rates(p, proj)[1]
        if abs(den_new) < 1e-5 or den * den_new < 0:
            # crossed or reached the fold within one step; stop without
            # committing the point on the far sheet
            reason = "FoldSingularity"
            break
        x = proj
        times.append((i + 1) * dtau)
        states.append(x.copy())
    return np.array(times), np.array(states), reason
