"""Steady states of the nonspatial system and their linear stability.

Three families exist: the extinction state at the origin, zooplankton-free
boundary states (c, u, 0) whose c solves a quartic, and coexistence states
with all components positive.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .errors import DomainError
from .model import ModelParams, State, eval_jacobian, eval_rhs

__all__ = [
    "EquilibriumKind",
    "Stability",
    "EquilibriumReport",
    "extinction_state",
    "boundary_equilibria",
    "coexistence_equilibria",
]

MARGINAL_TOL = 1e-10
RESIDUAL_TOL = 1e-9
DEDUP_RADIUS = 1e-6


class EquilibriumKind(enum.Enum):
    EXTINCTION = "Extinction"
    ZOOPLANKTON_FREE = "ZooplanktonFree"
    COEXISTENCE = "Coexistence"


class Stability(enum.Enum):
    STABLE = "Stable"
    SADDLE = "Saddle"
    UNSTABLE = "Unstable"


@dataclass(frozen=True)
class EquilibriumReport:
    location: State
    kind: EquilibriumKind
    eigenvalues: np.ndarray
    stability: Stability | None
    unstable_dim: int
    marginal: bool


def classify_eigenvalues(eigs) -> tuple[Stability | None, int, bool]:
    """Map eigenvalue real parts to a stability label.

    Eigenvalues with |Re| below the marginal tolerance leave the label
    undetermined (None) and set the marginal flag; unstable_dim counts
    strictly positive real parts either way.
    """
    re = np.real(np.asarray(eigs))
    marginal = bool(np.any(np.abs(re) < MARGINAL_TOL))
    unstable_dim = int(np.sum(re > MARGINAL_TOL))
    if marginal:
        return None, unstable_dim, True
    if unstable_dim == 0:
        return Stability.STABLE, 0, False
    if unstable_dim == 3:
        return Stability.UNSTABLE, 3, False
    return Stability.SADDLE, unstable_dim, False


def _make_report(p: ModelParams, x, kind: EquilibriumKind,
                 eigenvalues=None) -> EquilibriumReport:
    x = np.asarray(x, dtype=float)
    resid = np.max(np.abs(eval_rhs(p, x)))
    if resid > RESIDUAL_TOL:
        raise DomainError(f"candidate equilibrium has residual {resid:.2e}")
    if eigenvalues is None:
        eigenvalues = eval_jacobian(p, x).eigenvalues()
    eigenvalues = np.asarray(eigenvalues, dtype=complex)
    eigenvalues = eigenvalues[np.argsort(eigenvalues.real)]
    stability, unstable_dim, marginal = classify_eigenvalues(eigenvalues)
    return EquilibriumReport(
        location=State.from_array(x), kind=kind, eigenvalues=eigenvalues,
        stability=stability, unstable_dim=unstable_dim, marginal=marginal)


def extinction_state(p: ModelParams) -> EquilibriumReport:
    """The total extinction state (0,0,0) with its analytic eigenvalues
    -1, -sigma, -eps*mu1."""
    eigs = np.array([-1.0, -p.sigma, -p.eps * p.mu1], dtype=complex)
    return _make_report(p, np.zeros(3), EquilibriumKind.EXTINCTION, eigs)


def _quartic_coeffs(p: ModelParams) -> np.ndarray:
    """Monic quartic in c whose positive roots give the zooplankton-free
    states, in descending powers."""
    A, B, sg, c1, c2, dl = p.A, p.B, p.sigma, p.c1, p.c2, p.delta
    a3 = -(dl * (sg - B) - (c1 + c2 + 1.0))
    a2 = -(A * (B - sg) + (dl * sg - c2 - 1.0) * c1 - B * dl + dl * sg - c2)
    a1 = -(((B - sg) * c2 - sg * c1) * A + dl * sg * c1 - c1 * c2)
    a0 = A * sg * c1 * c2
    return np.array([1.0, a3, a2, a1, a0])


def boundary_equilibria(p: ModelParams) -> list[EquilibriumReport]:
    """Zooplankton-free states, sorted by ascending c.

    The quartic is solved by the companion-matrix method (np.roots); real
    positive roots with positive phytoplankton density are kept and each
    candidate is Newton-refined on (F, G) with v=0.
    """
    roots = np.roots(_quartic_coeffs(p))
    out = []
    for r in roots:
        if abs(r.imag) >= 1e-8 or r.real <= 0:
            continue
        c = r.real
        u = ((p.B - p.sigma) * c - p.sigma * p.c1) / (c + p.c1)
        if u <= 0:
            continue

        def fun(x):
            return np.array(eval_rhs(p, (x[0], x[1], 0.0))[:2])

        def jac(x):
            return eval_jacobian(p, (x[0], x[1], 0.0)).m[:2, :2]

        sol = scipy.optimize.root(fun, np.array([c, u]), jac=jac, tol=1e-13)
        if not sol.success or np.any(sol.x <= 0):
            continue
        loc = np.array([sol.x[0], sol.x[1], 0.0])
        if any(np.max(np.abs(loc - q.location.as_array())) < DEDUP_RADIUS
               for q in out):
            continue
        out.append(_make_report(p, loc, EquilibriumKind.ZOOPLANKTON_FREE))
    out.sort(key=lambda q: q.location.c)
    return out


def _phi_terms(p, c):
    den = c * c + p.c4 * p.c4
    phi = c * c / den
    phi_c = 2.0 * c * p.c4 * p.c4 / den ** 2
    return phi, phi_c


def _fg_terms(p, c, u, v):
    """F, G and their partials, vectorized over arrays of states."""
    F = p.A * u / (c + 1.0) - p.delta * u * c / (c + p.c2) \
        - p.nu * c * v / (c + p.c3) - c
    G = (p.B * c / (c + p.c1) - u) * u - u * v / (u + p.h) - p.sigma * u
    Fc = -p.A * u / (c + 1.0) ** 2 - p.delta * u * p.c2 / (c + p.c2) ** 2 \
        - p.nu * v * p.c3 / (c + p.c3) ** 2 - 1.0
    Fu = p.A / (c + 1.0) - p.delta * c / (c + p.c2)
    Fv = -p.nu * c / (c + p.c3)
    Gc = p.B * p.c1 * u / (c + p.c1) ** 2
    Gu = p.B * c / (c + p.c1) - 2.0 * u - v * p.h / (u + p.h) ** 2 - p.sigma
    Gv = -u / (u + p.h)
    return F, G, Fc, Fu, Fv, Gc, Gu, Gv


def _newton_reduced(p: ModelParams, c, u, iters=80, ftol=1e-11):
    """Vectorized Newton on the reduced 2D system obtained by substituting
    the zooplankton nullcline v*(c, u) into F=0, G=0. Requires mu2 > 0."""
    c = c.copy()
    u = u.copy()
    alive = np.ones(c.shape, dtype=bool)
    for _ in range(iters):
        phi, phi_c = _phi_terms(p, c)
        w = u / (u + p.h)
        w_u = p.h / (u + p.h) ** 2
        v = (p.eta * phi * w - p.mu1) / p.mu2
        v_c = p.eta * w * phi_c / p.mu2
        v_u = p.eta * phi * w_u / p.mu2
        F, G, Fc, Fu, Fv, Gc, Gu, Gv = _fg_terms(p, c, u, v)
        J11 = Fc + Fv * v_c
        J12 = Fu + Fv * v_u
        J21 = Gc + Gv * v_c
        J22 = Gu + Gv * v_u
        det = J11 * J22 - J12 * J21
        with np.errstate(all="ignore"):
            dc = (-F * J22 + G * J12) / det
            du = (-G * J11 + F * J21) / det
        ok = alive & np.isfinite(dc) & np.isfinite(du)
        c = np.where(ok, c + dc, c)
        u = np.where(ok, u + du, u)
        alive = ok & (c > 1e-9) & (u > 1e-9) & (c < 50.0) & (u < 50.0)
        if not np.any(alive):
            break
    phi, _ = _phi_terms(p, c)
    v = (p.eta * phi * u / (u + p.h) - p.mu1) / p.mu2
    F, G = _fg_terms(p, c, u, v)[:2]
    good = alive & (np.abs(F) < ftol) & (np.abs(G) < ftol) & (v > 1e-9)
    return np.stack([c[good], u[good], v[good]], axis=1)


def _newton_full3(p: ModelParams, starts, iters=80, ftol=1e-11):
    """Vectorized Newton on (F, G, eta*phi(c)*u/(u+h) - mu1) for the
    mu2 = 0 case, where the zooplankton equation fixes the Monod factor
    instead of v."""
    x = starts.copy()
    alive = np.ones(len(x), dtype=bool)
    for _ in range(iters):
        c, u, v = x[:, 0], x[:, 1], x[:, 2]
        phi, phi_c = _phi_terms(p, c)
        w = u / (u + p.h)
        w_u = p.h / (u + p.h) ** 2
        F, G, Fc, Fu, Fv, Gc, Gu, Gv = _fg_terms(p, c, u, v)
        W = p.eta * phi * w - p.mu1
        J = np.empty((len(x), 3, 3))
        J[:, 0] = np.stack([Fc, Fu, Fv], axis=1)
        J[:, 1] = np.stack([Gc, Gu, Gv], axis=1)
        J[:, 2, 0] = p.eta * phi_c * w
        J[:, 2, 1] = p.eta * phi * w_u
        J[:, 2, 2] = 0.0
        rhs = -np.stack([F, G, W], axis=1)
        with np.errstate(all="ignore"):
            detJ = np.linalg.det(J)
            solvable = alive & (np.abs(detJ) > 1e-14)
            dx = np.zeros_like(x)
            if np.any(solvable):
                dx[solvable] = np.linalg.solve(
                    J[solvable], rhs[solvable][:, :, None])[:, :, 0]
        ok = solvable & np.all(np.isfinite(dx), axis=1)
        x = np.where(ok[:, None], x + dx, x)
        alive = ok & np.all(x > 1e-9, axis=1) & np.all(x < 50.0, axis=1)
        if not np.any(alive):
            break
    c, u, v = x[:, 0], x[:, 1], x[:, 2]
    phi, _ = _phi_terms(p, c)
    F, G = _fg_terms(p, c, u, v)[:2]
    W = p.eta * phi * u / (u + p.h) - p.mu1
    good = alive & (np.abs(F) < ftol) & (np.abs(G) < ftol) & (np.abs(W) < ftol)
    return x[good]


def _polish(p: ModelParams, x0) -> np.ndarray | None:
    def fun(x):
        return np.array(eval_rhs(p, x))

    def jac(x):
        return eval_jacobian(p, x).m

    sol = scipy.optimize.root(fun, x0, jac=jac, tol=1e-13)
    # judge by the residual, not the status flag: hybr reports failure
    # when started at (or within roundoff of) the root itself
    best = sol.x if np.max(np.abs(fun(sol.x))) <= np.max(np.abs(fun(x0))) \
        else np.asarray(x0, dtype=float)
    if np.any(best <= 0) or np.max(np.abs(fun(best))) > RESIDUAL_TOL:
        return None
    return best


def coexistence_equilibria(p: ModelParams, grid_bounds=(0.0, 5.0),
                           grid_n: int = 40,
                           extra_starts=None) -> list[EquilibriumReport]:
    """All coexistence states found by multistart Newton, sorted by (c, u).

    Starts are placed on a grid_n x grid_n grid over (c, u) in the open-low
    box (grid_bounds[0], grid_bounds[1]]^2. extra_starts, if given, is an
    iterable of (c, u, v) warm-start points appended to the grid (used by
    continuation-style callers). An empty list is a valid result.
    """
    lo, hi = grid_bounds
    pts = lo + (hi - lo) * np.arange(1, grid_n + 1) / grid_n
    cg, ug = np.meshgrid(pts, pts, indexing="ij")
    cg, ug = cg.ravel(), ug.ravel()

    if p.mu2 > 0:
        if extra_starts is not None and len(extra_starts):
            extra = np.asarray(extra_starts, dtype=float)
            cg = np.concatenate([cg, extra[:, 0]])
            ug = np.concatenate([ug, extra[:, 1]])
        found = _newton_reduced(p, cg, ug)
    elif p.mu1 > 0:
        vg = np.array([0.3, 1.0, 2.5])
        starts = np.stack([
            np.repeat(cg, vg.size),
            np.repeat(ug, vg.size),
            np.tile(vg, cg.size),
        ], axis=1)
        if extra_starts is not None and len(extra_starts):
            starts = np.concatenate(
                [starts, np.asarray(extra_starts, dtype=float)])
        found = _newton_full3(p, starts)
    else:
        # mu1 = mu2 = 0: the zooplankton equation is eta*phi*w*v = 0,
        # which has no solution with c, u, v all positive.
        return []

    if len(found):
        # collapse near-identical Newton limits before the polish pass
        found = np.unique(np.round(found, 8), axis=0)

    reports = []
    kept = []
    for x0 in found:
        x = _polish(p, x0)
        if x is None:
            continue
        if any(np.max(np.abs(x - y)) < DEDUP_RADIUS for y in kept):
            continue
        kept.append(x)
        reports.append(_make_report(p, x, EquilibriumKind.COEXISTENCE))
    reports.sort(key=lambda q: (q.location.c, q.location.u))
    return reports
