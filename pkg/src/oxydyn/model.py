"""Right-hand sides and analytic Jacobians of the oxygen-plankton model.

The nonspatial system couples dissolved oxygen c, phytoplankton u, and
zooplankton v:

    dc/dt = F(c,u,v) = A*u/(c+1) - delta*u*c/(c+c2) - nu*c*v/(c+c3) - c
    du/dt = G(c,u,v) = (B*c/(c+c1) - u)*u - u*v/(u+h) - sigma*u
    dv/dt = eps*H(c,u,v),  H = eta*c^2/(c^2+c4^2)*u*v/(u+h) - mu1*v - mu2*v^2

All functions here are pure and total on the closed nonnegative orthant;
every denominator is strictly positive there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .errors import ConfigError, DomainError

__all__ = [
    "ModelParams",
    "State",
    "Jacobian3",
    "eval_rhs",
    "eval_jacobian",
    "eval_fast_jacobian",
]


@dataclass(frozen=True)
class ModelParams:
    """Model constants. The defaults are the reference parameter set used
    throughout; mu1, mu2, and eps are the quantities varied in studies."""

    A: float = 4.0
    B: float = 3.0
    sigma: float = 0.1
    c1: float = 0.7
    c2: float = 1.0
    c3: float = 1.0
    c4: float = 1.0
    eta: float = 0.7
    delta: float = 1.0
    nu: float = 0.01
    h: float = 0.1
    mu1: float = 0.0
    mu2: float = 0.0
    eps: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            val = getattr(self, f.name)
            if not isinstance(val, (int, float)) or isinstance(val, bool):
                raise ConfigError(f"parameter {f.name} must be a real number")
            object.__setattr__(self, f.name, float(val))
            if not math.isfinite(getattr(self, f.name)):
                raise ConfigError(f"parameter {f.name} must be finite")
        if self.A <= 0 or self.B <= 0:
            raise ConfigError("A and B must be positive")
        for name in ("c1", "c2", "c3", "c4", "h"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("sigma", "eta", "delta", "nu", "mu1", "mu2"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be nonnegative")
        if not (0.0 < self.eps <= 1.0):
            raise ConfigError("eps must lie in (0, 1]")

    def as_array(self) -> np.ndarray:
        """Parameters as a flat float array, in field declaration order.
        This is the layout the compiled kernels consume."""
        return np.array([getattr(self, f.name) for f in fields(self)])


@dataclass(frozen=True)
class State:
    """A point (c, u, v) in phase space."""

    c: float
    u: float
    v: float

    def __post_init__(self):
        for name in ("c", "u", "v"):
            val = float(getattr(self, name))
            object.__setattr__(self, name, val)
            if not math.isfinite(val):
                raise DomainError(f"state component {name} must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.c, self.u, self.v])

    @classmethod
    def from_array(cls, arr) -> "State":
        c, u, v = np.asarray(arr, dtype=float)
        return cls(float(c), float(u), float(v))


def _coerce(s) -> np.ndarray:
    if isinstance(s, State):
        return s.as_array()
    arr = np.asarray(s, dtype=float)
    if arr.shape != (3,):
        raise DomainError("state must have exactly three components")
    return arr


@dataclass(frozen=True)
class Jacobian3:
    """A 3x3 Jacobian with the cofactor accessors used by the
    characteristic polynomial and the dispersion relation."""

    m: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.m, dtype=float)
        if arr.shape != (3, 3):
            raise DomainError("Jacobian must be 3x3")
        if not np.all(np.isfinite(arr)):
            raise DomainError("Jacobian entries must be finite")
        object.__setattr__(self, "m", arr)

    def trace(self) -> float:
        return float(np.trace(self.m))

    def det(self) -> float:
        return float(np.linalg.det(self.m))

    def cofactor(self, i: int) -> float:
        """Principal cofactor: determinant of the 2x2 minor obtained by
        deleting row i and column i (0-based)."""
        keep = [j for j in range(3) if j != i]
        sub = self.m[np.ix_(keep, keep)]
        return float(sub[0, 0] * sub[1, 1] - sub[0, 1] * sub[1, 0])

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.m)


def eval_rhs(p: ModelParams, s) -> tuple[float, float, float]:
    """Evaluate (dc/dt, du/dt, dv/dt) = (F, G, eps*H) at a state.

    Accepts a State or any length-3 sequence.
    """
    c, u, v = _coerce(s)
    F = p.A * u / (c + 1.0) - p.delta * u * c / (c + p.c2) \
        - p.nu * c * v / (c + p.c3) - c
    G = (p.B * c / (c + p.c1) - u) * u - u * v / (u + p.h) - p.sigma * u
    H = p.eta * c * c / (c * c + p.c4 * p.c4) * u * v / (u + p.h) \
        - p.mu1 * v - p.mu2 * v * v
    out = (F, G, p.eps * H)
    if not all(math.isfinite(x) for x in out):
        raise DomainError(f"non-finite right-hand side at state {(c, u, v)}")
    return out


def eval_jacobian(p: ModelParams, s) -> Jacobian3:
    """Analytic Jacobian of (F, G, eps*H) with respect to (c, u, v)."""
    c, u, v = _coerce(s)
    Fc = -p.A * u / (c + 1.0) ** 2 - p.delta * u * p.c2 / (c + p.c2) ** 2 \
        - p.nu * v * p.c3 / (c + p.c3) ** 2 - 1.0
    Fu = p.A / (c + 1.0) - p.delta * c / (c + p.c2)
    Fv = -p.nu * c / (c + p.c3)
    Gc = p.B * p.c1 * u / (c + p.c1) ** 2
    Gu = p.B * c / (c + p.c1) - 2.0 * u - v * p.h / (u + p.h) ** 2 - p.sigma
    Gv = -u / (u + p.h)
    phi = c * c / (c * c + p.c4 * p.c4)
    phi_c = 2.0 * c * p.c4 * p.c4 / (c * c + p.c4 * p.c4) ** 2
    Hc = p.eta * phi_c * u * v / (u + p.h)
    Hu = p.eta * phi * v * p.h / (u + p.h) ** 2
    Hv = p.eta * phi * u / (u + p.h) - p.mu1 - 2.0 * p.mu2 * v
    e = p.eps
    return Jacobian3(np.array([
        [Fc, Fu, Fv],
        [Gc, Gu, Gv],
        [e * Hc, e * Hu, e * Hv],
    ]))


def eval_fast_jacobian(p: ModelParams, s) -> np.ndarray:
    """Jacobian of the fast subsystem (F, G) with respect to (c, u)."""
    return eval_jacobian(p, s).m[:2, :2].copy()
