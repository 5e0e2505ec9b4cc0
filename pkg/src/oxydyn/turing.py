"""Diffusion-driven (Turing) instability of a homogeneous steady state.

For perturbations ~ exp(lambda t + i k x) the growth rates solve
lambda^3 + p2(k^2) lambda^2 + p1(k^2) lambda + p0(k^2) = 0 with the
diffusivity vector (1, 1, D). Instability of a temporally stable state
requires p0(k^2) < 0 at some wavenumber.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .model import Jacobian3, ModelParams, eval_jacobian
from .stability import CharPoly, char_poly, routh_hurwitz_stable

__all__ = [
    "TuringVerdict",
    "DispersionCurve",
    "dispersion_coeffs",
    "turing_test",
    "critical_wavenumber",
]


class TuringVerdict(enum.Enum):
    NO_INSTABILITY = "NoInstability"
    TURING = "Turing"
    TURING_HOPF = "TuringHopf"


@dataclass
class DispersionCurve:
    """Sampled dispersion relation and the instability verdict.

    samples columns: k^2, p2, p1, p0, max_growth (largest real part of
    the three roots). unstable_band is the (k^2_lo, k^2_hi) interval where
    p0 < 0, or None.
    """

    samples: np.ndarray
    verdict: TuringVerdict
    unstable_band: tuple | None


def dispersion_coeffs(J: Jacobian3, D: float, k2: float) -> tuple:
    """Characteristic-polynomial coefficients at squared wavenumber k2."""
    if k2 < 0:
        raise ConfigError("k2 must be nonnegative")
    if D <= 0:
        raise ConfigError("D must be positive")
    m = J.m
    tr = J.trace()
    cof = (J.cofactor(0), J.cofactor(1), J.cofactor(2))
    p2 = (2.0 + D) * k2 - tr
    p1 = (1.0 + 2.0 * D) * k2 * k2 \
        - ((m[1, 1] + m[2, 2]) + (m[0, 0] + m[2, 2])
           + D * (m[0, 0] + m[1, 1])) * k2 \
        + (cof[0] + cof[1] + cof[2])
    p0 = D * k2 ** 3 \
        - ((m[0, 0] + m[1, 1]) * D + m[2, 2]) * k2 * k2 \
        + (cof[0] + cof[1] + cof[2] * D) * k2 \
        - J.det()
    return p2, p1, p0


def _max_growth(p2: float, p1: float, p0: float) -> float:
    return float(np.max(np.roots([1.0, p2, p1, p0]).real))


def turing_test(p: ModelParams, eq, D: float, k2_max: float = 4.0,
                dk2: float = 1e-3) -> DispersionCurve:
    """Sample the dispersion relation over k^2 in [0, k2_max].

    Verdict Turing requires temporal stability at k=0 (p2>0, p0>0,
    p1*p2>p0) together with p0(k^2) < 0 somewhere; TuringHopf flags a band
    of p0 < 0 without k=0 stability; otherwise NoInstability.
    """
    J = eval_jacobian(p, eq)
    k2s = np.arange(0.0, k2_max + dk2 / 2, dk2)
    samples = np.empty((k2s.size, 5))
    for i, k2 in enumerate(k2s):
        p2, p1, p0 = dispersion_coeffs(J, D, float(k2))
        samples[i] = (k2, p2, p1, p0, _max_growth(p2, p1, p0))

    p0s = samples[:, 3]
    homogeneous_stable = routh_hurwitz_stable(
        CharPoly(p2=samples[0, 1], p1=samples[0, 2], p0=samples[0, 3]))
    band = None
    neg = np.flatnonzero(p0s < 0)
    if neg.size:
        i0, i1 = int(neg[0]), int(neg[-1])

        def cross(i, j):
            # linear interpolation of the p0 zero between samples i and j
            if p0s[j] == p0s[i]:
                return float(k2s[i])
            return float(k2s[i] + (k2s[j] - k2s[i])
                         * (0.0 - p0s[i]) / (p0s[j] - p0s[i]))

        lo = cross(i0 - 1, i0) if i0 > 0 else float(k2s[0])
        hi = cross(i1 + 1, i1) if i1 + 1 < k2s.size else float(k2s[-1])
        band = (lo, hi)

    if band is not None and homogeneous_stable:
        verdict = TuringVerdict.TURING
    elif band is not None:
        verdict = TuringVerdict.TURING_HOPF
    else:
        verdict = TuringVerdict.NO_INSTABILITY
    return DispersionCurve(samples=samples, verdict=verdict,
                           unstable_band=band)


def critical_wavenumber(J: Jacobian3, D: float) -> float | None:
    """Closed-form squared wavenumber minimizing p0(k^2).

    Returns None when the discriminant is negative or the resulting k^2
    is not positive.
    """
    if D <= 0:
        raise ConfigError("D must be positive")
    m = J.m
    j11, j22, j33 = m[0, 0], m[1, 1], m[2, 2]
    lam = (j11 * j11 + j22 * j22 - j11 * j22
           + 3.0 * m[0, 1] * m[1, 0]) * D * D \
        + D * (3.0 * m[0, 2] * m[2, 0] + 3.0 * m[1, 2] * m[2, 1]
               - j11 * j33 - j22 * j33) \
        + j33 * j33
    if lam < 0:
        return None
    k2 = (j11 + j22) / 3.0 + (j33 + np.sqrt(lam)) / (3.0 * D)
    if k2 <= 0:
        return None
    return float(k2)
