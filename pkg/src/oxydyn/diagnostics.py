"""Post-processing of PDE runs: OMZ patch metrics and regime labels."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InsufficientDataError
from .pde import FieldState, SpaceTimeRecord, trapezoid_mean

__all__ = [
    "OmzPatch",
    "OmzReport",
    "omz_patches",
    "Regime",
    "RegimeLabel",
    "classify_regime",
    "mean_series",
]

OMZ_FRACTION = 0.5


@dataclass(frozen=True)
class OmzPatch:
    start: float
    end: float
    min_c: float

    @property
    def width(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class OmzReport:
    patches: tuple
    total_width: float
    patch_count: int


def omz_patches(field: FieldState, x, c_ref: float,
                omz_fraction: float = OMZ_FRACTION) -> OmzReport:
    """Contiguous regions where c < omz_fraction * c_ref.

    Patch boundaries are linearly interpolated between grid nodes; patches
    touching the domain ends start or stop at the boundary node.
    """
    if c_ref <= 0:
        raise ConfigError("c_ref must be positive")
    c = np.asarray(field.c, dtype=float)
    x = np.asarray(x, dtype=float)
    thr = omz_fraction * c_ref
    below = c < thr
    patches = []
    i = 0
    n = c.size
    while i < n:
        if not below[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and below[j + 1]:
            j += 1
        if i > 0:
            frac = (thr - c[i - 1]) / (c[i] - c[i - 1])
            start = x[i - 1] + frac * (x[i] - x[i - 1])
        else:
            start = x[0]
        if j + 1 < n:
            frac = (thr - c[j]) / (c[j + 1] - c[j])
            end = x[j] + frac * (x[j + 1] - x[j])
        else:
            end = x[-1]
        patches.append(OmzPatch(start=float(start), end=float(end),
                                min_c=float(c[i:j + 1].min())))
        i = j + 1
    total = float(sum(pt.width for pt in patches))
    return OmzReport(patches=tuple(patches), total_width=total,
                     patch_count=len(patches))


class Regime(enum.Enum):
    UNIFORM_STEADY = "UniformSteady"
    LOCALIZED_OMZ = "LocalizedOMZ"
    STATIONARY_PERIODIC = "StationaryPeriodic"
    DYNAMIC_IRREGULAR = "DynamicIrregular"
    GLOBAL_ANOXIA = "GlobalAnoxia"


@dataclass(frozen=True)
class RegimeLabel:
    label: Regime
    evidence: dict


def classify_regime(record: SpaceTimeRecord, c_ref: float,
                    omz_fraction: float = OMZ_FRACTION,
                    uniform_tol: float = 1e-3,
                    stationary_tol: float = 1e-2,
                    localized_width_frac: float = 0.4,
                    growth_slope_cut: float = 0.01) -> RegimeLabel:
    """Label a PDE run by a decision cascade.

    Order: GlobalAnoxia (event fired) > UniformSteady (flat and static) >
    StationaryPeriodic (structured but frozen between the last two
    snapshots) > LocalizedOMZ (bounded patch with a small late growth
    slope, below growth_slope_cut * L per 100 time units) >
    DynamicIrregular. Requires coverage of at least t=1500 with at least
    30 snapshots.
    """
    if record.times[-1] < 1500 or len(record.snapshots) < 30:
        raise InsufficientDataError(
            f"record covers t={record.times[-1]} with "
            f"{len(record.snapshots)} snapshots; need t>=1500 and >=30")

    L = record.grid.L
    x = record.grid.x
    final = record.snapshots[-1]
    prev = record.snapshots[-2]
    final_ptp = float(final.c.max() - final.c.min())
    half = len(record.times) // 2
    late_means = record.mean_series[half:]
    late_mean_ptp = float(np.max(late_means.max(axis=0)
                                 - late_means.min(axis=0)))
    snap_diff = float(max(np.max(np.abs(final.c - prev.c)),
                          np.max(np.abs(final.u - prev.u)),
                          np.max(np.abs(final.v - prev.v))))

    widths = np.array([omz_patches(s, x, c_ref, omz_fraction).total_width
                       for s in record.snapshots])
    # least-squares slope of total OMZ width over the last half of the run,
    # in units of domain length per 100 time units
    tt = record.times[half:]
    ww = widths[half:]
    slope = float(np.polyfit(tt, ww, 1)[0]) * 100.0 / L if len(tt) > 1 \
        else 0.0

    evidence = {
        "final_spatial_ptp_c": final_ptp,
        "late_mean_series_ptp": late_mean_ptp,
        "last_two_snapshot_diff": snap_diff,
        "omz_width_final": float(widths[-1]),
        "omz_growth_slope": slope,
        "anoxia_time": record.event_time("GlobalAnoxia"),
        "c_ref": c_ref,
        "omz_fraction": omz_fraction,
        "uniform_tol": uniform_tol,
        "stationary_tol": stationary_tol,
        "localized_width_frac": localized_width_frac,
        "growth_slope_cut": growth_slope_cut,
    }

    if record.event_time("GlobalAnoxia") is not None:
        label = Regime.GLOBAL_ANOXIA
    elif final_ptp < uniform_tol and late_mean_ptp < uniform_tol:
        label = Regime.UNIFORM_STEADY
    elif final_ptp >= 0.1 * c_ref and snap_diff < stationary_tol:
        label = Regime.STATIONARY_PERIODIC
    elif widths[-1] < localized_width_frac * L \
            and slope < growth_slope_cut:
        label = Regime.LOCALIZED_OMZ
    else:
        label = Regime.DYNAMIC_IRREGULAR
    return RegimeLabel(label=label, evidence=evidence)


def mean_series(record: SpaceTimeRecord) -> np.ndarray:
    """Trapezoidal spatial means of (c, u, v) per snapshot, shape (nt, 3)."""
    g = record.grid
    return np.array([[trapezoid_mean(s.c, g.dx, g.L),
                      trapezoid_mean(s.u, g.dx, g.L),
                      trapezoid_mean(s.v, g.dx, g.L)]
                     for s in record.snapshots])
