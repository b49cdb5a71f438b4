"""Expectation values and spreads of the Jacobi coordinates.

Moments are plain grid quadratures of ``|psi(x1, y23)|^2`` on the uniform
position grid.  Near the dissociation point the state is very dilute, and a
momentum window that is too narrow cuts away the short-range part of the
wave function and biases ``<x1>`` upwards; :func:`state_geometry` therefore
widens the window until the captured norm reaches a target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AliasingError, WrongSpace
from .faddeev import MassConfig
from .wavefunction import (
    BOX_FACTOR,
    COVERAGE_MIN,
    FaddeevComponent,
    Space,
    WaveFieldGrid,
    default_window,
    frame_fraction,
    momentum_wavefunction,
    position_wavefunction,
)

MAX_DOUBLINGS = 4
LOW_COVERAGE = "LowCoverage"


@dataclass(frozen=True)
class GeometryReport:
    mean_x1: float
    mean_y23: float
    sigma_x1: float
    sigma_y23: float
    window_coverage: float
    noise_bound: float = 0.0
    flags: tuple[str, ...] = ()
    metadata: dict = field(default_factory=dict, compare=False)

    def as_dict(self) -> dict:
        return {
            "mean_x1": self.mean_x1,
            "mean_y23": self.mean_y23,
            "sigma_x1": self.sigma_x1,
            "sigma_y23": self.sigma_y23,
            "window_coverage": self.window_coverage,
            "noise_bound": self.noise_bound,
            "flags": list(self.flags),
        }


def geometry(field_: WaveFieldGrid) -> GeometryReport:
    """Moments of ``x1`` and ``y23`` from a position-space field.

    ``window_coverage`` is the smaller of the momentum-window coverage
    recorded upstream and the share of the norm away from the edge of the
    periodic position box.
    """
    if field_.space is not Space.POSITION:
        raise WrongSpace("geometry needs a position-space field")
    x1, y23 = field_.axes
    dens = np.abs(field_.values) ** 2 * field_.measure
    total = float(dens.sum())
    dens = dens / total
    px = dens.sum(axis=1)
    py = dens.sum(axis=0)
    mx = float(px @ x1)
    my = float(py @ y23)
    sx = math.sqrt(max(float(px @ (x1 - mx) ** 2), 0.0))
    sy = math.sqrt(max(float(py @ (y23 - my) ** 2), 0.0))

    coverage = min(float(field_.metadata.get("norm_coverage", 1.0)), 1.0 - frame_fraction(field_))
    flags = []
    if coverage < COVERAGE_MIN:
        flags.append(LOW_COVERAGE)
    # roundoff of a sum over the grid of terms bounded by max|y|
    noise = 64.0 * np.finfo(float).eps * float(np.max(np.abs(y23))) * math.sqrt(dens.size)
    return GeometryReport(mx, my, sx, sy, coverage, noise, tuple(flags),
                          {"norm": math.sqrt(total)})


def state_geometry(
    component: FaddeevComponent,
    masses: MassConfig,
    window: tuple[float, float] | None = None,
    coverage_target: float = COVERAGE_MIN,
    max_doublings: int = MAX_DOUBLINGS,
    box_factor: float = BOX_FACTOR,
    position_resolution: int | None = None,
) -> tuple[GeometryReport, WaveFieldGrid]:
    """Geometry of one bound state with an automatically widened window.

    Starting from ``window`` (default: the decay-scale window) the momentum
    window is doubled until its captured norm reaches ``coverage_target`` or
    ``max_doublings`` is exhausted, in which case the report is flagged.  The
    sample spacing stays fixed, so the position box does not shrink.  An
    aliased transform is retried once with a box twice as large.
    ``position_resolution`` zero-pads the transform to that many samples per
    axis (never fewer than the momentum sampling).
    """
    if window is None:
        window = default_window(component.energy, masses)
    window = tuple(float(w) for w in window)
    for doubling in range(max_doublings + 1):
        mom = momentum_wavefunction(component, masses, window=window, box_factor=box_factor)
        if mom.metadata["norm_coverage"] >= coverage_target or doubling == max_doublings:
            break
        window = (2.0 * window[0], 2.0 * window[1])

    def transform(m):
        if position_resolution is None:
            return position_wavefunction(m)
        res = tuple(max(int(position_resolution), n) for n in m.metadata["resolution"])
        # zero padding must be symmetric
        res = tuple(r + ((r - n) % 2) for r, n in zip(res, m.metadata["resolution"]))
        return position_wavefunction(m, resolution=res)

    try:
        pos = transform(mom)
    except AliasingError:
        mom = momentum_wavefunction(component, masses, window=window, box_factor=2.0 * box_factor)
        pos = transform(mom)
    report = geometry(pos)
    flags = list(report.flags)
    if mom.metadata["norm_coverage"] < coverage_target and LOW_COVERAGE not in flags:
        flags.append(LOW_COVERAGE)
    meta = dict(report.metadata, window=mom.metadata["window"], resolution=mom.metadata["resolution"],
                doublings=doubling, parseval_error=pos.metadata["parseval_error"],
                frame_fraction=pos.metadata["frame_fraction"], energy=component.energy)
    return GeometryReport(report.mean_x1, report.mean_y23, report.sigma_x1, report.sigma_y23,
                          report.window_coverage, report.noise_bound, tuple(flags), meta), pos
