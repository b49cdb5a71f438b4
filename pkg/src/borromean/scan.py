"""Parameter scans: spectra against alpha, the Borromean window, power laws
and mass-ratio sweeps.

Every scan point is an independent solve; with ``jobs > 1`` points run in a
thread pool (numpy releases the GIL inside the linear algebra) and results
are merged in input order, so the output does not depend on scheduling.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import BorromeanError, DomainError, InsufficientPoints, NoBorromeanState
from .faddeev import (
    EDGE,
    MassConfig,
    MomentumGrid,
    _threshold,
    assemble_kernel,
    default_grid,
    default_search_floor,
    eigen_count,
    find_spectrum,
    resolution_energy,
)
from .twobody import PotentialParams, StateKind, alpha_critical, solve_two_body

logger = logging.getLogger(__name__)

ALPHA_OFFSET = 1e-3
SCAN_SAMPLES_PER_DECADE = 50
STATE_CROSSING = "StateCrossing"


@dataclass(frozen=True)
class WindowRecord:
    v0: float
    alpha_c: float
    alpha_w: float
    mass_ratio: float

    @property
    def width(self) -> float:
        return self.alpha_w - self.alpha_c


@dataclass(frozen=True)
class PowerLawFit:
    """``E = -amplitude * |pivot - alpha|^exponent`` fitted in log space."""

    amplitude: float
    exponent: float
    pivot: float
    fit_window: tuple[float, float]
    residual: float
    n_points: int

    def __call__(self, alpha):
        return -self.amplitude * np.abs(self.pivot - np.asarray(alpha, dtype=float)) ** self.exponent


@dataclass
class SpectrumRow:
    alpha: float
    energies: list[float]
    two_body_energy: float | None
    two_body_kind: str | None
    threshold: float | None
    error: str | None = None
    flags: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class MassSweepRow:
    mass_ratio: float
    alpha: float
    energies: list[float]
    edge_count: int | None
    error: str | None = None

    @property
    def count(self) -> int:
        return len(self.energies)


def _map(fn: Callable, items: Sequence, jobs: int) -> list:
    if jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def two_body_reference(params: PotentialParams) -> tuple[float | None, str | None]:
    """Deepest bound-state energy, or the virtual-state energy if none is bound."""
    states = solve_two_body(params)
    bound = [s for s in states if s.kind is StateKind.BOUND]
    if bound:
        return bound[0].energy, StateKind.BOUND.value
    if states:
        return states[0].energy, StateKind.VIRTUAL.value
    return None, None


def spectrum_curve(
    params_base: PotentialParams,
    masses: MassConfig,
    alpha_samples: Iterable[float],
    grid: MomentumGrid | None = None,
    search_floor: float | None = None,
    samples_per_decade: int = SCAN_SAMPLES_PER_DECADE,
    jobs: int = 1,
) -> list[SpectrumRow]:
    """Three-body spectrum at each alpha (``params_base.alpha`` is ignored).

    Failures are stored in the row and the scan continues.  States are
    labelled by energy order; rows where that labelling disagrees with the
    nearest-neighbour continuation are flagged ``StateCrossing``.
    """
    alphas = [float(a) for a in alpha_samples]
    if any(b < a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("alpha samples must be sorted")
    grid = grid if grid is not None else default_grid(masses)

    def point(alpha):
        try:
            params = PotentialParams(params_base.v0, alpha)
            e2, kind = two_body_reference(params)
            res = find_spectrum(params, masses, grid, search_floor=search_floor,
                                samples_per_decade=samples_per_decade, with_vectors=False)
            flags = ["CountMismatch"] if res.diagnostics.get("count_mismatch") else []
            return SpectrumRow(alpha, list(res.energies), e2, kind, res.threshold, None, flags)
        except (BorromeanError, ArithmeticError, ValueError) as exc:
            logger.warning("spectrum failed at alpha=%g: %s", alpha, exc)
            return SpectrumRow(alpha, [], None, None, None, f"{type(exc).__name__}: {exc}")

    rows = _map(point, alphas, jobs)
    for i in crossing_flags(rows):
        rows[i].flags.append(STATE_CROSSING)
    return rows


def crossing_flags(rows: Sequence[SpectrumRow]) -> list[int]:
    """Indices of rows whose ordered states do not continue their predecessors.

    For consecutive rows with the same number of states each state should be
    nearer, in energy, to its own predecessor than to any other one.
    """
    flagged = []
    for i in range(1, len(rows)):
        prev, cur = rows[i - 1].energies, rows[i].energies
        if not prev or len(prev) != len(cur):
            continue
        prev_a = np.asarray(prev)
        for n, e in enumerate(cur):
            if int(np.argmin(np.abs(prev_a - e))) != n:
                flagged.append(i)
                break
    return flagged


def probe_gap(params: PotentialParams, masses: MassConfig, grid: MomentumGrid, edge: float = EDGE) -> float:
    """Distance below threshold at which state counts are taken.

    It equals the top of :func:`find_spectrum`'s ladder, so "no state" here
    means "no determinant sign change on the ladder".
    """
    threshold = _threshold(params)
    scale = abs(threshold) if threshold < 0.0 else abs(default_search_floor(params, masses))
    return max(edge * scale, resolution_energy(grid, masses))


def count_states(
    params: PotentialParams,
    masses: MassConfig,
    grid: MomentumGrid,
    gap: float | None = None,
) -> int:
    """Number of three-body states below ``threshold - gap``.

    Counts the real eigenvalues of the kernel above one at that energy; each
    bound state below it has pushed one eigenvalue across one.
    """
    threshold = _threshold(params)
    if gap is None:
        gap = probe_gap(params, masses, grid)
    return eigen_count(assemble_kernel(params, masses, grid, threshold - gap, 1, threshold))


def find_alpha_w(
    v0: float,
    masses: MassConfig,
    bracket_hint: tuple[float, float] | None = None,
    grid: MomentumGrid | None = None,
    tol: float = 1e-4,
    gap: float | None = None,
    offset: float = ALPHA_OFFSET,
) -> float:
    """Repulsion at which the last three-body state dissociates.

    Bisection on "a state exists below the ladder top" between
    ``alpha_c (1 + offset)`` and the first alpha without a state.  ``gap``
    overrides the probe distance below threshold; a smaller one places the
    edge closer to where the energy actually reaches zero.
    """
    grid = grid if grid is not None else default_grid(masses)
    alpha_c = alpha_critical(v0)
    if alpha_c < 0.0:
        raise DomainError(f"v0 = {v0} has no threshold line at positive alpha")

    def has_state(alpha):
        params = PotentialParams(v0, alpha)
        return count_states(params, masses, grid, gap) > 0

    start = alpha_c * (1.0 + offset)
    if not has_state(start):
        raise NoBorromeanState(f"no three-body state at alpha = {start:.6g} just above alpha_c")

    if bracket_hint is not None:
        lo, hi = map(float, bracket_hint)
        lo = max(lo, start)
        if not has_state(lo):
            lo = start
        if has_state(hi):
            lo, hi = hi, None
    else:
        lo, hi = start, None
    step = max(0.25 * alpha_c, 0.1)
    while hi is None:
        trial = lo + step
        if has_state(trial):
            lo = trial
            step *= 2.0
        else:
            hi = trial
        if step > 1e4:
            raise DomainError("three-body state persists to very large alpha")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if has_state(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def map_borromean_window(
    v0_samples: Iterable[float],
    masses: MassConfig,
    grid: MomentumGrid | None = None,
    tol: float = 1e-4,
    jobs: int = 1,
) -> list[WindowRecord]:
    """Window ``(alpha_c, alpha_w)`` for each coupling that has one.

    Couplings without a Borromean state, and points where the solver failed,
    are left out; failures are logged.
    """
    v0s = [float(v) for v in v0_samples]
    for v in v0s:
        if not 0.0 < v < 0.5:
            raise DomainError(f"v0 samples must lie in (0, 1/2), got {v}")
    grid = grid if grid is not None else default_grid(masses)

    def point(v0):
        try:
            return WindowRecord(v0, alpha_critical(v0), find_alpha_w(v0, masses, grid=grid, tol=tol),
                                masses.mass_ratio)
        except NoBorromeanState:
            return None
        except (BorromeanError, ArithmeticError, ValueError) as exc:
            logger.warning("window failed at v0=%g: %s", v0, exc)
            return None

    return [r for r in _map(point, v0s, jobs) if r is not None]


def fit_power_law(
    curve: Iterable[tuple[float, float]],
    pivot: float,
    window_fraction: float = 0.1,
    min_points: int = 8,
) -> PowerLawFit:
    """Fit ``E = -A |pivot - alpha|^gamma`` by linear regression in log-log space.

    Only the points whose distance to the pivot is within ``window_fraction``
    of the largest sampled distance enter the fit.
    """
    pts = np.asarray(list(curve), dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("curve must be a sequence of (alpha, energy) pairs")
    dist = np.abs(pivot - pts[:, 0])
    keep = (dist > 0.0) & (dist <= window_fraction * dist.max())
    sel = pts[keep]
    if len(sel) < min_points:
        raise InsufficientPoints(f"{len(sel)} points inside the fit window, need {min_points}")
    if np.any(sel[:, 1] >= 0.0):
        raise DomainError("power-law fit needs negative energies")
    x = np.log(dist[keep])
    y = np.log(-sel[:, 1])
    exponent, intercept = np.polyfit(x, y, 1)
    amplitude = math.exp(intercept)
    model = -amplitude * dist[keep] ** exponent
    residual = float(np.max(np.abs(model / sel[:, 1] - 1.0)))
    return PowerLawFit(amplitude, float(exponent), float(pivot),
                       (float(dist[keep].min()), float(dist[keep].max())), residual, int(len(sel)))


def mass_ratio_sweep(
    v0: float,
    mass_samples: Iterable[float],
    offset: float = ALPHA_OFFSET,
    grid: MomentumGrid | None = None,
    samples_per_decade: int = SCAN_SAMPLES_PER_DECADE,
    jobs: int = 1,
) -> list[MassSweepRow]:
    """Borromean spectrum against ``M/m`` at ``alpha = alpha_c (1 + offset)``.

    Energies are in units of hbar^2/(mu a^2) with the BX reduced mass of the
    respective mass ratio.  ``edge_count`` is the independent eigenvalue
    count at the ladder top.
    """
    alpha = alpha_critical(v0) * (1.0 + offset)
    params = PotentialParams(v0, alpha)

    def point(r):
        masses = MassConfig(float(r))
        g = grid if grid is not None else default_grid(masses)
        try:
            res = find_spectrum(params, masses, g, samples_per_decade=samples_per_decade,
                                with_vectors=False)
            return MassSweepRow(float(r), alpha, list(res.energies), res.diagnostics.get("edge_count"))
        except (BorromeanError, ArithmeticError, ValueError) as exc:
            logger.warning("mass sweep failed at M/m=%g: %s", r, exc)
            return MassSweepRow(float(r), alpha, [], None, f"{type(exc).__name__}: {exc}")

    return _map(point, [float(r) for r in mass_samples], jobs)
