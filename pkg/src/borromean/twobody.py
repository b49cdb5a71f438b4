"""BX subsystem: the double-delta interaction and its two-body spectrum.

The interaction is ``v(x) = -v0 [delta(x - 1/2) - alpha delta(x + 1/2)]`` in
units where lengths are measured in the delta separation and energies in
hbar^2 / (mu a^2).  Poles on the imaginary momentum axis, ``kappa = i kappa_I``,
solve

    (kappa_I - v0)(kappa_I + v0 alpha) = -v0^2 alpha exp(-2 kappa_I)

with ``kappa_I > 0`` a bound state and ``kappa_I < 0`` a virtual state.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ConvergenceError, DomainError, PoleAtHalf


@dataclass(frozen=True)
class PotentialParams:
    v0: float
    alpha: float

    def __post_init__(self):
        if not (self.v0 > 0.0 and math.isfinite(self.v0)):
            raise DomainError(f"v0 must be positive and finite, got {self.v0}")
        if not math.isfinite(self.alpha):
            raise DomainError(f"alpha must be finite, got {self.alpha}")


class StateKind(enum.Enum):
    BOUND = "bound"
    VIRTUAL = "virtual"


@dataclass(frozen=True)
class TwoBodyState:
    kappa_I: float
    kind: StateKind

    @property
    def energy(self) -> float:
        # same sign for both kinds; `kind` tells them apart
        return -0.5 * self.kappa_I**2


class Region(enum.Enum):
    I = "I"        # one virtual state
    II = "II"      # one bound state
    III = "III"    # one virtual and one bound state
    IV = "IV"      # two bound states
    THRESHOLD = "threshold"  # exactly on alpha = alpha_c

    @property
    def expected_kinds(self) -> tuple[StateKind, ...]:
        return _REGION_KINDS[self]


_REGION_KINDS = {
    Region.I: (StateKind.VIRTUAL,),
    Region.II: (StateKind.BOUND,),
    Region.III: (StateKind.VIRTUAL, StateKind.BOUND),
    Region.IV: (StateKind.BOUND, StateKind.BOUND),
}


def alpha_critical(v0: float) -> float:
    """Threshold line ``1/(1 - 2 v0)`` on which the two-body energy vanishes."""
    if v0 <= 0.0:
        raise DomainError(f"v0 must be positive, got {v0}")
    if v0 == 0.5:
        raise PoleAtHalf("alpha_c diverges at v0 = 1/2")
    return 1.0 / (1.0 - 2.0 * v0)


def transcendental(kappa, v0: float, alpha: float):
    """Residual of the pole condition; zero at bound and virtual states."""
    kappa = np.asarray(kappa, dtype=float)
    # expanded around the trivial root kappa = 0 so the residual keeps full
    # relative accuracy there; far out on the negative axis at large alpha the
    # last term overflows to an infinity of the correct sign
    with np.errstate(over="ignore", invalid="ignore"):
        return kappa * (kappa + v0 * (alpha - 1.0)) + v0**2 * alpha * np.expm1(-2.0 * kappa)


def residual_scale(kappa, v0: float, alpha: float) -> float:
    """Factor that turns the residual into one relative to its largest term.

    Far out on the negative axis both terms grow like ``kappa^2`` and the
    absolute residual cannot drop below roundoff of that size; for
    ``|kappa| <= 1`` the factor is one.
    """
    kappa = float(kappa)
    size = abs(kappa * (kappa + v0 * (alpha - 1.0))) + abs(v0 * v0 * alpha * math.expm1(-2.0 * kappa))
    return 1.0 / max(1.0, size)


def _slope_at_origin(v0: float, alpha: float) -> float:
    # d/dkappa of the residual at kappa = 0, up to the positive factor v0
    return alpha * (1.0 - 2.0 * v0) - 1.0


def region_of(params: PotentialParams) -> Region:
    """Classify (v0, alpha) by the multiset of two-body poles.

    The sign of the residual's slope at the trivial root decides on which
    side the nontrivial root sits; for ``alpha < 0`` the residual tends to
    minus infinity as ``kappa -> -inf`` which adds a virtual state unless
    the slope already pushed both roots to the bound side.
    """
    v0, alpha = params.v0, params.alpha
    slope = _slope_at_origin(v0, alpha)
    if slope == 0.0:
        return Region.THRESHOLD
    if alpha >= 0.0:
        return Region.I if slope > 0.0 else Region.II
    return Region.IV if slope > 0.0 else Region.III


_KAPPA_CEILING = 340.0  # exp(2 kappa) overflows past ~354


def _kappa_max(params: PotentialParams) -> float:
    """Bracketing range, widened until the residual has its asymptotic sign.

    The residual tends to +inf for kappa -> +inf and to sign(alpha) * inf for
    kappa -> -inf.  For weak coupling with alpha < 0 the virtual root lies far
    out on the negative axis, beyond the nominal ``4 v0 (1 + |alpha|)``.
    """
    v0, alpha = params.v0, params.alpha
    kmax = max(4.0, 4.0 * v0 * (1.0 + abs(alpha)))
    want_left = np.sign(alpha)
    while kmax < _KAPPA_CEILING:
        right = transcendental(kmax, v0, alpha)
        left = transcendental(-kmax, v0, alpha)
        if right > 0.0 and (want_left == 0.0 or np.sign(left) == want_left):
            break
        kmax = min(2.0 * kmax, _KAPPA_CEILING)
    return kmax


def solve_two_body(
    params: PotentialParams,
    tol: float = 1e-12,
    points_per_side: int = 2000,
    max_iter: int = 200,
) -> list[TwoBodyState]:
    """All nontrivial real roots ``kappa_I`` of the pole condition.

    Roots are bracketed on geometric grids covering ``(0, kappa_max]`` and
    ``[-kappa_max, 0)``, narrowed by bisection and polished with Brent's
    method.  Roots with ``|kappa_I| < 10 tol`` are the trivial solution and
    are dropped.  The residual check is relative to the size of the terms
    (see :func:`residual_scale`), which matters only for ``|kappa_I| > 1``.
    Results are sorted by ``kappa_I`` descending (deepest bound state first).
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    v0, alpha = params.v0, params.alpha
    kmax = _kappa_max(params)
    kmin = max(10.0 * tol, 1e-14)
    side = np.geomspace(kmin, kmax, points_per_side)

    def f(k):
        return float(transcendental(k, v0, alpha))

    roots = []
    for grid in (side, -side[::-1]):
        vals = transcendental(grid, v0, alpha)
        for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]:
            a, b = float(grid[i]), float(grid[i + 1])
            fa, fb = float(vals[i]), float(vals[i + 1])
            if fa == 0.0:
                root = a
            elif fb == 0.0:
                continue  # picked up as the left endpoint of the next cell
            else:
                for _ in range(8):
                    m = 0.5 * (a + b)
                    fm = f(m)
                    if np.sign(fm) == np.sign(fa):
                        a, fa = m, fm
                    else:
                        b, fb = m, fm
                try:
                    root = brentq(f, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps,
                                  maxiter=max_iter)
                except (RuntimeError, ValueError) as exc:
                    raise ConvergenceError(str(exc), bracket=(a, b)) from exc
            if abs(root) < 10.0 * tol:
                continue
            if residual_scale(root, v0, alpha) * abs(f(root)) >= tol:
                raise ConvergenceError(
                    f"scaled residual {f(root):.3e} above tol {tol:.1e} at kappa={root}",
                    bracket=(a, b),
                )
            roots.append(root)

    roots = sorted(set(roots), reverse=True)
    return [
        TwoBodyState(r, StateKind.BOUND if r > 0.0 else StateKind.VIRTUAL)
        for r in roots
    ]


def bound_energies(params: PotentialParams, tol: float = 1e-12) -> list[float]:
    return [s.energy for s in solve_two_body(params, tol) if s.kind is StateKind.BOUND]


def threshold_energy(params: PotentialParams) -> float:
    """Lowest two-body breakup energy ``min(E2, 0)``."""
    return min([0.0] + bound_energies(params))


def asymptotic_coefficient(v0: float) -> float:
    """Slope ``c1`` of ``kappa_I`` in ``alpha - alpha_c`` at the threshold line."""
    return -v0 * (1.0 - 2.0 * v0) ** 2 / ((1.0 - v0) ** 2 + v0**2)


def energy_asymptotic(params: PotentialParams) -> float:
    """Quadratic near-threshold law ``-(c1^2/2)(alpha - alpha_c)^2``."""
    ac = alpha_critical(params.v0)
    c1 = asymptotic_coefficient(params.v0)
    return -0.5 * c1**2 * (params.alpha - ac) ** 2
