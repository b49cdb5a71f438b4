"""Three-body wave function from a solved Faddeev eigenvector.

The spectator functions ``phi_nu`` live on the quadrature grid.  Off the grid
they are obtained by applying the integral operator once more (Nystrom
interpolation), which reproduces the nodal values exactly at a solution.
From them

    Phi(k, p) = sum_nu g_nu(k, E_p) tau_nu(E_p) phi_nu(p)

and the momentum-space wave function is the symmetrized pair of Faddeev
components times the free Green function ``(2 pi)^2 / (E - alpha_x p1^2/2 -
alpha_y k23^2/2)``.  Position space follows from a 2D Fourier transform with
measure ``dp1 dk23 / (2 pi)^2``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AliasingError, DomainError
from .faddeev import BoundState, MassConfig, _plane_wave_factors, kernel_rows, shifted_energy
from .separable import Term, evaluate
from .twobody import PotentialParams

COVERAGE_MIN = 0.99
WINDOW_FACTOR = 8.0
BOX_FACTOR = 12.0
_CHUNK = 4096


class Space(enum.Enum):
    MOMENTUM = "momentum"
    POSITION = "position"


@dataclass
class FaddeevComponent:
    """Evaluator for ``Phi(k, p)`` of one bound state."""

    state: BoundState
    params: PotentialParams
    masses: MassConfig
    _factors: tuple = field(repr=False, default=None)

    def __post_init__(self):
        if not self.state.energy < 0.0:
            raise DomainError("bound-state energy must be negative")
        if self._factors is None:
            self._factors = _plane_wave_factors(
                self.params, self.masses, self.state.energy, self.state.grid.nodes
            )

    @property
    def energy(self) -> float:
        return self.state.energy

    def spectator(self, p) -> np.ndarray:
        """``phi_nu(p)`` at arbitrary momenta, shape ``(2,) + p.shape``."""
        p = np.asarray(p, dtype=float)
        flat = p.ravel()
        out = np.empty((2, flat.size), dtype=complex)
        phi = self.state.phi
        for start in range(0, flat.size, _CHUNK):
            chunk = flat[start:start + _CHUNK]
            rows = kernel_rows(self.params, self.masses, self.state.grid,
                               self.energy, chunk, self._factors)
            out[:, start:start + _CHUNK] = np.einsum("aibj,bj->ai", rows, phi)
        out *= self.state.exchange_sign
        return out.reshape((2,) + p.shape)

    def __call__(self, k, p) -> np.ndarray:
        k, p = np.broadcast_arrays(np.asarray(k, dtype=float), np.asarray(p, dtype=float))
        e_p = shifted_energy(self.energy, self.masses, p)
        if np.any(e_p >= 0.0):
            raise DomainError("shifted pair energy must stay negative")
        # dedupe spectator momenta (rounding merges lattice points that differ
        # by roundoff); the Nystrom step dominates the cost
        key = np.round(p.ravel(), 12)
        uniq, inverse = np.unique(key, return_inverse=True)
        phi = self.spectator(uniq)[:, inverse].reshape((2,) + p.shape)
        ev = evaluate(self.params, e_p)
        total = np.zeros(p.shape, dtype=complex)
        for nu in Term:
            total += ev.form_factor(nu, k) * ev.tau[nu] * phi[nu]
        return total


def faddeev_component(state: BoundState, params: PotentialParams, masses: MassConfig) -> FaddeevComponent:
    if state.residual > 1e-6:
        raise DomainError(f"eigenvector residual {state.residual:.2e} too large")
    return FaddeevComponent(state, params, masses)


@dataclass
class WaveFieldGrid:
    """Samples of a wave function on a uniform rectangular grid.

    ``axes`` are ``(p1, k23)`` or ``(x1, y23)``; ``values[i, j]`` belongs to
    ``(axes[0][i], axes[1][j])``.  ``norm`` is the L2 norm with measure
    ``dp1 dk23/(2pi)^2`` in momentum space and ``dx1 dy23`` in position space.
    """

    axes: tuple[np.ndarray, np.ndarray]
    values: np.ndarray
    space: Space
    energy: float
    metadata: dict = field(default_factory=dict)

    @property
    def spacing(self) -> tuple[float, float]:
        return float(self.axes[0][1] - self.axes[0][0]), float(self.axes[1][1] - self.axes[1][0])

    @property
    def measure(self) -> float:
        d0, d1 = self.spacing
        if self.space is Space.MOMENTUM:
            return d0 * d1 / (2.0 * np.pi) ** 2
        return d0 * d1

    @property
    def norm(self) -> float:
        return math.sqrt(float(np.sum(np.abs(self.values) ** 2)) * self.measure)

    def normalized(self) -> "WaveFieldGrid":
        n = self.norm
        return WaveFieldGrid(self.axes, self.values / n, self.space, self.energy,
                             dict(self.metadata, normalization=n))


def symmetric_axis(half_width: float, n: int) -> np.ndarray:
    """Uniform axis with ``n`` points mirrored about zero (no node at the origin for even n)."""
    step = 2.0 * half_width / n
    return (np.arange(n) - 0.5 * (n - 1)) * step


def default_window(energy: float, masses: MassConfig, factor: float = WINDOW_FACTOR):
    """Momentum half-widths from the decay scale of the free Green function."""
    return (factor * math.sqrt(-2.0 * energy / masses.alpha_x),
            factor * math.sqrt(-2.0 * energy / masses.alpha_y))


def green_function(energy, masses, p1, k23):
    return (2.0 * np.pi) ** 2 / (energy - 0.5 * masses.alpha_x * p1**2 - 0.5 * masses.alpha_y * k23**2)


def psi_momentum(component: FaddeevComponent, masses: MassConfig, p1, k23) -> np.ndarray:
    """``psi(p1, k23)`` at arbitrary points (unnormalized).

    The pair momentum is ``+(alpha_x p1 +- alpha_y k23/2)``: the kernel's
    ``g(q + beta p)`` fixes ``k`` as conjugate to ``x_X - x_B`` when the
    spectator momentum is ``-p1/2 +- k23``, and the opposite sign would mix
    a mirrored pair coordinate with an unmirrored spectator one.
    """
    ax, ay = masses.alpha_x, masses.alpha_y
    p1, k23 = np.broadcast_arrays(np.asarray(p1, dtype=float), np.asarray(k23, dtype=float))
    phi_a = component(ax * p1 + 0.5 * ay * k23, -0.5 * p1 + k23)
    phi_b = component(ax * p1 - 0.5 * ay * k23, -0.5 * p1 - k23)
    return green_function(component.energy, masses, p1, k23) * (phi_a + phi_b)


def _sample_momentum(component, masses, p1, k23):
    # only k23 > 0 is computed; the other half is its mirror image
    P1, K = np.meshgrid(p1, k23[len(k23) // 2:], indexing="ij")
    right = psi_momentum(component, masses, P1, K)
    return np.concatenate([right[:, ::-1], right], axis=1)


def decay_momenta(energy: float, masses: MassConfig) -> tuple[float, float]:
    """Bound-state decay constants along ``x1`` and ``y23``."""
    return math.sqrt(-2.0 * energy / masses.alpha_x), math.sqrt(-2.0 * energy / masses.alpha_y)


def plan_momentum_grid(energy, masses, window, box_factor=BOX_FACTOR, minimum=64, maximum=4096):
    """Sample counts, and a slightly adjusted window, for a momentum grid.

    The spacing fixes the periodic position box ``2 pi / dp``; its half-width
    is about ``box_factor / kappa`` along each axis so that the exponential
    tails fit inside.  The ``k23`` spacing is rounded to a multiple of half
    the ``p1`` spacing, which puts every spectator momentum ``-p1/2 +- k23``
    on one lattice and lets the Nystrom step run once per lattice point.
    """
    kx, ky = decay_momenta(energy, masses)
    dp = math.pi * kx / box_factor
    n1 = int(min(max(2 * math.ceil(window[0] / dp), minimum), maximum))
    dp = 2.0 * window[0] / n1
    m = max(1, round(2.0 * (math.pi * ky / box_factor) / dp))
    dk = 0.5 * m * dp
    n2 = int(min(max(2 * math.ceil(window[1] / dk), minimum), maximum))
    return (window[0], 0.5 * n2 * dk), (n1, n2)


def momentum_wavefunction(
    component: FaddeevComponent,
    masses: MassConfig,
    window: tuple[float, float] | None = None,
    resolution: int | tuple[int, int] | None = None,
    check_coverage: bool = True,
    box_factor: float = BOX_FACTOR,
) -> WaveFieldGrid:
    """Sample ``psi(p1, k23)`` on a uniform grid centred on the origin.

    Without an explicit ``resolution`` the spacing follows from
    :func:`plan_momentum_grid`.  The norm captured by the window is estimated
    against a window twice as wide in both directions; below 99% the metadata
    carries a ``NormCoverage`` warning.
    """
    if window is None:
        window = default_window(component.energy, masses)
    if resolution is None:
        window, resolution = plan_momentum_grid(component.energy, masses, window, box_factor)
    n1, n2 = (resolution, resolution) if np.isscalar(resolution) else resolution
    if n2 % 2:
        raise ValueError("k23 resolution must be even")
    p1 = symmetric_axis(window[0], n1)
    k23 = symmetric_axis(window[1], n2)
    values = _sample_momentum(component, masses, p1, k23)
    field_ = WaveFieldGrid((p1, k23), values, Space.MOMENTUM, component.energy,
                           {"window": tuple(map(float, window)), "resolution": (n1, n2)})
    if check_coverage:
        # same spacing, twice the extent: the inner half is the field itself
        wide = symmetric_axis(2 * window[0], 2 * n1), symmetric_axis(2 * window[1], 2 * n2)
        wide_vals = _sample_momentum(component, masses, *wide)
        coverage = float(np.sum(np.abs(values) ** 2) / np.sum(np.abs(wide_vals) ** 2))
        field_.metadata["norm_coverage"] = coverage
        if coverage < COVERAGE_MIN:
            field_.metadata.setdefault("warnings", []).append("NormCoverage")
    return field_


def position_wavefunction(
    momentum_field: WaveFieldGrid,
    resolution: int | tuple[int, int] | None = None,
    center: tuple[float, float] = (0.0, 0.0),
    alias_tol: float = 0.01,
) -> WaveFieldGrid:
    """Fourier transform to ``psi(x1, y23)``, normalized to unit L2 norm.

    ``resolution`` larger than the momentum sampling zero-pads the momentum
    window, which refines the position grid without changing its extent
    ``2 pi / dp``.  The position box is periodic; if more than ``alias_tol``
    of the norm sits in its outer frame, the tails wrap around and an
    :class:`AliasingError` suggests a finer momentum sampling.
    """
    if momentum_field.space is not Space.MOMENTUM:
        raise ValueError("expected a momentum-space field")
    p1, k23 = momentum_field.axes
    n1, n2 = len(p1), len(k23)
    if resolution is None:
        m1, m2 = n1, n2
    else:
        m1, m2 = (resolution, resolution) if np.isscalar(resolution) else resolution
    if m1 < n1 or m2 < n2:
        raise ValueError("position resolution must not be below the momentum sampling")
    dp, dk = momentum_field.spacing
    # zero-padded momentum axes keep the symmetric half-step offset
    pp = (np.arange(m1) - 0.5 * (m1 - 1)) * dp
    kk = (np.arange(m2) - 0.5 * (m2 - 1)) * dk
    padded = np.zeros((m1, m2), dtype=complex)
    o1, o2 = (m1 - n1) // 2, (m2 - n2) // 2
    padded[o1:o1 + n1, o2:o2 + n2] = momentum_field.values
    if (m1 - n1) % 2 or (m2 - n2) % 2:
        raise ValueError("padding must be symmetric; use resolutions of equal parity")

    dx, dy = 2.0 * np.pi / (m1 * dp), 2.0 * np.pi / (m2 * dk)
    x1 = center[0] + (np.arange(m1) - 0.5 * (m1 - 1)) * dx
    y23 = center[1] + (np.arange(m2) - 0.5 * (m2 - 1)) * dy

    # psi(x_m) = sum_a dp/2pi e^{i p_a x_m} psi_a with p_a = p0 + a dp, x_m = x0 + m dx
    a, m = np.arange(m1), np.arange(m2)
    pre = padded * np.exp(1j * np.outer(a * dp * x1[0], np.ones(m2)))
    pre *= np.exp(1j * np.outer(np.ones(m1), m * dk * y23[0]))
    out = np.fft.ifft2(pre) * (m1 * m2)
    out *= np.exp(1j * np.outer(pp[0] * x1, np.ones(m2)))
    out *= np.exp(1j * np.outer(np.ones(m1), kk[0] * y23))
    out *= dp * dk / (2.0 * np.pi) ** 2

    field_ = WaveFieldGrid((x1, y23), out, Space.POSITION, momentum_field.energy,
                           dict(momentum_field.metadata))
    field_.metadata["momentum_norm"] = momentum_field.norm
    field_.metadata["position_norm_raw"] = field_.norm
    field_.metadata["parseval_error"] = abs(field_.norm - momentum_field.norm) / momentum_field.norm
    frame = frame_fraction(field_)
    field_.metadata["frame_fraction"] = frame
    if frame > alias_tol:
        raise AliasingError(
            f"{frame:.2%} of the norm sits at the edge of the periodic position box",
            suggested_resolution=2 * max(n1, n2),
        )
    return field_.normalized()


def frame_fraction(field_: WaveFieldGrid, margin: float = 0.1) -> float:
    """Share of the norm in the outer ``margin`` of the box along either axis."""
    dens = np.abs(field_.values) ** 2
    total = dens.sum()
    n1, n2 = dens.shape
    c1, c2 = int(round(margin * n1)), int(round(margin * n2))
    inner = dens[c1:n1 - c1, c2:n2 - c2].sum()
    return float((total - inner) / total)
