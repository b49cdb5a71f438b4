"""Discretized Faddeev equations for the BBX bound-state problem.

The bound-state condition is a pair of coupled one-dimensional integral
equations for the spectator functions ``phi_-`` and ``phi_+``.  On a
quadrature grid ``{q_j, w_j}`` they become the matrix problem
``v = +-W(E) v`` with

    W[lam, nu]_ij = w_j / (2 pi) * g_lam(q_j + beta p_i, E_{p_i})
                    * conj(g_nu(p_i + beta q_j, E_{q_j})) * tau_nu(E_{q_j})
                    / (E - q_j^2/2 - p_i^2/2 - beta p_i q_j),

``E_p = E - alpha_x alpha_y p^2 / 2``.  Three-body energies are the zeros of
``det(+-W(E) - 1)`` below the breakup threshold.
"""

from __future__ import annotations

import functools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import lu_factor, lu_solve
from scipy.optimize import brentq

from .errors import ConvergenceError, DomainError, InternalDomainError, PoleProximity, SingularFactorization
from .separable import Term, evaluate
from .twobody import PotentialParams, threshold_energy

logger = logging.getLogger(__name__)

EDGE = 1e-8
RESIDUAL_TOL = 1e-6
IMAG_TOL = 1e-6


@dataclass(frozen=True)
class MassConfig:
    """Kinematic coefficients of the BBX system, all derived from ``M/m``."""

    mass_ratio: float

    def __post_init__(self):
        if not (self.mass_ratio > 0.0 and math.isfinite(self.mass_ratio)):
            raise DomainError(f"mass ratio must be positive, got {self.mass_ratio}")

    @property
    def alpha_x(self) -> float:
        r = self.mass_ratio
        return (1.0 + 2.0 * r) / (2.0 * (1.0 + r))

    @property
    def alpha_y(self) -> float:
        return 2.0 / (1.0 + self.mass_ratio)

    @property
    def beta(self) -> float:
        r = self.mass_ratio
        return r / (1.0 + r)


@dataclass(frozen=True)
class MomentumGrid:
    """Symmetric quadrature rule on the real line.

    ``map_scale`` is the scale ``L`` of the compactifying map, or the
    innermost breakpoint for a composite rule (``layout == "composite"``).
    """

    nodes: np.ndarray
    weights: np.ndarray
    map_scale: float
    layout: str = "mapped"

    @property
    def n_points(self) -> int:
        return len(self.nodes)

    @property
    def min_spacing(self) -> float:
        return float(np.min(np.diff(self.nodes)))

    def gaussian_error(self, width: float = 1.0) -> float:
        """|quadrature - 1| for a unit-normalized Gaussian of the given width."""
        vals = np.exp(-((self.nodes / width) ** 2)) / (math.sqrt(math.pi) * width)
        return abs(float(np.dot(self.weights, vals)) - 1.0)


def build_grid(n_points: int, map_scale: float) -> MomentumGrid:
    """Gauss-Legendre rule on (-1, 1) mapped onto the real line.

    The map is ``p = L t / (1 - t^2)`` with Jacobian ``L (1 + t^2)/(1 - t^2)^2``.
    """
    if n_points < 8 or n_points % 2:
        raise ValueError(f"n_points must be an even number >= 8, got {n_points}")
    if not map_scale > 0.0:
        raise ValueError(f"map_scale must be positive, got {map_scale}")
    t, wt = leggauss(n_points)
    one_minus = 1.0 - t * t
    nodes = map_scale * t / one_minus
    weights = wt * map_scale * (1.0 + t * t) / one_minus**2
    # enforce exact mirror symmetry of the nodes
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    return MomentumGrid(nodes, weights, float(map_scale))


def build_composite_grid(
    p_min: float = 1e-5,
    p_max: float = 50.0,
    panels: int = 12,
    per_panel: int = 12,
    tail: int = 24,
) -> MomentumGrid:
    """Gauss-Legendre panels with geometric breakpoints plus an algebraic tail.

    Breakpoints are ``0, p_min, ..., p_max`` (``panels`` of them, geometric
    after zero); the tail ``[p_max, inf)`` uses ``p = p_max / u`` with
    ``u`` in ``(0, 1]``.  Near the three-body threshold the spectator
    functions vary on the scales ``sqrt(-2E)``, the virtual-state momentum and
    the potential range at once, which a single mapped rule resolves only
    with very many nodes.
    """
    if not 0.0 < p_min < p_max:
        raise ValueError("need 0 < p_min < p_max")
    if panels < 1 or per_panel < 2 or tail < 2:
        raise ValueError("panels >= 1, per_panel >= 2 and tail >= 2 required")
    t, wt = leggauss(per_panel)
    breaks = np.concatenate([[0.0], np.geomspace(p_min, p_max, panels)])
    half = [0.5 * (b - a) * t + 0.5 * (b + a) for a, b in zip(breaks[:-1], breaks[1:])]
    half_w = [0.5 * (b - a) * wt for a, b in zip(breaks[:-1], breaks[1:])]
    tt, tw = leggauss(tail)
    u = 0.5 * (tt + 1.0)
    half.append(p_max / u[::-1])
    half_w.append((0.5 * tw * p_max / u**2)[::-1])
    p, w = np.concatenate(half), np.concatenate(half_w)
    return MomentumGrid(np.concatenate([-p[::-1], p]), np.concatenate([w[::-1], w]),
                        float(p_min), "composite")


HEAVY_BOSONS = 100.0


def default_grid(masses: MassConfig | None = None) -> MomentumGrid:
    """Composite grid used by the scans and the command line.

    Heavy bosons push the spectator scale ``sqrt(2B/(alpha_x alpha_y))`` up
    and bind shallow excited states, so they get a finer and wider rule.
    """
    if masses is not None and masses.mass_ratio > HEAVY_BOSONS:
        return build_composite_grid(1e-6, 100.0, 16, 16, 32)
    return build_composite_grid(1e-5, 50.0, 12, 12, 24)


@functools.lru_cache(maxsize=512)
def _threshold(params: PotentialParams) -> float:
    return threshold_energy(params)


@dataclass
class KernelMatrix:
    """The signed Nystrom matrix ``+-W`` at one energy.

    ``matrix`` already carries ``exchange_sign``; block ``[lam, nu]`` is the
    slice ``matrix[lam*N:(lam+1)*N, nu*N:(nu+1)*N]``.
    """

    matrix: np.ndarray
    energy: float
    exchange_sign: int
    grid: MomentumGrid
    max_denominator: float
    max_shifted_energy: float

    def block(self, lam, nu) -> np.ndarray:
        n = self.grid.n_points
        lam, nu = int(lam), int(nu)
        return self.matrix[lam * n:(lam + 1) * n, nu * n:(nu + 1) * n]

    @property
    def blocks(self):
        return [[self.block(lam, nu) for nu in Term] for lam in Term]


def shifted_energy(energy: float, masses: MassConfig, p):
    """Pair energy left over when the spectator carries momentum ``p``."""
    return energy - 0.5 * masses.alpha_x * masses.alpha_y * np.asarray(p) ** 2


def _plane_wave_factors(params, masses, energy, p):
    """Per-node pieces of the kernel numerator.

    Returns ``(a, b, tau)``, each shaped ``(2, len(p))``, with the kernel form
    factor ``a_nu(p) e^{ik/2} + b_nu(p) e^{-ik/2}`` at pair energy ``E_p``.
    """
    ev = evaluate(params, shifted_energy(energy, masses, p))
    return ev.coef_a, ev.coef_b, ev.tau


def kernel_denominator(energy, masses, p, q):
    p = np.asarray(p)[..., :, None] if np.ndim(p) else p
    return energy - 0.5 * np.square(q) - 0.5 * np.square(p) - masses.beta * p * q


def kernel_rows(params, masses, grid, energy, p, factors=None):
    """Rows ``K[lam, nu](p_i, q_j) w_j / 2pi`` for arbitrary spectator momenta ``p``.

    Shape ``(2, len(p), 2, N)``; ``factors`` caches the column-side pieces,
    which only depend on the grid and the energy.
    """
    beta = masses.beta
    p = np.atleast_1d(np.asarray(p, dtype=float))
    q = grid.nodes
    if factors is None:
        factors = _plane_wave_factors(params, masses, energy, q)
    a_q, b_q, tau_q = factors
    a_p, b_p, _ = _plane_wave_factors(params, masses, energy, p)

    eq = np.exp(0.5j * q)
    ebq = np.exp(0.5j * beta * q)
    ep = np.exp(0.5j * p)
    ebp = np.exp(0.5j * beta * p)

    # g_lam(q + beta p, E_p): row factors times e^{+-iq/2}
    row_plus = a_p * ebp          # multiplies e^{+iq/2}
    row_minus = b_p * np.conj(ebp)  # multiplies e^{-iq/2}
    # conj g_nu(p + beta q, E_q): column factors times e^{-+ip/2}
    col_a = np.conj(a_q * ebq)    # multiplies e^{-ip/2}
    col_b = np.conj(b_q) * ebq    # multiplies e^{+ip/2}

    den = kernel_denominator(energy, masses, p, q)
    if np.any(den >= 0.0):
        raise InternalDomainError("non-negative kernel denominator below threshold")
    colw = grid.weights * tau_q / (2.0 * np.pi)  # (2, N)

    epc = np.conj(ep)
    out = np.empty((2, len(p), 2, len(q)), dtype=complex)
    for lam in Term:
        for nu in Term:
            num = (
                np.outer(row_plus[lam] * epc, eq * col_a[nu])
                + np.outer(row_plus[lam] * ep, eq * col_b[nu])
                + np.outer(row_minus[lam] * epc, np.conj(eq) * col_a[nu])
                + np.outer(row_minus[lam] * ep, np.conj(eq) * col_b[nu])
            )
            out[lam, :, nu, :] = num / den * colw[nu]
    return out


def assemble_kernel(
    params: PotentialParams,
    masses: MassConfig,
    grid: MomentumGrid,
    energy: float,
    exchange_sign: int = 1,
    threshold: float | None = None,
) -> KernelMatrix:
    """Nystrom matrix of the Faddeev kernel at a three-body energy below threshold."""
    if exchange_sign not in (1, -1):
        raise ValueError("exchange_sign must be +1 or -1")
    if threshold is None:
        threshold = _threshold(params)
    if not energy < threshold:
        raise DomainError(f"energy {energy} is not below the threshold {threshold}")
    q = grid.nodes
    try:
        factors = _plane_wave_factors(params, masses, energy, q)
    except PoleProximity as exc:
        raise InternalDomainError(f"tau pole hit below threshold: {exc}") from exc
    e_shift = shifted_energy(energy, masses, q)
    if np.max(e_shift) >= threshold or np.max(e_shift) > energy:
        raise InternalDomainError("shifted pair energy reached the two-body threshold")

    rows = kernel_rows(params, masses, grid, energy, q, factors)
    n = grid.n_points
    matrix = rows.reshape(2 * n, 2 * n)
    if exchange_sign < 0:
        matrix = -matrix
    if not np.all(np.isfinite(matrix)):
        raise InternalDomainError("non-finite kernel entries")
    den_max = float(np.max(kernel_denominator(energy, masses, q, q)))
    return KernelMatrix(matrix, float(energy), exchange_sign, grid, den_max, float(np.max(e_shift)))


def log_determinant(kernel: KernelMatrix) -> tuple[complex, float]:
    """``det(+-W - 1)`` as ``(phase, log|det|)`` from an LU factorization."""
    a = kernel.matrix - np.eye(kernel.matrix.shape[0])
    lu, piv = lu_factor(a, check_finite=False)
    diag = np.diag(lu)
    if np.any(diag == 0.0):
        raise SingularFactorization(f"zero pivot at E = {kernel.energy}")
    swaps = np.count_nonzero(piv != np.arange(len(piv)))
    phase = (-1.0) ** swaps * np.prod(diag / np.abs(diag))
    return complex(phase), float(np.sum(np.log(np.abs(diag))))


def characteristic_value(kernel: KernelMatrix, diagnostics: dict | None = None) -> float:
    """Real signed scalar with the zeros of ``det(+-W - 1)``.

    The determinant is real for real energies (verified, not assumed: the
    relative imaginary part is logged and stored in ``diagnostics``).  The
    magnitude is clipped in log space so large matrices cannot overflow.
    """
    phase, logabs = log_determinant(kernel)
    imag_ratio = abs(phase.imag)
    if diagnostics is not None:
        diagnostics["imag_ratio"] = max(diagnostics.get("imag_ratio", 0.0), imag_ratio)
    return float(phase.real * math.exp(min(max(logabs, -700.0), 700.0)))


@dataclass
class BoundState:
    energy: float
    phi_minus: np.ndarray
    phi_plus: np.ndarray
    residual: float
    grid: MomentumGrid
    exchange_sign: int = 1
    near_threshold: bool = False

    @property
    def phi(self) -> np.ndarray:
        return np.stack([self.phi_minus, self.phi_plus])


@dataclass
class SpectrumResult:
    energies: list[float]
    states: list[BoundState]
    threshold: float
    params: PotentialParams
    masses: MassConfig
    grid: MomentumGrid
    diagnostics: dict = field(default_factory=dict)

    @property
    def eigenvectors(self):
        return [(s.phi_minus, s.phi_plus) for s in self.states]

    def __len__(self):
        return len(self.energies)


def default_search_floor(params: PotentialParams, masses: MassConfig) -> float:
    """Ten times a generous ground-state estimate at ``alpha = 0``.

    The ``alpha = 0`` pair energy is ``-v0^2/2``; three-body ground states at
    these couplings sit a few times deeper, more so for heavy bosons.
    """
    heavy = 1.0 + math.log1p(masses.mass_ratio)
    return -10.0 * heavy * 0.5 * params.v0**2


def resolution_energy(grid: MomentumGrid, masses: MassConfig, factor: float = 4.0) -> float:
    """Binding below which the grid cannot resolve the spectator momentum.

    A state bound by ``B`` relative to threshold has spectator momenta of
    order ``sqrt(2B/(alpha_x alpha_y))``; that scale has to span a few node
    spacings at the origin.  The discretized determinant produces spurious
    sign changes below this scale.
    """
    k = factor * grid.min_spacing
    return 0.5 * masses.alpha_x * masses.alpha_y * k * k


def _max_real_eigenvalue(kernel: KernelMatrix) -> float:
    lam = np.linalg.eigvals(kernel.matrix)
    real = lam[np.abs(lam.imag) < 1e-8 * np.maximum(1.0, np.abs(lam.real))]
    return float(np.max(real.real)) if real.size else -np.inf


def eigen_count(kernel: KernelMatrix) -> int:
    """Number of (numerically) real eigenvalues of ``+-W`` above one."""
    lam = np.linalg.eigvals(kernel.matrix)
    real = np.abs(lam.imag) < 1e-8 * np.maximum(1.0, np.abs(lam.real))
    return int(np.count_nonzero(real & (lam.real > 1.0)))


def nearest_eigenvector(kernel: KernelMatrix, iterations: int = 6):
    """Eigenvector of ``+-W`` for the eigenvalue nearest one, by inverse iteration."""
    n2 = kernel.matrix.shape[0]
    a = kernel.matrix - np.eye(n2)
    # tiny shift keeps the factorization nonsingular exactly at a root
    shift = 1e-12 * max(1.0, float(np.max(np.abs(kernel.matrix))))
    lu = lu_factor(a - shift * np.eye(n2), check_finite=False)
    v = np.ones(n2, dtype=complex) / math.sqrt(n2)
    for _ in range(iterations):
        v = lu_solve(lu, v, check_finite=False)
        v /= np.linalg.norm(v)
    residual = float(np.linalg.norm(kernel.matrix @ v - v))
    return v, residual


def _ladder(threshold, floor, top_gap, samples_per_decade):
    """Energies from ``floor`` up to ``threshold - top_gap``, geometric in the gap."""
    span = threshold - floor
    decades = math.log10(span / top_gap)
    n = max(2, int(math.ceil(decades * samples_per_decade)) + 1)
    return threshold - np.geomspace(span, top_gap, n)


def find_spectrum(
    params: PotentialParams,
    masses: MassConfig,
    grid: MomentumGrid,
    search_floor: float | None = None,
    exchange_sign: int = 1,
    samples_per_decade: int = 200,
    rel_tol: float = 1e-11,
    edge: float = EDGE,
    jobs: int = 1,
    with_vectors: bool = True,
    resolution_factor: float = 4.0,
    cross_check: bool = True,
) -> SpectrumResult:
    """All three-body energies between ``search_floor`` and the threshold.

    The characteristic value is sampled on a ladder geometric in the distance
    to threshold, each sign change is bisected down to ``rel_tol``, and the
    eigenvector for eigenvalue one is recovered at every root.  The ladder
    stops at ``edge`` in threshold units, or at the grid resolution energy
    when that is larger; the stopping point is recorded in ``diagnostics``.
    """
    threshold = _threshold(params)
    if search_floor is None:
        search_floor = default_search_floor(params, masses)
        # push the floor down until no eigenvalue of W exceeds one there
        for _ in range(8):
            k = assemble_kernel(params, masses, grid, search_floor, exchange_sign, threshold)
            if _max_real_eigenvalue(k) < 1.0:
                break
            search_floor *= 4.0
    if not search_floor < threshold:
        raise DomainError(f"search floor {search_floor} must lie below threshold {threshold}")

    scale = abs(threshold) if threshold < 0.0 else abs(search_floor)
    edge_gap = edge * scale
    res_gap = resolution_energy(grid, masses, resolution_factor)
    top_gap = max(edge_gap, res_gap)
    energies = _ladder(threshold, search_floor, top_gap, samples_per_decade)

    diag: dict = {"imag_ratio": 0.0}

    def value(e):
        d = {}
        try:
            v = characteristic_value(assemble_kernel(params, masses, grid, e, exchange_sign, threshold), d)
        except SingularFactorization:
            v = 0.0
        return v, d.get("imag_ratio", 0.0)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(value, energies))
    else:
        results = [value(e) for e in energies]
    values = np.array([r[0] for r in results])
    imag = np.array([r[1] for r in results])
    # next to a root |det| is pure roundoff and its phase means nothing
    flips = np.sign(values[:-1]) != np.sign(values[1:])
    near_root = np.zeros(len(values), dtype=bool)
    near_root[:-1] |= flips
    near_root[1:] |= flips
    diag["imag_ratio"] = float(np.max(imag[~near_root], initial=0.0))
    if diag["imag_ratio"] > IMAG_TOL:
        logger.warning("det(W - 1) has relative imaginary part %.2e on the ladder", diag["imag_ratio"])

    roots = []
    for i in range(len(energies) - 1):
        lo, hi = float(energies[i]), float(energies[i + 1])
        flo, fhi = values[i], values[i + 1]
        if flo == 0.0:
            roots.append(lo)
            continue
        if np.sign(flo) == np.sign(fhi) or fhi == 0.0:
            continue
        roots.append(_bisect(value, lo, hi, flo, rel_tol))
    if values[-1] == 0.0:
        roots.append(float(energies[-1]))

    states = []
    for e in sorted(roots):
        near = (threshold - e) < 10.0 * top_gap
        if with_vectors:
            kern = assemble_kernel(params, masses, grid, e, exchange_sign, threshold)
            v, res = nearest_eigenvector(kern)
            n = grid.n_points
            states.append(BoundState(e, v[:n], v[n:], res, grid, exchange_sign, near))
        else:
            states.append(BoundState(e, np.empty(0), np.empty(0), float("nan"), grid, exchange_sign, near))

    diag.update(
        ladder_energies=energies,
        ladder_values=values,
        search_floor=float(search_floor),
        top_gap=float(top_gap),
        edge_gap=float(edge_gap),
        resolution_gap=float(res_gap),
        resolution_limited=bool(res_gap > edge_gap),
    )
    if cross_check:
        # eigenvalues of W above one at the ladder top, one per bound state
        top = assemble_kernel(params, masses, grid, float(energies[-1]), exchange_sign, threshold)
        diag["edge_count"] = eigen_count(top)
        diag["count_mismatch"] = diag["edge_count"] != len(states)
        if diag["count_mismatch"]:
            logger.warning("sign scan found %d states, eigenvalue count says %d",
                           len(states), diag["edge_count"])
    if with_vectors:
        bad = [s.energy for s in states if s.residual > RESIDUAL_TOL]
        if bad:
            logger.warning("eigenvector residual above %.0e at E=%s", RESIDUAL_TOL, bad)
        diag["max_residual"] = max((s.residual for s in states), default=0.0)
    return SpectrumResult([s.energy for s in states], states, threshold, params, masses, grid, diag)


def _bisect(value, lo, hi, flo, rel_tol, max_iter=200):
    """Refine a sign-change bracket with Brent's method (bracketing, like bisection)."""
    try:
        return brentq(lambda e: value(e)[0], lo, hi, xtol=rel_tol * min(abs(lo), abs(hi)),
                      rtol=max(rel_tol, 4 * np.finfo(float).eps), maxiter=max_iter)
    except (RuntimeError, ValueError) as exc:
        raise ConvergenceError(f"root refinement failed: {exc}", bracket=(lo, hi)) from exc


def count_states_at_edge(
    params: PotentialParams,
    masses: MassConfig,
    grid: MomentumGrid,
    exchange_sign: int = 1,
    edge: float = EDGE,
) -> int:
    """Bound-state count from the eigenvalues of ``+-W`` just below threshold.

    Independent of the sign scan: every bound state below the ladder top
    corresponds to one real eigenvalue of the kernel that has risen past one.
    """
    threshold = _threshold(params)
    floor = default_search_floor(params, masses)
    scale = abs(threshold) if threshold < 0.0 else abs(floor)
    gap = max(edge * scale, resolution_energy(grid, masses))
    k = assemble_kernel(params, masses, grid, threshold - gap, exchange_sign, threshold)
    return eigen_count(k)
