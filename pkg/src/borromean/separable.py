"""Two-term separable expansion of the BX off-shell t-matrix.

For the double-delta potential the integral operator ``v G0`` has rank two,
so the t-matrix below threshold is exactly

    t(k, k', E) = sum_nu tau_nu(E) g_nu*(k, E) g_nu(k', E),   nu in {-, +}

with closed forms for the eigenvalues ``eta_nu``, the weights
``tau_nu = eta_nu / (eta_nu - 1)`` and the form factors ``g_nu``.  Every form
factor is a combination of two plane waves,

    g_nu(k, E) = a_nu(E) exp(i k / 2) + b_nu(E) exp(-i k / 2),

and this module keeps the coefficients ``(a, b)`` rather than the printed
expression, because the printed one over- and underflows once
``sqrt(-2E)`` reaches a few hundred.  Kernel assembly relies on the
plane-wave split to build its blocks from outer products.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PoleProximity
from .twobody import PotentialParams

DEGENERATE_ETA = 1e-12
POLE_GUARD = 1e-12


class Term(enum.IntEnum):
    """Index of the expansion term; also the block index in the kernel."""

    MINUS = 0
    PLUS = 1


def _as_term(nu) -> Term:
    if isinstance(nu, Term):
        return nu
    if nu in ("+", "plus", "Plus", 1, +1):
        return Term.PLUS
    if nu in ("-", "minus", "Minus", 0, -1):
        return Term.MINUS
    raise ValueError(f"unknown expansion term {nu!r}")


def _decay(energy):
    energy = np.asarray(energy, dtype=float)
    if np.any(~(energy < 0.0)):
        raise DomainError("separable closed forms require energy < 0")
    return np.sqrt(-2.0 * energy)


def integral_a(energy):
    """``int dk/2pi 1/(E - k^2/2)`` for ``E < 0``."""
    return -1.0 / _decay(energy)


def integral_b(energy):
    """``int dk/2pi exp(ik)/(E - k^2/2)`` for ``E < 0``."""
    s = _decay(energy)
    return -np.exp(-s) / s


@dataclass(frozen=True)
class SeparableEval:
    """Both expansion terms at one energy (or an array of energies).

    Arrays have a leading axis of length two indexed by :class:`Term`; the
    remaining axes follow ``energy``.
    """

    params: PotentialParams
    energy: np.ndarray
    eta: np.ndarray
    tau: np.ndarray
    p_factor: np.ndarray
    coef_a: np.ndarray
    coef_b: np.ndarray

    def form_factor(self, nu, k):
        nu = _as_term(nu)
        k = np.asarray(k)
        return self.coef_a[nu] * np.exp(0.5j * k) + self.coef_b[nu] * np.exp(-0.5j * k)

    def t_matrix(self, k, k_prime):
        total = 0.0
        for nu in Term:
            total = total + self.tau[nu] * np.conj(self.form_factor(nu, k)) * \
                self.form_factor(nu, k_prime)
        return total


def evaluate(params: PotentialParams, energy, pole_guard: float = POLE_GUARD) -> SeparableEval:
    """Evaluate eta, tau, P and the form-factor coefficients of both terms.

    With ``s = sqrt(-2E)`` the scaled eigenvalues ``x = eta s / v0`` are
    ``(1 - alpha +- S)/2``, ``S^2 = (1-alpha)^2 + 4 alpha (1 - exp(-2s))``.
    The radicand is bounded below by ``4c(1-c)`` with ``c = 1 - exp(-2s)``,
    so it is never negative for real alpha; the principal complex root is
    taken anyway so that the arithmetic stays defined.  The cancelling
    combinations ``x_-`` and ``P_+`` are evaluated in rationalized form.
    """
    v0, alpha = params.v0, params.alpha
    energy = np.asarray(energy, dtype=float)
    s = _decay(energy)
    c = -np.expm1(-2.0 * s)
    S = np.sqrt(((1.0 - alpha) ** 2 + 4.0 * alpha * c).astype(complex))

    x_plus = 0.5 * (1.0 - alpha + S)
    x_minus = -2.0 * alpha * c / (1.0 - alpha + S)
    eta = np.stack([v0 * x_minus / s, v0 * x_plus / s])

    p_minus = 1.0 - x_minus
    # P_+ ~ exp(-2s); carry exp(s) P_+ instead, which stays O(exp(-s))
    q_plus = 2.0 * alpha * np.exp(-s) / (1.0 + alpha + S)
    p_plus = q_plus * np.exp(-s)
    p_factor = np.stack([p_minus, p_plus])

    gap = eta - 1.0
    if np.any(np.abs(gap) < pole_guard):
        bad = eta[np.abs(gap) < pole_guard].ravel()[0]
        raise PoleProximity(f"eta = {bad} within {pole_guard} of the tau pole", complex(bad))
    degenerate = np.abs(eta) < DEGENERATE_ETA
    with np.errstate(divide="ignore", invalid="ignore"):
        # only reachable with pole_guard = 0: tau is infinite on the pole
        tau = np.where(degenerate, 0.0, eta / np.where(degenerate, 1.0, gap))

    # phase factor (v0/eta)|eta/v0| = sign(eta) for real eta; eta/|eta| off the real line
    phase = np.where(degenerate, 0.0, eta / np.where(degenerate, 1.0, np.abs(eta)))
    root_s = np.sqrt(s)
    em = np.exp(-s)

    # printed normalization divided through by exp(s) for the minus term
    den_minus = np.sqrt(p_minus**2 - 2.0 * p_minus * em**2 + em**2)
    den_plus = np.sqrt(q_plus**2 - 2.0 * q_plus * em + 1.0)
    coef_a = np.stack([p_minus / den_minus, q_plus / den_plus])
    coef_b = np.stack([-em / den_minus, -1.0 / den_plus + 0.0 * em])
    scale = phase * root_s
    coef_a = np.where(degenerate, 0.0, scale * coef_a)
    coef_b = np.where(degenerate, 0.0, scale * coef_b)

    return SeparableEval(params, energy, eta, tau, p_factor, coef_a, coef_b)


def eta(params: PotentialParams, nu, energy):
    """Eigenvalue ``eta_nu(E)`` of ``v G0``."""
    return evaluate(params, energy, pole_guard=0.0).eta[_as_term(nu)]


def tau(params: PotentialParams, nu, energy, pole_guard: float = POLE_GUARD):
    """Weight ``eta/(eta - 1)``; raises :class:`PoleProximity` near ``eta = 1``."""
    nu = _as_term(nu)
    ev = evaluate(params, energy, pole_guard=0.0)
    e = ev.eta[nu]
    if np.any(np.abs(e - 1.0) < pole_guard):
        raise PoleProximity(f"eta_{nu.name} = {e} at the tau pole", complex(np.ravel(e)[0]))
    return ev.tau[nu]


def form_factor(params: PotentialParams, nu, k, energy):
    return evaluate(params, energy, pole_guard=0.0).form_factor(nu, k)


def form_factor_printed(params: PotentialParams, nu, k, energy):
    """Form factor straight from the printed closed form.

    Only usable for moderate ``sqrt(-2E)``; kept as the reference the stable
    coefficients are checked against.
    """
    nu = _as_term(nu)
    v0 = params.v0
    ev = evaluate(params, energy, pole_guard=0.0)
    e = ev.eta[nu]
    if abs(e) < DEGENERATE_ETA:
        return np.zeros_like(np.asarray(k, dtype=complex))
    s = np.sqrt(-2.0 * np.asarray(energy, dtype=float))
    P = 1.0 - e / v0 * s
    pref = (v0 / e) * abs(e / v0) * s**0.5
    den = np.sqrt(np.exp(2 * s) * P**2 - 2 * P + 1)
    return pref / den * (np.exp(s) * P * np.exp(0.5j * np.asarray(k)) - np.exp(-0.5j * np.asarray(k)))


def t_matrix(params: PotentialParams, k, k_prime, energy):
    """Separable t-matrix ``sum_nu tau_nu g_nu*(k) g_nu(k')``."""
    return evaluate(params, energy).t_matrix(k, k_prime)
