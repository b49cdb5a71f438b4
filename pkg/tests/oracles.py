"""Independent reference computations used by the tests.

None of these call into the closed forms they check.
"""

import warnings

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.linalg import eigh_tridiagonal

# --- two-body: real-space finite differences with Gaussian-smeared deltas ---

FD_WIDTHS = np.geomspace(0.0025, 0.02, 6)
FD_STEP_RATIO = 6.0  # grid step = width / ratio
FD_FIT_DEGREE = 3
FD_BOX_DECAYS = 16.0


def smeared_levels(v0, alpha, width, half_box, step, count):
    """Lowest eigenvalues of -1/2 d^2/dx^2 + v_width(x) on a hard-wall box."""
    n = int(2 * half_box / step)
    x = (np.arange(n) - 0.5 * (n - 1)) * step

    def bump(c):
        return np.exp(-0.5 * ((x - c) / width) ** 2) / (np.sqrt(2 * np.pi) * width)

    pot = -v0 * (bump(0.5) - alpha * bump(-0.5))
    return eigh_tridiagonal(1.0 / step**2 + pot, np.full(n - 1, -0.5 / step**2),
                            eigvals_only=True, select="i", select_range=(0, count - 1))


def finite_difference_energies(v0, alpha, count, kappa_min):
    """Bound-state energies extrapolated to zero smearing width."""
    half_box = FD_BOX_DECAYS / kappa_min
    levels = np.array([smeared_levels(v0, alpha, w, half_box, w / FD_STEP_RATIO, count)
                       for w in FD_WIDTHS])
    return np.array([np.polyval(np.polyfit(FD_WIDTHS, levels[:, i], FD_FIT_DEGREE), 0.0)
                     for i in range(count)])


# --- free Green function and the two-site Lippmann-Schwinger solution ---

def green_position(energy, d):
    """<x|G0(E)|x + d> = int dq/2pi cos(q d)/(E - q^2/2) by adaptive quadrature."""
    def f(q):
        return 1.0 / (energy - 0.5 * q * q)
    if d == 0.0:
        val, _ = quad(f, 0.0, np.inf, epsabs=1e-14, epsrel=1e-13)
        return val / np.pi
    # the Fourier-integral extrapolation complains when asked for more than
    # it can deliver; take the tightest request it completes cleanly
    for eps in (1e-14, 1e-13, 1e-12, 1e-11):
        with warnings.catch_warnings():
            warnings.simplefilter("error", IntegrationWarning)
            try:
                val, _ = quad(f, 0.0, np.inf, weight="cos", wvar=abs(d), epsabs=eps, limlst=100)
                return val / np.pi
            except IntegrationWarning:
                continue
    raise RuntimeError("cosine quadrature did not converge")


def two_site_t_matrix(v0, alpha, energy, k, k_prime):
    """<k'|t(E)|k> for v = -v0 |1/2><1/2| + v0 alpha |-1/2><-1/2|.

    The Lippmann-Schwinger equation closes on the two delta sites:
    t = sum_ij |x_i> [(c^-1 - G)^-1]_ij <x_j|.
    """
    sites = np.array([0.5, -0.5])
    strengths = np.array([-v0, v0 * alpha])
    g = np.array([[green_position(energy, a - b) for b in sites] for a in sites])
    if alpha == 0.0:
        inner = np.zeros((2, 2), dtype=complex)
        inner[0, 0] = 1.0 / (1.0 / strengths[0] - g[0, 0])
    else:
        inner = np.linalg.inv(np.diag(1.0 / strengths) - g)
    return np.exp(-1j * k_prime * sites) @ inner @ np.exp(1j * k * sites)


def momentum_potential(v0, alpha, k, k_prime):
    """<k|v|k'> of the double-delta interaction."""
    d = np.subtract.outer(k, k_prime) if np.ndim(k) else k - k_prime
    return -v0 * (np.exp(-0.5j * d) - alpha * np.exp(0.5j * d))


def plane_wave_coefficients(g):
    """(a, b) with g(k) = a e^{ik/2} + b e^{-ik/2}, read off at k = 0 and pi."""
    g0, gpi = g(0.0), g(np.pi)
    return 0.5 * (g0 - 1j * gpi), 0.5 * (g0 + 1j * gpi)


def overlap(params, nu, mu, energy):
    """int dk/2pi g_nu g_mu^* /(E - k^2/2) with the integrals done by quadrature."""
    from borromean.separable import form_factor
    a, b = plane_wave_coefficients(lambda k: form_factor(params, nu, k, energy))
    c, d = plane_wave_coefficients(lambda k: form_factor(params, mu, k, energy))
    i0, i1 = green_position(energy, 0.0), green_position(energy, 1.0)
    return (a * np.conj(c) + b * np.conj(d)) * i0 + (a * np.conj(d) + b * np.conj(c)) * i1
