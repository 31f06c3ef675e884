"""Independent oracles used to freeze expected values in the tests.

Everything here deliberately avoids the solver code paths it is used to
check: scalar bisection instead of the Picard/Helmholtz machinery, decimal
arithmetic instead of float closed forms, plain finite differences, and a
directly-derived linearization of the coupled system.
"""

from __future__ import annotations

from decimal import Decimal, getcontext

import numpy as np

getcontext().prec = 50


def psi_plus_decimal(nstar: float, n: float) -> float:
    """High-precision evaluation of the convex part via the decimal module."""
    beta = Decimal(1) - Decimal(nstar)
    nd = Decimal(n)
    val = -beta * (Decimal(1) - nd).ln() - nd**3 / Decimal(3)
    return float(val)


def psi_full_decimal(nstar: float, k: float, n: float) -> float:
    """High-precision single-well potential (both parts summed)."""
    beta = Decimal(1) - Decimal(nstar)
    nd = Decimal(n)
    val = (
        -beta * (Decimal(1) - nd).ln()
        - nd**3 / Decimal(3)
        - beta * nd**2 / Decimal(2)
        - beta * nd
        + Decimal(k)
    )
    return float(val)


def scalar_phi_fixed_point(m: float, sigma: float, gamma: float, psi_minus_d1,
                           tol: float = 1.0e-13) -> float:
    """Bisection for c = psi_minus'(m - (sigma/gamma) c) (constant states).

    The left side minus the right side is strictly increasing in c because
    psi_minus'' <= 0, so bisection on a bracketing interval is safe.
    """
    span = abs(float(psi_minus_d1(np.float64(m)))) + 10.0

    def g(c):
        return c - float(psi_minus_d1(np.float64(m - (sigma / gamma) * c)))

    lo, hi = -span, span
    glo, ghi = g(lo), g(hi)
    assert glo < 0.0 < ghi, "fixed point not bracketed"
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def linear_growth_rate(m: float, lam: float, gamma: float, sigma: float,
                       b_m: float, psi_plus_d2_m: float, psi_minus_d2_w: float) -> float:
    """Growth rate of a single Fourier mode about the constant state m.

    Derived by linearizing the coupled transport/elliptic system: the
    elliptic equation gives dphi = (gamma*lam + p'')/(1 + sigma*lam +
    (sigma/gamma) p'') * dn with p'' the concave curvature at the base
    argument, and the transport equation contributes -b(m)*lam*(dphi +
    psi_plus''(m) dn).
    """
    ratio = sigma / gamma
    dphi = (gamma * lam + psi_minus_d2_w) / (1.0 + sigma * lam + ratio * psi_minus_d2_w)
    return -b_m * lam * (dphi + psi_plus_d2_m)


def integrate_scalar_ode(rate: float, amp0: float, t: float, nsteps: int = 2000) -> float:
    """RK4 integration of da/dt = rate * a; cross-check for the growth oracle."""
    a = amp0
    dt = t / nsteps
    for _ in range(nsteps):
        k1 = rate * a
        k2 = rate * (a + 0.5 * dt * k1)
        k3 = rate * (a + 0.5 * dt * k2)
        k4 = rate * (a + dt * k3)
        a += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return a


def second_difference(f, x: float, h: float) -> float:
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)


def central_difference(f, x: float, h: float) -> float:
    return (f(x + h) - f(x - h)) / (2.0 * h)


def cosine_mode_amplitude(values: np.ndarray, L: float, j: int) -> float:
    """Amplitude of the cos(j pi x / L) component on cell centers (exact DCT row)."""
    npts = values.shape[0]
    x = (np.arange(npts) + 0.5) * (L / npts)
    basis = np.cos(j * np.pi * x / L)
    return float(2.0 * np.sum(values * basis) / npts)
