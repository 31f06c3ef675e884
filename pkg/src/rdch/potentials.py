"""Single-well logarithmic potential, degenerate mobility, and entropy density.

The free-energy density splits into a convex part carrying the logarithmic
singularity at n = 1 and a bounded concave part,

    psi(n) = psi_plus(n) + psi_minus(n),
    psi_plus(n)  = -(1 - nstar) * log(1 - n) - n^3 / 3,
    psi_minus(n) = -(1 - nstar) * (n^2 / 2 + n) + k      for n in [0, 1],

with the degenerate mobility b(n) = n (1 - n)^2.  Everything here is a pure
closed-form evaluation: the clamped regularizations near the pure phases, the
concave extension of psi_minus to the whole line, and the convex entropy
density phi_eps with phi_eps'' = 1 / B_eps obtained by exact double
integration (partial fractions, no quadrature).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# Admissible clamping range; below EPS_MIN the entropy curvature 1/b(1-eps)
# overflows the useful double range, above EPS_MAX the clamps eat the well.
EPS_MIN = 1.0e-8
EPS_MAX = 1.0e-1
EPS_DEFAULT = 1.0e-2

# nstar above 0.7 breaks convexity of psi_plus on [0, 1).
NSTAR_MAX = 0.7


@dataclass(frozen=True)
class PotentialSpec:
    """Parameters of the single-well logarithmic potential."""

    nstar: float
    k: float = 1.0
    kind: str = "single_well_log"

    def __post_init__(self):
        if self.kind != "single_well_log":
            raise DomainError(f"unknown potential kind {self.kind!r}")
        if not (0.0 < self.nstar <= NSTAR_MAX):
            raise DomainError(
                f"nstar must lie in (0, {NSTAR_MAX}] so the singular part stays convex, "
                f"got {self.nstar}"
            )

    @property
    def beta(self) -> float:
        """Magnitude of the concave curvature, 1 - nstar."""
        return 1.0 - self.nstar


@dataclass(frozen=True)
class RegularizedPotential:
    """Potential with the convex-part curvature clamped on [eps, 1 - eps]."""

    base: PotentialSpec
    eps: float = EPS_DEFAULT

    def __post_init__(self):
        if not (EPS_MIN <= self.eps <= EPS_MAX):
            raise DomainError(
                f"regularization eps must lie in [{EPS_MIN}, {EPS_MAX}], got {self.eps}"
            )


@dataclass(frozen=True)
class MobilitySpec:
    """Degenerate mobility b(n) = n (1 - n)^2, optionally clamped at eps."""

    kind: str = "polynomial"
    eps: float | None = None

    def __post_init__(self):
        if self.kind != "polynomial":
            raise DomainError(f"unknown mobility kind {self.kind!r}")
        if self.eps is not None and not (EPS_MIN <= self.eps <= EPS_MAX):
            raise DomainError(
                f"mobility eps must lie in [{EPS_MIN}, {EPS_MAX}], got {self.eps}"
            )


@dataclass(frozen=True)
class EntropyDensity:
    """Convex density phi_eps with phi_eps'' = 1/B_eps, phi_eps(0) = phi_eps'(0) = 0."""

    mobility: MobilitySpec

    def __post_init__(self):
        if self.mobility.eps is None:
            raise DomainError("EntropyDensity needs a mobility with eps set")

    @property
    def eps(self) -> float:
        return float(self.mobility.eps)


def _as_array(n):
    arr = np.asarray(n, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise DomainError("non-finite density sample")
    return arr


def _maybe_scalar(scalar_in, *vals):
    if scalar_in:
        return tuple(float(v.reshape(-1)[0]) for v in vals)
    return vals


# ---------------------------------------------------------------------------
# convex part


def _psi_plus_raw(n, beta):
    one_m = 1.0 - n
    v = -beta * np.log1p(-n) - n * n * n / 3.0
    d1 = beta / one_m - n * n
    d2 = beta / (one_m * one_m) - 2.0 * n
    return v, d1, d2


def psi_plus(p: PotentialSpec | RegularizedPotential, n):
    """Evaluate the convex part: returns (value, first, second derivative).

    For a plain spec the domain is n < 1 (the log blows up).  For a
    regularized spec the second derivative is clamped outside [eps, 1-eps]
    and value/slope continue as the C^1 quadratic of the clamp, so the
    triple is defined and C^2 on all of R.
    """
    arr = _as_array(n)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)

    if isinstance(p, RegularizedPotential):
        beta, eps = p.base.beta, p.eps
        v, d1, d2 = _psi_plus_raw(np.clip(arr, eps, 1.0 - eps), beta)
        lo = arr < eps
        hi = arr > 1.0 - eps
        if np.any(lo):
            va, d1a, d2a = _psi_plus_raw(np.float64(eps), beta)
            dn = arr[lo] - eps
            v[lo] = va + d1a * dn + 0.5 * d2a * dn * dn
            d1[lo] = d1a + d2a * dn
            d2[lo] = d2a
        if np.any(hi):
            vb, d1b, d2b = _psi_plus_raw(np.float64(1.0 - eps), beta)
            dn = arr[hi] - (1.0 - eps)
            v[hi] = vb + d1b * dn + 0.5 * d2b * dn * dn
            d1[hi] = d1b + d2b * dn
            d2[hi] = d2b
        return _maybe_scalar(scalar, v, d1, d2)

    if np.any(arr >= 1.0):
        raise DomainError("unregularized psi_plus requires n < 1")
    v, d1, d2 = _psi_plus_raw(arr, p.beta)
    return _maybe_scalar(scalar, v, d1, d2)


# ---------------------------------------------------------------------------
# concave part and its global extension
#
# Inside [0, 1] the curvature is the constant -beta.  On the unit collars
# [1, 2] and [-1, 0] it is blended to zero with the cubic (1-s)^2 (1+2s), and
# outside it vanishes, so the slope is globally bounded and the extension is
# C^2 and concave everywhere.  All pieces below are the exact integrals of
# that curvature.


def _psi_minus_arrays(x, beta, k):
    v = np.empty_like(x)
    d1 = np.empty_like(x)
    d2 = np.empty_like(x)

    core = (x >= 0.0) & (x <= 1.0)
    rc = (x > 1.0) & (x <= 2.0)
    rt = x > 2.0
    lc = (x < 0.0) & (x >= -1.0)
    lt = x < -1.0

    xc = x[core]
    v[core] = k - beta * (0.5 * xc * xc + xc)
    d1[core] = -beta * (xc + 1.0)
    d2[core] = -beta

    s = x[rc] - 1.0
    s2 = s * s
    d2[rc] = -beta * (1.0 - 3.0 * s2 + 2.0 * s2 * s)
    d1[rc] = -2.0 * beta - beta * (s - s2 * s + 0.5 * s2 * s2)
    v[rc] = (k - 1.5 * beta) - 2.0 * beta * s - beta * (
        0.5 * s2 - 0.25 * s2 * s2 + 0.1 * s2 * s2 * s
    )

    v[rt] = (k - 3.85 * beta) - 2.5 * beta * (x[rt] - 2.0)
    d1[rt] = -2.5 * beta
    d2[rt] = 0.0

    s = -x[lc]
    s2 = s * s
    d2[lc] = -beta * (1.0 - 3.0 * s2 + 2.0 * s2 * s)
    d1[lc] = -beta + beta * (s - s2 * s + 0.5 * s2 * s2)
    v[lc] = k + beta * s - beta * (0.5 * s2 - 0.25 * s2 * s2 + 0.1 * s2 * s2 * s)

    v[lt] = (k + 0.65 * beta) - 0.5 * beta * (x[lt] + 1.0)
    d1[lt] = -0.5 * beta
    d2[lt] = 0.0
    return v, d1, d2


def psi_minus(p: PotentialSpec | RegularizedPotential, n):
    """Evaluate the concave part on all of R: (value, first, second derivative)."""
    spec = p.base if isinstance(p, RegularizedPotential) else p
    arr = _as_array(n)
    scalar = arr.ndim == 0
    v, d1, d2 = _psi_minus_arrays(np.atleast_1d(arr), spec.beta, spec.k)
    return _maybe_scalar(scalar, v, d1, d2)


def psi_minus_sup_norms(p: PotentialSpec | RegularizedPotential):
    """Analytic suprema (sup|psi_minus'|, sup|psi_minus''|) of the extension.

    The slope is steepest on the right tail where it froze at -2.5*beta; the
    curvature magnitude peaks at beta inside [0, 1].  Both feed the elliptic
    contraction check (sigma/gamma) * sup|psi_minus''| < 1.
    """
    spec = p.base if isinstance(p, RegularizedPotential) else p
    return 2.5 * spec.beta, spec.beta


# ---------------------------------------------------------------------------
# mobility


def _mobility_raw(n):
    one_m = 1.0 - n
    return n * one_m * one_m, one_m * (1.0 - 3.0 * n)


def mobility(m: MobilitySpec, n, regularized: bool = False):
    """Evaluate b or its clamp B_eps: returns (value, first derivative)."""
    arr = _as_array(n)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)

    if not regularized:
        if np.any((arr < 0.0) | (arr > 1.0)):
            raise DomainError("unregularized mobility requires n in [0, 1]")
        v, d1 = _mobility_raw(arr)
        return _maybe_scalar(scalar, v, d1)

    if m.eps is None:
        raise DomainError("regularized mobility evaluation needs eps set")
    eps = m.eps
    v, d1 = _mobility_raw(np.clip(arr, eps, 1.0 - eps))
    lo = arr < eps
    hi = arr > 1.0 - eps
    v[lo], _ = _mobility_raw(np.float64(eps))
    v[hi], _ = _mobility_raw(np.float64(1.0 - eps))
    d1[lo] = 0.0
    d1[hi] = 0.0
    return _maybe_scalar(scalar, v, d1)


def mobility_bounds(m: MobilitySpec):
    """Clamp bounds (b1, B1) with b1 <= B_eps(n) <= B1 for every real n."""
    if m.eps is None:
        raise DomainError("mobility bounds need eps set")
    eps = m.eps
    b_lo, _ = _mobility_raw(np.float64(eps))
    b_hi, _ = _mobility_raw(np.float64(1.0 - eps))
    b1 = min(float(b_lo), float(b_hi))
    if eps <= 1.0 / 3.0 <= 1.0 - eps:
        big = 4.0 / 27.0
    else:
        big = max(float(b_lo), float(b_hi))
    return b1, big


# ---------------------------------------------------------------------------
# entropy density
#
# 1/b(n) = 1/n + 1/(1-n) + 1/(1-n)^2 by partial fractions; its exact double
# antiderivative is F(n) = n log n + (1-n) log(1-n) - log(1-n).  phi_eps uses
# quadratics with the clamped curvatures outside [eps, 1-eps] and F plus a
# linear correction inside so that phi_eps is C^1 with phi_eps(0)=phi_eps'(0)=0.


def _entropy_F(n):
    return n * np.log(n) + (1.0 - n) * np.log1p(-n) - np.log1p(-n)


def _entropy_Fp(n):
    return np.log(n) - np.log1p(-n) + 1.0 / (1.0 - n)


def _entropy_coeffs(eps):
    c_lo = 1.0 / float(_mobility_raw(np.float64(eps))[0])
    c_hi = 1.0 / float(_mobility_raw(np.float64(1.0 - eps))[0])
    alpha = c_lo * eps - float(_entropy_Fp(np.float64(eps)))
    delta = 0.5 * c_lo * eps * eps - float(_entropy_F(np.float64(eps)))
    v_hi = float(_entropy_F(np.float64(1.0 - eps))) + alpha * (1.0 - 2.0 * eps) + delta
    s_hi = float(_entropy_Fp(np.float64(1.0 - eps))) + alpha
    return c_lo, c_hi, alpha, delta, v_hi, s_hi


def entropy_density(e: EntropyDensity, n):
    """phi_eps(n), finite and convex on all of R."""
    arr = _as_array(n)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    eps = e.eps
    c_lo, c_hi, alpha, delta, v_hi, s_hi = _entropy_coeffs(eps)

    v = np.empty_like(arr)
    lo = arr <= eps
    hi = arr >= 1.0 - eps
    mid = ~(lo | hi)
    v[lo] = 0.5 * c_lo * arr[lo] * arr[lo]
    xm = arr[mid]
    v[mid] = _entropy_F(xm) + alpha * (xm - eps) + delta
    dn = arr[hi] - (1.0 - eps)
    v[hi] = v_hi + s_hi * dn + 0.5 * c_hi * dn * dn
    return _maybe_scalar(scalar, v)[0] if scalar else v
