"""
DirSeg — vMF Normalizing Constant
==================================
Log-space evaluation of the modified Bessel function I_ν(κ) and of the
von Mises–Fisher normalizing constant C_p(κ) for dimensions up to several
thousand and concentrations up to 1e5.

Three regimes are used for log I_ν(κ):

* power series (log-sum-exp) while κ ≤ sqrt(ν + 1)
* ``scipy.special.ive`` for small orders (ν < 50)
* the uniform asymptotic (Debye) expansion with four correction terms
  for large orders
"""

import math

import numpy as np
from scipy.special import gammaln, ive, logsumexp

from models.errors import DimensionTooSmall, InputError, NumericalOverflow

# ─── Configuration ────────────────────────────────────────────────────────────

DEBYE_MIN_ORDER = 50.0
SERIES_TERMS = 80
LOG_2PI = math.log(2.0 * math.pi)


# ─── Regimes ──────────────────────────────────────────────────────────────────

def _in_series_regime(nu, kappa):
    return kappa <= math.sqrt(nu + 1.0)


def _log_series_sum(nu, kappa):
    """log Σ_m (κ/2)^(2m) / (m! Γ(m+ν+1))."""
    m = np.arange(SERIES_TERMS, dtype=np.float64)
    terms = 2.0 * m * math.log(kappa / 2.0) - gammaln(m + 1.0) - gammaln(m + nu + 1.0)
    return float(logsumexp(terms))


def _debye_log_iv(nu, kappa):
    z = kappa / nu
    root = math.sqrt(1.0 + z * z)
    t = 1.0 / root
    eta = root + math.log(z / (1.0 + root))

    t2 = t * t
    u1 = t * (3.0 - 5.0 * t2) / 24.0
    u2 = t2 * (81.0 - 462.0 * t2 + 385.0 * t2 ** 2) / 1152.0
    u3 = t * t2 * (30375.0 - 369603.0 * t2 + 765765.0 * t2 ** 2 - 425425.0 * t2 ** 3) / 414720.0
    u4 = t2 ** 2 * (
        4465125.0 - 94121676.0 * t2 + 349922430.0 * t2 ** 2
        - 446185740.0 * t2 ** 3 + 185910725.0 * t2 ** 4
    ) / 39813120.0
    correction = 1.0 + u1 / nu + u2 / nu ** 2 + u3 / nu ** 3 + u4 / nu ** 4

    return nu * eta - 0.5 * math.log(2.0 * math.pi * nu) - 0.5 * math.log(root) + math.log(correction)


def log_bessel_iv(nu, kappa):
    """log I_ν(κ) for ν ≥ 0 and κ ≥ 0."""
    nu, kappa = float(nu), float(kappa)
    if nu < 0 or kappa < 0:
        raise InputError(f"log_bessel_iv needs nu >= 0 and kappa >= 0, got ({nu}, {kappa})")
    if kappa == 0.0:
        return 0.0 if nu == 0.0 else -math.inf

    if _in_series_regime(nu, kappa):
        value = nu * math.log(kappa / 2.0) + _log_series_sum(nu, kappa)
    elif nu < DEBYE_MIN_ORDER:
        value = math.log(ive(nu, kappa)) + kappa
    else:
        value = _debye_log_iv(nu, kappa)

    if not math.isfinite(value):
        raise NumericalOverflow(f"log I_{nu}({kappa}) is not finite")
    return value


# ─── Normalizing constant ─────────────────────────────────────────────────────

def log_surface_area(dim):
    """log of the surface area of S^(dim-1): log 2 + (dim/2)·log π − logΓ(dim/2)."""
    if dim < 2:
        raise DimensionTooSmall(f"dimension must be >= 2, got {dim}")
    return math.log(2.0) + 0.5 * dim * math.log(math.pi) - float(gammaln(0.5 * dim))


def log_norm_const(dim, kappa):
    """
    log C_p(κ) = (p/2 − 1)·log κ − (p/2)·log 2π − log I_(p/2−1)(κ).

    κ = 0 returns the uniform-density limit −log_surface_area(p). In the
    series regime the (κ/2)^ν factor is cancelled analytically so the
    value is continuous down to that limit.
    """
    if dim < 2:
        raise DimensionTooSmall(f"dimension must be >= 2, got {dim}")
    kappa = float(kappa)
    if kappa < 0:
        raise InputError(f"kappa must be >= 0, got {kappa}")
    if kappa == 0.0:
        return -log_surface_area(dim)

    nu = 0.5 * dim - 1.0
    if _in_series_regime(nu, kappa):
        value = -0.5 * dim * LOG_2PI + nu * math.log(2.0) - _log_series_sum(nu, kappa)
    else:
        value = nu * math.log(kappa) - 0.5 * dim * LOG_2PI - log_bessel_iv(nu, kappa)

    if not math.isfinite(value):
        raise NumericalOverflow(f"log C_{dim}({kappa}) is not finite")
    return value


def mean_resultant_length(dim, kappa):
    """A_p(κ) = I_(p/2)(κ) / I_(p/2−1)(κ), the expected ⟨μ, x⟩ under vMF(μ, κ)."""
    if kappa <= 0:
        return 0.0
    nu = 0.5 * dim - 1.0
    return math.exp(log_bessel_iv(nu + 1.0, kappa) - log_bessel_iv(nu, kappa))
