"""Closed-form prefactors, tail laws and exact kernels used as oracles."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Lanczos approximation, g = 7, nine coefficients.
_G = 7.0
_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

ENDPOINT_GUARD = 1e-6


def gamma_fn(z: float) -> float:
    """Gamma function, Lanczos series with reflection below 1/2."""
    z = float(z)
    if not math.isfinite(z):
        raise ValueError(f"gamma_fn needs a finite argument, got {z}")
    if z <= 0.0 and abs(z - round(z)) < 1e-8:
        raise ValueError(f"gamma_fn argument {z} is too close to a pole")
    if z < 0.5:
        return math.pi / (math.sin(math.pi * z) * gamma_fn(1.0 - z))
    z -= 1.0
    a = _COEF[0]
    t = z + _G + 0.5
    for i in range(1, len(_COEF)):
        a += _COEF[i] / (z + i)
    return math.sqrt(2.0 * math.pi) * t ** (z + 0.5) * math.exp(-t) * a


@dataclass(frozen=True)
class TailLaw:
    """Leading algebraic tail of a kink.

    phi'(x) ~ c_prime |x|^(-1-alpha) and sgn(x) - phi(x) ~ c |x|^(-alpha).
    """

    regime: str
    alpha: float
    c_prime: float
    c: float
    remainder_order: int

    @property
    def kernel_prefactor(self) -> float:
        return self.c_prime / 4.0


def _check_alpha(alpha: float, allow_four: bool = False) -> None:
    if not 1.0 < alpha < 4.0:
        raise ValueError(f"alpha must lie in (1, 2) or (2, 4), got {alpha}")
    if abs(alpha - 2.0) < ENDPOINT_GUARD:
        raise ValueError("alpha too close to 2: the algebraic coefficient vanishes")
    if 4.0 - alpha < ENDPOINT_GUARD:
        raise ValueError("alpha too close to 4: the algebraic coefficient vanishes")


def tail_law(alpha: float) -> TailLaw:
    _check_alpha(alpha)
    a = alpha
    if a < 2.0:
        cp = (2.0 ** (a - 2.0) * a * (a - 1.0) * gamma_fn((a - 1.0) / 2.0)
              / (math.sqrt(math.pi) * gamma_fn((2.0 - a) / 2.0)))
        return TailLaw("subLaplacian", a, cp, cp / a, 3)
    cp = (-(2.0 ** (a - 3.0)) * a * (a - 1.0) * (a - 2.0) / math.sqrt(math.pi)
          * gamma_fn((a - 1.0) / 2.0) / gamma_fn((4.0 - a) / 2.0))
    return TailLaw("superLaplacian", a, cp, cp / a, 5)


def exact_kink_alpha2(grid):
    """tanh(x / sqrt 2) sampled on the grid."""
    from .specops import RealField

    return RealField(grid, np.tanh(grid.x / math.sqrt(2.0)))


def exact_kernel(alpha: int, x):
    """Closed-form kernels of (2 + D^alpha)^(-1) for alpha = 2 and 4."""
    ax = np.abs(np.asarray(x, dtype=float))
    if alpha == 2:
        out = np.exp(-math.sqrt(2.0) * ax) / (2.0 * math.sqrt(2.0))
    elif alpha == 4:
        q = 2.0**0.25
        out = q * np.exp(-ax / q) / 4.0 * np.sin(ax / q + math.pi / 4.0)
    else:
        raise ValueError(f"closed forms exist only for alpha in {{2, 4}}, got {alpha}")
    return out if out.ndim else float(out)


def kernel_asymptote(alpha: float, x):
    """Leading far-field term of the (2 + D^alpha)^(-1) kernel."""
    _check_alpha(alpha)
    ax = np.abs(np.asarray(x, dtype=float))
    if np.any(ax <= 1.0):
        raise ValueError("the asymptote is only meaningful for |x| > 1")
    out = tail_law(alpha).kernel_prefactor * ax ** (-1.0 - alpha)
    return out if out.ndim else float(out)
