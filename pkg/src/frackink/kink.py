"""Stationary and travelling kinks of the fractional phi^4 equation.

The unknown is split as phi = W + v with W(x) = tanh(x / sqrt 2).  W carries
the +-1 limits, so v decays and can live on a bounded grid.  Two ways of
applying the operator to W are offered:

``whole``
    the whole-line value of D^alpha W, computed on an 8x zero-padded
    grid and sliced back.  Only v feels the boundary, which keeps the
    algebraic tails accurate out to |x| ~ L/2.
``lattice``
    the grid operator is applied to W itself.  On an antiperiodic grid the
    resulting discrete problem is exactly translation invariant, which is
    what the dynamics and the travelling-wave eigenproblem need.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.sparse.linalg import LinearOperator, minres

from .asym import TailLaw, tail_law
from .specops import Grid, RealField, RieszSymbol

SQRT2 = math.sqrt(2.0)
PAD = 8
NEWTON_TOL = 1e-9
MAX_NEWTON = 50
MAX_BACKTRACK = 20
BACKGROUNDS = ("whole", "lattice")


class KinkSolveError(RuntimeError):
    """Newton did not converge (or its inner linear solve broke down)."""


class ContinuationError(RuntimeError):
    def __init__(self, msg: str, last_alpha: float):
        super().__init__(msg)
        self.last_alpha = last_alpha


def background(x: np.ndarray) -> np.ndarray:
    return np.tanh(x / SQRT2)


def background_slope(x: np.ndarray) -> np.ndarray:
    t = np.tanh(x / SQRT2)
    return (1.0 - t * t) / SQRT2


def kink_symbol(alpha: float, c: float = 0.0, wave: bool | None = None) -> RieszSymbol:
    if wave is None:
        wave = c != 0.0
    if c != 0.0 and not wave:
        raise ValueError("a nonzero speed requires the wave operator")
    return RieszSymbol(alpha, speed=c, mass=0.0, wave=wave)


@lru_cache(maxsize=64)
def _forcing(grid: Grid, sym: RieszSymbol, kind: str, shift: float) -> np.ndarray:
    """Operator applied to W(. + shift), sampled on the grid nodes."""
    if kind == "lattice":
        if not grid.antiperiodic:
            raise ValueError("the lattice background needs an antiperiodic grid")
        return grid.multiply(background(grid.x + shift), sym.values(grid))
    if kind != "whole":
        raise ValueError(f"unknown background {kind!r}")
    N, h = grid.N, grid.h
    M = PAD * N
    xb = -PAD * grid.L + h * np.arange(M)
    xib = np.fft.fftfreq(M, d=h)
    k = 2.0 * np.pi * xib
    # sigma(k) W^ = [sigma(k) / (i k)] (W')^ ; the bracket is regular at k = 0
    mult = -1j * np.sign(k) * np.abs(k) ** (sym.alpha - 1.0)
    if sym.wave:
        mult = mult - 1j * (1.0 - sym.speed**2) * k
    mult[M // 2] = 0.0
    out = np.fft.ifft(mult * np.fft.fft(background_slope(xb + shift))).real
    out += sym.mass * background(xb + shift)
    i0 = (PAD - 1) * N // 2
    return out[i0:i0 + N].copy()


def _norm(grid: Grid, r: np.ndarray) -> float:
    return float(math.sqrt(grid.h * np.dot(r, r)))


def _raw_residual(grid, sym, kind, v, shift=0.0) -> np.ndarray:
    phi = background(grid.x + shift) + v
    return grid.multiply(v, sym.values(grid)) + _forcing(grid, sym, kind, float(shift)) + phi * (phi * phi - 1.0)


def residual(v: RealField, alpha: float, c: float = 0.0, *, wave: bool | None = None,
             background_kind: str = "whole", shift: float = 0.0) -> RealField:
    """Equation defect at phi = W(. + shift) + v.

    With ``shift`` nonzero, v is understood as the samples of an already
    shifted correction; this is how translation covariance is checked.
    """
    sym = kink_symbol(alpha, c, wave)
    r = _raw_residual(v.grid, sym, background_kind, v.values, shift)
    if not np.all(np.isfinite(r)):
        raise FloatingPointError("residual is not finite (divergent iterate?)")
    return RealField(v.grid, r)


@dataclass
class KinkProfile:
    grid: Grid
    alpha: float
    c: float
    phi: RealField
    dphi: RealField
    residual_norm: float
    iterations: int
    background: str
    wave: bool
    v: np.ndarray = field(repr=False)
    newton_tol: float = NEWTON_TOL

    @property
    def symbol(self) -> RieszSymbol:
        return kink_symbol(self.alpha, self.c, self.wave)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def shifted(self, sigma: float) -> tuple[np.ndarray, np.ndarray]:
        """phi(. + sigma) and phi'(. + sigma) on the nodes."""
        g = self.grid
        xs = g.x + sigma
        dv = self.dphi.values - background_slope(g.x)
        return (background(xs) + g.shift(self.v, sigma),
                background_slope(xs) + g.shift(dv, sigma))

    def forcing(self, shift: float = 0.0) -> np.ndarray:
        return _forcing(self.grid, self.symbol, self.background, float(shift))

    def checks(self) -> dict[str, bool]:
        """Structural invariants of a converged profile."""
        g, phi, dphi = self.grid, self.phi.values, self.dphi.values
        out = {
            "odd": bool(np.max(np.abs(phi + g.reflect(phi))) <= 1e-10),
            "residual": bool(self.residual_norm <= self.newton_tol),
        }
        if self.alpha < 2.0:
            out["monotone"] = bool(dphi.min() >= -1e-8)
            out["bounded"] = bool(np.abs(phi).max() <= 1.0 + 1e-8)
        elif self.alpha > 2.0:
            out["overshoot"] = bool(phi.max() > 1.0)
        if self.alpha != 2.0 and self.grid.L > 20.0:
            law = tail_law(self.alpha)
            xb = self.grid.L - 10.0
            j = int(np.argmin(np.abs(g.x - xb)))
            out["boundary"] = bool(abs(phi[j] - 1.0) <= 10.0 * abs(law.c) * xb ** (-self.alpha))
        return out


def solve_kink(alpha: float, c: float = 0.0, init: KinkProfile | None = None, *,
               L: float = 200.0, N: int = 16384, grid: Grid | None = None,
               wave: bool | None = None, background_kind: str = "whole",
               newton_tol: float = NEWTON_TOL, max_newton: int = MAX_NEWTON,
               allow_super_travel: bool = False) -> KinkProfile:
    """Damped Newton-Krylov solve for the odd kink.

    The Jacobian D_sym + diag(3 phi^2 - 1) is inverted with MINRES,
    preconditioned by (D_sym + 2)^(-1); every iterate is projected onto odd
    fields.
    """
    if not 1.0 < alpha < 4.0:
        raise ValueError(f"alpha must lie in (1, 4), got {alpha}")
    if not abs(c) < 1.0:
        raise ValueError(f"speed must satisfy |c| < 1, got {c}")
    if c != 0.0 and alpha >= 2.0 and not allow_super_travel:
        raise ValueError("travelling kinks are only supported for alpha in (1, 2)")
    if background_kind not in BACKGROUNDS:
        raise ValueError(f"background must be one of {BACKGROUNDS}")
    sym = kink_symbol(alpha, c, wave)
    if grid is None:
        grid = init.grid if init is not None else Grid(L, N, antiperiodic=True)
    if init is not None and init.grid != grid:
        raise ValueError("initial profile lives on a different grid")

    s = sym.values(grid)
    x = grid.x
    W = background(x)
    odd = grid.odd_part
    v = odd(init.v) if init is not None else np.zeros(grid.N)
    r = odd(_raw_residual(grid, sym, background_kind, v))
    rn = _norm(grid, r)
    prec = LinearOperator((grid.N, grid.N), matvec=lambda d: grid.multiply(d, 1.0 / (s + 2.0)),
                          dtype=float)
    it = 0
    while rn > newton_tol:
        if it >= max_newton:
            raise KinkSolveError(f"Newton stalled at |F| = {rn:.3e} after {it} iterations")
        pot = 3.0 * (W + v) ** 2 - 1.0
        jac = LinearOperator((grid.N, grid.N), dtype=float,
                             matvec=lambda d: odd(grid.multiply(d, s) + pot * d))
        d, info = minres(jac, -r, M=prec, rtol=1e-12, maxiter=5000)
        if info < 0 or not np.all(np.isfinite(d)):
            raise KinkSolveError(f"Jacobian solve breakdown (minres info {info})")
        d = odd(d)
        t = 1.0
        for _ in range(MAX_BACKTRACK + 1):
            trial = v + t * d
            r_new = odd(_raw_residual(grid, sym, background_kind, trial))
            rn_new = _norm(grid, r_new)
            if np.isfinite(rn_new) and rn_new < rn:
                break
            t *= 0.5
        else:
            raise KinkSolveError(f"line search failed at |F| = {rn:.3e}")
        v, r, rn = trial, r_new, rn_new
        it += 1

    full = _raw_residual(grid, sym, background_kind, v)
    phi = W + v
    dphi = background_slope(x) + grid.derivative(v)
    return KinkProfile(grid, float(alpha), float(c), RealField(grid, phi),
                       RealField(grid, dphi), _norm(grid, full), it, background_kind,
                       sym.wave, v, newton_tol)


def continue_in_alpha(alpha_from: float, alpha_to: float, step: float = 0.05,
                      c: float = 0.0, **solve_kw) -> list[KinkProfile]:
    """Homotopy in alpha; the first entry is the profile at ``alpha_from``."""
    if not 0.0 < step <= 0.1:
        raise ValueError(f"step must lie in (0, 0.1], got {step}")
    for a in (alpha_from, alpha_to):
        if not 1.0 < a < 4.0:
            raise ValueError(f"continuation path leaves (1, 4) at alpha = {a}")
    profiles = [solve_kink(alpha_from, c, **solve_kw)]
    a, h = float(alpha_from), float(step)
    direction = 1.0 if alpha_to > alpha_from else -1.0
    while abs(alpha_to - a) > 1e-12:
        nxt = round(a + direction * min(h, abs(alpha_to - a)), 12)
        try:
            p = solve_kink(nxt, c, init=profiles[-1], **solve_kw)
        except KinkSolveError:
            h *= 0.5
            if h < 1e-3:
                raise ContinuationError(f"step underflow near alpha = {a}", a) from None
            continue
        profiles.append(p)
        a = nxt
    return profiles


@dataclass
class TailFit:
    quantity: str
    window: tuple[float, float]
    fitted_exponent: float
    fitted_prefactor: float
    law: TailLaw | None
    reference_exponent: float
    reference_prefactor: float
    rel_exponent_err: float
    rel_prefactor_err: float
    n_nodes: int
    r_squared: float
    compensated_prefactor: float
    crossing: float | None = None

    @property
    def exponent_err(self) -> float:
        return abs(self.fitted_exponent - self.reference_exponent)


def last_crossing(x: np.ndarray, q: np.ndarray) -> float | None:
    """Largest x at which q changes sign, scanning inward from the far end."""
    s = np.sign(q)
    for j in range(len(q) - 1, 0, -1):
        if s[j] != s[j - 1] or s[j] == 0:
            return float(x[j])
    return None


def fit_tail(p: KinkProfile, quantity: str = "profile_defect",
             window: tuple[float, float] | None = None) -> TailFit:
    """Least-squares line through (log x, log q) on a window of the right tail.

    q is 1 - phi or phi' with the sign of the predicted tail folded in, so it
    is positive wherever the power law applies.  Beyond alpha = 2 the window
    start is pushed past the last sign change of q.
    """
    if quantity not in ("profile_defect", "derivative"):
        raise ValueError(f"unknown quantity {quantity!r}")
    half = p.grid.L / 2.0
    if window is None:
        window = (20.0, min(80.0, half)) if half >= 40.0 else (10.0, half)
    lo, hi = map(float, window)
    if lo < 10.0 or hi > half + 1e-12 or lo >= hi:
        raise ValueError(f"window {window} must sit inside [10, L/2 = {half}]")

    law = tail_law(p.alpha) if p.alpha != 2.0 else None
    x = p.grid.x
    if quantity == "profile_defect":
        q = 1.0 - p.phi.values
        ref_exp, ref_pre = -p.alpha, (abs(law.c) if law else math.nan)
    else:
        q = p.dphi.values.copy()
        ref_exp, ref_pre = -1.0 - p.alpha, (abs(law.c_prime) if law else math.nan)
    if law is not None and law.c_prime < 0:
        q = -q

    crossing = None
    if p.alpha > 2.0:
        right = (x > 0) & (x <= half)
        crossing = last_crossing(x[right], q[right])
        if crossing is not None:
            lo = max(lo, crossing)
    m = (x >= lo) & (x <= hi)
    if m.sum() < 20:
        raise ValueError(f"fit window [{lo}, {hi}] holds only {m.sum()} nodes")
    if np.any(q[m] <= 0.0):
        raise ValueError("tail quantity is not positive on the window; "
                         "start the window beyond the last crossing")
    lx, lq = np.log(x[m]), np.log(q[m])
    slope, icpt = np.polyfit(lx, lq, 1)
    pred = slope * lx + icpt
    r2 = 1.0 - np.sum((lq - pred) ** 2) / np.sum((lq - lq.mean()) ** 2)
    pref = math.exp(icpt)
    comp = float(np.median(q[m] * x[m] ** (-ref_exp))) if law else math.nan
    return TailFit(quantity, (lo, hi), float(slope), pref, law, ref_exp, ref_pre,
                   abs(slope - ref_exp) / abs(ref_exp), abs(pref - ref_pre) / ref_pre,
                   int(m.sum()), float(r2), comp, crossing)


def flux_identity(p: KinkProfile) -> float:
    """h * sum (1 - phi^2) phi'; equals 4/3 for any kink."""
    phi = p.phi.values
    return float(p.grid.h * np.dot(1.0 - phi * phi, p.dphi.values))
