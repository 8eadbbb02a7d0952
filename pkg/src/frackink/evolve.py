"""Parabolic flow u_t + D^alpha u + u^3 - u = 0 around a kink.

The stepper is first-order IMEX: the symbol is treated implicitly (a
diagonal solve in frequency), the cubic explicitly.  On an antiperiodic grid
a kink-shaped u is stored directly.  With the "whole" background the
correction r = u - W is stepped instead and D^alpha W is taken from the
whole-line evaluation used by the kink solver.

Energy convention:
    I[u] = 1/2 ||D^(alpha/2) u||^2 + 1/4 int (1 - u^2)^2.
For a kink the first term is split as C_W + <D^alpha W, r> + 1/2 <D^alpha r, r>,
where C_W = 1/2 ||D^(alpha/2) W||^2 is evaluated in closed Fourier form on
the whole line.  On the lattice the grid operator is applied to u itself.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .kink import KinkProfile, _forcing, background, kink_symbol
from .specops import Grid, RealField, RieszSymbol

DT_MAX = 0.4
SAMPLE = 0.5
EPS0 = 0.2
NOISE_FLOOR = 1e-12


class DecompositionError(RuntimeError):
    def __init__(self, msg: str, time: float | None = None):
        super().__init__(msg)
        self.time = time


def background_energy(alpha: float) -> float:
    """C_W = 1/2 ||D^(alpha/2) tanh(x / sqrt 2)||^2 on the whole line.

    |(W')^(xi)|^2 = 2 pi^4 / sinh^2(sqrt 2 pi^2 xi) and the symbol of
    D^alpha W' / W' contributes (2 pi xi)^(alpha - 2).
    """
    def f(xi):
        y = math.sqrt(2.0) * math.pi**2 * xi
        inv_sinh2 = 4.0 * math.exp(-2.0 * y) / math.expm1(-2.0 * y) ** 2
        return (2.0 * math.pi * xi) ** alpha * 2.0 * math.pi**2 * inv_sinh2

    val, _ = quad(f, 0.0, np.inf, epsabs=1e-15, epsrel=1e-13, limit=200)
    return val


def _symbol(grid: Grid, alpha: float) -> np.ndarray:
    return RieszSymbol(alpha).values(grid)


def _full_multiply(grid: Grid, values: np.ndarray, mult: np.ndarray) -> np.ndarray:
    # keeps the periodic Nyquist coefficient; the symbols here are real and even
    return grid.backward(grid.forward(values) * mult).real


def _sign_of(u: np.ndarray) -> float:
    return 1.0 if u[-1] >= u[0] else -1.0


def step(u: RealField, dt: float, alpha: float, background_kind: str = "lattice") -> RealField:
    """One IMEX step (I + dt D^alpha)^(-1) (u + dt (u - u^3)).

    ``background_kind="whole"`` needs an antiperiodic grid and a kink-shaped
    u (either orientation); it steps u - W with the whole-line D^alpha W.
    """
    if not 0.0 < dt <= DT_MAX:
        raise ValueError(f"dt must lie in (0, {DT_MAX}], got {dt}")
    g = u.grid
    s = _symbol(g, alpha)
    un = u.values
    if background_kind == "lattice":
        out = _full_multiply(g, un + dt * (un - un**3), 1.0 / (1.0 + dt * s))
    elif background_kind == "whole":
        if not g.antiperiodic:
            raise ValueError("the whole-line background needs an antiperiodic grid")
        sgn = _sign_of(un)
        W = sgn * background(g.x)
        gw = sgn * _forcing(g, kink_symbol(alpha), "whole", 0.0)
        r = un - W
        r = _full_multiply(g, r - dt * (gw + un**3 - un), 1.0 / (1.0 + dt * s))
        out = W + r
    else:
        raise ValueError(f"unknown background {background_kind!r}")
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite state after step")
    return RealField(g, out)


def energy(u: RealField, alpha: float, background_kind: str = "lattice") -> float:
    g = u.grid
    s = _symbol(g, alpha)
    un = u.values
    pot = 0.25 * g.h * float(np.sum((1.0 - un**2) ** 2))
    if background_kind == "lattice":
        return 0.5 * g.h * float(np.dot(_full_multiply(g, un, s), un)) + pot
    if background_kind != "whole":
        raise ValueError(f"unknown background {background_kind!r}")
    if not g.antiperiodic:
        raise ValueError("the whole-line background needs an antiperiodic grid")
    sgn = _sign_of(un)
    r = un - sgn * background(g.x)
    gw = sgn * _forcing(g, kink_symbol(alpha), "whole", 0.0)
    quadratic = g.h * (float(np.dot(gw, r)) + 0.5 * float(np.dot(_full_multiply(g, r, s), r)))
    return background_energy(alpha) + quadratic + pot


def decompose(u: RealField, profile: KinkProfile, sigma_guess: float = 0.0, *,
              frame: str = "unshifted", max_iter: int = 50,
              eps0: float = EPS0) -> tuple[float, RealField]:
    """Find sigma with <u - phi(. + sigma), phi'> = 0 by scalar Newton.

    ``frame="shifted"`` uses phi'(. + sigma) in the pairing instead of the
    fixed phi'.  The smallness condition is imposed on the remainder v (a
    pure translation of any size is accepted); ||v|| > eps0 means the root
    found is not the modulation root and is reported as a failure.
    """
    if u.grid != profile.grid:
        raise ValueError("field and profile live on different grids")
    if frame not in ("unshifted", "shifted"):
        raise ValueError(f"unknown frame {frame!r}")
    h = u.grid.h
    d0 = profile.dphi.values
    sigma = float(sigma_guess)
    for _ in range(max_iter):
        p, dp = profile.shifted(sigma)
        if frame == "unshifted":
            gval = h * float(np.dot(u.values - p, d0))
            dg = -h * float(np.dot(dp, d0))
        else:
            gval = h * float(np.dot(u.values - p, dp))
            eps = 1e-6
            p2, dp2 = profile.shifted(sigma + eps)
            dg = (h * float(np.dot(u.values - p2, dp2)) - gval) / eps
        if not np.isfinite(dg) or abs(dg) < 1e-12:
            raise DecompositionError(f"degenerate orthogonality condition at sigma = {sigma:.3e}")
        delta = -gval / dg
        sigma += delta
        if not np.isfinite(sigma):
            raise DecompositionError("shift diverged")
        if abs(delta) <= 1e-15 * max(1.0, abs(sigma)):
            break
    else:
        raise DecompositionError(f"no convergence after {max_iter} iterations")
    p, _ = profile.shifted(sigma)
    v = RealField(u.grid, u.values - p)
    if v.norm() > eps0:
        raise DecompositionError(f"remainder norm {v.norm():.3e} exceeds eps0 = {eps0}")
    return sigma, v


def odd_bump(x: np.ndarray) -> np.ndarray:
    b = x * np.exp(-x * x / 4.0)
    return b / np.max(np.abs(b))


def even_bump(x: np.ndarray) -> np.ndarray:
    return np.exp(-x * x / 4.0)


def perturb(profile: KinkProfile, amplitude: float = 0.05, kind: str = "odd",
            seed: int = 0) -> RealField:
    """phi + amplitude * bump; ``kind="random"`` uses a seeded smooth bump."""
    x = profile.x
    if kind == "odd":
        b = odd_bump(x)
    elif kind == "even":
        b = even_bump(x)
    elif kind == "random":
        rng = np.random.default_rng(seed)
        coef = rng.standard_normal(6)
        b = sum(cf * x**j for j, cf in enumerate(coef)) * np.exp(-x * x / 4.0)
        b = b / np.max(np.abs(b))
    else:
        raise ValueError(f"unknown perturbation {kind!r}")
    return RealField(profile.grid, profile.phi.values + amplitude * b)


@dataclass
class RateFit:
    rate: float
    r_squared: float
    window: tuple[float, float]
    n_samples: int


def _fit_decay(t: np.ndarray, y: np.ndarray, window: tuple[float, float],
               floor: float) -> RateFit:
    """Least-squares slope of log y on the window, dropping samples at the noise floor."""
    mask = (t >= window[0]) & (t <= window[1]) & (y > floor)
    if mask.sum() < 4:
        # the signal reached the floor early: use the earlier half of what survives
        live = np.flatnonzero(y > floor)
        if live.size < 4:
            return RateFit(math.nan, math.nan, window, int(live.size))
        t_end = t[live[-1]]
        mask = (t >= t_end / 2.0) & (t <= t_end) & (y > floor)
        window = (t_end / 2.0, float(t_end))
    tt, ly = t[mask], np.log(y[mask])
    slope, icpt = np.polyfit(tt, ly, 1)
    pred = slope * tt + icpt
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return RateFit(float(-slope), r2, (float(window[0]), float(window[1])), int(mask.sum()))


@dataclass
class EvolutionTrace:
    alpha: float
    dt: float
    T: float
    times: np.ndarray
    norm_l2: np.ndarray
    norm_h: np.ndarray
    energies: np.ndarray
    sigmas: np.ndarray
    orthogonality: np.ndarray
    max_energy_increase: float
    kappa: RateFit | None = None
    shift: RateFit | None = None
    failure_time: float | None = None
    error: str | None = None
    descriptor: str = ""
    final: RealField | None = field(default=None, repr=False)

    @property
    def kappa_fit(self) -> float:
        return self.kappa.rate if self.kappa else math.nan

    @property
    def shift_rate(self) -> float:
        return self.shift.rate if self.shift else math.nan

    @property
    def sigma_inf(self) -> float:
        return float(self.sigmas[-1])

    def columns(self) -> dict[str, np.ndarray]:
        return {"t": self.times, "norm_L2": self.norm_l2, "energy": self.energies,
                "sigma": self.sigmas}


def _h_norm(g: Grid, v: np.ndarray, alpha: float) -> float:
    w = 1.0 + _symbol(g, alpha)
    c = g.forward(v)
    # Parseval: h * sum |v|^2 = (h / N) * sum |c|^2
    return float(math.sqrt(g.h / g.N * np.sum(w * np.abs(c) ** 2)))


def run(u0: RealField, profile: KinkProfile, T: float = 40.0, dt: float = 0.005, *,
        sample: float = SAMPLE, frame: str = "unshifted", floor: float = NOISE_FLOOR,
        descriptor: str = "") -> EvolutionTrace:
    """Evolve u0 to time T, decomposing about the profile at every sample.

    The decay rate is fitted to log ||v|| and the shift rate to
    log |sigma - sigma(T)|, both on [T/2, T] with samples below ``floor``
    discarded.  A failed decomposition ends the run early and is recorded
    with its time.
    """
    if u0.grid != profile.grid:
        raise ValueError("initial state and profile live on different grids")
    if not T > 0:
        raise ValueError("T must be positive")
    kind = profile.background
    alpha = profile.alpha
    g = u0.grid
    n_steps = int(round(T / dt))
    every = max(1, int(round(sample / dt)))
    sigma, v = decompose(u0, profile, 0.0, frame=frame)

    times, nl2, nh, ens, sig, orth = [], [], [], [], [], []
    d0 = profile.dphi.values
    u = u0
    e_prev = energy(u, alpha, kind)
    max_inc = -math.inf
    failure, err = None, None
    for n in range(n_steps + 1):
        if n % every == 0:
            t = n * dt
            try:
                sigma, v = decompose(u, profile, sigma, frame=frame)
            except DecompositionError as exc:
                failure, err = t, str(exc)
                break
            times.append(t)
            nl2.append(v.norm())
            nh.append(_h_norm(g, v.values, alpha))
            ens.append(e_prev)
            sig.append(sigma)
            orth.append(g.h * float(np.dot(v.values, d0)))
        if n == n_steps:
            break
        u = step(u, dt, alpha, kind)
        e_new = energy(u, alpha, kind)
        max_inc = max(max_inc, e_new - e_prev)
        e_prev = e_new

    tr = EvolutionTrace(alpha, dt, T, np.array(times), np.array(nl2), np.array(nh),
                        np.array(ens), np.array(sig), np.array(orth), max_inc,
                        failure_time=failure, error=err, descriptor=descriptor, final=u)
    if len(times) >= 4:
        t_arr = tr.times
        t_end = t_arr[-1]
        tr.kappa = _fit_decay(t_arr, tr.norm_l2, (t_end / 2.0, t_end), floor)
        dev = np.abs(tr.sigmas[:-1] - tr.sigmas[-1])
        tr.shift = _fit_decay(t_arr[:-1], dev, (t_end / 2.0, t_end), floor)
    return tr
