"""Resolvent kernels of m + a(-d^2/dx^2) + D^alpha.

K(x) = integral of exp(2 pi i x xi) / sigma(xi) dxi
     = (1/pi) Re integral_0^inf exp(i k x) / s(k) dk,   s(k) = m + a k^2 + k^alpha.

For x > 0 the k-integral is rotated onto the ray k = t e^{i theta}, where the
integrand decays like exp(-t x sin theta) instead of oscillating.  Zeros of
s in the swept sector contribute residues.  Nothing is truncated, so the
same evaluator serves the near field and the far field.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.special import binom, gamma as sgamma

from .asym import kernel_asymptote, tail_law

CROSSOVER = 25.0


def _check(alpha: float, m: float, c: float) -> None:
    if not 1.0 < alpha <= 4.0:
        raise ValueError(f"alpha must lie in (1, 4], got {alpha}")
    if not m > 0:
        raise ValueError(f"mass must be positive, got {m}")
    if not abs(c) < 1.0:
        raise ValueError(f"|c| must be below 1, got {c}")


def _poles(alpha: float, m: float, a: float) -> list[complex]:
    """Zeros of s(k) with 0 <= arg k <= pi/2 (principal branch of k^alpha)."""
    if a == 0.0:
        k0 = m ** (1.0 / alpha) * np.exp(1j * np.pi / alpha)
        return [k0] if np.angle(k0) <= np.pi / 2 + 1e-14 else []
    s = lambda k: m + a * k * k + k**alpha
    ds = lambda k: 2.0 * a * k + alpha * k ** (alpha - 1.0)
    roots: list[complex] = []
    for r in np.geomspace(0.05, 50.0, 25):
        for th in np.linspace(0.02, np.pi / 2 - 0.02, 12):
            k = r * np.exp(1j * th)
            for _ in range(60):
                step = s(k) / ds(k)
                k = k - step
                if abs(step) < 1e-15 * max(1.0, abs(k)) or not np.isfinite(k):
                    break
            if not np.isfinite(k) or abs(s(k)) > 1e-10 * (1 + abs(k) ** max(2.0, alpha)):
                continue
            if -1e-12 <= np.angle(k) <= np.pi / 2 + 1e-12 and abs(k) > 1e-12:
                if all(abs(k - q) > 1e-8 * (1 + abs(q)) for q in roots):
                    roots.append(complex(k))
    return roots


_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)


def _ray_rule(x: float, theta: float) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes on t in [0, t_max] for the rotated ray.

    Panels double in width from 1e-10 up to t = 1/x (resolving the k^alpha
    branch point and the scale of s), then keep width 1/x until the factor
    exp(-t x sin theta) falls below 1e-22.
    """
    t_mid = 1.0 / x
    t_max = 52.0 / (x * math.sin(theta))
    edges = [0.0]
    edges.extend(np.geomspace(1e-10 * min(1.0, t_mid), t_mid, 60))
    edges.extend(np.arange(2 * t_mid, t_max + t_mid, t_mid))
    edges = np.asarray(edges)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + half * (_GL_X + 1.0)).ravel()
    weights = (half * _GL_W).ravel()
    return nodes, weights


@dataclass(frozen=True)
class ResolventKernel:
    """Pointwise evaluator for K(x) with symbol m + a k^2 + k^alpha."""

    alpha: float
    m: float = 2.0
    c: float = 0.0
    wave: bool = False
    poles: tuple = field(init=False, repr=False)
    theta: float = field(init=False, repr=False)

    def __post_init__(self):
        _check(self.alpha, self.m, self.c)
        poles = _poles(self.alpha, self.m, self.a)
        # pick the ray angle that keeps the path furthest from every pole
        cands = [np.pi / 2, 3 * np.pi / 8, np.pi / 4, np.pi / 8]
        args = [np.angle(p) for p in poles]
        best = max(cands, key=lambda th: min([abs(th - q) for q in args], default=np.pi))
        object.__setattr__(self, "poles", tuple(poles))
        object.__setattr__(self, "theta", best)

    @property
    def a(self) -> float:
        return (1.0 - self.c**2) if self.wave else 0.0

    def symbol(self, k):
        return self.m + self.a * k * k + k**self.alpha

    def at_zero(self) -> float:
        if self.a == 0.0:
            al = self.alpha
            return self.m ** (1.0 / al - 1.0) / (al * math.sin(math.pi / al))
        val, _ = quad(lambda k: 1.0 / self.symbol(k), 0.0, np.inf, epsabs=1e-14,
                      epsrel=1e-13, limit=400)
        return val / math.pi

    def __call__(self, x: float) -> float:
        x = abs(float(x))
        if x == 0.0:
            return self.at_zero()
        e = np.exp(1j * self.theta)
        t, w = _ray_rule(x, self.theta)
        k = t * e
        total = e * np.dot(w, np.exp(1j * k * x) / self.symbol(k))
        for p in self.poles:
            if np.angle(p) < self.theta:
                ds = 2.0 * self.a * p + self.alpha * p ** (self.alpha - 1.0)
                total += 2j * np.pi * np.exp(1j * p * x) / ds
        return float(total.real / math.pi)

    def values(self, xs) -> np.ndarray:
        """K on an array of points.

        For |x| >= 1 the ray rule is a fixed node pattern scaled by 1/x, so
        those points are evaluated together as one matrix product.
        """
        xs = np.abs(np.asarray(xs, dtype=float))
        out = np.empty(xs.shape)
        flat, res = xs.ravel(), out.ravel()
        small = flat < 1.0
        for i in np.flatnonzero(small):
            res[i] = self(flat[i])
        big = np.flatnonzero(~small)
        if big.size:
            e = np.exp(1j * self.theta)
            u, w = _ray_rule(1.0, self.theta)
            for lo in range(0, big.size, 512):
                idx = big[lo:lo + 512]
                x = flat[idx, None]
                k = (u * e)[None, :] / x
                tot = e * ((np.exp(1j * u * e)[None, :] / self.symbol(k)) @ w) / x[:, 0]
                for p in self.poles:
                    if np.angle(p) < self.theta:
                        ds = 2.0 * self.a * p + self.alpha * p ** (self.alpha - 1.0)
                        tot = tot + 2j * np.pi * np.exp(1j * p * x[:, 0]) / ds
                res[idx] = tot.real / math.pi
        return out

    def tail_terms(self, order: float = 12.0):
        """Far-field series sum_b A_b |x|^(-1-b) from the small-k expansion.

        Non-analytic powers k^b, b = n alpha + 2j (n >= 1), of 1/s(k) each
        give A_b |x|^(-1-b) with A_b = -coef * Gamma(1+b) sin(pi b / 2) / pi.
        """
        terms = []
        for n in range(1, 20):
            for j in range(0, 20):
                b = n * self.alpha + 2 * j
                if b > order or (j > 0 and self.a == 0.0):
                    continue
                if abs(b / 2.0 - round(b / 2.0)) < 1e-12:
                    continue  # even integer powers are analytic: no tail
                coef = (-1) ** (n + j) * binom(n + j, j) * self.a**j / self.m ** (n + j + 1)
                A = -coef * sgamma(1.0 + b) * math.sin(math.pi * b / 2.0) / math.pi
                terms.append((b, A))
        return sorted(terms)

    def tail_integral(self, x0: float, order: float = 12.0) -> tuple[float, float]:
        """Integral of K over [x0, inf) from the far-field series, with the
        size of the first omitted term as an error bound."""
        terms = self.tail_terms(order)
        val = sum(A * x0 ** (-b) / b for b, A in terms)
        nxt = self.tail_terms(order + 2 * self.alpha + 2)
        omitted = [abs(A) * x0 ** (-b) / b for b, A in nxt if b > order]
        return val, (max(omitted) if omitted else 0.0)


@dataclass
class KernelTable:
    alpha: float
    m: float
    c: float
    x: np.ndarray
    values: np.ndarray
    crossover_radius: float
    asymptote: np.ndarray
    asym_rel_err: np.ndarray
    quadrature: np.ndarray
    wave: bool = False
    far_field: bool = False

    @property
    def kernel(self) -> ResolventKernel:
        return ResolventKernel(self.alpha, self.m, self.c, self.wave)

    def handoff_gap(self) -> float:
        """Relative quadrature/asymptote gap at the crossover radius."""
        K = self.kernel
        q = K(self.crossover_radius)
        return abs(q - kernel_asymptote(self.alpha, self.crossover_radius)) / abs(q)


def _has_asymptote(alpha: float) -> bool:
    try:
        tail_law(alpha)
    except ValueError:
        return False
    return True


def kernel_table(alpha: float, m: float = 2.0, c: float = 0.0, x_max: float = 25.0, *,
                 n_points: int | None = None, crossover: float = CROSSOVER,
                 far_field: bool = False, wave: bool | None = None) -> KernelTable:
    """Tabulate K on [0, x_max].

    ``values`` holds the quadrature result; with ``far_field`` set the entries
    beyond the crossover are replaced by the leading asymptote instead.
    """
    if wave is None:
        wave = c != 0.0
    _check(alpha, m, c)
    if x_max <= 0:
        raise ValueError("x_max must be positive")
    if x_max > 10.0 * crossover and not far_field:
        raise ValueError("x_max beyond 10 R* needs far_field=True")
    if n_points is None:
        n_points = int(round(x_max / 0.05)) + 1
    K = ResolventKernel(alpha, m, c, wave)
    x = np.linspace(0.0, x_max, n_points)
    quadv = np.array([K(xi) for xi in x])
    asym = np.full_like(x, np.nan)
    err = np.full_like(x, np.nan)
    if _has_asymptote(alpha) and m == 2.0:
        far = x > crossover
        if far.any():
            asym[far] = kernel_asymptote(alpha, x[far])
            err[far] = np.abs(quadv[far] - asym[far]) / np.abs(quadv[far])
    values = quadv.copy()
    if far_field:
        if np.isnan(asym[x > crossover]).any():
            raise ValueError("no far-field formula for this kernel")
        values[x > crossover] = asym[x > crossover]
    return KernelTable(alpha, m, c, x, values, crossover, asym, err, quadv, wave, far_field)


def kernel_moment0(table: KernelTable, *, tol: float = 1e-8) -> float:
    """Integral of K over the line: 2 * (adaptive quadrature on [0, x_max]
    plus the far-field series beyond x_max).  Should equal 1/m."""
    K = table.kernel
    X = float(table.x[-1])
    breaks = np.unique(np.concatenate([[0.0], np.geomspace(1e-3, X, 12), [X]]))
    core = 0.0
    for a, b in zip(breaks[:-1], breaks[1:]):
        core += quad(K, a, b, epsabs=1e-13, epsrel=1e-11, limit=400)[0]
    tail, bound = K.tail_integral(X)
    if K.alpha in (2.0, 4.0):
        tail, bound = 0.0, abs(K(X)) * 10.0
    if bound > tol:
        raise ValueError(f"x_max = {X} too small: tail remainder bound {bound:.2e} > {tol:.0e}")
    return 2.0 * (core + tail)


def convolve(kernel: ResolventKernel, f, x: np.ndarray, reach: float = 12.0) -> np.ndarray:
    """(K * f)(x) for a smooth callable f negligible beyond |y| = reach.

    The y-integral uses a fixed composite Gauss rule, graded geometrically at
    y = 0 where K has its cusp, so K is evaluated once per node.
    """
    x = np.asarray(x, dtype=float)
    Y = float(np.max(np.abs(x))) + reach
    fine = np.geomspace(1e-9, 1.0, 40)
    coarse = np.arange(1.25, Y + 0.25, 0.25)
    pos = np.concatenate([[0.0], fine, coarse])
    edges = np.concatenate([-pos[::-1], pos[1:]])
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    y = (lo + half * (_GL_X + 1.0)).ravel()
    w = (half * _GL_W).ravel()
    ky = kernel.values(y)
    wk = w * ky
    out = np.empty(x.shape)
    for lo in range(0, x.size, 128):
        xc = x[lo:lo + 128]
        out[lo:lo + 128] = f(xc[:, None] - y[None, :]) @ wk
    return out


@dataclass
class SignReport:
    k0: float
    crossings: list[float]
    negative_beyond_last: bool

    @property
    def n_crossings(self) -> int:
        return len(self.crossings)


def kernel_sign_scan(table: KernelTable) -> SignReport:
    """Locate sign changes of K on the table, refined by root bracketing."""
    from scipy.optimize import brentq

    K = table.kernel
    x, v = table.x, table.quadrature
    cross = []
    for i in range(len(x) - 1):
        if v[i] == 0.0 or v[i] * v[i + 1] < 0:
            cross.append(brentq(K, x[i], x[i + 1], xtol=1e-13) if v[i] != 0 else float(x[i]))
    k0 = float(v[0])
    if not cross:
        if 2.0 < table.alpha < 4.0:
            raise ValueError("no sign change within x_max; enlarge the table")
        return SignReport(k0, [], False)
    tail = v[x > cross[-1]]
    return SignReport(k0, cross, bool(tail.size and np.all(tail < 0)))
