"""Linearised operator around a kink: low spectrum, gap diagnostics and the
travelling-wave block eigenproblem."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .kink import KinkProfile
from .specops import Grid, RealField, RieszSymbol

TOL_ZERO = 1e-4
MAX_LANCZOS = 400
EIG_TOL = 1e-8
SHIFT = -1.0
DENSE_CAP = 2048


class LanczosError(RuntimeError):
    pass


@dataclass
class LinearizedOperator:
    """L = sigma(D) + 2 - 3(1 - phi^2) on the profile's grid."""

    profile: KinkProfile | None
    symbol: RieszSymbol
    potential: RealField
    grid: Grid = field(init=False)
    _s: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.grid = self.potential.grid
        self._s = self.symbol.values(self.grid)

    def apply(self, values: np.ndarray) -> np.ndarray:
        # the symbol is real and even, so the periodic Nyquist mode is kept
        g = self.grid
        return g.backward(g.forward(values) * self._s).real + self.potential.values * values

    __call__ = apply

    def dense(self) -> np.ndarray:
        n = self.grid.N
        cols = np.column_stack([self.apply(e) for e in np.eye(n)])
        return 0.5 * (cols + cols.T)

    def free_eigenvalues(self, parity: str) -> np.ndarray:
        """Spectrum of the operator with the potential removed, per sector."""
        g = self.grid
        if g.antiperiodic:
            vals = np.unique(np.abs(g.xi))
        else:
            kk = np.fft.fftfreq(g.N, d=1.0 / g.N)
            keep = np.abs(kk) < g.N // 2
            pos = np.unique(np.abs(g.xi[keep]))
            vals = pos if parity == "even" else pos[pos > 0]
        return np.sort(self.symbol(vals))


def assemble(profile: KinkProfile) -> LinearizedOperator:
    sym = RieszSymbol(profile.alpha, speed=profile.c, mass=2.0, wave=profile.wave,
                      grid=profile.grid)
    pot = RealField(profile.grid, -3.0 * (1.0 - profile.phi.values**2))
    return LinearizedOperator(profile, sym, pot)


def free_operator(grid: Grid, alpha: float) -> LinearizedOperator:
    """sigma(D) + 2 with no potential."""
    return LinearizedOperator(None, RieszSymbol(alpha, mass=2.0, grid=grid),
                              RealField(grid, np.zeros(grid.N)))


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    eigenvectors: list[RealField]
    parities: list[str]
    residuals: np.ndarray
    ground_alignment: float
    uniqueness_verdict: bool
    essential_edge_estimate: float | None
    sector_eigenvalues: dict[str, np.ndarray]
    sector_vectors: dict[str, np.ndarray] = field(repr=False)
    free_eigenvalues: dict[str, np.ndarray] = field(repr=False)
    lanczos_steps: dict[str, int] = field(default_factory=dict)
    alpha: float = math.nan

    @property
    def lambda0(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lambda1(self) -> float:
        return float(self.eigenvalues[1])

    @property
    def odd_gap(self) -> float:
        return float(self.sector_eigenvalues["odd"][0])

    @property
    def kappa(self) -> float:
        edge = self.essential_edge_estimate
        return self.lambda1 if edge is None else min(self.lambda1, edge)


def _sector_projector(grid: Grid, parity: str):
    return grid.odd_part if parity == "odd" else grid.even_part


def _lanczos_sector(op: LinearizedOperator, parity: str, k: int, rng: np.random.Generator,
                    tol: float, max_steps: int):
    """Shift-invert Lanczos on (L - SHIFT)^(-1) restricted to one parity sector."""
    g = op.grid
    n = g.N
    proj = _sector_projector(g, parity)
    s_shift = op._s - SHIFT
    inv = 1.0 / s_shift

    def prec(v):
        # keeps the periodic Nyquist mode, which ``multiply`` would discard
        return g.backward(g.forward(v) * inv).real

    def solve(b):
        # preconditioned CG; the preconditioner is exact when there is no potential
        bn = np.linalg.norm(b)
        y = prec(b)
        r = b - (op.apply(y) - SHIFT * y)
        z = prec(r)
        d = z.copy()
        rz = float(np.dot(r, z))
        for _ in range(2000):
            if np.linalg.norm(r) <= 1e-13 * bn:
                return proj(y)
            Ad = op.apply(d) - SHIFT * d
            step = rz / float(np.dot(d, Ad))
            y += step * d
            r -= step * Ad
            z = prec(r)
            rz, rz_old = float(np.dot(r, z)), rz
            d = z + (rz / rz_old) * d
        raise LanczosError("inner solve did not converge")

    q = proj(rng.standard_normal(n))
    q /= np.linalg.norm(q)
    Q = np.zeros((max_steps + 1, n))
    Q[0] = q
    alph, beta = [], []
    k_eff = k
    vals = vecs = res = None
    for j in range(max_steps):
        w = solve(Q[j])
        a = float(np.dot(Q[j], w))
        w -= a * Q[j]
        if j > 0:
            w -= beta[-1] * Q[j - 1]
        for _ in range(2):
            w -= Q[: j + 1].T @ (Q[: j + 1] @ w)
        b = float(np.linalg.norm(w))
        alph.append(a)
        breakdown = b < 1e-14
        m = j + 1
        if m >= k + 2 and (m % 5 == 0 or breakdown or m == max_steps):
            theta, S = eigh_tridiagonal(np.array(alph), np.array(beta)) if m > 1 else (
                np.array(alph), np.ones((1, 1)))
            order = np.argsort(theta)[::-1][:k_eff]
            Y = (Q[:m].T @ S[:, order]).T
            Y /= np.linalg.norm(Y, axis=1)[:, None]
            LY = np.array([op.apply(y) for y in Y])
            lam = np.einsum("ij,ij->i", LY, Y)
            res = np.linalg.norm(LY - lam[:, None] * Y, axis=1)
            vals, vecs = lam, Y
            if np.all(res <= tol):
                return vals, vecs, res, m
        if breakdown:
            break
        beta.append(b)
        Q[j + 1] = w / b
    raise LanczosError(f"{parity} sector: no convergence after {max_steps} steps "
                       f"(worst residual {np.max(res) if res is not None else math.nan:.2e})")


def _normalise_sign(v: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(v)))
    return v if v[i] >= 0 else -v


def low_spectrum(op: LinearizedOperator, k: int = 6, *, tol: float = EIG_TOL,
                 max_lanczos: int = MAX_LANCZOS, seed: int = 0,
                 edge: bool = True) -> SpectrumReport:
    """k lowest eigenpairs in each parity sector; the merged list keeps the k
    lowest overall."""
    if not 1 <= k <= 10:
        raise ValueError(f"k must lie in 1..10, got {k}")
    rng = np.random.default_rng(seed)
    g = op.grid
    sect_vals, sect_vecs, sect_res, steps = {}, {}, {}, {}
    for parity in ("odd", "even"):
        lam, vecs, res, m = _lanczos_sector(op, parity, k, rng, tol, max_lanczos)
        order = np.argsort(lam)
        sect_vals[parity] = lam[order]
        sect_vecs[parity] = vecs[order] / math.sqrt(g.h)
        sect_res[parity] = res[order]
        steps[parity] = m
    allv = [(lam, p, i) for p in sect_vals for i, lam in enumerate(sect_vals[p])]
    allv.sort()
    allv = allv[:k]
    eigenvalues = np.array([a[0] for a in allv])
    parities = [a[1] for a in allv]
    vecs = [_normalise_sign(sect_vecs[p][i]) for _, p, i in allv]
    residuals = np.array([sect_res[p][i] for _, p, i in allv])
    fields = [RealField(g, v) for v in vecs]

    align = math.nan
    if op.profile is not None:
        dphi = op.profile.dphi.values
        v0 = vecs[0]
        align = abs(np.dot(v0, dphi)) / (np.linalg.norm(v0) * np.linalg.norm(dphi))
    margin = 3.0 * float(np.max(residuals))
    verdict = bool(len(eigenvalues) > 1 and eigenvalues[1] > 1.0 + margin)
    free = {p: op.free_eigenvalues(p) for p in ("odd", "even")}
    report = SpectrumReport(eigenvalues, fields, parities, residuals, float(align), verdict,
                            None, sect_vals, sect_vecs, free, steps,
                            op.profile.alpha if op.profile is not None else op.symbol.alpha)
    if edge:
        try:
            report.essential_edge_estimate = essential_edge(report)
        except ValueError:
            pass
    return report


def dense_spectrum(op: LinearizedOperator) -> tuple[np.ndarray, np.ndarray]:
    """Full eigendecomposition of the dense matrix; an oracle for small N."""
    if op.grid.N > 4096:
        raise MemoryError("dense eigensolve restricted to N <= 4096")
    return np.linalg.eigh(op.dense())


@dataclass
class UniquenessVerdict:
    lambda1: float
    margin: float
    holds: bool
    ground_state_sign_definite: bool
    regime: str


def uniqueness_check(report: SpectrumReport) -> UniquenessVerdict:
    margin = 3.0 * float(np.max(report.residuals))
    lam1 = report.lambda1
    v0 = report.eigenvectors[0].values
    sign_definite = bool(v0.min() >= -1e-6 * np.abs(v0).max())
    a = report.alpha
    regime = "subLaplacian" if a < 2 else ("superLaplacian" if a > 2 else "Laplacian")
    return UniquenessVerdict(lam1, margin, bool(lam1 > 1.0 + margin), sign_definite, regime)


def essential_edge(report: SpectrumReport, run: int = 5, rel: float = 0.2) -> float:
    """Lowest eigenvalue from which ``run`` consecutive spacings match the
    free-operator spacings at the same height to within ``rel``."""
    best = math.inf
    for parity, lam in report.sector_eigenvalues.items():
        free = report.free_eigenvalues[parity]
        for i in range(len(lam) - run):
            d = np.diff(lam[i:i + run + 1])
            j = int(np.searchsorted(free, lam[i]))
            j = min(max(j - 1, 0), len(free) - run - 1)
            fd = np.diff(free[j:j + run + 1])
            if np.all(np.abs(d - fd) <= rel * fd):
                best = min(best, float(lam[i]))
                break
    if not math.isfinite(best):
        raise ValueError("no clustering detected; request more eigenvalues")
    return best


@dataclass
class WaveStability:
    max_real_part: float
    eigenvalues: np.ndarray
    c: float


def wave_matrices(profile: KinkProfile) -> tuple[np.ndarray, np.ndarray]:
    """Dense J = [[0, I], [-I, 2c d/dx]] and H = diag(L, I)."""
    g = profile.grid
    if g.N > DENSE_CAP:
        raise MemoryError(f"dense block eigensolve capped at N = {DENSE_CAP}, got {g.N}")
    n = g.N
    Ld = assemble(profile).dense()
    eye = np.eye(n)
    D1 = np.column_stack([g.derivative(e) for e in eye])
    J = np.block([[np.zeros((n, n)), eye], [-eye, 2.0 * profile.c * D1]])
    H = np.block([[Ld, np.zeros((n, n))], [np.zeros((n, n)), eye]])
    return J, H


def wave_stability(profile: KinkProfile) -> WaveStability:
    """Eigenvalues of J H; spectral stability means none in Re > 0."""
    J, H = wave_matrices(profile)
    lam = np.linalg.eigvals(J @ H)
    return WaveStability(float(lam.real.max()), lam, profile.c)


def rayleigh_quotients(op: LinearizedOperator, n: int = 200, seed: int = 0,
                       smooth: bool = True) -> np.ndarray:
    """inner(L h, h) for n random fields h of unit discrete L2 norm.

    With ``smooth`` the noise is filtered by (1 + symbol)^(-1), which puts the
    weight on low frequencies where L is smallest; white noise alone would
    only probe the large symbol values.
    """
    rng = np.random.default_rng(seed)
    g = op.grid
    out = np.empty(n)
    for i in range(n):
        h = rng.standard_normal(g.N)
        if smooth:
            h = g.multiply(h, 1.0 / (1.0 + op._s))
        h /= np.sqrt(g.h * np.dot(h, h))
        out[i] = g.h * np.dot(op.apply(h), h)
    return out
