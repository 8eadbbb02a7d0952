"""Kinks of the fractional phi^4 model: spectral operators, stationary and
travelling profiles, resolvent kernels, linear spectra and parabolic dynamics."""
from .asym import TailLaw, exact_kernel, exact_kink_alpha2, gamma_fn, kernel_asymptote, tail_law
from .evolve import EvolutionTrace, decompose, energy, run, step
from .green import KernelTable, ResolventKernel, kernel_moment0, kernel_sign_scan, kernel_table
from .kink import KinkProfile, continue_in_alpha, fit_tail, flux_identity, residual, solve_kink
from .specops import Grid, RealField, RieszSymbol, apply_riesz_singular, apply_symbol, inner
from .spectrum import (LinearizedOperator, SpectrumReport, assemble, essential_edge,
                       low_spectrum, uniqueness_check, wave_stability)

__all__ = [
    "Grid", "RealField", "RieszSymbol", "apply_symbol", "apply_riesz_singular", "inner",
    "gamma_fn", "TailLaw", "tail_law", "exact_kink_alpha2", "exact_kernel", "kernel_asymptote",
    "KinkProfile", "solve_kink", "residual", "continue_in_alpha", "fit_tail", "flux_identity",
    "ResolventKernel", "KernelTable", "kernel_table", "kernel_moment0", "kernel_sign_scan",
    "LinearizedOperator", "SpectrumReport", "assemble", "low_spectrum", "uniqueness_check",
    "essential_edge", "wave_stability",
    "EvolutionTrace", "step", "energy", "decompose", "run",
]
