import math

import numpy as np
import pytest

from frackink.evolve import (DecompositionError, background_energy, decompose, energy,
                             even_bump, odd_bump, perturb, run, step)
from frackink.kink import solve_kink
from frackink.specops import Grid, RealField

# frozen: mpmath quadrature of the Fourier form of 1/2 ||D^(alpha/2) tanh(x / sqrt 2)||^2
C_W = {1.5: 1.04886468818450799769, 2.0: 0.47140452079103168293}


@pytest.mark.parametrize("alpha", sorted(C_W))
def test_background_energy(alpha):
    assert background_energy(alpha) == pytest.approx(C_W[alpha], rel=1e-12)


def test_classical_kink_energy(kink2):
    # 2 sqrt(2) / 3 for the tanh kink
    for kind in ("lattice", "whole"):
        assert energy(kink2.phi, 2.0, kind) == pytest.approx(2 * math.sqrt(2) / 3, rel=1e-12)


def test_vacuum_energy():
    g = Grid(10.0, 64)
    assert energy(RealField(g, np.ones(g.N)), 1.5) == 0.0


def test_constant_is_fixed_point():
    g = Grid(10.0, 64)
    u = RealField(g, np.ones(g.N))
    assert np.allclose(step(u, 0.1, 1.5).values, 1.0, atol=1e-15)


def test_stationary_drift(kink15_lattice):
    p = kink15_lattice
    u1 = step(p.phi, 0.01, 1.5)
    drift = RealField(p.grid, u1.values - p.phi.values).norm()
    assert drift <= 0.01 * p.residual_norm + 1e-4 * 0.01**2


def test_whole_background_step(kink15):
    p = kink15
    u1 = step(p.phi, 0.01, 1.5, "whole")
    assert RealField(p.grid, u1.values - p.phi.values).norm() <= 0.01 * p.residual_norm * 10


def test_mirror_symmetry(kink15_lattice):
    p = kink15_lattice
    u = perturb(p, 0.05, "random", seed=3)
    a = step(u, 0.01, 1.5)
    b = step(RealField(p.grid, -u.values), 0.01, 1.5)
    assert np.allclose(a.values, -b.values, atol=1e-14)


def test_step_guards():
    g = Grid(10.0, 64)
    u = RealField(g, np.ones(g.N))
    with pytest.raises(ValueError):
        step(u, 0.5, 1.5)
    with pytest.raises(ValueError):
        step(u, 0.1, 1.5, "whole")
    with pytest.raises(FloatingPointError):
        with np.errstate(all="ignore"):
            step(RealField(g, np.full(g.N, 1e120)), 0.1, 1.5)


def test_decompose_identity(kink15_lattice):
    p = kink15_lattice
    s, v = decompose(p.phi, p)
    assert abs(s) < 1e-12 and v.norm() < 1e-12


def test_decompose_translation(kink15_lattice):
    p = kink15_lattice
    phi_s, _ = p.shifted(0.3)
    s, v = decompose(RealField(p.grid, phi_s), p)
    assert s == pytest.approx(0.3, abs=1e-8)
    assert v.norm() <= 1e-8


def test_decompose_odd_bump(kink15_lattice):
    p = kink15_lattice
    s, v = decompose(perturb(p, 0.01, "odd"), p)
    assert abs(s) <= 1e-9
    assert abs(p.grid.h * np.dot(v.values, p.dphi.values)) <= 1e-10


def test_decompose_orthogonality_even(kink15_lattice):
    p = kink15_lattice
    s, v = decompose(perturb(p, 0.05, "even"), p)
    assert abs(s) > 1e-3
    assert abs(p.grid.h * np.dot(v.values, p.dphi.values)) <= 1e-10


def test_decompose_failure(kink15_lattice):
    p = kink15_lattice
    with pytest.raises(DecompositionError):
        decompose(RealField(p.grid, -p.phi.values), p)


def test_bumps():
    x = np.linspace(-10, 10, 201)
    assert np.max(np.abs(odd_bump(x))) == pytest.approx(1.0)
    assert np.allclose(odd_bump(-x), -odd_bump(x))
    assert np.allclose(even_bump(-x), even_bump(x))


def test_zero_perturbation(kink15_lattice):
    p = kink15_lattice
    tr = run(p.phi, p, T=2.0, dt=0.01)
    assert tr.norm_l2.max() <= 10 * p.residual_norm * 2.0 + 1e-14


@pytest.fixture(scope="module")
def short_runs(kink15_lattice):
    p = kink15_lattice
    return {dt: run(perturb(p, 0.05, "even"), p, T=8.0, dt=dt) for dt in (0.01, 0.005)}


def test_dt_halving(short_runs):
    a, b = short_runs[0.01].norm_l2[-1], short_runs[0.005].norm_l2[-1]
    assert abs(a - b) / b <= 0.05


def test_trace_invariants(short_runs):
    for tr in short_runs.values():
        assert tr.max_energy_increase <= 1e-10
        assert np.all(np.diff(tr.energies) <= 1e-10)
        assert np.max(np.abs(tr.orthogonality)) <= 1e-8
        assert np.all(np.isfinite(tr.sigmas))
        assert tr.failure_time is None
        assert set(tr.columns()) == {"t", "norm_L2", "energy", "sigma"}


def test_run_reports_failure(kink15_lattice, monkeypatch):
    import frackink.evolve as ev

    p = kink15_lattice
    real = ev.decompose
    calls = {"n": 0}

    def flaky(u, profile, sigma_guess=0.0, **kw):
        calls["n"] += 1
        if calls["n"] > 4:
            raise DecompositionError("forced")
        return real(u, profile, sigma_guess, **kw)

    monkeypatch.setattr(ev, "decompose", flaky)
    tr = ev.run(perturb(p, 0.05, "odd"), p, T=4.0, dt=0.01)
    assert tr.failure_time == pytest.approx(1.5)
    assert "forced" in tr.error
    assert len(tr.times) == 3


def test_run_needs_initial_decomposition(kink15_lattice):
    p = kink15_lattice
    with pytest.raises(DecompositionError):
        run(RealField(p.grid, -p.phi.values), p, T=1.0)
