import math

import numpy as np
import pytest

from frackink.specops import (Grid, GridMismatchError, RealField, RieszSymbol,
                              apply_riesz_singular, apply_symbol, inner, riesz_constant)


def gaussian(x):
    return np.exp(-x * x)


def test_grid_validation():
    for bad in (dict(L=-1.0, N=64), dict(L=1.0, N=15), dict(L=1.0, N=8), dict(L=1.0, N=63)):
        with pytest.raises(ValueError):
            Grid(**bad)


@pytest.mark.parametrize("anti", [False, True])
def test_round_trip(anti):
    g = Grid(10.0, 128, anti)
    v = np.random.default_rng(1).standard_normal(g.N)
    assert np.allclose(g.backward(g.forward(v)).real, v, atol=1e-13)


@pytest.mark.parametrize("anti", [False, True])
def test_gaussian_symbol_closed_form(anti):
    # (2 pi |xi|)^2 on exp(-x^2) is -d^2/dx^2 exp(-x^2) = (2 - 4x^2) exp(-x^2)
    g = Grid(12.0, 256, anti)
    f = RealField.from_function(g, gaussian)
    out = apply_symbol(f, RieszSymbol(2.0))
    assert np.max(np.abs(out.values - (2 - 4 * g.x**2) * gaussian(g.x))) < 1e-10


def test_symbol_of_constant_is_mass():
    g = Grid(5.0, 64)
    f = RealField(g, np.ones(g.N))
    out = apply_symbol(f, RieszSymbol(1.5, mass=2.0))
    assert np.allclose(out.values, 2.0)


def test_wave_term_only_with_flag():
    s0 = RieszSymbol(1.5, speed=0.5)
    s1 = RieszSymbol(1.5, speed=0.5, wave=True)
    k = 2 * np.pi * 0.3
    assert s0(0.3) == pytest.approx(k**1.5)
    assert s1(0.3) == pytest.approx(k**1.5 + 0.75 * k * k)


def test_symbol_validation():
    with pytest.raises(ValueError):
        RieszSymbol(0.0)
    with pytest.raises(ValueError):
        RieszSymbol(1.5, speed=1.0)
    with pytest.raises(ValueError):
        RieszSymbol(1.5, mass=-1.0)


def test_grid_mismatch():
    g1, g2 = Grid(5.0, 64), Grid(5.0, 128)
    with pytest.raises(GridMismatchError):
        apply_symbol(RealField(g1, np.zeros(64)), RieszSymbol(1.5, grid=g2))
    with pytest.raises(GridMismatchError):
        inner(RealField(g1, np.zeros(64)), RealField(g2, np.zeros(128)))


def test_realfield_checks():
    g = Grid(5.0, 64)
    with pytest.raises(ValueError):
        RealField(g, np.zeros(32))
    with pytest.raises(ValueError):
        RealField(g, np.full(64, np.nan))
    RealField(g, np.sin(np.pi * g.x / g.L), parity="odd")
    with pytest.raises(ValueError):
        RealField(g, np.cos(g.x) + 0.1 * g.x, parity="even")


@pytest.mark.parametrize("anti", [False, True])
def test_reflection_and_parity(anti):
    g = Grid(8.0, 64, anti)
    v = np.random.default_rng(2).standard_normal(g.N)
    assert np.allclose(g.reflect(g.reflect(v)), v)
    assert np.allclose(g.odd_part(v) + g.even_part(v), v)
    # the odd part of a smooth odd function is itself
    f = np.tanh(g.x)
    if not anti:
        f = np.sin(np.pi * g.x / g.L)
    assert np.allclose(g.odd_part(f), f, atol=1e-12)


def test_shift_matches_translation():
    g = Grid(20.0, 512, True)
    f = np.tanh(g.x / math.sqrt(2))
    assert np.max(np.abs(g.shift(f, 0.37) - np.tanh((g.x + 0.37) / math.sqrt(2)))) < 1e-12


def test_symbol_is_self_adjoint():
    g = Grid(10.0, 256, True)
    rng = np.random.default_rng(3)
    f, h = (RealField(g, rng.standard_normal(g.N)) for _ in range(2))
    sym = RieszSymbol(1.5, mass=2.0)
    a = inner(apply_symbol(f, sym), h)
    b = inner(f, apply_symbol(h, sym))
    assert abs(a - b) <= 1e-10 * f.norm() * h.norm()


def test_riesz_constant_limits():
    # s -> 2 gives the Laplacian normalisation; s = 1 gives 1/pi
    assert riesz_constant(1.0) == pytest.approx(1.0 / math.pi, rel=1e-12)
    assert riesz_constant(0.5) == pytest.approx(0.19947114020071635, rel=1e-12)


@pytest.mark.parametrize("anti", [False, True])
@pytest.mark.parametrize("s", [0.3, 0.5, 0.8])
def test_singular_integral_agrees_with_symbol(s, anti):
    g = Grid(20.0, 512, anti)
    f = RealField.from_function(g, gaussian)
    a = apply_riesz_singular(f, s).values
    b = apply_symbol(f, RieszSymbol(s)).values
    assert np.max(np.abs(a - b)) / np.max(np.abs(b)) < 1e-8


def test_singular_integral_range():
    g = Grid(5.0, 64)
    with pytest.raises(ValueError):
        apply_riesz_singular(RealField(g, np.zeros(64)), 1.2)
