import numpy as np
import pytest

from frackink.kink import solve_kink
from frackink.specops import Grid
from frackink.spectrum import (LanczosError, assemble, dense_spectrum, essential_edge,
                               free_operator, low_spectrum, rayleigh_quotients,
                               uniqueness_check, wave_matrices, wave_stability)


@pytest.fixture(scope="module")
def lat15():
    # the lattice background keeps the discrete problem translation invariant
    return solve_kink(1.5, L=50.0, N=2048, background_kind="lattice")


@pytest.fixture(scope="module")
def report15(lat15):
    return low_spectrum(assemble(lat15), 10)


def test_translation_mode_in_kernel(lat15):
    op = assemble(lat15)
    d = lat15.dphi.values
    assert np.linalg.norm(op.apply(d)) <= 1e-7 * np.linalg.norm(d)


def test_translation_mode_whole_background(kink15):
    # the whole-line background leaves a seam defect at x = -L, still far below tol_zero
    op = assemble(kink15)
    d = kink15.dphi.values
    assert np.linalg.norm(op.apply(d)) <= 1e-3 * np.linalg.norm(d)


def test_alpha2_kernel(kink2):
    op = assemble(kink2)
    d = 1.0 / np.cosh(kink2.x / np.sqrt(2.0)) ** 2
    assert np.linalg.norm(op.apply(d)) <= 1e-7 * np.linalg.norm(d)


def test_far_field_value_is_two(kink15_large):
    op = assemble(kink15_large)
    x = kink15_large.x
    bump = np.exp(-((x - 60.0) / 15.0) ** 2)
    out = op.apply(bump)
    j = int(np.argmin(np.abs(x - 60.0)))
    # a wide bump far from the core sees almost only the mass term
    assert out[j] == pytest.approx(2.0, abs=0.05)


def test_self_adjoint(kink15):
    op = assemble(kink15)
    g = kink15.grid
    rng = np.random.default_rng(4)
    f, h = rng.standard_normal(g.N), rng.standard_normal(g.N)
    a = g.h * np.dot(op.apply(f), h)
    b = g.h * np.dot(f, op.apply(h))
    nf, nh = np.sqrt(g.h * f @ f), np.sqrt(g.h * h @ h)
    assert abs(a - b) <= 1e-10 * nf * nh


def test_parity_commutation(kink15):
    op = assemble(kink15)
    g = kink15.grid
    v = np.random.default_rng(5).standard_normal(g.N)
    out = op.apply(g.odd_part(v))
    assert np.max(np.abs(g.even_part(out))) < 1e-10 * np.max(np.abs(out))


def test_low_spectrum_alpha15(report15):
    r = report15
    assert abs(r.lambda0) <= 1e-4
    assert r.ground_alignment >= 1 - 1e-6
    assert r.lambda1 > 1.0
    assert np.all(np.diff(r.eigenvalues) >= 0)
    assert np.all(r.residuals <= 1e-8)
    assert r.parities[0] == "even" and r.parities[1] == "odd"
    for v in r.eigenvectors:
        i = np.argmax(np.abs(v.values))
        assert v.values[i] > 0


def test_uniqueness_and_perron_frobenius(report15, kink25):
    u = uniqueness_check(report15)
    assert u.holds and u.ground_state_sign_definite and u.regime == "subLaplacian"
    r25 = low_spectrum(assemble(kink25), 6)
    u25 = uniqueness_check(r25)
    assert u25.regime == "superLaplacian"
    assert isinstance(u25.holds, bool)


def test_essential_edge(report15):
    assert 1.9 <= report15.essential_edge_estimate <= 2.1
    assert report15.kappa == pytest.approx(min(report15.lambda1, report15.essential_edge_estimate))


def test_essential_edge_needs_enough_eigenvalues(kink15):
    r = low_spectrum(assemble(kink15), 3, edge=False)
    with pytest.raises(ValueError):
        essential_edge(r)


def test_free_operator_bottom_is_two():
    r = low_spectrum(free_operator(Grid(50.0, 512), 1.5), 5, edge=False)
    assert r.eigenvalues[0] == pytest.approx(2.0, abs=1e-10)


def test_dense_oracle_alpha2():
    p = solve_kink(2.0, L=25.0, N=512)
    op = assemble(p)
    dense = dense_spectrum(op)[0][:5]
    lan = low_spectrum(op, 5, edge=False).eigenvalues
    assert np.max(np.abs(dense - lan)) < 1e-8
    assert lan[1] == pytest.approx(1.5, abs=1e-3)


def test_parity_split_matches_unsplit(kink15):
    p = solve_kink(1.5, L=25.0, N=512)
    op = assemble(p)
    dense = dense_spectrum(op)[0][:6]
    lan = low_spectrum(op, 6, edge=False)
    assert np.max(np.abs(dense - lan.eigenvalues)) <= 1e-8


def test_k_limits(kink15):
    with pytest.raises(ValueError):
        low_spectrum(assemble(kink15), 11)


def test_lanczos_budget(kink15):
    with pytest.raises(LanczosError):
        low_spectrum(assemble(kink15), 6, max_lanczos=8)


def test_rayleigh_nonnegative(kink15, kink25):
    for p in (kink15, kink25):
        assert rayleigh_quotients(assemble(p), 200).min() >= -1e-8


@pytest.fixture(scope="module")
def travel_pair():
    p5 = solve_kink(1.5, 0.5, L=50.0, N=1024, background_kind="lattice", newton_tol=1e-12)
    p0 = solve_kink(1.5, 0.0, L=50.0, N=1024, background_kind="lattice", wave=True,
                    newton_tol=1e-12)
    return p5, p0


def test_wave_stability(travel_pair):
    p5, _ = travel_pair
    assert wave_stability(p5).max_real_part <= 1e-6


def test_wave_structure(travel_pair):
    p5, _ = travel_pair
    J, H = wave_matrices(p5)
    rng = np.random.default_rng(6)
    f = rng.standard_normal(J.shape[0]) + 1j * rng.standard_normal(J.shape[0])
    jf = np.vdot(f, J @ f)
    hf = np.vdot(f, H @ f)
    assert abs(jf.real) <= 1e-9 * abs(jf)
    assert abs(hf.imag) <= 1e-9 * abs(hf)


def test_wave_zero_speed_decouples(travel_pair):
    _, p0 = travel_pair
    w = wave_stability(p0)
    J, H = wave_matrices(p0)
    n = p0.grid.N
    mu = np.linalg.eigvalsh(H[:n, :n])
    oracle = np.concatenate([1j * np.emath.sqrt(mu), -1j * np.emath.sqrt(mu)])
    key = lambda z: np.lexsort((z.real.round(8), z.imag))
    lam = w.eigenvalues
    assert np.max(np.abs(lam[key(lam)] - oracle[key(oracle)])) <= 1e-6


def test_dense_cap():
    p = solve_kink(1.5, 0.5, L=50.0, N=4096, background_kind="lattice")
    with pytest.raises(MemoryError):
        wave_stability(p)
