import numpy as np
import pytest

from honeystrain.deformation import quadratic_profile, regularized_quadratic
from honeystrain.dirac1d import (A_NODE, NORM2, KappaProfile, discretize, eigenvalues, essential_gap,
                                 hermite_functions, in_gap_spectrum, l2_norm_sq, landau_eigenfunction,
                                 landau_levels, tail_decay_rates, zero_mode_closed_form)


def reg(k=0.0, t1=-2.0, L=1.0):
    return KappaProfile.from_profile(regularized_quadratic(L, 0.5), k, t1)


def quad(k=0.0, t1=-2.0):
    return KappaProfile.from_profile(quadratic_profile(), k, t1)


def const(c):
    return KappaProfile(3.0 * c, 0.0, lambda x: np.zeros_like(np.asarray(x, dtype=float)), name="const")


def test_kappa_definition_and_limits():
    p = reg(k=0.6)
    x = np.linspace(-5, 5, 11)
    assert np.allclose(p.kappa(x), 0.2 + np.asarray(p.d_prime(x)))
    assert abs(p.kappa_plus - 2.2) < 1e-12 and abs(p.kappa_minus + 1.8) < 1e-12


def test_essential_gap_examples():
    p = reg()
    assert abs(p.kappa_plus - 2) < 1e-12 and abs(p.kappa_minus + 2) < 1e-12
    assert abs(essential_gap(p) - 3) < 1e-12
    assert abs(essential_gap(reg(k=6.0))) < 1e-12
    assert essential_gap(reg(k=9.0)) > 0
    with pytest.raises(ValueError):
        essential_gap(quad())


def test_landau_levels_examples():
    assert np.allclose(landau_levels(-2, 3), [-3 * np.sqrt(3), -3 * np.sqrt(2), -3, 0, 3, 3 * np.sqrt(2),
                                               3 * np.sqrt(3)])
    assert np.array_equal(landau_levels(0.7, 0), [0.0])
    assert np.all(landau_levels(0.0, 2) == 0)
    with pytest.raises(ValueError):
        landau_levels(-2, -1)


def test_zero_mode_closed_form_examples():
    x = np.linspace(-10, 10, 4001)
    comp, v = zero_mode_closed_form(quad(), x)
    assert comp == "B"
    g = np.exp(-x ** 2)
    g *= np.sqrt(NORM2 / l2_norm_sq(g, x))
    assert np.max(np.abs(v - g)) < 1e-8
    _, vk = zero_mode_closed_form(quad(k=1.5), x)
    assert abs(x[np.argmax(vk)] + 0.25) < 1e-2
    _, vk2 = zero_mode_closed_form(quad(k=3.0), x)
    assert abs(x[np.argmax(vk2)] + 0.5) < 1e-2
    comp, _ = zero_mode_closed_form(quad(t1=2.0), x)
    assert comp == "A"
    with pytest.raises(ValueError):
        zero_mode_closed_form(const(1.0), x)


def test_landau_eigenfunction_matches_zero_mode():
    x = np.linspace(-10, 10, 8001)
    A, B = landau_eigenfunction(0, "+", 0.9, -2.0, x)
    _, v = zero_mode_closed_form(quad(k=0.9), x)
    assert np.max(np.abs(A)) == 0
    assert np.max(np.abs(np.abs(B) - v)) < 1e-10
    A2, B2 = landau_eigenfunction(0, "+", 0.0, 2.0, x)
    assert np.max(np.abs(B2)) == 0 and np.max(np.abs(A2)) > 0
    with pytest.raises(ValueError):
        landau_eigenfunction(-1, "+", 0, -2, x)
    with pytest.raises(ValueError):
        landau_eigenfunction(1, "+", 0, 0.0, x)


@pytest.mark.parametrize("t1", [-2.0, 2.0])
@pytest.mark.parametrize("branch", ["+", "-"])
def test_landau_eigenfunction_first_level_residual(t1, branch):
    disc = discretize(quad(t1=t1), 12.0, 6000)
    A, B = landau_eigenfunction(1, branch, 0.0, t1, disc.x)
    v = np.where(disc.types == A_NODE, A, B)
    w1 = landau_levels(t1, 1)[-1] * (1 if branch == "+" else -1)
    res = np.linalg.norm(disc.apply(v) - w1 * v) / np.linalg.norm(v)
    assert res < 1e-3


def test_hermite_sign_changes_and_orthonormality():
    xi = np.linspace(-12, 12, 6001)
    phi = hermite_functions(6, xi)
    for s in range(7):
        f = phi[s][np.abs(phi[s]) > 1e-12]
        assert np.count_nonzero(np.diff(np.sign(f))) == s
    G = phi @ phi.T * (xi[1] - xi[0])
    assert np.allclose(G, np.eye(7), atol=1e-10)


def test_discretization_chiral_hermitian_bandwidth():
    for p in (reg(), reg(k=0.7), quad(), quad(t1=2.0)):
        disc = discretize(p, 15.0, 300)
        H = disc.matrix
        S = np.diag(disc.chiral_signs())
        assert np.allclose(H, H.conj().T)
        assert np.max(np.abs(S @ H @ S + H)) == 0
        assert np.count_nonzero(np.triu(H, 2)) == 0
        assert np.allclose(disc.apply(np.eye(disc.dim)[:, 3]), H[:, 3])
    with pytest.raises(ValueError):
        discretize(reg(), 10.0, 8)
    with pytest.raises(ValueError):
        discretize(reg(), 0.0, 100)


def test_plane_wave_oracle_and_no_doubling():
    c, W, n = 0.4, 10.0, 200
    disc = discretize(const(c), W, n, periodic=True)
    dl = disc.spacing
    xi = 2 * np.pi * np.arange(n) / (n * disc.h)
    w = 1.5 * np.sqrt(np.sin(xi * dl) ** 2 / dl ** 2 + c ** 2 * np.cos(xi * dl) ** 2)
    assert np.allclose(np.sort(eigenvalues(disc)), np.sort(np.concatenate([w, -w])), atol=1e-10)
    lo = xi <= 0.1 / disc.h
    cont = 1.5 * np.sqrt(xi ** 2 + c ** 2)
    assert np.max(np.abs(w[lo] - cont[lo]) / cont[lo]) < 1e-2
    one = discretize(const(1.0), 20.0, 2000, periodic=True)
    assert np.min(np.abs(eigenvalues(one))) >= 1.5 * 0.99


def test_landau_spectrum_and_k_independence():
    ref = landau_levels(-2, 3)
    got = {}
    for k in (-0.5, 0.0, 0.5):
        r = in_gap_spectrum(discretize(quad(k), 20.0, 4096), max_count=7)
        assert np.max(np.abs(r.in_gap_eigenvalues[[0, 1, 2, 4, 5, 6]] - ref[[0, 1, 2, 4, 5, 6]])
                      / np.abs(ref[[0, 1, 2, 4, 5, 6]])) < 1e-2
        assert abs(r.in_gap_eigenvalues[3]) < 1e-8
        got[k] = r.in_gap_eigenvalues
    assert np.max(np.abs(got[-0.5] - got[0.0])) < 1e-3
    assert np.max(np.abs(got[0.5] - got[0.0])) < 1e-3


def test_in_gap_zero_mode_on_b_and_symmetry():
    r = in_gap_spectrum(discretize(reg(), 30.0, 6000))
    vals = r.in_gap_eigenvalues
    assert np.all(np.abs(vals) < r.gap_edge_a) and abs(r.gap_edge_a - 3) < 1e-12
    assert np.allclose(np.sort(vals), -np.sort(vals)[::-1], atol=1e-10)
    i = r.index_of(0.0)
    assert abs(vals[i]) < 1e-6
    xa, A, xb, B = r.components(i)
    assert np.sqrt(np.sum(np.abs(A) ** 2)) < 1e-8 * np.sqrt(np.sum(np.abs(B) ** 2))
    assert abs(r.disc.h * np.sum(np.abs(B) ** 2) - NORM2) < 1e-12


def test_zero_mode_residual_order():
    errs, hs = [], []
    for n in (500, 1000, 2000, 4000):
        disc = discretize(reg(), 20.0, n)
        fine = np.linspace(-20, 20, 16 * n + 1)
        comp, z = zero_mode_closed_form(reg(), fine)
        assert comp == "B"
        v = np.where(disc.types == A_NODE, 0.0, np.interp(disc.x, fine, z))
        errs.append(np.linalg.norm(disc.apply(v)) * np.sqrt(disc.h))
        hs.append(disc.h)
    order = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert order >= 1.8


def test_richardson_and_domain_truncation():
    def levels(W, n):
        return in_gap_spectrum(discretize(reg(), W, n)).in_gap_eigenvalues
    coarse, fine = levels(20.0, 2000), levels(20.0, 4000)
    assert len(coarse) == len(fine) and np.max(np.abs(coarse - fine)) < 1e-3
    wide = levels(40.0, 4000)
    assert len(wide) == len(coarse) and np.max(np.abs(wide - coarse)) < 1e-3


@pytest.mark.parametrize("k", [0.0, 0.5, -1.0])
def test_zero_mode_tail_rates(k):
    p = reg(k=k)
    x = np.linspace(-30, 30, 12001)
    _, z = zero_mode_closed_form(p, x)
    rm, rp = tail_decay_rates(x, z)
    assert abs(rm - abs(p.kappa_minus)) < 0.05 * abs(p.kappa_minus)
    assert abs(rp - abs(p.kappa_plus)) < 0.05 * abs(p.kappa_plus)
    r = in_gap_spectrum(discretize(p, 30.0, 6000))
    _, _, xb, B = r.components(r.index_of(0.0))
    rm2, rp2 = tail_decay_rates(xb, B)
    assert abs(rm2 - abs(p.kappa_minus)) < 0.05 * abs(p.kappa_minus)
    assert abs(rp2 - abs(p.kappa_plus)) < 0.05 * abs(p.kappa_plus)


def test_envelope_from_node_vector():
    r = in_gap_spectrum(discretize(reg(), 20.0, 4000))
    env = r.envelope(r.index_of(0.0))
    assert abs(env.norm_sq() - NORM2) < 1e-12
    assert np.max(np.abs(env.A)) < 1e-8
    _, z = zero_mode_closed_form(reg(), env.X)
    ph = env.B[np.argmax(np.abs(env.B))] / abs(env.B[np.argmax(np.abs(env.B))])
    assert np.max(np.abs(env.B / ph - z)) < 1e-4
