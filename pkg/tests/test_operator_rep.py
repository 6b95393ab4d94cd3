import numpy as np
import pytest

from twisted_triples.circle_kernel import CircleDiffeo, PeriodicFunction
from twisted_triples.crossed_product import CrossedProductAlgebra, CrossedProductElement, sigma
from twisted_triples.errors import DegenerateSpectrumError, TruncationError
from twisted_triples.operator_rep import (TruncatedOperator, abs_dirac, commutator_element,
                                          commutator_sup, dirac, dirac_power, heat,
                                          multiplication, norm_ladder, phase, pullback,
                                          represent, summability_exponent, t_min,
                                          twisted_commutator)

from conftest import rand_fn


def test_dirac_small():
    assert np.allclose(np.diag(dirac(1).matrix), [-2 * np.pi, 0, 2 * np.pi])
    assert np.allclose(np.diag(abs_dirac(2).matrix), [4 * np.pi, 2 * np.pi, 1, 2 * np.pi,
                                                       4 * np.pi])
    F = phase(3).matrix
    D = dirac(3).matrix
    assert np.allclose(F @ np.abs(D), D)
    assert np.allclose(dirac_power(3, -1, signed=True).matrix @ abs_dirac(3).matrix,
                       np.diag(np.where(np.arange(-3, 4) < 0, -1.0, 1.0)))


def test_multiplication_is_toeplitz():
    f = PeriodicFunction.from_triples([(0, 1, 0), (2, 0.5, 0.25), (-1, 0, 1)])
    T = multiplication(f, 4).matrix
    for j in range(-4, 5):
        for k in range(-4, 5):
            assert T[j + 4, k + 4] == pytest.approx(f.coeff(j - k))


def test_represent_function_equals_multiplication(group):
    f = rand_fn(np.random.default_rng(1), 3)
    a = CrossedProductElement.function(group, f)
    assert np.allclose(represent(a, 16).matrix, multiplication(f, 16).matrix, atol=1e-13)


def test_represent_rotation_is_character(group):
    U = represent(CrossedProductElement.unitary(group, "r"), 8).matrix
    k = np.arange(-8, 9)
    assert np.allclose(U, np.diag(np.exp(2j * np.pi * k / 3)), atol=1e-12)


def test_represent_against_grid(group):
    # column k of pi(U*_phi) is the Fourier series of phi'^{1/2} e_k(phi(x))
    N = 12
    P = represent(CrossedProductElement.unitary(group, "s"), N).matrix
    m = 1024
    x = np.arange(m) / m
    phi = x + 0.3 / (2 * np.pi) * np.sin(2 * np.pi * x)
    dphi = 1 + 0.3 * np.cos(2 * np.pi * x)
    for k in (-5, 0, 3):
        c = np.fft.fft(np.sqrt(dphi) * np.exp(2j * np.pi * k * phi)) / m
        col = np.array([c[j % m] for j in range(-N, N + 1)])
        assert np.max(abs(P[:, k + N] - col)) < 1e-10


def test_representation_is_multiplicative_and_unitary(group):
    N, M = 24, 64
    rng = np.random.default_rng(2)
    a = CrossedProductElement.monomial(group, rand_fn(rng, 2), "s")
    b = CrossedProductElement.monomial(group, rand_fn(rng, 2), "r s^-1")
    pa, pb, pab = represent(a, M), represent(b, M), represent(a * b, M)
    inner = slice(M - N, M + N + 1)
    assert np.max(abs((pa.matrix @ pb.matrix)[inner, inner] - pab.matrix[inner, inner])) < 1e-10
    # unitary up to compression: interior block of U* U is the identity
    full = represent(CrossedProductElement.unitary(group, "s"), M).matrix
    gram = (full.conj().T @ full)[inner, inner]
    assert np.max(abs(gram - np.eye(2 * N + 1))) < 1e-10


def test_pullback_and_heat_limit():
    V = pullback(CircleDiffeo.rotation(0.25), 4).matrix
    assert np.allclose(np.diag(V), np.exp(2j * np.pi * np.arange(-4, 5) / 4))
    H = heat(dirac(8), 5.0).matrix
    proj = np.zeros_like(H)
    proj[8, 8] = 1
    assert np.allclose(H, proj)
    with pytest.raises(TruncationError):
        heat(dirac(8), 1e-6)
    assert t_min(32) > 0 and t_min(64) == pytest.approx(t_min(32) / 4)


def test_twisted_commutator_of_one_vanishes(group):
    one = CrossedProductElement.one(group)
    assert np.max(abs(twisted_commutator(dirac(16), one).matrix)) < 1e-12


def test_twisted_commutator_is_represented(group):
    # D pi(a) - pi(sigma a) D = pi(c) on interior modes
    g = PeriodicFunction.constant(1.0) + PeriodicFunction.cos(1, 0.5)
    a = CrossedProductElement.monomial(group, g, "s")
    N, M = 16, 48
    T = twisted_commutator(dirac(M), a).matrix
    C = represent(commutator_element(a), M).matrix
    inner = slice(M - N, M + N + 1)
    assert np.max(abs(T[inner, inner] - C[inner, inner])) < 1e-9


def test_twisted_commutator_bounded_while_plain_grows(group):
    a = CrossedProductElement.unitary(group, "s")
    tw = [twisted_commutator(dirac(N), a).interior().opnorm() for N in (32, 64)]
    plain = []
    for N in (32, 64):
        P = represent(a, N).matrix
        D = dirac(N).matrix
        plain.append(np.linalg.norm((D @ P - P @ D)[N // 2: -N // 2, N // 2: -N // 2], 2))
    assert abs(tw[1] - tw[0]) < 0.05 * tw[0]
    assert plain[1] > 1.7 * plain[0]


def test_commutator_sup_frozen(group):
    g = PeriodicFunction.constant(1.0) + PeriodicFunction.cos(1, 0.5)
    a = CrossedProductElement.monomial(group, g, "s")
    # independent evaluation of |(g phi'^{1/2})' phi'^{-1/2}| on a dense grid
    x = np.linspace(0, 1, 200001)
    d = 1 + 0.3 * np.cos(2 * np.pi * x)
    gx = 1 + 0.5 * np.cos(2 * np.pi * x)
    dg = -np.pi * np.sin(2 * np.pi * x)
    dd = -0.6 * np.pi * np.sin(2 * np.pi * x)
    ref = np.max(np.abs(dg + gx * dd / (2 * d)))
    assert commutator_sup(a) == pytest.approx(ref, rel=1e-9)


def test_norm_ladder_is_cauchy(group):
    g = PeriodicFunction.constant(1.0) + PeriodicFunction.cos(1, 0.5)
    a = CrossedProductElement.monomial(group, g, "s")
    rows = norm_ladder(a, (32, 64, 128))
    assert np.isnan(rows[0][2])
    assert rows[2][2] < rows[1][2]


def test_summability_of_inverse_abs_dirac():
    assert summability_exponent(dirac_power(256, -1)) == pytest.approx(1.0, abs=0.02)
    with pytest.raises(DegenerateSpectrumError):
        summability_exponent(TruncatedOperator(np.zeros((9, 9)), 4))


def test_save_load_round_trip(tmp_path, group):
    T = represent(CrossedProductElement.unitary(group, "s"), 6)
    T.save(tmp_path / "op")
    raw = np.fromfile(tmp_path / "op.bin", dtype="<f8")
    assert raw[0] == T.matrix[0, 0].real and raw[1] == T.matrix[0, 0].imag
    U = TruncatedOperator.load(tmp_path / "op")
    assert np.array_equal(U.matrix, T.matrix) and U.N == 6
