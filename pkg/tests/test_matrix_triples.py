import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twisted_triples import matrix_triples as mt
from twisted_triples.cochain_calculus import cyclic_lambda, hochschild_b
from twisted_triples.errors import (DegreeMismatchError, GradingError, NotIdempotentError,
                                    NotSelfAdjointError, SingularDError)

seeds = st.integers(0, 2 ** 31)


def untwisted_trace(D0, n, args):
    """Tr(gamma D0^-1 [D0, b0] ... D0^-1 [D0, bn]) for an ordinary triple."""
    m = D0.shape[0] // 2
    prod = np.diag(np.r_[np.ones(m), -np.ones(m)]).astype(complex)
    Dinv = np.linalg.inv(D0)
    for b in args:
        prod = prod @ Dinv @ (D0 @ b - b @ D0)
    return np.trace(prod)


def test_construction_validates():
    m = 2
    Dp = np.eye(m)
    T = mt.untwisted_triple(Dp)
    assert np.allclose(T.gamma @ T.D + T.D @ T.gamma, 0)
    with pytest.raises(NotSelfAdjointError):
        mt.MatrixTwistedTriple(T.D + np.triu(np.ones((4, 4)), 1), T.h)
    with pytest.raises(GradingError):
        mt.MatrixTwistedTriple(np.eye(4), T.h)
    with pytest.raises(SingularDError):
        mt.untwisted_triple(np.diag([1.0, 0.0]))
    odd_h = np.zeros((4, 4))
    odd_h[0, 2] = odd_h[2, 0] = 1
    with pytest.raises(GradingError):
        mt.perturb(T, odd_h)
    with pytest.raises(NotIdempotentError):
        mt.IdempotentData(2 * np.eye(4))


def test_trivial_perturbation_keeps_triple():
    rng = np.random.default_rng(0)
    T = mt.untwisted_triple(mt.random_unitary(3, rng))
    T2 = mt.perturb(T, np.zeros((6, 6)))
    a = mt.random_even(3, rng)
    assert np.allclose(T2.D, T.D) and np.allclose(T2.sigma(a), a)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_perturbation_factorizes(seed):
    # e^{-h} d_sigma(a) e^{-h} = [D0, e^h a e^{-h}]
    rng = np.random.default_rng(seed)
    T = mt.random_triple(3, rng)
    a = mt.random_even(3, rng)
    E, Einv = mt._expm_herm(T.h, 1), mt._expm_herm(T.h, -1)
    D0 = Einv @ T.D @ Einv
    b = E @ a @ Einv
    assert np.max(abs(Einv @ mt.twisted_commutator(T, a) @ Einv - (D0 @ b - b @ D0))) < 1e-12


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_sigma_relations(seed):
    rng = np.random.default_rng(seed)
    T = mt.random_triple(2, rng)
    a, b = mt.random_even(2, rng), mt.random_even(2, rng)
    assert np.max(abs(T.sigma(a.conj().T) - T.sigma(a, -1).conj().T)) < 1e-12
    lhs = mt.twisted_commutator(T, a @ b)
    rhs = mt.twisted_commutator(T, a) @ b + T.sigma(a) @ mt.twisted_commutator(T, b)
    assert np.max(abs(lhs - rhs)) < 1e-12
    assert np.allclose(T.sigma_it(a, 0.5), T.sigma(a, -0.5))


@pytest.mark.parametrize("m,n", [(2, 2), (4, 2), (2, 4), (4, 4)])
def test_chern_is_cyclic_cocycle(m, n):
    rng = np.random.default_rng(10 * m + n)
    T = mt.random_triple(m, rng)
    psi = mt.chern_cochain(T, n)
    x = [mt.random_even(m, rng) for _ in range(n + 2)]
    assert abs(hochschild_b(psi)(*x)) < 1e-10
    assert abs(cyclic_lambda(psi)(*x[:-1]) - psi(*x[:-1])) < 1e-10


def test_chern_equals_untwisted_trace_of_conjugates():
    rng = np.random.default_rng(1)
    T = mt.random_triple(3, rng)
    E, Einv = mt._expm_herm(T.h, 1), mt._expm_herm(T.h, -1)
    D0 = Einv @ T.D @ Einv
    args = [mt.random_even(3, rng) for _ in range(3)]
    ref = untwisted_trace(D0, 2, [E @ a @ Einv for a in args])
    assert abs(mt.chern_phi(T, 2, args) - ref) < 1e-11


def test_half_characters_split():
    rng = np.random.default_rng(2)
    T = mt.random_triple(4, rng)
    args = [mt.random_even(4, rng) for _ in range(5)]
    p, q = mt.phi_pm(T, 4, args)
    assert abs(mt.chern_phi(T, 4, args) - (p - q)) < 1e-11


def test_unit_arguments_vanish():
    T = mt.example_triple()
    one = np.eye(T.dim)
    assert abs(mt.chern_phi(T, 2, [one, T.gamma @ T.gamma, one])) < 1e-13
    assert np.max(abs(mt.twisted_commutator(T, one))) < 1e-13


def test_degree_checks():
    T = mt.example_triple()
    with pytest.raises(DegreeMismatchError):
        mt.chern_phi(T, 3, [np.eye(8)] * 4)
    with pytest.raises(DegreeMismatchError):
        mt.chern_phi(T, 6, [np.eye(8)] * 7)
    with pytest.raises(DegreeMismatchError):
        mt.chern_phi(T, 2, [np.eye(8)] * 2)
    with pytest.raises(ValueError):
        mt.chern_cochain(T, 2, which="psi")


def test_index_rank_count_untwisted():
    # e = p with ranks (2, 1): f_+ = D_+^-1 p_- D_+ has rank 1, so Index+ = 1
    rng = np.random.default_rng(3)
    T = mt.untwisted_triple(mt.random_unitary(4, rng) * 1.5)
    r = mt.index_pair(T, mt.diagonal_projection(4, [0, 1], [2]))
    assert (r.index_plus, r.index_minus) == (1, -1)
    assert r.residual < 1e-12


@pytest.mark.parametrize("m", [2, 4, 8])
def test_index_pairing_twisted(m):
    rng = np.random.default_rng(m)
    T = mt.random_triple(m, rng)
    for plus, minus in (([0], []), ([0, 1], [0]), (list(range(m)), [1])):
        e = mt.IdempotentData.twisted(T, mt.diagonal_projection(m, plus, minus))
        assert e.sigma_adjoint_defect(T) < 1e-12
        for n in (0, 2, 4):
            r = mt.index_pair(T, e, n)
            assert r.index_plus == len(plus) - len(minus)
            assert r.index_plus == -r.index_minus and r.residual < 1e-9


def test_index_unit_is_zero():
    T = mt.example_triple()
    r = mt.index_pair(T, np.eye(T.dim))
    assert r.as_tuple()[:2] == (0, 0) and r.residual < 1e-12


def test_index_constant_along_modular_flow():
    rng = np.random.default_rng(4)
    T = mt.random_triple(4, rng)
    e = mt.IdempotentData.twisted(T, mt.diagonal_projection(4, [0, 1, 2], [3]))
    res = mt.homotopy_indices(T, e, 2)
    assert len(res) == 11 and {r.index_plus for r in res} == {2}


def test_phi_F_normalization_untwisted():
    rng = np.random.default_rng(5)
    T = mt.untwisted_triple(mt.random_unitary(3, rng) * 2)
    p = mt.diagonal_projection(3, [0, 1], [])
    for n in (0, 2, 4):
        idx = mt.index_pair(T, p, n).index_plus
        assert abs(mt.phi_F(T, n, [p] * (n + 1)) - 2 * (-1) ** (n // 2) * idx) < 1e-10


@pytest.mark.parametrize("t", [0.0, 0.25, 0.5, 0.75, 1.0])
def test_homotopy_is_cocycle(t):
    rng = np.random.default_rng(6)
    T = mt.random_triple(3, rng)
    psi = mt.chern_cochain(T, 2, "t", t)
    x = [mt.random_even(3, rng) for _ in range(4)]
    assert abs(hochschild_b(psi)(*x)) < 1e-10
    assert abs(cyclic_lambda(psi)(*x[:3]) - psi(*x[:3])) < 1e-10


def test_homotopy_endpoints():
    rng = np.random.default_rng(7)
    T = mt.random_triple(3, rng)
    for n in (2, 4):
        args = [mt.random_even(3, rng) for _ in range(n + 1)]
        assert abs(mt.homotopy_phi_t(T, 0.0, n, args) - mt.chern_phi(T, n, args)) < 1e-12
        end = mt.homotopy_phi_t(T, 1.0, n, args)
        assert abs(end - mt.phi_F_endpoint_sign(n) * mt.phi_F(T, n, args)) < 1e-10


def test_untwist_phase_identity():
    rng = np.random.default_rng(8)
    T = mt.random_triple(4, rng)
    rep = mt.untwist_phase(T, [mt.random_even(4, rng) for _ in range(3)])
    assert rep.max_residual < 1e-11
    assert np.allclose(rep.F @ rep.F, np.eye(8), atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(seeds, st.sampled_from([0, 2, 4]))
def test_pi_endpoints(seed, n):
    rng = np.random.default_rng(seed)
    T = mt.random_triple(3, rng)
    rep = mt.adjoint_chern_endpoints(T, [mt.random_even(3, rng) for _ in range(n + 1)])
    r0, r1 = rep.residuals
    assert r0 < 1e-10 and r1 < 1e-10
    assert rep.to_dict()["residual0"] == r0


def test_bimodule_and_potentials():
    rng = np.random.default_rng(9)
    T = mt.random_triple(2, rng)
    a, b, c = (mt.random_even(2, rng) for _ in range(3))
    omega = mt.gauge_potential(T, [(b, c)])
    # sigma(a) (b d c) = sigma(a) b d(c); it stays in the span of a' d(c')
    moved = mt.bimodule_action(T, a, omega, np.eye(4))
    assert np.allclose(moved, T.sigma(a) @ b @ mt.twisted_commutator(T, c))
    basis = [np.diag(v).astype(complex) for v in np.eye(4)]
    r0 = mt.potential_span_rank(T, basis)
    sa = [mt.bimodule_action(T, x, mt.gauge_potential(T, [(y, z)]), w)
          for x in basis for y in basis[:2] for z in basis[2:] for w in basis[:1]]
    assert mt.potential_span_rank(T, basis, sa) == r0


def test_save_load(tmp_path):
    T = mt.example_triple()
    T.save(tmp_path / "t")
    raw = np.fromfile(tmp_path / "t.bin", dtype="<f8")
    assert raw.size == 2 * T.dim * T.dim * 2
    assert raw[0] == T.D[0, 0].real
    U = mt.MatrixTwistedTriple.load(tmp_path / "t")
    assert np.array_equal(U.D, T.D) and np.array_equal(U.h, T.h)


def test_example_triple_frozen():
    T = mt.example_triple()
    assert T.dim == 8
    r = mt.index_pair(T, mt.IdempotentData.twisted(T, mt.diagonal_projection(4, [0], [])))
    assert (r.index_plus, r.index_minus) == (1, -1)
