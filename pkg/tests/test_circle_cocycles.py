import numpy as np
import pytest

from twisted_triples.circle_cocycles import (MonomialPair, cartan_residual, delta_tau,
                                             pair_from_dict, psi1_closed, psi1_closed_cochain,
                                             psi1_spectral, psi_gauge_m,
                                             random_localized_pair, tau, tau_cochain,
                                             psi1_identity_check)
from twisted_triples.circle_kernel import CircleDiffeo, PeriodicFunction
from twisted_triples.cochain_calculus import cyclic_lambda, hochschild_b
from twisted_triples.crossed_product import (CrossedProductAlgebra, CrossedProductElement,
                                             DiffeoGroup, GroupWord)
from twisted_triples.errors import LocalizationError

one = PeriodicFunction.constant(1.0)
SIN, COS = PeriodicFunction.sin(1), PeriodicFunction.cos(1)


def grid_psi1(eps, m=4096):
    """Closed form for f = cos, g = sin, phi = sine(eps) by plain grid quadrature."""
    x = np.arange(m) / m
    phi = x + eps / (2 * np.pi) * np.sin(2 * np.pi * x)
    dphi = 1 + eps * np.cos(2 * np.pi * x)
    ddphi = -2 * np.pi * eps * np.sin(2 * np.pi * x)
    f = np.cos(2 * np.pi * x)
    gphi = np.sin(2 * np.pi * phi)
    dgphi = 2 * np.pi * np.cos(2 * np.pi * phi) * dphi
    return -2j * np.mean(f * dgphi) - 1j * np.mean(f * gphi * ddphi / dphi)


def test_tau_sin_cos_identity(group):
    pair = MonomialPair.localized(group, SIN, GroupWord(), COS)
    assert tau(pair) == pytest.approx(-np.pi, abs=1e-13)


def test_trivial_values(group):
    pair = MonomialPair.localized(group, one, "s", one)
    assert abs(psi1_closed(pair)) < 1e-14 and abs(tau(pair)) < 1e-14
    assert abs(tau(MonomialPair.localized(group, SIN, "s", PeriodicFunction.constant(3.0)))) == 0


def test_identity_word_reduces_to_pairing(group):
    f = PeriodicFunction.from_triples([(0, 1, 0), (2, 0.3, -0.1), (-1, 0.2, 0.4)])
    g = PeriodicFunction.from_triples([(1, 0.5, 0), (-2, 0.1, 0.7)])
    pair = MonomialPair.localized(group, f, GroupWord(), g)
    assert psi1_closed(pair) == pytest.approx(-2j * f.product(g.derivative()).quadrature(),
                                              abs=1e-13)


@pytest.mark.parametrize("eps", [0.2, 0.3, 0.5])
def test_closed_form_matches_grid(eps):
    G = DiffeoGroup({"s": CircleDiffeo.sine(eps)})
    pair = MonomialPair.localized(G, COS, "s", SIN)
    assert abs(psi1_closed(pair) - grid_psi1(eps)) < 1e-11


def test_off_stratum(group):
    pair = MonomialPair(group, SIN, group.word("s"), COS, group.word("s"))
    assert not pair.is_localized and tau(pair) == 0
    with pytest.raises(LocalizationError):
        psi1_closed(pair)
    with pytest.raises(LocalizationError):
        psi1_identity_check(pair, None)
    assert psi1_closed_cochain(group)(*pair.elements()) == 0


def test_rotation_spectral_matches_quadrature(group):
    rng = np.random.default_rng(20)
    pair = random_localized_pair(group, "r", rng, 3)
    rot = group.realize(group.word("r"))
    ref = -2j * pair.f.product(pair.g.compose(rot).derivative()).quadrature()
    got = psi1_spectral(pair, 512)
    assert abs(got - ref) < 1e-3 * abs(ref)


def test_spectral_matches_closed_on_sine(group):
    rng = np.random.default_rng(21)
    for word in ("s", "s^-1"):
        pair = random_localized_pair(group, word, rng, 3)
        closed = psi1_closed(pair)
        assert abs(psi1_spectral(pair, 256) - closed) < 1e-3 * (1 + abs(closed))


def test_spectral_localization(group):
    pair = MonomialPair(group, PeriodicFunction.cos(2), group.word("s"), SIN, GroupWord())
    v = psi1_spectral(pair, 512)
    assert abs(v) < 1e-3 * pair.f.product(pair.g.derivative()).sup_norm()


def test_identity_closed_forms(group):
    rng = np.random.default_rng(23)
    for w in ("s", "s^-1", "r", "s r", "r s^-1 r"):
        rep = psi1_identity_check(random_localized_pair(group, w, rng, 3), None)
        assert rep.closed_residual < 1e-9 and rep.spectral_residual is None and rep.passed


def test_identity_with_spectral_side(group):
    rep = psi1_identity_check(random_localized_pair(group, "s", np.random.default_rng(24), 2), 256)
    assert rep.passed and rep.spectral_residual < 1e-3
    d = rep.to_dict()
    assert d["passed"] and len(d["psi1_closed"]) == 2


def test_delta_tau_is_second_term(group):
    pair = random_localized_pair(group, "s", np.random.default_rng(25), 3)
    assert abs(psi1_closed(pair) - (-2j * tau(pair) + delta_tau(pair))) < 1e-12


def test_cartan_identity(group):
    rng = np.random.default_rng(26)
    for w in ("s", "r s"):
        assert cartan_residual(random_localized_pair(group, w, rng, 3)) < 1e-8


def test_tau_is_cyclic_cocycle(group):
    rng = np.random.default_rng(27)
    t = tau_cochain(group)
    alg = CrossedProductAlgebra(group)
    pair = random_localized_pair(group, "s", rng, 3)
    a0, a1 = pair.elements()
    assert abs(cyclic_lambda(t)(a0, a1) - t(a0, a1)) < 1e-9
    x = [alg.random_element(rng) for _ in range(3)]
    assert abs(hochschild_b(t)(*x)) < 1e-8


def test_gauge_twist(group):
    rng = np.random.default_rng(28)
    rot = random_localized_pair(group, "r", rng, 2)
    assert psi_gauge_m(rot, 0, 256) == psi1_spectral(rot, 256)
    assert abs(psi_gauge_m(rot, 1, 256) - psi1_spectral(rot, 256)) < 1e-10
    pair = random_localized_pair(group, "s", rng, 2)
    phi = group.realize(pair.phi)
    psi = group.realize(pair.psi)
    sub = MonomialPair(group, pair.f * phi.derivative(), pair.phi,
                       pair.g * psi.derivative(), pair.psi)
    ref = psi1_closed(sub)
    assert abs(psi_gauge_m(pair, 1, 256) - ref) < 1e-3 * (1 + abs(ref))
    assert abs(psi_gauge_m(pair, 1, closed=True) - ref) < 1e-10


def test_pair_from_dict_round_trip():
    data = {"f": [[1, 0.0, -0.5], [-1, 0.0, 0.5]], "g": [[0, 2.0, 0.0]],
            "phi": {"type": "sine", "epsilon": 0.3}}
    pair = pair_from_dict(data)
    assert pair.is_localized and pair.f.allclose(SIN)
    G = DiffeoGroup({"s": CircleDiffeo.sine(0.3)})
    again = pair_from_dict(MonomialPair.localized(G, COS, "s", SIN).to_dict(), G)
    assert again.phi == G.word("s") and again.psi == G.word("s^-1")


def test_psi1_closed_is_hochschild_cocycle(group):
    # the odd local formula is used without a phase operator; b Psi_1 decides it
    rng = np.random.default_rng(29)
    P = psi1_closed_cochain(group)
    alg = CrossedProductAlgebra(group)
    for _ in range(3):
        x = [alg.random_element(rng, 3) for _ in range(3)]
        assert abs(hochschild_b(P)(*x)) < 1e-10 * max(1.0, abs(P(*x[:2])))
