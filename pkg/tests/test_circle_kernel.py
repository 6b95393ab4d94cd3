import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twisted_triples.circle_kernel import (CircleDiffeo, PeriodicFunction, composition_defect,
                                           grid_size, invert, uniform_grid)
from twisted_triples.errors import AliasingError, NonMonotoneError

from conftest import rand_fn

coeff = st.floats(-2, 2, allow_nan=False)


def test_evaluation_basics():
    assert PeriodicFunction.constant(1.0)(0.77) == pytest.approx(1.0)
    assert PeriodicFunction.cos(1)(0.0) == pytest.approx(1.0)
    assert PeriodicFunction.sin(1)(0.3) == pytest.approx(np.sin(2 * np.pi * 0.3), abs=1e-12)


def test_grid_and_samples():
    m = grid_size(5)
    assert m >= 11
    x = uniform_grid(8)
    assert x[0] == 0 and x[-1] == pytest.approx(7 / 8)
    f = PeriodicFunction.cos(2, 3.0)
    assert np.allclose(f.samples(16), 3 * np.cos(4 * np.pi * uniform_grid(16)))


def test_quadrature_values():
    assert PeriodicFunction.constant(1.0).quadrature() == pytest.approx(1.0)
    assert abs(PeriodicFunction.sin(1).quadrature()) < 1e-15
    for eps in (0.1, 0.3, 0.6):
        # a degree-one lift winds once
        assert CircleDiffeo.sine(eps).derivative().quadrature() == pytest.approx(1.0, abs=1e-14)


def test_compose_identity_and_character():
    rng = np.random.default_rng(0)
    f = rand_fn(rng, 5)
    assert np.max(abs(f.compose(CircleDiffeo.identity()).padded(5) - f.padded(5))) < 1e-13
    e1 = PeriodicFunction.mode(1)
    got = e1.compose(CircleDiffeo.rotation(0.25))
    assert got.coeff(1) == pytest.approx(np.exp(2j * np.pi / 4), abs=1e-13)
    assert abs(got.coeff(0)) < 1e-13


def test_compose_matches_dense_grid():
    phi = CircleDiffeo.sine(0.3)
    got = PeriodicFunction.cos(1).compose(phi)
    # oracle: FFT of cos(2 pi phi(x)) on a fine grid, independent of the library
    m = 4096
    x = np.arange(m) / m
    y = np.cos(2 * np.pi * (x + 0.3 / (2 * np.pi) * np.sin(2 * np.pi * x)))
    c = np.fft.fft(y) / m
    for k in range(-12, 13):
        assert abs(got.coeff(k) - c[k % m]) < 1e-10


def test_compose_beyond_band_raises():
    f = PeriodicFunction.cos(1)
    with pytest.raises(AliasingError):
        f.compose(CircleDiffeo.sine(0.9), band=2)


def test_from_callable_detects_and_trims():
    f = PeriodicFunction.from_callable(lambda x: np.cos(2 * np.pi * 3 * x))
    assert f.band == 3
    with pytest.raises(AliasingError):
        PeriodicFunction.from_callable(lambda x: np.abs(np.sin(np.pi * x)), max_band=64)


def test_derivative_of_mode():
    f = PeriodicFunction.mode(3, 2.0)
    assert f.derivative().coeff(3) == pytest.approx(2.0 * 2j * np.pi * 3)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(coeff, coeff), min_size=3, max_size=3),
       st.lists(st.tuples(coeff, coeff), min_size=3, max_size=3))
def test_product_is_pointwise(a, b):
    f = PeriodicFunction([complex(*p) for p in a])
    g = PeriodicFunction([complex(*p) for p in b])
    x = np.linspace(0, 1, 17)
    assert np.allclose(f.product(g)(x), f(x) * g(x), atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.floats(-0.8, 0.8), st.floats(0, 1))
def test_sine_diffeo_inverse(eps, x):
    phi = CircleDiffeo.sine(eps)
    psi = invert(phi)
    assert abs(psi(phi(x)) - x) < 1e-10


def test_inverse_examples():
    assert CircleDiffeo.rotation(0.2).invert()(0.5) == pytest.approx(0.3)
    assert composition_defect(CircleDiffeo.sine(0.3), invert(CircleDiffeo.sine(0.3))) < 1e-12
    assert CircleDiffeo.identity().invert().is_identity_exact


def test_non_monotone_rejected():
    with pytest.raises(NonMonotoneError):
        CircleDiffeo.sine(1.5)


def test_fixed_points_of_sine():
    fps = CircleDiffeo.sine(0.3).fixed_points()
    xs = sorted(round(p.x, 10) % 1.0 for p in fps)
    assert xs == pytest.approx([0.0, 0.5], abs=1e-9)
    assert all(p.nondegenerate for p in fps)
    assert CircleDiffeo.rotation(0.1).fixed_points() == []


def test_derivative_power_and_logs():
    phi = CircleDiffeo.sine(0.4)
    x = np.linspace(0, 1, 11)
    d = 1 + 0.4 * np.cos(2 * np.pi * x)
    assert np.allclose(phi.derivative_power(0.5)(x), np.sqrt(d), atol=1e-12)
    assert np.allclose(phi.log_derivative()(x), np.log(d), atol=1e-12)
    dd = -0.4 * 2 * np.pi * np.sin(2 * np.pi * x) / d
    assert np.allclose(phi.dlog_derivative()(x), dd, atol=1e-10)


def test_literals_round_trip():
    for lit in ({"type": "sine", "epsilon": 0.25}, {"type": "rotation", "alpha": 0.1},
                {"type": "identity"}):
        phi = CircleDiffeo.from_literal(lit)
        again = CircleDiffeo.from_literal(phi.to_literal())
        assert abs(phi(0.37) - again(0.37)) < 1e-14
    with pytest.raises(ValueError):
        CircleDiffeo.from_literal({"type": "mystery"})
