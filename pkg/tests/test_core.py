import numpy as np
import pytest

from relkin.core import (
    METRIC,
    OnShellMomentum,
    SpaceTimeGrid,
    central_difference,
    fourvector,
    lorentz_boost,
    minkowski_dot,
    onshell_energy,
    stream_rng,
)


def test_minkowski_dot_components():
    a = fourvector(2.0, 1.0, 1.0, 1.0)
    b = fourvector(3.0, 1.0, 0.0, 2.0)
    assert minkowski_dot(a, b) == 3.0


def test_minkowski_dot_broadcasts():
    rng = stream_rng(7, 0)
    a = rng.normal(size=(5, 4))
    b = rng.normal(size=(5, 4))
    expect = np.einsum("ni,ij,nj->n", a, METRIC, b)
    assert np.allclose(minkowski_dot(a, b), expect, rtol=0, atol=1e-14)


def test_boost_of_rest_momentum():
    p = fourvector(1.0, 0.0, 0.0, 0.0)
    out = lorentz_boost([0.6, 0.0, 0.0], p)
    assert np.allclose(out, [1.25, 0.75, 0.0, 0.0], rtol=0, atol=1e-15)


def _random_subluminal(rng, speed_max=0.9):
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    return rng.uniform(0.0, speed_max) * direction


def test_boost_preserves_products():
    rng = stream_rng(11, 0)
    for _ in range(50):
        v = _random_subluminal(rng)
        a = rng.normal(size=4)
        b = rng.normal(size=4)
        d0 = minkowski_dot(a, b)
        d1 = minkowski_dot(lorentz_boost(v, a), lorentz_boost(v, b))
        assert abs(d1 - d0) <= 1e-12 * max(1.0, abs(d0))


def test_boost_round_trip():
    rng = stream_rng(13, 0)
    for _ in range(50):
        v = _random_subluminal(rng)
        a = rng.normal(size=4)
        back = lorentz_boost(-v, lorentz_boost(v, a))
        assert np.max(np.abs(back - a)) <= 1e-12


def test_boost_rejects_superluminal():
    with pytest.raises(ValueError):
        lorentz_boost([1.0, 0.0, 0.0], fourvector(1.0))
    with pytest.raises(ValueError):
        lorentz_boost([0.8, 0.8, 0.0], fourvector(1.0))


def test_onshell_energy_values():
    assert onshell_energy([3.0, 0.0, 0.0], 4.0) == 5.0
    assert onshell_energy([1.0, 1.0, 1.0], 1.0) == 2.0
    with pytest.raises(ValueError):
        onshell_energy([1.0, 0.0, 0.0], 0.0)


def test_onshell_momentum_type():
    p = OnShellMomentum(np.array([3.0, 0.0, 0.0]), 4.0)
    assert p.energy == 5.0
    assert np.allclose(p.four, [5.0, 3.0, 0.0, 0.0])
    assert minkowski_dot(p.four, p.four) == pytest.approx(16.0, abs=1e-12)
    with pytest.raises(ValueError):
        OnShellMomentum(np.array([0.0, 0.0, 0.0]), -1.0)


def test_boosted_momentum_stays_on_shell():
    rng = stream_rng(17, 0)
    for _ in range(30):
        p = OnShellMomentum(rng.normal(size=3), 1.0)
        v = _random_subluminal(rng)
        q = lorentz_boost(v, p.four)
        assert abs(minkowski_dot(q, q) - 1.0) <= 1e-12


def test_grid_validation():
    with pytest.raises(ValueError):
        SpaceTimeGrid(2, (1.0, 1.0), (8, 8))
    with pytest.raises(ValueError):
        SpaceTimeGrid(1, (1.0,), (12,))
    with pytest.raises(ValueError):
        SpaceTimeGrid(1, (-1.0,), (8,))
    g = SpaceTimeGrid(1, (2.0,), (8,), dt=0.1)
    assert g.spacing == (0.25,)
    assert g.volume == 2.0


def test_fft_round_trip():
    g = SpaceTimeGrid(1, (7.0,), (64,))
    rng = stream_rng(19, 0)
    f = rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape)
    back = g.ifft(g.fft(f))
    assert np.max(np.abs(back - f)) <= 1e-12 * np.max(np.abs(f))

    g3 = SpaceTimeGrid(3, (2.0, 3.0, 4.0), (8, 8, 16))
    f3 = rng.normal(size=g3.shape)
    back3 = g3.ifft(g3.fft(f3))
    assert np.max(np.abs(back3 - f3)) <= 1e-12 * np.max(np.abs(f3))


def test_spectral_derivative_is_exact_on_modes():
    g = SpaceTimeGrid(1, (5.0,), (32,))
    x = g.axis(0)
    k = g.wavenumbers(0)[3]
    f = np.exp(1j * k * x)
    df = g.spectral_derivative(f, 0)
    assert np.max(np.abs(df - 1j * k * f)) <= 1e-12 * abs(k)
    d2f = g.spectral_derivative(f, 0, order=2)
    assert np.max(np.abs(d2f + k * k * f)) <= 1e-12 * k * k
    lap = g.laplacian(f)
    assert np.max(np.abs(lap - d2f)) <= 1e-13 * k * k


def test_central_difference_order():
    errs = []
    for n in (64, 128):
        g = SpaceTimeGrid(1, (2.0 * np.pi,), (n,))
        x = g.axis(0)
        f = np.sin(x)
        df = central_difference(f, 0, g.spacing[0], order=1)
        errs.append(np.max(np.abs(df - np.cos(x))))
    order = np.log2(errs[0] / errs[1])
    assert order > 1.9


def test_stream_rng_reproducible_and_decorrelated():
    a1 = stream_rng(42, 0).normal(size=100)
    a2 = stream_rng(42, 0).normal(size=100)
    assert np.array_equal(a1, a2)

    n = 100_000
    u = stream_rng(42, 1).standard_normal(n)
    v = stream_rng(42, 2).standard_normal(n)
    corr = np.corrcoef(u, v)[0, 1]
    assert abs(corr) < 4.0 / np.sqrt(n)

    sub = stream_rng(42, 1, 1).standard_normal(n)
    corr_sub = np.corrcoef(u, sub)[0, 1]
    assert abs(corr_sub) < 4.0 / np.sqrt(n)
