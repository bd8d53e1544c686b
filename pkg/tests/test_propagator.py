import numpy as np
import pytest

from dmsoliton.grid import Grid, SpectralField, norm
from dmsoliton.propagator import (
    GaussianPulse,
    dispersive_decay_check,
    evolve,
    evolve_many,
    evolved_gaussian_abs,
    gaussian_pulse,
    oracle_error,
)


@pytest.mark.parametrize("sigma0", [1.0, 2.0])
@pytest.mark.parametrize("r", [-1.0, -0.5, -0.1, 0.1, 0.5, 1.0])
def test_gaussian_oracle(sigma0, r):
    assert oracle_error(sigma0, 1.0, r, Grid(2048, 40.0)) <= 1e-10


def test_zero_time_is_identity(rng):
    g = Grid(128, 20.0)
    f = SpectralField(g, rng.normal(size=128) + 1j * rng.normal(size=128))
    np.testing.assert_allclose(evolve(f, 0.0).samples, f.samples, atol=1e-14)


def test_group_property_and_unitarity(rng):
    g = Grid(256, 30.0)
    f = SpectralField(g, np.exp(-g.x**2) * (1 + 0.3 * rng.normal() * np.sin(g.x)))
    a = evolve(evolve(f, 0.3), -0.7)
    b = evolve(f, -0.4)
    np.testing.assert_allclose(a.samples, b.samples, atol=1e-13)
    assert norm(evolve(f, 2.5)) == pytest.approx(norm(f), rel=1e-13)


def test_evolve_many_matches_single():
    g = Grid(128, 20.0)
    f = gaussian_pulse(1.0, 1.0, g)
    rs = np.array([-0.3, 0.0, 0.8])
    many = evolve_many(f.samples, g, rs)
    for k, r in enumerate(rs):
        np.testing.assert_allclose(many[k], evolve(f, r).samples, atol=1e-14)


def test_gaussian_magnitude_formula():
    p = GaussianPulse(2.0, 3.0)
    x = np.linspace(-3, 3, 7)
    np.testing.assert_allclose(np.abs(p.evolved(0.7, x)), evolved_gaussian_abs(2.0, 3.0, 0.7, x), rtol=1e-14)
    with pytest.raises(ValueError):
        GaussianPulse(-1.0, 1.0)


def test_gaussian_pulse_mass():
    g = Grid(1024, 40.0)
    assert norm(gaussian_pulse(1.5, 2.0, g), "l2sq") == pytest.approx(2.0, rel=1e-13)


def test_dispersive_decay_ratio_bounded_for_gaussian():
    # ratio tends to (4 pi)^(-1/2) from below for a positive Gaussian
    g = Grid(8192, 800.0)
    f = gaussian_pulse(1.0, 1.0, g)
    rep = dispersive_decay_check(f, [0.5, 1, 2, 4, 8, 16, 32])
    assert rep.bounded
    assert rep.saturating_tail
    assert np.all(rep.ratio <= (4 * np.pi) ** -0.5 + 1e-9)
    assert rep.ratio[-1] == pytest.approx((4 * np.pi) ** -0.5, rel=2e-3)


def test_dispersive_decay_notes_small_r():
    g = Grid(256, 40.0)
    rep = dispersive_decay_check(gaussian_pulse(1.0, 1.0, g), [1e-3, 1.0])
    assert rep.notes
    with pytest.raises(ValueError):
        dispersive_decay_check(gaussian_pulse(1.0, 1.0, g), [0.0])
