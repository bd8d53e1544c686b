import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmsoliton.averaging import uniform_density
from dmsoliton.diagnostics import localized_field
from dmsoliton.grid import Grid, inner, norm
from dmsoliton.nonlinearity import (
    Problem,
    directional_derivative,
    h_gradient,
    hamiltonian,
    linf_cap,
    multiplier_estimate,
    n_gradient,
    n_value,
    sixth_power_integral,
    strichartz_functional,
    tangential_residual,
)
from dmsoliton.potentials import kappa_star, power, saturated_log, saturated_rational
from dmsoliton.propagator import gaussian_pulse

PSI = uniform_density(0, 1)


def problem(p=None, d_av=0.0, lam=1.0, n=512, length=40.0, nodes=32):
    return Problem(lam, d_av, p or power(4), PSI, Grid(n, length), nodes)


def test_problem_validation():
    with pytest.raises(ValueError):
        problem(lam=0.0)
    with pytest.raises(ValueError):
        problem(d_av=-1.0)


def test_zero_field():
    pr = problem()
    z = np.zeros(pr.grid.n)
    assert n_value(z, pr) == 0.0
    assert np.all(n_gradient(z, pr).samples == 0)
    with pytest.raises(ValueError):
        tangential_residual(z, pr)
    with pytest.raises(ValueError):
        multiplier_estimate(z, pr)


def test_sextic_gaussian_closed_form():
    # int |T_r g|^6 dx = A0^6 sigma0^(5/2) sqrt(pi/6) / (sigma0^2 + 16 r^2); the r-integral over [0, 1] is arctan(4)/4
    pr = problem(power(6), n=1024)
    f = gaussian_pulse(1.0, 1.0, pr.grid)
    exact = (1 / 6) * (2 / np.pi) ** 1.5 * np.sqrt(np.pi / 6) * np.arctan(4) / 4
    assert n_value(f, pr) == pytest.approx(exact, rel=1e-8)


@pytest.mark.parametrize("gamma", [4.0, 6.0])
def test_power_homogeneity(gamma, rng):
    pr = problem(power(gamma))
    f = localized_field(pr.grid, rng)
    assert n_value(1.7 * f.samples, pr) == pytest.approx(1.7**gamma * n_value(f, pr), rel=1e-12)


@pytest.mark.parametrize("pot", [power(4), saturated_log(1.0), saturated_rational(1.0)], ids=lambda p: p.kind)
def test_gradient_richardson_and_riesz(pot, rng):
    pr = problem(pot, lam=2.0)
    for _ in range(3):
        f = localized_field(pr.grid, rng, 2.0)
        h = localized_field(pr.grid, rng, 1.0)
        d1, d2 = [(n_value(f + t * h, pr) - n_value(f - t * h, pr)) / (2 * t) for t in (1e-3, 1e-4)]
        g = inner(n_gradient(f, pr), h)
        assert (d1 - g) / (d2 - g) == pytest.approx(100, rel=0.05)
        assert (100 * d2 - d1) / 99 == pytest.approx(g, rel=1e-8)
        assert abs(directional_derivative(f, h, pr) - g) <= 1e-12 * (1 + norm(h))


def test_directional_derivative_is_real_linear(rng):
    pr = problem(saturated_log(1.0))
    f, h, k = (localized_field(pr.grid, rng) for _ in range(3))
    dh, dk = directional_derivative(f, h, pr), directional_derivative(f, k, pr)
    assert directional_derivative(f, -2.5 * h.samples + 0.5 * k.samples, pr) == pytest.approx(-2.5 * dh + 0.5 * dk, rel=1e-12)
    ih = 1j * h.samples
    assert directional_derivative(f, ih, pr) == pytest.approx(inner(n_gradient(f, pr).samples, ih, pr.grid.dx), abs=1e-13)


@pytest.mark.parametrize("pot", [power(4), saturated_log(1.0), saturated_rational(1.0)], ids=lambda p: p.kind)
def test_integrated_a2(pot, rng):
    pr = problem(pot, lam=3.0)
    for _ in range(5):
        f = localized_field(pr.grid, rng, 3.0)
        nf = n_value(f, pr)
        df = inner(n_gradient(f, pr), f)
        assert df >= 2 * nf
        assert df >= kappa_star(pot, linf_cap(f, pr)) * nf * (1 - 1e-12)


def test_hamiltonian_zero_dispersion_is_minus_n(rng):
    pr = problem()
    f = localized_field(pr.grid, rng)
    assert hamiltonian(f, pr) == -n_value(f, pr) <= 0
    np.testing.assert_array_equal(h_gradient(f, pr).samples, -n_gradient(f, pr).samples)


def test_wide_gaussian_energy_tends_to_zero():
    energies = []
    # kinetic part decays like 1/sigma0 and N like sigma0^(-1/2), so |H| eventually decays too
    for s0 in (1e3, 1e4, 1e5):
        g = Grid(2048, 24 * np.sqrt(s0))
        pr = Problem(1.0, 1.0, power(4), PSI, g)
        energies.append(abs(hamiltonian(gaussian_pulse(s0, 1.0, g), pr)))
    assert energies[0] > energies[1] > energies[2]
    assert energies[2] < 1e-3


def test_gradient_of_even_field_is_even():
    pr = problem(saturated_rational(1.0), d_av=1.0)
    s = np.exp(-pr.grid.x**2) * (1 + 0.2 * np.cos(pr.grid.x))
    g = h_gradient(s, pr).samples
    flipped = np.roll(g[::-1], 1)  # x -> -x on the grid x_j = -L/2 + j dx
    np.testing.assert_allclose(g, flipped, atol=1e-12 * np.abs(g).max())


def test_tangential_residual_vanishes_for_parallel_gradient():
    pr = problem()
    f = gaussian_pulse(1.0, 1.0, pr.grid)
    g = h_gradient(f, pr)
    assert tangential_residual(g.samples, pr, grad=-3.0 * g.samples) == pytest.approx(0.0, abs=1e-15)


def test_euler_identity_for_power(rng):
    pr = problem(power(4), lam=2.0)
    f = localized_field(pr.grid, rng, 2.0)
    assert multiplier_estimate(f, pr) * 2.0 == pytest.approx(-4 * n_value(f, pr), rel=1e-12)


def test_invariances(rng):
    pr = problem(saturated_log(1.0), d_av=0.0)
    f = localized_field(pr.grid, rng).samples
    base = n_value(f, pr)
    assert n_value(np.roll(f, 11), pr) == pytest.approx(base, abs=1e-10)
    assert n_value(f * np.exp(0.4j), pr) == pytest.approx(base, abs=1e-10)
    boost = np.exp(1j * 2 * (2 * np.pi / pr.grid.length) * pr.grid.x)
    assert n_value(f * boost, pr) == pytest.approx(base, abs=1e-10)
    pr1 = problem(saturated_log(1.0), d_av=1.0)
    assert hamiltonian(np.roll(f, 5), pr1) == pytest.approx(hamiltonian(f, pr1), abs=1e-10)


def test_quadrature_refinement(rng):
    f = localized_field(Grid(512, 40.0), rng)
    a = n_value(f, problem(saturated_rational(1.0), nodes=16))
    b = n_value(f, problem(saturated_rational(1.0), nodes=32))
    assert abs(a - b) < 1e-10


def test_lipschitz_constant_is_finite(rng):
    pr = problem(saturated_log(1.0))
    ks = []
    for _ in range(10):
        f1 = localized_field(pr.grid, rng, rng.uniform(0.1, 4.0))
        f2 = localized_field(pr.grid, rng, rng.uniform(0.1, 4.0))
        ks.append(abs(n_value(f1, pr) - n_value(f2, pr)) / norm(f1 - f2))
    assert np.all(np.isfinite(ks))


def test_strichartz_weighted_q2_is_mass(rng):
    pr = problem()
    f = localized_field(pr.grid, rng, 1.7)
    assert strichartz_functional(f, 2, "weighted_psi", pr) == pytest.approx(np.sqrt(1.7), rel=1e-12)


def test_strichartz_gaussian_is_extremal():
    f = gaussian_pulse(1.0, 1.0, Grid(2048, 40.0))
    v = sixth_power_integral(f)
    assert abs(v.value - 12**-0.5) < 1e-6
    assert strichartz_functional(f, 6) == pytest.approx(v.value)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_strichartz_bound_random_fields(seed):
    f = localized_field(Grid(2048, 80.0), np.random.default_rng(seed), 1.0, 2.0)
    assert sixth_power_integral(f).value <= 12**-0.5 + 1e-9


def test_strichartz_argument_checks():
    f = gaussian_pulse(1.0, 1.0, Grid(256, 40.0))
    with pytest.raises(ValueError):
        strichartz_functional(f, 7)
    with pytest.raises(ValueError):
        strichartz_functional(f, 4, "lebesgue_line")
    with pytest.raises(ValueError):
        strichartz_functional(f, 4, "weighted_psi")
