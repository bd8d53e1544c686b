import math

import numpy as np
import pytest

from dmsoliton.averaging import DispersionProfile, density_from_profile, uniform_density
from dmsoliton.grid import Grid, SpectralField, norm
from dmsoliton.nonlinearity import Problem, hamiltonian, n_value
from dmsoliton.potentials import power, saturated_log, saturated_rational
from dmsoliton.solver import (
    SolverConfig,
    coercivity_bound,
    ekeland_normalized_map,
    energy_scan,
    initial_field,
    r_c_profile,
    solve,
    threshold_estimate,
)

PROFILE = density_from_profile(DispersionProfile(((1.0, 1.0), (-1.0, 1.0))))
MODEL_E = -0.4217936489381786


@pytest.fixture(scope="module")
def model_solution(model_problem):
    return solve(model_problem, SolverConfig())


def test_model_problem_converges(model_solution, model_problem):
    r = model_solution
    assert r.converged and not r.collapsed
    assert r.residual <= 1e-9
    assert r.energy == pytest.approx(MODEL_E, abs=1e-9)
    assert norm(r.field) ** 2 == pytest.approx(model_problem.lam, rel=1e-12)
    # Euler identity for the quartic power: omega lambda = -gamma N
    assert r.multiplier * model_problem.lam == pytest.approx(-4 * n_value(r.field, model_problem), rel=1e-9)


def test_trace_is_non_increasing(model_solution):
    e = [t[0] for t in model_solution.trace]
    assert all(b <= a + 1e-12 * abs(a) for a, b in zip(e, e[1:]))


def test_mass_scaling_of_power_energy(model_problem, model_solution):
    # for d_av = 0 and V = a^4/4, E_lambda = lambda^2 E_1
    r1 = solve(model_problem.with_lambda(1.0))
    assert model_solution.energy == pytest.approx(4 * r1.energy, rel=1e-8)


def test_ekeland_fixed_point_agrees(model_problem, model_solution):
    r = solve(model_problem, SolverConfig(method="ekeland_fixed_point"))
    assert r.converged
    assert r.energy == pytest.approx(model_solution.energy, abs=1e-9)
    # minimizer is a fixed point of the normalized map up to a phase
    v = ekeland_normalized_map(r.field, model_problem).samples
    s = r.field.samples
    phase = np.vdot(v, s) / abs(np.vdot(v, s))
    assert norm(SpectralField(model_problem.grid, v * phase - s)) < 1e-6


def test_method_preconditions(model_problem):
    with pytest.raises(ValueError):
        solve(model_problem, SolverConfig(method="spectral_renormalization"))
    with pytest.raises(ValueError):
        solve(model_problem.__class__(1.0, 1.0, power(4), PROFILE, Grid(256, 40.0)),
              SolverConfig(method="ekeland_fixed_point"))
    with pytest.raises(ValueError):
        SolverConfig(method="newton")
    with pytest.raises(ValueError):
        SolverConfig(init="zeros")


def test_spectral_renormalization_agrees_with_gradient():
    pr = Problem(1.0, 1.0, saturated_rational(1.0), uniform_density(0, 1), Grid(1024, 80.0))
    a = solve(pr, SolverConfig())
    b = solve(pr, SolverConfig(method="spectral_renormalization"))
    assert a.converged and b.converged
    assert a.energy == pytest.approx(b.energy, abs=1e-8)


def test_saturated_log_converges_to_negative_energy():
    pr = Problem(2.0, 0.0, saturated_log(1.0), uniform_density(0, 1), Grid(1024, 40.0))
    r = solve(pr)
    assert r.converged and r.energy < 0
    assert r.kappa_star_at_cap >= 2


def test_subcritical_mass_collapses_to_flat_state():
    pr = Problem(0.05, 1.0, power(8), PROFILE, Grid(1024, 200.0))
    r = solve(pr, SolverConfig(max_iter=3000))
    assert r.collapsed
    # the box's constant state has E = -lambda^4 / (8 L^3), which is tiny
    assert abs(r.energy) < 1e-10


def test_coercivity_bound_branches():
    grid = Grid(256, 40.0)
    assert coercivity_bound(Problem(1.0, 0.0, power(4), PROFILE, grid)) == math.inf
    assert math.isfinite(coercivity_bound(Problem(1.0, 1.0, power(4), PROFILE, grid)))
    assert coercivity_bound(Problem(1.0, 1.0, power(8), PROFILE, grid)) == math.inf
    assert math.isfinite(coercivity_bound(Problem(1.0, 1.0, saturated_log(1.0), PROFILE, grid)))


def test_initial_fields_are_normalized_and_seeded(model_problem):
    for init in ("gaussian", "random_bandlimited"):
        s = initial_field(model_problem, SolverConfig(init=init, seed=3))
        assert norm(SpectralField(model_problem.grid, s)) ** 2 == pytest.approx(2.0, rel=1e-12)
    a = initial_field(model_problem, SolverConfig(init="random_bandlimited", seed=3))
    b = initial_field(model_problem, SolverConfig(init="random_bandlimited", seed=3))
    c = initial_field(model_problem, SolverConfig(init="random_bandlimited", seed=4))
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_energy_scan_is_monotone(model_problem):
    table = energy_scan(model_problem, [0.5, 1.0, 1.5, 2.0])
    assert table.monotone and all(r.converged for r in table.rows)
    assert table.energy(2.0) == pytest.approx(MODEL_E, abs=1e-9)
    with pytest.raises(ValueError):
        energy_scan(model_problem, [1.0, 0.5])


def test_threshold_argument_errors():
    pr = Problem(1.0, 1.0, power(8), PROFILE, Grid(256, 40.0))
    with pytest.raises(ValueError):
        threshold_estimate(pr, (2.0, 1.0))
    with pytest.raises(ValueError):
        threshold_estimate(pr, (0.0, 1.0))


def test_threshold_zero_when_lower_end_is_already_negative(model_problem):
    assert threshold_estimate(model_problem, (0.5, 2.0)) == 0.0


def test_r_c_profile(model_problem, model_solution):
    unit = SpectralField(model_problem.grid, model_solution.field.samples / math.sqrt(2.0))
    prof = r_c_profile(unit, model_problem, [0.5, 1.0, 1.5, 2.0])
    assert prof.passed
    # quartic power: A(t) = t^2 N(f) exactly
    assert prof.rows[-1].value == pytest.approx(4 * prof.rows[1].value, rel=1e-12)
    with pytest.raises(ValueError):
        r_c_profile(model_solution.field, model_problem, [1.0])


def test_gaussian_energy_sign_depends_on_width():
    # a Gaussian of large enough mass is a witness of negative energy for gamma = 8
    pr = Problem(4.0, 1.0, power(8), PROFILE, Grid(1024, 60.0))
    assert hamiltonian(initial_field(pr, SolverConfig(sigma0=3.0)), pr) < 0
    # a narrow one is dominated by its kinetic energy
    assert hamiltonian(initial_field(pr, SolverConfig(sigma0=0.1)), pr) > 0
