import math

import numpy as np
import pytest

from nlch import initial, solver
from nlch.errors import DomainError, IntegrationFailure, InvalidArgument
from nlch.kernels import newtonian2d
from nlch.multishape import assemble_operator
from nlch.potentials import Potential, logarithmic, regularized
from nlch.spectral import square_grid

N = 10


@pytest.fixture(scope="module")
def setup():
    g = square_grid(N)
    K = assemble_operator(g, newtonian2d(), 1e-2, 2).matrix
    return g, K


@pytest.mark.parametrize("form", solver.FORMULATIONS)
def test_reduced_jacobian_matches_finite_differences(setup, form):
    g, K = setup
    sys_ = solver.CHSystem(-20 * K, logarithmic(), g, 1.5, form)
    rho = 0.5 * initial.wave(g.points)
    c = np.random.default_rng(0).normal(size=g.M)
    J = sys_.reduced_jacobian(rho, 30.0)
    h = 1e-7
    for j in (0, 17, 55):
        e = np.zeros(g.M)
        e[j] = h
        fd = (sys_.reduced_residual(rho + e, 30.0, c) - sys_.reduced_residual(rho - e, 30.0, c)) / (2 * h)
        np.testing.assert_allclose(J[:, j], fd, rtol=1e-6, atol=1e-8 * np.max(np.abs(fd)))


def test_conservative_operator_annihilates_mass(setup):
    g, _ = setup
    sys_ = solver.CHSystem(np.zeros((g.M, g.M)), logarithmic(), g)
    col = g.weights @ sys_.A
    assert np.max(np.abs(col)) < 1e-10 * np.max(np.abs(sys_.A))


def test_full_residual_vanishes_on_exact_data(setup):
    g, K = setup
    pot = logarithmic()
    rho = 0.3 * initial.wave(g.points)
    mu = solver.CHSystem(K, pot, g).mu(rho)
    for form in solver.FORMULATIONS:
        sys_ = solver.CHSystem(K, pot, g, formulation=form)
        rd = sys_.A @ mu
        r = solver.residual((rho, mu), rd, K, pot, g, formulation=form)
        assert np.max(np.abs(r[g.M:])) < 1e-14
        assert np.max(np.abs(r[:g.M] * sys_.E)) < 1e-9


def test_full_jacobian_blocks(setup):
    g, K = setup
    rho = 0.2 * initial.wave(g.points)
    J = solver.full_jacobian((rho, rho), 4.0, K, logarithmic(), g)
    assert J.shape == (2 * g.M, 2 * g.M)
    np.testing.assert_allclose(np.diag(J[g.M:, :g.M]), -2 / (1 - rho**2) + np.diag(K))


def test_consistent_init_preconditions(setup):
    g, K = setup
    with pytest.raises(DomainError):
        solver.consistent_init(np.full(g.M, 1.2), K, logarithmic(), g)
    with pytest.raises(InvalidArgument):
        solver.consistent_init(np.full(g.M, 0.1)[:-1], K, logarithmic(), g)


def test_constraint_init_satisfies_neumann(setup):
    g, K = setup
    s = solver.consistent_init(initial.wave(g.points), -10 * K, logarithmic(), g,
                               formulation="constraint")
    assert np.max(np.abs(g.normal_derivative_rows() @ s.mu)) <= 1e-9


def test_pure_phase_values_are_pulled_inside(setup):
    g, K = setup
    rho0 = np.where(g.points[:, 0] > 0.5, 1.0, -0.5)
    s = solver.consistent_init(rho0, K, logarithmic(), g)
    assert s.sup_norm < 1.0


def test_tstops_and_outputs(setup):
    g, K = setup
    cfg = solver.SolverConfig(t_end=0.02)
    traj, _ = solver.integrate(initial.wave(g.points), -5 * K, logarithmic(), g, cfg,
                               t_out=[0.0, 0.00731, 0.02], tstops=[0.0123])
    t = traj.times
    assert 0.0123 in t and t[-1] == 0.02
    assert [o.t for o in traj.outputs] == [0.0, 0.00731, 0.02]
    with pytest.raises(InvalidArgument):
        solver.integrate(initial.wave(g.points), K, logarithmic(), g, cfg, t_out=[0.5])


def test_dense_output_accuracy(setup):
    g, K = setup
    rho0 = initial.wave(g.points)
    a, _ = solver.integrate(rho0, -5 * K, logarithmic(), g, solver.SolverConfig(t_end=0.01),
                            t_out=[0.004])
    b, _ = solver.integrate(rho0, -5 * K, logarithmic(), g, solver.SolverConfig(t_end=0.004))
    assert np.max(np.abs(a.outputs[0].rho - b.final.rho)) < 1e-5


def test_step_limit_raises_with_state(setup):
    g, K = setup
    with pytest.raises(IntegrationFailure) as exc:
        solver.integrate(initial.wave(g.points), K, logarithmic(), g,
                         solver.SolverConfig(t_end=1.0, max_steps=5))
    assert exc.value.last_state is not None


def test_mass_and_energy_for_compact_datum(setup):
    g, K = setup
    traj, diag = solver.integrate(initial.compact(g.points, n_t=24), 200 * K, logarithmic(), g,
                                  solver.SolverConfig(t_end=0.05))
    m = np.array([s.mass for s in traj.steps])
    E = np.array([s.energy for s in traj.steps])
    assert np.ptp(m) < 1e-12
    assert np.max(np.diff(E)) < 1e-9
    assert diag.energy.shape == m.shape


def test_constraint_formulation_drifts_in_mass(setup):
    # the boundary-row formulation is kept for reference; it does not conserve mass
    g, K = setup
    traj, _ = solver.integrate(initial.compact(g.points, n_t=24), 200 * K, logarithmic(), g,
                               solver.SolverConfig(t_end=0.05, formulation="constraint"))
    m = np.array([s.mass for s in traj.steps])
    assert np.ptp(m) > 1e-8


def test_series_diagnostics_power_law():
    t = np.linspace(0, 10, 400)
    l2 = np.concatenate([[1.0], (t[1:] + 0.0) ** -3.0])
    l2[-1] = 0.0
    w = np.ones(4) / 4
    d = solver.series_diagnostics(t, 0.5 + 0 * t, l2, -t, np.full(4, 0.7), w, 0.0)
    assert d.delta == 0.5 and d.mu_inf == pytest.approx(0.7) and d.mu_flatness < 1e-15
    assert d.decay_exponent == pytest.approx(-3.0, rel=1e-9) and d.decay_r2 > 0.999999
    assert d.stationary


def test_regularized_shift_small_when_never_near_pure_phase(setup):
    g, K = setup
    r = solver.regularized_shift_check(0.3 * initial.wave(g.points), 5 * K, logarithmic(),
                                       regularized(0.5), 1e-3, 0.05, g)
    assert r["discrepancy"] < 1e-10
    with pytest.raises(InvalidArgument):
        solver.regularized_shift_check(np.zeros(g.M), K, logarithmic(), regularized(0.1), 0.0, 1.0, g)


def test_config_validation():
    with pytest.raises(InvalidArgument):
        solver.SolverConfig(formulation="weak")
    with pytest.raises(InvalidArgument):
        solver.SolverConfig(abs_tol=0.0)
    with pytest.raises(InvalidArgument):
        solver.SolverConfig(mobility=-1.0)
