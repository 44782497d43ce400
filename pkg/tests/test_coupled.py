"""Windowed Picard solver for the coupled system."""

import math

import numpy as np
import pytest

from vaxgame import coupled
from vaxgame.characteristics import ControlSignal
from vaxgame.errors import ConfigurationError, DomainError, NonConvergenceError
from vaxgame.model import Identity, Linear, Scenario, TestGeneric, ZeroFlux
from vaxgame.transport import ScalarField, integral, l1_norm
from vaxgame.verify import check_growth, random_control, random_density, random_scenario, trial_rng

U0 = ControlSignal.constant(0.0, 1.0)
DECOUPLED = Scenario.canonical(alpha=Linear(0.0), f=Identity(), g=ZeroFlux())


def bisect(fn, lo, hi, tol=1e-14):
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if fn(mid) <= 0 else (lo, mid)
    return lo


# ---- contraction window ----------------------------------------------------

def test_window_unbounded_without_infection():
    assert coupled.contraction_window(DECOUPLED, ScalarField.constant(1.0, 11), 0.5) == math.inf


def test_window_reference_root():
    sc = Scenario.canonical(beta=1.0, alpha=Linear(1.0))
    T = coupled.contraction_window(sc, ScalarField.constant(1.0, 11), 0.0)
    ref = bisect(lambda x: x * math.exp(2 * x) - 1.0, 0.0, 1.0)
    assert T == pytest.approx(ref, rel=1e-9)
    assert T == pytest.approx(0.4263, abs=1e-4)


def test_window_shrinks_with_mass():
    sc = Scenario.canonical()
    a = coupled.contraction_window(sc, ScalarField.constant(1.0, 11), 0.2)
    b = coupled.contraction_window(sc, ScalarField.constant(2.0, 11), 0.2)
    assert b < a


def test_window_rejects_negative_data():
    with pytest.raises(DomainError):
        coupled.contraction_window(Scenario.canonical(), ScalarField.constant(1.0, 11), -0.1)


# ---- solve -----------------------------------------------------------------

def test_decoupled_closed_form_and_two_iterations():
    S_o = ScalarField.from_function(lambda x: 1.0 + 0.5 * np.sin(3 * x), 101)
    traj, rep = coupled.solve(DECOUPLED, S_o, 0.7, U0, U0, 1.0, 0.01)
    xi = S_o.xi
    for t, S in zip(traj.times[::10], traj.fields[::10]):
        np.testing.assert_allclose(S.values, S_o.values * np.exp(-xi * t), rtol=0, atol=1e-12)
    np.testing.assert_allclose(traj.i_path, 0.7 * np.exp(-0.5 * traj.times), rtol=0, atol=1e-9)
    assert rep.converged
    assert all(w.iterations == 2 for w in rep.windows)


def test_zero_data_gives_zero_trajectory():
    traj, _ = coupled.solve(Scenario.canonical(), ScalarField.constant(0.0, 51), 0.0, U0, U0, 1.0, 0.05)
    assert np.all(traj.field_array() == 0.0)
    assert np.all(traj.i_path == 0.0)


def test_trajectory_invariants():
    S_o = ScalarField.constant(1.0, 51)
    traj, _ = coupled.solve(Scenario.canonical(), S_o, 0.2, U0, U0, 1.0, 0.1)
    assert traj.times[0] == 0.0
    assert traj.fields[0] is S_o and traj.i_path[0] == 0.2
    assert len(traj.times) == len(traj.fields) == len(traj.i_path) == 11
    np.testing.assert_allclose(traj.total_mass, [np.trapezoid(S.values, dx=S.h) for S in traj.fields]
                               + traj.i_path)


def test_canonical_matches_refined_solve():
    sc = Scenario.canonical()
    on = ControlSignal.constant(1.0, 2.0)
    S_o = ScalarField.from_function(lambda x: 1.0 + 0.5 * np.cos(2 * np.pi * x), 201)
    coarse, _ = coupled.solve(sc, S_o, 0.2, on, on, 2.0, 0.02)
    fine, _ = coupled.solve(sc, S_o.resample(801), 0.2, on, on, 2.0, 0.01, substeps=16)
    assert np.max(np.abs(coarse.i_path - fine.i_path[::2])) <= 1e-3
    dS = max(l1_norm(a - b.resample(201)) for a, b in zip(coarse.fields, fine.fields[::2]))
    assert dS <= 1e-3


def test_coupling_mass_matches_fields_when_resolved():
    sc = Scenario.canonical()
    S_o = ScalarField.from_function(lambda x: 1.0 + 0.5 * np.cos(2 * np.pi * x), 401)
    traj, _ = coupled.solve(sc, S_o, 0.2, U0, U0, 1.0, 0.05)
    nodal = np.array([integral(S) for S in traj.fields])
    np.testing.assert_allclose(traj.s_mass, nodal, rtol=1e-4)


def test_residuals_contract_within_bound():
    rng = trial_rng(31, 0)
    sc = random_scenario(rng)
    _, rep = coupled.solve(sc, random_density(rng), 0.5, U0, U0, 2.0, 0.02)
    for w in rep.windows:
        assert w.within_bound
        r = w.residuals
        below = [k for k in range(len(r)) if r[k] < 1.0]
        for a, b in zip(below, below[1:]):
            if r[a] > coupled.RESIDUAL_FLOOR:
                assert r[b] < r[a]
        assert max(w.ratios(), default=0.0) <= 0.55


def test_nonconvergence_carries_report():
    sc = Scenario.canonical()
    with pytest.raises(NonConvergenceError) as info:
        coupled.solve(sc, ScalarField.constant(1.0, 51), 0.3, U0, U0, 1.0, 0.1, max_iters=2)
    assert info.value.report is not None
    assert info.value.report.windows[-1].iterations == 2


def test_test_only_flux_refused():
    sc = Scenario.canonical(g=TestGeneric.polynomial([0.0, -1.0]))
    with pytest.raises(ConfigurationError):
        coupled.solve(sc, ScalarField.constant(1.0, 11), 0.1, U0, U0, 1.0, 0.1)


@pytest.mark.parametrize("kw", [dict(I_o=-0.1), dict(horizon=-1.0), dict(dt=0.0)])
def test_solve_domain(kw):
    args = dict(I_o=0.1, horizon=1.0, dt=0.1)
    args.update(kw)
    with pytest.raises(DomainError):
        coupled.solve(Scenario.canonical(), ScalarField.constant(1.0, 11), args["I_o"], U0, U0,
                      args["horizon"], args["dt"])


def test_deterministic():
    rng = trial_rng(41, 0)
    sc = random_scenario(rng)
    S_o = random_density(rng)
    u1, u2 = random_control(rng, 1.0, 1.0), random_control(rng, 1.0, 1.0)
    a, _ = coupled.solve(sc, S_o, 0.3, u1, u2, 1.0, 0.02)
    b, _ = coupled.solve(sc, S_o, 0.3, u1, u2, 1.0, 0.02)
    np.testing.assert_array_equal(a.field_array(), b.field_array())
    np.testing.assert_array_equal(a.i_path, b.i_path)


def test_canonical_growth_bounds():
    S_o = ScalarField.from_function(lambda x: 1.0 + 0.5 * np.cos(2 * np.pi * x), 201)
    traj, _ = coupled.solve(Scenario.canonical(), S_o, 0.2, U0, ControlSignal.constant(1.0, 1.0), 2.0, 0.02)
    rep = check_growth(traj, Scenario.canonical())
    assert rep.ok, rep.summary()


def test_long_horizon_mass_stays_bounded():
    # attracting boundary with f(0) = 0: nodal values pile up, the coupling mass must not
    for trial in range(3):
        rng = trial_rng(2028, trial)
        sc = random_scenario(rng)
        S_o, I_o = random_density(rng), float(rng.uniform(0.0, 1.0))
        traj, _ = coupled.solve(sc, S_o, I_o, U0, U0, 20.0, 0.1, grid_n=51)
        assert np.all(np.diff(traj.s_mass) <= 1e-12)
        assert traj.s_mass[0] == pytest.approx(integral(S_o), rel=1e-14)
        assert np.max(traj.i_path) <= (I_o + integral(S_o)) * (1 + 1e-6)
