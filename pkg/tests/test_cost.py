"""Running cost, truncation horizon and the discounted functional."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vaxgame import cost
from vaxgame.characteristics import ControlSignal
from vaxgame.errors import DomainError
from vaxgame.model import Identity, Linear, Scenario, TestGeneric, ZeroFlux
from vaxgame.transport import ScalarField, l1_norm
from vaxgame.verify import random_control, random_density, random_scenario, trial_rng

U0 = ControlSignal.constant(0.0, 1.0)


def decoupled(**kw):
    return Scenario.canonical(alpha=Linear(0.0), f=Identity(), g=ZeroFlux(), **kw)


# ---- running cost ----------------------------------------------------------

def test_running_cost_without_flux():
    assert cost.running_cost(decoupled(), 2.0, 1.0, 0.5) == pytest.approx(2.5, abs=1e-15)


def test_running_cost_unit_flux():
    g = TestGeneric(lambda x: np.ones_like(x), lambda x: np.zeros_like(x))
    assert cost.running_cost(Scenario.canonical(g=g), 0.0, 0.0, 0.0) == pytest.approx(-1.0, abs=1e-15)


def test_running_cost_canonical_cubic_integrates_to_zero():
    xi = np.linspace(0.0, 1.0, 4001)
    ref = -np.trapezoid(xi * (1 - xi) * (xi - 0.5), xi)
    val = cost.running_cost(Scenario.canonical(), 0.0, 0.0, 0.0)
    assert val == pytest.approx(ref, abs=1e-14)
    assert val == pytest.approx(0.0, abs=1e-14)


def test_running_cost_box():
    with pytest.raises(DomainError):
        cost.running_cost(Scenario.canonical(), 0.0, 1.2, 0.0)


# ---- horizon ---------------------------------------------------------------

UNIT_C = dict(kappa=0.25, m1=0.5, m2=0.5)


def test_horizon_unit_constant():
    sc = decoupled(**UNIT_C)
    S_o = ScalarField.constant(0.0, 11)
    assert cost.tail_constant(sc, S_o, 1.5) == pytest.approx(1.0, abs=1e-15)
    assert cost.horizon_for_tolerance(sc, S_o, 1.5, math.exp(-3.0)) == pytest.approx(3.0, abs=1e-12)


def test_halving_eps_adds_log2_over_theta():
    sc = Scenario.canonical(theta=0.7)
    S_o = ScalarField.constant(1.0, 51)
    a = cost.horizon_for_tolerance(sc, S_o, 0.2, 1e-4)
    b = cost.horizon_for_tolerance(sc, S_o, 0.2, 5e-5)
    assert b - a == pytest.approx(math.log(2.0) / 0.7, abs=1e-12)


def test_canonical_tail_matches_formula():
    sc = Scenario.canonical()
    S_o = ScalarField.constant(1.0, 201)
    res = cost.functional(sc, S_o, 0.2, U0, U0, eps=1e-4, dt=0.1, grid_n=51)
    C = sc.kappa * (1.0 + 0.2 + sc.m1) + sc.m2 + sc.gamma
    assert res.horizon == pytest.approx(math.log(C / (sc.theta * 1e-4)) / sc.theta, rel=1e-12)
    assert res.tail_bound == pytest.approx(C * math.exp(-sc.theta * res.horizon) / sc.theta, rel=1e-12)
    assert res.tail_bound <= 1e-4 * (1 + 1e-12)


@pytest.mark.parametrize("eps", [0.0, -1e-3])
def test_eps_must_be_positive(eps):
    with pytest.raises(DomainError):
        cost.horizon_for_tolerance(Scenario.canonical(), ScalarField.constant(1.0, 11), 0.1, eps)


# ---- functional ------------------------------------------------------------

def test_decoupled_closed_form():
    sc = decoupled(beta=0.5, theta=1.0)
    res = cost.functional(sc, ScalarField.constant(1.0, 51), 0.8, U0, U0, eps=1e-4, dt=0.01)
    exact = 0.8 / 1.5
    # trapezoid of a decaying exponential: relative error (h k)^2 / 12
    quad = exact * (0.01 * 1.5) ** 2 / 12
    assert abs(res.value - exact) <= quad + 1e-4


def test_u2_enters_linearly():
    sc = decoupled(m2=0.7)
    S_o = ScalarField.constant(1.0, 51)
    lo = cost.functional(sc, S_o, 0.3, U0, ControlSignal.constant(0.0, 0.7), dt=0.02)
    hi = cost.functional(sc, S_o, 0.3, U0, ControlSignal.constant(0.7, 0.7), dt=0.02)
    assert hi.horizon == lo.horizon
    drop = 0.7 * (1 - math.exp(-sc.theta * lo.horizon)) / sc.theta
    assert lo.value - hi.value == pytest.approx(drop, rel=1e-4)


def test_canonical_time_refinement():
    sc = Scenario.canonical()
    S_o = ScalarField.from_function(lambda x: 1.0 + 0.5 * np.cos(2 * np.pi * x), 201)
    a = cost.functional(sc, S_o, 0.2, U0, U0, dt=0.05)
    b = cost.functional(sc, S_o, 0.2, U0, U0, dt=0.025)
    assert abs(a.value - b.value) <= 1e-3


@given(seed=st.integers(0, 10**6))
@settings(max_examples=10, deadline=None)
def test_value_within_a_priori_bound(seed):
    rng = np.random.default_rng(seed)
    sc = random_scenario(rng)
    S_o = random_density(rng, 51)
    I_o = float(rng.uniform(0, 1))
    T = cost.horizon_for_tolerance(sc, S_o, I_o, 1e-3)
    u1, u2 = random_control(rng, sc.m1, T), random_control(rng, sc.m2, T)
    res = cost.functional(sc, S_o, I_o, u1, u2, eps=1e-3, dt=0.1, grid_n=51)
    C = cost.tail_constant(sc, S_o, I_o)
    assert abs(res.value) <= C / sc.theta + 1e-3


def test_monotone_in_kappa():
    rng = trial_rng(5, 0)
    S_o = random_density(rng, 51)
    u1 = random_control(rng, 1.0, 12.0)
    vals = [cost.functional(decoupled(kappa=k), S_o, 0.4, u1, U0, horizon=12.0, dt=0.05).value
            for k in (0.5, 1.0, 2.0)]
    assert vals[0] <= vals[1] <= vals[2]
    assert l1_norm(S_o) > 0
