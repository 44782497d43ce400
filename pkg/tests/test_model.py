"""Scenario, coefficient families and hypothesis validation."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vaxgame.errors import DomainError
from vaxgame.model import (AffineTriple, Holling, Identity, Linear, Power, RegularizedVax, Scenario, Smoothstep,
                           TestGeneric, TestVaccination, ZeroFlux, eval_alpha, eval_dg, eval_g,
                           smoothstep5, smoothstep5_deriv, validate_scenario)

CANON_G = RegularizedVax(lam=0.5, a1=(0.1, 0.666), a2=(0.45, 0.85), delta=0.02)
FLUXES = [ZeroFlux(), CANON_G, RegularizedVax(lam=0.3, delta=0.2),
          AffineTriple((0.0, 1.0, -1.0), (0.0, 0.5, -0.5), (0.0, -0.3, 0.3))]

controls = st.floats(0.0, 1.0)


# ---- alpha ---------------------------------------------------------------

def test_linear_alpha_vanishes_at_zero():
    assert eval_alpha(Linear(0.5), 0.0) == 0.0


@pytest.mark.parametrize("q, I, expected", [(1.0, 1.0, 0.5), (2.0, 2.0, 0.4)])
def test_holling_closed_form(q, I, expected):
    assert eval_alpha(Holling(1.0, 1.0, q, 1.0), I) == pytest.approx(expected, abs=1e-15)


def test_negative_infected_rejected():
    with pytest.raises(DomainError):
        eval_alpha(Linear(1.0), -1e-3)


def test_holling_lipschitz_matches_dense_derivative():
    a = Holling(1.0, 2.0, 2.0, 1.0)
    I = np.linspace(0.0, 3.0, 200001)
    dense = np.max(np.abs(np.gradient(a(I), I)))
    lip = a.lipschitz(3.0)
    assert dense <= lip <= 1.06 * dense


def test_holling_sublinear_is_reported():
    sc = Scenario.canonical(alpha=Holling(1.0, 0.5, 1.0, 1.0))
    rep = validate_scenario(sc)
    assert not rep.ok
    assert [c.name for c in rep.failed()] == ["alpha Lipschitz"]


# ---- f ---------------------------------------------------------------------

@pytest.mark.parametrize("f", [Identity(), Power(1.0), Power(2.5), Smoothstep(3), Smoothstep(5)])
def test_vaccination_rate_hypotheses(f):
    xi = np.linspace(0.0, 1.0, 1001)
    v = f(xi)
    assert v[0] == 0.0 and v[-1] == pytest.approx(1.0, abs=1e-15)
    assert np.all(np.diff(v) >= -1e-15)
    dense = np.max(np.abs(np.gradient(v, xi)))
    assert dense <= f.lipschitz() * (1 + 1e-3)


def test_smoothstep_order_restricted():
    with pytest.raises(DomainError):
        Smoothstep(4)


def test_test_vaccination_is_quarantined():
    assert TestVaccination(lambda x: x).test_only


# ---- g ---------------------------------------------------------------------

@given(u1=controls, u2=controls, lam=st.floats(0.05, 0.95), delta=st.floats(0.005, 0.3))
def test_regularized_flux_zero_at_ends(u1, u2, lam, delta):
    g = RegularizedVax(lam=lam, delta=delta)
    assert eval_g(g, 0.0, u1, u2) == 0.0
    assert eval_g(g, 1.0, u1, u2) == 0.0


def test_regularized_flux_zero_at_half_without_controls():
    assert eval_g(CANON_G, 0.5, 0.0, 0.0) == 0.0


def test_affine_triple_example():
    g = AffineTriple((0.0, 1.0, -1.0), (0.0,), (0.0,))
    assert eval_g(g, 0.5, 0.3, 0.7) == pytest.approx(0.25, abs=1e-15)
    assert eval_dg(g, 0.5, 0.3, 0.7) == pytest.approx(0.0, abs=1e-15)


def test_zero_flux_derivative():
    assert eval_dg(ZeroFlux(), 0.37, 0.2, 0.9) == 0.0


def test_dg_at_origin_matches_finite_difference():
    h = 1e-6
    # the cubic xi (1 - xi)(xi - 1/2) extends smoothly past 0
    fd = (CANON_G.value(np.array(h), 0.0, 0.0) - CANON_G.value(np.array(-h), 0.0, 0.0)) / (2 * h)
    assert eval_dg(CANON_G, 0.0, 0.0, 0.0) == -0.5
    assert float(fd) == pytest.approx(-0.5, abs=1e-9)


@pytest.mark.parametrize("g", FLUXES)
@pytest.mark.parametrize("u1, u2", [(0.0, 0.0), (1.0, 0.0), (0.3, 0.8), (1.0, 1.0)])
def test_dg_matches_central_differences(g, u1, u2):
    xi = np.linspace(0.0, 1.0, 101)
    # narrow ramps have a third derivative of order 1/delta^3, which would
    # dominate the O(h^2) truncation error of the difference quotient itself
    h = 1e-6 if getattr(g, "delta", 1.0) < 0.05 else 1e-5
    fd = (g.value(xi + h, u1, u2) - g.value(xi - h, u1, u2)) / (2 * h)
    np.testing.assert_allclose(g.dxi(xi, u1, u2), fd, rtol=0, atol=1e-7)


@pytest.mark.parametrize("g", FLUXES)
def test_flux_boundary_zero_on_lattice(g):
    for u in np.linspace(0, 1, 5):
        for v in np.linspace(0, 1, 5):
            assert abs(g.value(np.array([0.0, 1.0]), u, v)).max() == 0.0


@pytest.mark.parametrize("g", FLUXES)
@given(xi=st.floats(0.0, 1.0), u=controls, u_=controls, v=controls)
@settings(max_examples=50)
def test_flux_affine_in_controls(g, xi, u, u_, v):
    x = np.array(xi)
    mid = g.value(x, 0.5 * (u + u_), v)
    avg = 0.5 * (g.value(x, u, v) + g.value(x, u_, v))
    assert abs(mid - avg) <= 1e-12
    mid = g.value(x, v, 0.5 * (u + u_))
    avg = 0.5 * (g.value(x, v, u) + g.value(x, v, u_))
    assert abs(mid - avg) <= 1e-12


def test_flux_box_violation():
    with pytest.raises(DomainError):
        eval_g(CANON_G, 0.5, 1.5, 0.0)
    with pytest.raises(DomainError):
        eval_dg(CANON_G, 1.2, 0.0, 0.0)


def test_smoothstep_ramp_is_c2():
    t = np.linspace(-0.2, 1.2, 1401)
    s, ds = smoothstep5(t), smoothstep5_deriv(t)
    assert s[0] == 0.0 and s[-1] == 1.0
    np.testing.assert_allclose(np.gradient(s, t), ds, atol=2e-3)
    assert smoothstep5_deriv(0.0) == 0.0 and smoothstep5_deriv(1.0) == 0.0


# ---- scenario and validation ----------------------------------------------

def test_canonical_scenario_validates():
    rep = validate_scenario(Scenario.canonical())
    assert rep.ok, str(rep)


@pytest.mark.parametrize("g", FLUXES[1:])
def test_gamma_bounds_dense_sampling(g):
    sc = Scenario.canonical(g=g)
    rep = validate_scenario(sc)
    xi = np.linspace(0.0, 1.0, 20001)
    dense = max(np.max(np.abs(g.dxi(xi, u, v))) for u in (0.0, 1.0) for v in (0.0, 1.0))
    assert dense <= rep.gamma


def test_boundary_violation_reported():
    g = TestGeneric(lambda x: np.ones_like(x), lambda x: np.zeros_like(x))
    rep = validate_scenario(Scenario.canonical(g=g))
    bad = [c for c in rep.failed() if c.name.startswith("g = 0")]
    assert bad and bad[0].point[0] == 0.0


@pytest.mark.parametrize("field", ["beta", "kappa", "theta"])
def test_scenario_requires_positive_rates(field):
    with pytest.raises(DomainError):
        Scenario.canonical(**{field: 0.0})


def test_scenario_flux_bounds_must_agree():
    with pytest.raises(DomainError):
        Scenario.canonical(m1=2.0, g=CANON_G)


def test_validation_grid_guard():
    with pytest.raises(DomainError):
        validate_scenario(Scenario.canonical(), grid_n=8)


def test_report_renders():
    text = str(validate_scenario(Scenario.canonical()))
    assert "all hypotheses hold" in text
    assert math.isfinite(Scenario.canonical().gamma)
