"""Running cost and the discounted infinite-horizon cost functional."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import coupled
from .characteristics import ControlSignal, merge_nodes
from .errors import DomainError
from .model import Scenario
from .transport import ScalarField, l1_norm

FLUX_QUAD_NODES = 201


def flux_integral(g, u1: float, u2: float, n: int = FLUX_QUAD_NODES) -> float:
    xi = np.linspace(0.0, 1.0, n)
    return float(np.trapezoid(g.value(xi, u1, u2), dx=1.0 / (n - 1)))


def running_cost(scenario: Scenario, I: float, u1: float, u2: float) -> float:
    """kappa (I + u1) - u2 - int_0^1 g(xi, u1, u2) dxi."""
    scenario.check_controls(u1, u2)
    return scenario.kappa * (I + u1) - u2 - flux_integral(scenario.g, u1, u2)


def tail_constant(scenario: Scenario, S_o, I_o: float) -> float:
    """C with |F| <= C / theta, hence a tail beyond T bounded by C exp(-theta T) / theta."""
    S_o = S_o if isinstance(S_o, ScalarField) else ScalarField(S_o)
    return (scenario.kappa * (l1_norm(S_o) + I_o + scenario.m1) + scenario.m2 + scenario.gamma)


def horizon_for_tolerance(scenario: Scenario, S_o, I_o: float, eps: float) -> float:
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    c = tail_constant(scenario, S_o, I_o)
    return max(0.0, math.log(c / (scenario.theta * eps)) / scenario.theta)


def tail_bound(scenario: Scenario, S_o, I_o: float, horizon: float) -> float:
    return math.exp(-scenario.theta * horizon) * tail_constant(scenario, S_o, I_o) / scenario.theta


def discounted_cost(scenario: Scenario, traj: coupled.Trajectory, u1: ControlSignal, u2: ControlSignal,
                    t_offset: float = 0.0) -> float:
    """Trapezoid of exp(-theta t) l(I, u1, u2) over the trajectory's output times.

    Steps are additionally cut at control switches, and on every piece the
    cost uses that piece's (constant) controls.  ``t_offset`` shifts the
    discount clock: the integrand is exp(-theta (t - t_offset)).
    """
    t_end = float(traj.times[-1])
    nodes = merge_nodes(np.concatenate([traj.times, u1.breakpoints(0.0, t_end), u2.breakpoints(0.0, t_end)]))
    I_nodes = traj.i_fine(nodes)
    disc = np.exp(-scenario.theta * (nodes - t_offset))
    cache = {}
    total = 0.0
    for j in range(nodes.size - 1):
        mid = 0.5 * (nodes[j] + nodes[j + 1])
        c1, c2 = u1(mid), u2(mid)
        key = (c1, c2)
        if key not in cache:
            scenario.check_controls(c1, c2)
            cache[key] = scenario.kappa * c1 - c2 - flux_integral(scenario.g, c1, c2)
        base = cache[key]
        la = scenario.kappa * I_nodes[j] + base
        lb = scenario.kappa * I_nodes[j + 1] + base
        total += 0.5 * (nodes[j + 1] - nodes[j]) * (disc[j] * la + disc[j + 1] * lb)
    return float(total)


@dataclass
class CostResult:
    value: float
    tail_bound: float
    horizon: float
    trajectory: coupled.Trajectory


def functional(scenario: Scenario, S_o, I_o: float, u1: ControlSignal, u2: ControlSignal,
               eps: float = 1e-4, horizon: float | None = None, dt: float = 0.05,
               grid_n: int | None = None, substeps: int = 8, picard_tol: float = 1e-10,
               max_iters: int = 50) -> CostResult:
    """Discounted cost truncated at the horizon where the certified tail drops to ``eps``.

    Passing ``horizon`` overrides the truncation time; ``tail_bound`` is then
    the certified bound for that horizon.
    """
    S_o = S_o if isinstance(S_o, ScalarField) else ScalarField(S_o)
    T = horizon_for_tolerance(scenario, S_o, I_o, eps) if horizon is None else float(horizon)
    traj, _ = coupled.solve(scenario, S_o, I_o, u1, u2, T, dt, grid_n=grid_n, substeps=substeps,
                            picard_tol=picard_tol, max_iters=max_iters)
    value = discounted_cost(scenario, traj, u1, u2) if T > 0 else 0.0
    return CostResult(value, tail_bound(scenario, S_o, I_o, T), T, traj)
