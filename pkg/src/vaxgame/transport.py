"""Controlled transport equation for the susceptible density S.

Given the infected path I, the solution is the representation formula

    S(t, xi) = S_o(X(t0; t, xi)) * exp(-int [f(X) + alpha(I) + d_xi g(X)] ds)

evaluated node by node.  The characteristics do not depend on I and the
alpha(I) term does not depend on xi, so :class:`TransportPlan` computes the
geometry once and re-evaluates fields cheaply for every new I path (which is
what the Picard loop of the coupled solver needs).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .characteristics import ControlSignal, SampledPath, backward_sweep, forward_exponent
from .errors import DomainError
from .model import Scenario


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Samples of a function on the uniform grid xi_i = i / (n - 1)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size < 3:
            raise DomainError(f"a field needs at least 3 nodes, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DomainError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, fn, n: int = 201) -> "ScalarField":
        return cls(np.broadcast_to(fn(np.linspace(0.0, 1.0, n)), (n,)))

    @classmethod
    def constant(cls, value: float, n: int = 201) -> "ScalarField":
        return cls(np.full(n, float(value)))

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def xi(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n)

    @property
    def h(self) -> float:
        return 1.0 / (self.n - 1)

    def at(self, x):
        """Piecewise-linear reconstruction."""
        return np.interp(x, self.xi, self.values)

    def resample(self, n: int) -> "ScalarField":
        if n == self.n:
            return self
        return ScalarField(self.at(np.linspace(0.0, 1.0, n)))

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(self.values - other.values)


def integral(S: ScalarField) -> float:
    return float(np.trapezoid(S.values, dx=S.h))


def l1_norm(S: ScalarField) -> float:
    return float(np.trapezoid(np.abs(S.values), dx=S.h))


def l2_norm(S: ScalarField) -> float:
    return float(np.sqrt(np.trapezoid(S.values**2, dx=S.h)))


def _as_field(S_o) -> ScalarField:
    return S_o if isinstance(S_o, ScalarField) else ScalarField(S_o)


class TransportPlan:
    """Characteristic geometry for one initial time, grid and control pair."""

    def __init__(self, scenario: Scenario, n: int, u1: ControlSignal, u2: ControlSignal,
                 out_times, t0: float = 0.0, substeps_per_dt: int = 8):
        self.scenario = scenario
        self.n = int(n)
        self.t0 = float(t0)
        self.grid = np.linspace(0.0, 1.0, self.n)
        self.sweep = backward_sweep(scenario.g, scenario.f, u1, u2, self.grid, out_times,
                                    self.t0, substeps_per_dt)
        self._u1, self._u2, self._substeps = u1, u2, substeps_per_dt
        self._forward = None

    @property
    def out_times(self) -> np.ndarray:
        return self.sweep.out_times

    def alpha_exponent(self, I_path: SampledPath, lo: int = 0, hi: int | None = None,
                       offset: float = 0.0) -> np.ndarray:
        """int_{t0}^{t_k} alpha(I(s)) ds for every output time (trapezoid on the ladder).

        With ``lo``/``hi`` only output times ``lo..hi`` are covered; ``I_path`` then
        needs to span just those times and ``offset`` supplies the integral up to
        ``out_times[lo]``.
        """
        sw = self.sweep
        hi = sw.out_times.size - 1 if hi is None else hi
        I_path.require(float(sw.out_times[lo]) if lo else self.t0, float(sw.out_times[hi]), "I path")
        i0 = int(sw.ladder_index[lo]) if lo else 0
        ladder = sw.ladder[i0:int(sw.ladder_index[hi]) + 1]
        a = self.scenario.alpha(np.maximum(I_path(ladder), 0.0))
        cum = np.concatenate(([0.0], np.cumsum(0.5 * np.diff(ladder) * (a[1:] + a[:-1]))))
        return offset + cum[sw.ladder_index[lo:hi + 1] - i0]

    def geometric_values(self, S_o: ScalarField) -> np.ndarray:
        """S_o(foot) exp(-int (f + d_xi g)): the fields before the alpha factor."""
        S_o = self._check(S_o)
        sw = self.sweep
        return np.interp(sw.foot, self.grid, S_o.values) * np.exp(-sw.geometric)

    def geometric_mass(self, S_o: ScalarField) -> np.ndarray:
        """Mass of :meth:`geometric_values` at every output time, via the forward flow.

        The mass equals int S_o(y) exp(-int f(X(s; t0, y)) ds) dy, which needs no
        Jacobian and stays consistent when S concentrates between nodes.
        """
        S_o = self._check(S_o)
        if self._forward is None:
            self._forward = forward_exponent(self.scenario.g, self.scenario.f, self._u1, self._u2,
                                             self.grid, self.out_times, self.t0, self._substeps)
        return np.trapezoid(S_o.values * np.exp(-self._forward), dx=S_o.h, axis=1)

    def _check(self, S_o) -> ScalarField:
        S_o = _as_field(S_o)
        if S_o.n != self.n:
            raise DomainError(f"initial field has {S_o.n} nodes, plan expects {self.n}")
        if np.any(S_o.values < 0.0):
            raise DomainError("initial density must be nonnegative")
        return S_o

    def field_values(self, S_o: ScalarField, I_path: SampledPath) -> np.ndarray:
        """Array of shape (len(out_times), n) with S at every output time."""
        S_o = self._check(S_o)
        sw = self.sweep
        base = np.interp(sw.foot, self.grid, S_o.values)
        expo = sw.geometric + self.alpha_exponent(I_path)[:, None]
        return base * np.exp(-expo)

    def fields(self, S_o: ScalarField, I_path: SampledPath) -> list:
        return [ScalarField(row) for row in self.field_values(S_o, I_path)]


def solve_pde(scenario: Scenario, S_o, I_path: SampledPath, u1: ControlSignal, u2: ControlSignal,
              out_times, substeps_per_dt: int = 8, t0: float = 0.0) -> list:
    """S at each of ``out_times`` for a known infected path.

    ``S_o`` is the density at ``t0`` (a :class:`ScalarField` or array); it must be
    nonnegative and ``I_path`` must cover ``[t0, max(out_times)]``.
    """
    S_o = _as_field(S_o)
    if np.any(S_o.values < 0.0):
        raise DomainError("initial density must be nonnegative")
    out_times = np.atleast_1d(np.asarray(out_times, dtype=float))
    I_path.require(t0, float(out_times[-1]), "I path")
    plan = TransportPlan(scenario, S_o.n, u1, u2, out_times, t0, substeps_per_dt)
    return plan.fields(S_o, I_path)
