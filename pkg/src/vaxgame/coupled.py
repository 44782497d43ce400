"""Windowed Picard iteration for the coupled S / I system.

On each window the map I -> S (transport with I frozen) followed by
S -> I (infection ODE with S frozen) is iterated from the constant guess
I = I(window start).  Window lengths respect the explicit contraction
condition

    Lip(alpha)^2 (|I_o| + |S_o|_1) |S_o|_1 T^2 exp(2 K T) <= 1,
    K = beta + Lip(alpha) |S_o|_1,

evaluated at every restart, and the windows are concatenated.

Transport always starts from the initial datum at t = 0, so S(t) follows the
representation formula directly.  The coupling mass int S(t) is taken through
the forward flow, which stays accurate where S piles up between grid nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .characteristics import ControlSignal, SampledPath
from .errors import ConfigurationError, DomainError, NonConvergenceError
from .infection import solve_ode
from .model import Scenario
from .transport import ScalarField, TransportPlan, integral, l1_norm, l2_norm

#: residuals below this are treated as round-off when measuring contraction
RESIDUAL_FLOOR = 1e-13


@dataclass
class Window:
    t_start: float
    t_end: float
    iterations: int
    final_residual: float
    residuals: list
    bound: float
    within_bound: bool

    def ratios(self, floor: float = RESIDUAL_FLOOR) -> list:
        """Successive residual ratios, skipping steps that start at round-off level."""
        r = self.residuals
        return [r[k + 1] / r[k] for k in range(len(r) - 1) if r[k] > floor]


@dataclass
class PicardReport:
    windows: list = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return sum(w.iterations for w in self.windows)


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    fields: list
    i_path: np.ndarray
    i_fine: SampledPath
    s_mass: np.ndarray | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.i_path = np.asarray(self.i_path, dtype=float)
        if not (len(self.times) == len(self.fields) == len(self.i_path)):
            raise DomainError("trajectory arrays must have equal length")
        self.l1 = np.array([l1_norm(S) for S in self.fields])
        self.l2 = np.array([l2_norm(S) for S in self.fields])
        self.total_mass = np.array([integral(S) for S in self.fields]) + self.i_path
        if self.s_mass is None:
            self.s_mass = np.array([integral(S) for S in self.fields])
        self.s_mass = np.asarray(self.s_mass, dtype=float)

    def field_array(self) -> np.ndarray:
        return np.vstack([S.values for S in self.fields])

    @property
    def final(self) -> tuple:
        return self.fields[-1], float(self.i_path[-1])


def contraction_window(scenario: Scenario, S_o, I_o: float) -> float:
    """Largest T satisfying the contraction condition; ``math.inf`` if unconstrained."""
    S_o = S_o if isinstance(S_o, ScalarField) else ScalarField(S_o)
    if I_o < 0 or np.any(S_o.values < 0):
        raise DomainError("contraction window needs nonnegative data")
    return _window_length(scenario, l1_norm(S_o), I_o)


def _window_length(scenario: Scenario, s1: float, I_o: float) -> float:
    lip = scenario.lip_alpha(s1 + I_o)
    a = lip**2 * (abs(I_o) + s1) * s1
    if lip * s1 == 0.0 or a == 0.0:
        return math.inf
    k = scenario.beta + lip * s1

    def excess(T):
        return a * T * T * math.exp(2.0 * k * T) - 1.0

    lo, hi = 0.0, 1.0
    while excess(hi) <= 0.0:
        lo, hi = hi, 2.0 * hi
    while hi - lo > 1e-10 * hi:
        mid = 0.5 * (lo + hi)
        if excess(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
    return lo


def time_grid(horizon: float, dt: float) -> np.ndarray:
    n = max(0, math.ceil(horizon / dt - 1e-9))
    t = np.minimum(dt * np.arange(n + 1), horizon)
    t[-1] = horizon
    return t


def solve(scenario: Scenario, S_o, I_o: float, u1: ControlSignal, u2: ControlSignal, horizon: float,
          dt: float, grid_n: int | None = None, substeps: int = 8, picard_tol: float = 1e-10,
          max_iters: int = 50, dt_out: float | None = None, window_cap: float = 0.5):
    """Solve the coupled system on [0, horizon]; returns ``(Trajectory, PicardReport)``.

    Output times are multiples of ``dt``; the infected path is integrated
    with step ``dt_out`` (default ``dt / 4``).
    """
    if scenario.g.test_only:
        raise ConfigurationError("test-only flux cannot be used for coupled solves")
    S_o = S_o if isinstance(S_o, ScalarField) else ScalarField(S_o)
    if grid_n is not None:
        S_o = S_o.resample(grid_n)
    if np.any(S_o.values < 0):
        raise DomainError("initial density S_o must be nonnegative")
    if I_o < 0:
        raise DomainError(f"I_o must be nonnegative, got {I_o}")
    if horizon < 0:
        raise DomainError(f"horizon must be nonnegative, got {horizon}")
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    if max_iters < 1:
        raise ConfigurationError("max_iters must be at least 1")
    dt_out = dt / 4.0 if dt_out is None else dt_out

    times = time_grid(horizon, dt)
    n_steps = times.size - 1
    report = PicardReport()
    plan = TransportPlan(scenario, S_o.n, u1, u2, times, 0.0, substeps)
    base = plan.geometric_values(S_o)
    base_mass = plan.geometric_mass(S_o)
    expo = np.zeros(times.size)
    i_vals = np.empty(times.size)
    i_vals[0] = I_o
    fine_t, fine_v = [0.0], [float(I_o)]

    k = 0
    while k < n_steps:
        t_start, I_cur = float(times[k]), float(i_vals[k])
        bound = _window_length(scenario, float(base_mass[k] * math.exp(-expo[k])), I_cur)
        m = math.floor(min(bound, window_cap) / dt + 1e-9)
        m = max(1, min(m, n_steps - k))
        win = times[k:k + m + 1]
        t_end = float(win[-1])

        I_prev = SampledPath.constant(I_cur, t_start, t_end)
        residuals = []
        for _ in range(max_iters):
            A = plan.alpha_exponent(I_prev, k, k + m, expo[k])
            mass = base_mass[k:k + m + 1] * np.exp(-A)
            I_new = solve_ode(scenario.beta, scenario.alpha, I_cur, SampledPath(win, mass), dt_out,
                              t_start, t_end)
            residuals.append(float(np.max(np.abs(I_new.values - I_prev(I_new.times)))))
            I_prev = I_new
            if residuals[-1] <= picard_tol:
                break
        window = Window(t_start, t_end, len(residuals), residuals[-1], residuals, bound,
                        (t_end - t_start) <= bound * (1.0 + 1e-12))
        report.windows.append(window)
        if residuals[-1] > picard_tol:
            raise NonConvergenceError(
                f"Picard iteration on [{t_start:g}, {t_end:g}] stalled at residual "
                f"{residuals[-1]:.3e} after {max_iters} iterations", report)

        expo[k:k + m + 1] = plan.alpha_exponent(I_prev, k, k + m, expo[k])
        i_vals[k + 1:k + m + 1] = I_prev(win[1:])
        fine_t.extend(I_prev.times[1:].tolist())
        fine_v.extend(I_prev.values[1:].tolist())
        k += m

    report.converged = True
    fields = [S_o] + [ScalarField(row) for row in (base * np.exp(-expo)[:, None])[1:]]
    traj = Trajectory(times, fields, i_vals, SampledPath(np.array(fine_t), np.array(fine_v)),
                      base_mass * np.exp(-expo))
    return traj, report
