"""Discrete zero-sum game: lattice values by backward induction, a brute-force
strategy oracle, best responses by compass search, and Isaacs Hamiltonians.

Player 1 (controls u1) minimises the cost functional, player 2 (u2)
maximises it.  In the lower game player 1 reacts to player 2's current
move, so each stage is resolved as max over u2 of min over u1; the upper
game swaps the order.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import coupled
from .characteristics import ControlSignal
from .cost import discounted_cost, functional, horizon_for_tolerance, running_cost, tail_constant
from .errors import ConfigurationError, DomainError
from .model import Scenario
from .transport import ScalarField, integral

LOWER, UPPER = "lower", "upper"


def worker_count() -> int:
    """Worker cap from ``VAXGAME_THREADS`` (0 or unset means one per CPU)."""
    raw = os.environ.get("VAXGAME_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ConfigurationError(f"VAXGAME_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ConfigurationError("VAXGAME_THREADS must be >= 0")
    return n if n > 0 else (os.cpu_count() or 1)


@dataclass(frozen=True)
class ControlLattice:
    """The samples {0, M/(L-1), ..., M}; a single level means {0}."""

    bound: float
    levels: int

    def __post_init__(self):
        if self.levels < 1:
            raise ConfigurationError(f"lattice needs at least one level, got {self.levels}")
        if not self.bound > 0:
            raise ConfigurationError(f"lattice bound must be positive, got {self.bound}")

    @property
    def samples(self) -> np.ndarray:
        if self.levels == 1:
            return np.zeros(1)
        return np.linspace(0.0, self.bound, self.levels)


@dataclass(frozen=True)
class GameConfig:
    n_steps: int
    dt: float
    lat1: ControlLattice
    lat2: ControlLattice
    grid_n: int = 51
    substeps: int = 8
    inner_steps: int = 4
    terminal_rule: str = "zero"
    eps_tail: float = 1e-4
    budget: int = 10**6

    def __post_init__(self):
        if self.n_steps < 1:
            raise ConfigurationError(f"n_steps must be at least 1, got {self.n_steps}")
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if self.terminal_rule != "zero":
            raise ConfigurationError(f"unknown terminal rule {self.terminal_rule!r}")
        if self.leaves > self.budget:
            raise ConfigurationError(
                f"game tree has {self.leaves} leaves, over the budget of {self.budget} "
                f"(lat1={self.lat1.levels}, lat2={self.lat2.levels}, steps={self.n_steps})")

    @property
    def leaves(self) -> int:
        return (self.lat1.levels * self.lat2.levels) ** self.n_steps


@dataclass
class GameResult:
    side: str
    value: float
    first_step: tuple
    truncation_bound: float
    nodes_expanded: int


@dataclass(frozen=True, eq=False)
class Costate:
    p: ScalarField
    q: float


# ---------------------------------------------------------------------------
# one stage of the game
# ---------------------------------------------------------------------------


def one_step(scenario: Scenario, S: ScalarField, I: float, u: float, v: float, cfg: GameConfig):
    """Stage cost int_0^dt exp(-theta s) l ds and the state after dt, controls frozen."""
    h = cfg.dt / cfg.inner_steps
    c1 = ControlSignal.constant(u, scenario.m1, h)
    c2 = ControlSignal.constant(v, scenario.m2, h)
    traj, _ = coupled.solve(scenario, S, I, c1, c2, cfg.dt, h, substeps=cfg.substeps)
    return discounted_cost(scenario, traj, c1, c2), traj.fields[-1], float(traj.i_path[-1])


def _resolve(Q: np.ndarray, side: str):
    """Stage matrix Q[v, u] -> (value, iu, iv); first index wins ties (smallest control)."""
    if side == LOWER:
        inner = Q.min(axis=1)
        iv = int(np.argmax(inner))
        iu = int(np.argmin(Q[iv]))
        return float(inner[iv]), iu, iv
    inner = Q.max(axis=0)
    iu = int(np.argmin(inner))
    iv = int(np.argmax(Q[:, iu]))
    return float(inner[iu]), iu, iv


def _initial_state(scenario, S_o, I_o, cfg):
    S_o = S_o if isinstance(S_o, ScalarField) else ScalarField(S_o)
    return S_o.resample(cfg.grid_n), float(I_o)


def _tree_value(scenario, S, I, k, cfg, side, pool=None):
    """(value, first-stage control pair, stage solves performed) of the subtree at depth k."""
    if k == cfg.n_steps:
        return 0.0, None, 0
    us, vs = cfg.lat1.samples, cfg.lat2.samples
    disc = math.exp(-scenario.theta * cfg.dt)

    def entry(pair):
        iv, iu = pair
        cost, S2, I2 = one_step(scenario, S, I, float(us[iu]), float(vs[iv]), cfg)
        child, _, nodes = _tree_value(scenario, S2, I2, k + 1, cfg, side)
        return cost + disc * child, nodes + 1

    pairs = [(iv, iu) for iv in range(vs.size) for iu in range(us.size)]
    results = list(pool.map(entry, pairs)) if pool is not None else [entry(p) for p in pairs]
    Q = np.array([r[0] for r in results]).reshape(vs.size, us.size)
    value, iu, iv = _resolve(Q, side)
    return value, (float(us[iu]), float(vs[iv])), sum(r[1] for r in results)


def _game_value(scenario, S_o, I_o, cfg, side) -> GameResult:
    S, I = _initial_state(scenario, S_o, I_o, cfg)
    workers = worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            value, first, nodes = _tree_value(scenario, S, I, 0, cfg, side, pool)
    else:
        value, first, nodes = _tree_value(scenario, S, I, 0, cfg, side)
    trunc = math.exp(-scenario.theta * cfg.n_steps * cfg.dt) * tail_constant(scenario, S, I) / scenario.theta
    return GameResult(side, value, first, trunc, nodes)


def lower_value(scenario: Scenario, S_o, I_o: float, cfg: GameConfig) -> GameResult:
    """Backward induction with stages resolved as max over u2 of min over u1."""
    return _game_value(scenario, S_o, I_o, cfg, LOWER)


def upper_value(scenario: Scenario, S_o, I_o: float, cfg: GameConfig) -> GameResult:
    """Backward induction with stages resolved as min over u1 of max over u2."""
    return _game_value(scenario, S_o, I_o, cfg, UPPER)


# ---------------------------------------------------------------------------
# brute-force oracle over non-anticipating strategies
# ---------------------------------------------------------------------------

ORACLE_MAX_STEPS = 2
ORACLE_MAX_LEVELS = 3


def path_costs(scenario: Scenario, S_o, I_o: float, cfg: GameConfig) -> np.ndarray:
    """Discounted cost of every open-loop pair, indexed ``[u-sequence, v-sequence]``.

    Sequences are numbered in row-major order of their lattice indices.
    """
    S, I = _initial_state(scenario, S_o, I_o, cfg)
    us, vs = cfg.lat1.samples, cfg.lat2.samples
    N = cfg.n_steps
    disc = math.exp(-scenario.theta * cfg.dt)
    stage = {}

    def walk(prefix_u, prefix_v, S, I):
        if len(prefix_u) == N:
            return
        for iu in range(us.size):
            for iv in range(vs.size):
                c, S2, I2 = one_step(scenario, S, I, float(us[iu]), float(vs[iv]), cfg)
                key = (prefix_u + (iu,), prefix_v + (iv,))
                stage[key] = c
                walk(*key, S2, I2)

    walk((), (), S, I)
    P = np.empty((us.size**N, vs.size**N))
    for a, useq in enumerate(itertools.product(range(us.size), repeat=N)):
        for b, vseq in enumerate(itertools.product(range(vs.size), repeat=N)):
            total = 0.0
            for k in range(N - 1, -1, -1):
                total = stage[(useq[:k + 1], vseq[:k + 1])] + disc * total
            P[a, b] = total
    return P


def _strategy_table(n_own: int, n_opp: int, N: int):
    """All reaction maps: at step k a choice for every opponent history of length k+1."""
    offsets, slots = [], 0
    for k in range(N):
        offsets.append(slots)
        slots += n_opp ** (k + 1)
    idx = np.arange(n_own**slots)
    return (idx[:, None] // n_own ** np.arange(slots)) % n_own, offsets


def _play(table, offsets, opp_seq, n_own, n_opp):
    """Own sequence index (per strategy) when the opponent plays ``opp_seq``."""
    own_index = np.zeros(table.shape[0], dtype=np.int64)
    hist = 0
    for k, o in enumerate(opp_seq):
        hist = hist * n_opp + o
        own_index = own_index * n_own + table[:, offsets[k] + hist]
    return own_index


def enumerate_value(scenario: Scenario, S_o, I_o: float, cfg: GameConfig, side: str = LOWER) -> float:
    """inf over player-1 strategies of sup over u2 sequences (lower) or the mirror (upper).

    Strategies are non-anticipating: the move at step k may depend on the
    opponent's moves at steps 1..k.  Exhaustive, hence the size guard.
    """
    if side not in (LOWER, UPPER):
        raise ConfigurationError(f"side must be 'lower' or 'upper', got {side!r}")
    if (cfg.n_steps > ORACLE_MAX_STEPS or cfg.lat1.levels > ORACLE_MAX_LEVELS
            or cfg.lat2.levels > ORACLE_MAX_LEVELS):
        raise ConfigurationError(
            f"strategy enumeration is limited to {ORACLE_MAX_STEPS} steps and "
            f"{ORACLE_MAX_LEVELS}x{ORACLE_MAX_LEVELS} lattices")
    P = path_costs(scenario, S_o, I_o, cfg)
    N = cfg.n_steps
    L1, L2 = cfg.lat1.levels, cfg.lat2.levels
    if side == LOWER:
        table, offsets = _strategy_table(L1, L2, N)
        per_strategy = np.full(table.shape[0], -np.inf)
        for b, vseq in enumerate(itertools.product(range(L2), repeat=N)):
            per_strategy = np.maximum(per_strategy, P[_play(table, offsets, vseq, L1, L2), b])
        return float(per_strategy.min())
    table, offsets = _strategy_table(L2, L1, N)
    per_strategy = np.full(table.shape[0], np.inf)
    for a, useq in enumerate(itertools.product(range(L1), repeat=N)):
        per_strategy = np.minimum(per_strategy, P[a, _play(table, offsets, useq, L2, L1)])
    return float(per_strategy.max())


# ---------------------------------------------------------------------------
# best responses
# ---------------------------------------------------------------------------


def compass_search(objective: Callable, dim: int, bound: float, minimize: bool = True,
                   tol: float = 1e-4, starts=None):
    """Coordinate pattern search on [0, bound]^dim with step halving.

    Starts from the best of the constant vectors 0, bound/2 and bound (plus
    any ``starts``) and stops once the pattern step drops below ``tol * bound``.
    Returns ``(x, value, evaluations)``.
    """
    sign = 1.0 if minimize else -1.0
    cache = {}

    def F(x):
        key = tuple(x.tolist())
        if key not in cache:
            cache[key] = float(objective(x.copy()))
        return cache[key]

    candidates = [np.full(dim, c) for c in (0.0, 0.5 * bound, bound)]
    candidates += [np.clip(np.asarray(s, dtype=float), 0.0, bound) for s in (starts or [])]
    x = candidates[0]
    fx = F(x)
    for c in candidates[1:]:
        fc = F(c)
        if sign * fc < sign * fx:
            x, fx = c, fc

    step = 0.5 * bound
    while step >= tol * bound:
        improved = False
        for i in range(dim):
            for direction in (1.0, -1.0):
                y = x.copy()
                y[i] = min(max(x[i] + direction * step, 0.0), bound)
                if y[i] == x[i]:
                    continue
                fy = F(y)
                if sign * fy < sign * fx:
                    x, fx, improved = y, fy, True
                    break
        if not improved:
            step *= 0.5
    return x, fx, len(cache)


def _response(scenario, S_o, I_o, fixed: ControlSignal, n_intervals, eps, player, solver_kw):
    if n_intervals < 1:
        raise ConfigurationError("n_intervals must be at least 1")
    T = horizon_for_tolerance(scenario, S_o, I_o, eps)
    bound = scenario.m1 if player == 1 else scenario.m2
    if T <= 0:
        return ControlSignal(1.0, np.zeros(n_intervals), bound), 0.0
    dt_c = T / n_intervals

    def objective(x):
        own = ControlSignal(dt_c, x, bound)
        pair = (own, fixed) if player == 1 else (fixed, own)
        return functional(scenario, S_o, I_o, *pair, eps=eps, horizon=T, **solver_kw).value

    x, val, _ = compass_search(objective, n_intervals, bound, minimize=(player == 1))
    return ControlSignal(dt_c, x, bound), val


def best_response_u1(scenario: Scenario, S_o, I_o: float, u2: ControlSignal, n_intervals: int,
                     eps: float = 1e-4, **solver_kw):
    """Piecewise-constant u1 (n_intervals pieces over the truncation horizon) minimising the cost.

    Compass search finds a local minimiser; it is never worse than the
    constant controls 0, M1/2 and M1.  Extra keywords go to the cost functional.
    """
    return _response(scenario, S_o, I_o, u2, n_intervals, eps, 1, solver_kw)


def best_response_u2(scenario: Scenario, S_o, I_o: float, u1: ControlSignal, n_intervals: int,
                     eps: float = 1e-4, **solver_kw):
    """Mirror of :func:`best_response_u1` for the maximising player."""
    return _response(scenario, S_o, I_o, u1, n_intervals, eps, 2, solver_kw)


# ---------------------------------------------------------------------------
# Hamiltonians
# ---------------------------------------------------------------------------


class _HamiltonianTerms:
    """Control-independent pieces of the pre-Hamiltonian for one (Y, P)."""

    def __init__(self, scenario, S, I, P, grid_n=None):
        if grid_n is not None:
            S = S.resample(grid_n)
        self.scenario, self.I, self.h = scenario, float(I), S.h
        self.xi, self.s = S.xi, S.values
        self.p = P.p.resample(S.n).values
        self.a = float(scenario.alpha(max(I, 0.0)))
        self.ds = np.gradient(self.s, S.h, edge_order=2)
        self.base = (float(np.trapezoid((scenario.f(self.xi) + self.a) * self.s * self.p, dx=S.h))
                     + (scenario.beta * I - self.a * integral(S)) * P.q)

    def __call__(self, u1, u2):
        g = self.scenario.g
        flux = g.dxi(self.xi, u1, u2) * self.s + g.value(self.xi, u1, u2) * self.ds
        pairing = float(np.trapezoid(flux * self.p, dx=self.h))
        return self.base + pairing - running_cost(self.scenario, self.I, u1, u2)


def pre_hamiltonian(scenario: Scenario, S: ScalarField, I: float, P: Costate, u1: float, u2: float,
                    grid_n: int | None = None) -> float:
    """<d_xi(g S) + (f + alpha(I)) S, p> + (beta I - alpha(I) int S) q - l(I, u1, u2).

    d_xi(g S) is expanded as (d_xi g) S + g d_xi S, with d_xi S from centred
    differences (second-order one-sided at the ends); pairings use the trapezoid rule.
    """
    return _HamiltonianTerms(scenario, S, I, P, grid_n)(u1, u2)


@dataclass
class HamiltonianResult:
    value: float
    u1: float
    u2: float
    inner_at_endpoints: bool


def hamiltonian_matrix(scenario, S, I, P, lat1: ControlLattice, lat2: ControlLattice) -> np.ndarray:
    """H[i2, i1] = pre-Hamiltonian at (u1 = lat1[i1], u2 = lat2[i2])."""
    us, vs = lat1.samples, lat2.samples
    H = _HamiltonianTerms(scenario, S, I, P)
    return np.array([[H(float(u), float(v)) for u in us] for v in vs])


def _best(values, maximize):
    """Index of the optimum; values within 1e-12 relative of it count as ties, first wins."""
    target = values.max() if maximize else values.min()
    tol = 1e-12 * max(1.0, abs(target))
    return int(np.flatnonzero(np.abs(values - target) <= tol)[0])


def _lower_from(H, lat1, lat2) -> HamiltonianResult:
    inner_idx = [_best(row, maximize=True) for row in H]
    inner = H.max(axis=1)
    i2 = _best(inner, maximize=False)
    ends = {0, H.shape[1] - 1}
    return HamiltonianResult(float(inner.min()), float(lat1.samples[inner_idx[i2]]), float(lat2.samples[i2]),
                             all(i in ends for i in inner_idx))


def _upper_from(H, lat1, lat2) -> HamiltonianResult:
    inner_idx = [_best(col, maximize=False) for col in H.T]
    inner = H.min(axis=0)
    i1 = _best(inner, maximize=True)
    ends = {0, H.shape[0] - 1}
    return HamiltonianResult(float(inner.max()), float(lat1.samples[i1]), float(lat2.samples[inner_idx[i1]]),
                             all(i in ends for i in inner_idx))


def lower_hamiltonian(scenario, S, I, P, lat1, lat2) -> HamiltonianResult:
    """min over u2 of max over u1 of the pre-Hamiltonian on the lattices.

    ``inner_at_endpoints`` reports whether every inner maximiser is 0 or M1.
    """
    return _lower_from(hamiltonian_matrix(scenario, S, I, P, lat1, lat2), lat1, lat2)


def upper_hamiltonian(scenario, S, I, P, lat1, lat2) -> HamiltonianResult:
    """max over u1 of min over u2 of the pre-Hamiltonian on the lattices."""
    return _upper_from(hamiltonian_matrix(scenario, S, I, P, lat1, lat2), lat1, lat2)


def hamiltonians(scenario, S, I, P, lat1, lat2):
    """(lower, upper) from a single evaluation of the lattice matrix."""
    H = hamiltonian_matrix(scenario, S, I, P, lat1, lat2)
    return _lower_from(H, lat1, lat2), _upper_from(H, lat1, lat2)
