"""Time signals and characteristic curves of the transport equation.

Characteristics solve dX/ds = g(X, u1(s), u2(s)).  Controls are piecewise
constant, and every integration step is cut at control breakpoints so that
RK4 never straddles a discontinuity.  Positions are clamped to [0, 1] after
each substep; for admissible fluxes (g = 0 at the ends) that only absorbs
round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError
from .model import ZeroFlux

_TIME_TOL = 1e-12


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ControlSignal:
    """Right-continuous piecewise-constant control on a uniform partition.

    ``u(t) = values[floor(t / dt)]``, held at the last value after the final step.
    """

    dt: float
    values: np.ndarray
    bound: float

    def __post_init__(self):
        vals = _readonly(np.atleast_1d(self.values))
        object.__setattr__(self, "values", vals)
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise DomainError(f"control step must be positive, got {self.dt}")
        if vals.size == 0:
            raise DomainError("control signal needs at least one value")
        if np.any(vals < 0.0) or np.any(vals > self.bound):
            raise DomainError(f"control values must lie in [0, {self.bound}]")

    @classmethod
    def constant(cls, value: float, bound: float, dt: float = 1.0) -> "ControlSignal":
        return cls(dt, np.array([value]), bound)

    @property
    def horizon(self) -> float:
        return self.dt * self.values.size

    def index(self, t: float) -> int:
        k = math.floor(t / self.dt + 1e-9)
        return min(max(k, 0), self.values.size - 1)

    def __call__(self, t: float) -> float:
        return float(self.values[self.index(t)])

    def breakpoints(self, a: float, b: float) -> np.ndarray:
        """Switching times strictly inside (a, b)."""
        k = np.arange(1, self.values.size)
        jumps = k[self.values[1:] != self.values[:-1]] * self.dt
        return jumps[(jumps > a + _TIME_TOL) & (jumps < b - _TIME_TOL)]

    def is_constant(self) -> bool:
        return bool(np.all(self.values == self.values[0]))

    def __repr__(self):
        return f"ControlSignal(dt={self.dt!r}, n={self.values.size}, bound={self.bound!r})"


@dataclass(frozen=True, eq=False)
class SampledPath:
    """A scalar path sampled at increasing times, linearly interpolated."""

    times: np.ndarray
    values: np.ndarray
    clamped: int = 0
    min_raw: float = math.inf

    def __post_init__(self):
        t = _readonly(self.times)
        v = _readonly(self.values)
        if t.shape != v.shape or t.ndim != 1 or t.size == 0:
            raise DomainError("sampled path needs matching 1-d times and values")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise DomainError("sample times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, value: float, t0: float, t1: float) -> "SampledPath":
        if t1 <= t0:
            return cls(np.array([t0]), np.array([value]))
        return cls(np.array([t0, t1]), np.array([value, value]))

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def require(self, t0: float, t1: float, what: str = "path"):
        tol = 1e-9 * max(1.0, abs(t1))
        if self.t_start > t0 + tol or self.t_end < t1 - tol:
            raise DomainError(
                f"{what} covers [{self.t_start:g}, {self.t_end:g}] but [{t0:g}, {t1:g}] is needed"
            )

    def __call__(self, t):
        return np.interp(t, self.times, self.values)


@dataclass(frozen=True, eq=False)
class CharCurve:
    times: np.ndarray
    positions: np.ndarray


# ---------------------------------------------------------------------------
# segment bookkeeping and RK4
# ---------------------------------------------------------------------------


def _check_substeps(substeps_per_dt):
    if int(substeps_per_dt) != substeps_per_dt or substeps_per_dt < 1:
        raise ConfigurationError(f"substeps_per_dt must be a positive integer, got {substeps_per_dt}")


def _ref_step(u1: ControlSignal, u2: ControlSignal) -> float:
    return min(u1.dt, u2.dt)


def merge_nodes(nodes):
    nodes = np.unique(np.asarray(nodes, dtype=float))
    keep = [nodes[0]]
    for x in nodes[1:]:
        if x - keep[-1] > _TIME_TOL * max(1.0, abs(x)):
            keep.append(x)
        else:
            keep[-1] = max(keep[-1], x)
    return np.array(keep)


def segments(a: float, b: float, u1: ControlSignal, u2: ControlSignal, extra=(), substeps_per_dt: int = 8):
    """Split [a, b] into pieces of constant control.

    Returns a list of ``(lo, hi, c1, c2, m)`` where ``m`` is the number of RK4
    substeps used on that piece.  ``extra`` adds further cut points.
    """
    nodes = [a, b, *u1.breakpoints(a, b), *u2.breakpoints(a, b)]
    nodes += [x for x in extra if a < x < b]
    nodes = merge_nodes(nodes)
    nodes[0], nodes[-1] = a, b
    href = _ref_step(u1, u2)
    out = []
    for lo, hi in zip(nodes[:-1], nodes[1:]):
        mid = 0.5 * (lo + hi)
        m = max(1, math.ceil(substeps_per_dt * (hi - lo) / href - 1e-9))
        out.append((float(lo), float(hi), u1(mid), u2(mid), m))
    return out


def _rk4(g, x, h, c1, c2):
    k1 = g.value(x, c1, c2)
    k2 = g.value(np.clip(x + 0.5 * h * k1, 0.0, 1.0), c1, c2)
    k3 = g.value(np.clip(x + 0.5 * h * k2, 0.0, 1.0), c1, c2)
    k4 = g.value(np.clip(x + h * k3, 0.0, 1.0), c1, c2)
    return np.clip(x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), 0.0, 1.0)


def _integrate(g, x, t, s, u1, u2, substeps_per_dt, record=False):
    """RK4 from time t to time s (either direction); optionally keep the nodes."""
    x = np.array(x, dtype=float)
    times, pos = [t], [x.copy()]
    if s == t:
        return (x, times, pos) if record else x
    lo, hi = min(t, s), max(t, s)
    segs = segments(lo, hi, u1, u2, substeps_per_dt=substeps_per_dt)
    if s < t:
        segs = segs[::-1]
    for a, b, c1, c2, m in segs:
        start, end = (a, b) if s > t else (b, a)
        h = (end - start) / m
        for j in range(m):
            x = _rk4(g, x, h, c1, c2)
            if record:
                times.append(end if j == m - 1 else start + (j + 1) * h)
                pos.append(x.copy())
    return (x, times, pos) if record else x


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def flow(g, u1: ControlSignal, u2: ControlSignal, xi, t: float, s: float, substeps_per_dt: int = 8):
    """X(s; t, xi): position at time s of the characteristic through (t, xi)."""
    _check_substeps(substeps_per_dt)
    if t < 0 or s < 0:
        raise DomainError(f"times must be nonnegative, got t={t}, s={s}")
    xi_arr = np.asarray(xi, dtype=float)
    if np.any(xi_arr < 0.0) or np.any(xi_arr > 1.0):
        raise DomainError("xi must lie in [0, 1]")
    if isinstance(g, ZeroFlux):
        out = xi_arr.copy()
    else:
        out = _integrate(g, xi_arr, float(t), float(s), u1, u2, substeps_per_dt)
    return float(out) if out.ndim == 0 else out


def characteristic(g, u1, u2, xi: float, t: float, s: float, substeps_per_dt: int = 8) -> CharCurve:
    """The curve sigma -> X(sigma; t, xi) between t and s, nodes in increasing time."""
    _check_substeps(substeps_per_dt)
    _, times, pos = _integrate(g, np.asarray(xi, dtype=float), float(t), float(s), u1, u2,
                               substeps_per_dt, record=True)
    times = np.array(times)
    pos = np.array([float(p) for p in pos])
    order = np.argsort(times, kind="stable")
    return CharCurve(times[order], pos[order])


def foot_points(g, u1, u2, grid, t: float, substeps_per_dt: int = 8) -> np.ndarray:
    """X(0; t, xi_i) for every grid node; nondecreasing since the 1-d flow keeps order."""
    return np.asarray(flow(g, u1, u2, np.asarray(grid, dtype=float), t, 0.0, substeps_per_dt), dtype=float)


def exponent_along(g, f, alpha, I_path: SampledPath, u1, u2, xi: float, t: float,
                   substeps_per_dt: int = 8) -> float:
    """Integral over [0, t] of f(X) + alpha(I) + d_xi g(X, u1, u2) along X(.; t, xi).

    Composite trapezoid on the RK4 substep nodes; I is linearly interpolated.
    """
    _check_substeps(substeps_per_dt)
    if t < 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    I_path.require(0.0, t, "I path")
    total = 0.0
    x = np.asarray(xi, dtype=float)
    for a, b, c1, c2, m in reversed(segments(0.0, t, u1, u2, substeps_per_dt=substeps_per_dt)):
        h = (a - b) / m
        s0 = b
        F0 = float(f(x) + g.dxi(x, c1, c2)) + float(alpha(max(float(I_path(s0)), 0.0)))
        for j in range(m):
            x = _rk4(g, x, h, c1, c2)
            s1 = a if j == m - 1 else b + (j + 1) * h
            F1 = float(f(x) + g.dxi(x, c1, c2)) + float(alpha(max(float(I_path(s1)), 0.0)))
            total += 0.5 * (s0 - s1) * (F0 + F1)
            s0, F0 = s1, F1
    return total


@dataclass(frozen=True, eq=False)
class Sweep:
    """Backward characteristics from many start times down to a common ``t0``.

    ``foot[k, i] = X(t0; out_times[k], xi_i)`` and ``geometric[k, i]`` is the
    trapezoid integral of f(X) + d_xi g(X) along that curve.  ``ladder`` holds
    the substep nodes in [t0, out_times[-1]] and ``ladder_index[k]`` locates
    ``out_times[k]`` on it; the I-dependent part of the exponent is a scalar
    integral over the same ladder.
    """

    out_times: np.ndarray
    foot: np.ndarray
    geometric: np.ndarray
    ladder: np.ndarray
    ladder_index: np.ndarray


def backward_sweep(g, f, u1, u2, grid, out_times, t0: float = 0.0, substeps_per_dt: int = 8) -> Sweep:
    _check_substeps(substeps_per_dt)
    grid = np.asarray(grid, dtype=float)
    times = np.asarray(out_times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise DomainError("out_times must be a nonempty 1-d sequence")
    if np.any(np.diff(times) <= 0):
        raise DomainError("out_times must be strictly increasing")
    if times[0] < t0 - _TIME_TOL:
        raise DomainError(f"out_times start before t0 = {t0}")
    K, n = times.size, grid.size
    foot = np.broadcast_to(grid, (K, n)).copy()
    geo = np.zeros((K, n))

    t_max = float(times[-1])
    if t_max <= t0 + _TIME_TOL:
        return Sweep(times, foot, geo, np.array([t0]), np.zeros(K, dtype=int))
    segs = segments(t0, t_max, u1, u2, extra=times, substeps_per_dt=substeps_per_dt)

    ladder = [t0]
    for a, b, _, _, m in segs:
        ladder.extend(b if j == m - 1 else a + (j + 1) * (b - a) / m for j in range(m))
    ladder = np.array(ladder)
    ladder_index = np.array([int(np.argmin(np.abs(ladder - tk))) for tk in times])

    zero = isinstance(g, ZeroFlux)
    fgrid = f(grid) if zero else None
    for a, b, c1, c2, m in reversed(segs):
        first = int(np.searchsorted(times, b - _TIME_TOL * max(1.0, abs(b))))
        if first >= K:
            continue
        if zero:
            geo[first:] += (b - a) * fgrid
            continue
        x = foot[first:]
        acc = geo[first:]
        h = (a - b) / m
        F0 = f(x) + g.dxi(x, c1, c2)
        for _ in range(m):
            x = _rk4(g, x, h, c1, c2)
            F1 = f(x) + g.dxi(x, c1, c2)
            acc += (-0.5 * h) * (F0 + F1)
            F0 = F1
        foot[first:] = x
    return Sweep(times, foot, geo, ladder, ladder_index)


def forward_exponent(g, f, u1, u2, grid, out_times, t0: float = 0.0, substeps_per_dt: int = 8) -> np.ndarray:
    """``F[k, i]``: integral of f along the forward curve from (t0, grid_i) up to ``out_times[k]``.

    Trapezoid on the same substep ladder as :func:`backward_sweep`.
    """
    _check_substeps(substeps_per_dt)
    grid = np.asarray(grid, dtype=float)
    times = np.asarray(out_times, dtype=float)
    if times.ndim != 1 or times.size == 0 or np.any(np.diff(times) <= 0):
        raise DomainError("out_times must be a nonempty strictly increasing 1-d sequence")
    if times[0] < t0 - _TIME_TOL:
        raise DomainError(f"out_times start before t0 = {t0}")
    out = np.zeros((times.size, grid.size))
    t_max = float(times[-1])
    if t_max <= t0 + _TIME_TOL:
        return out
    if isinstance(g, ZeroFlux):
        return np.maximum(times - t0, 0.0)[:, None] * f(grid)[None, :]
    x = grid.copy()
    acc = np.zeros(grid.size)
    F0 = f(x)
    k = int(np.searchsorted(times, t0 + _TIME_TOL))
    for a, b, c1, c2, m in segments(t0, t_max, u1, u2, extra=times, substeps_per_dt=substeps_per_dt):
        h = (b - a) / m
        for _ in range(m):
            x = _rk4(g, x, h, c1, c2)
            F1 = f(x)
            acc += 0.5 * h * (F0 + F1)
            F0 = F1
        while k < times.size and times[k] <= b + _TIME_TOL * max(1.0, abs(b)):
            out[k] = acc
            k += 1
    return out
