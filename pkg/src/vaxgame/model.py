"""Scenario coefficients and the coefficient-function families alpha, f, g.

Every family is a small frozen dataclass exposing vectorised evaluation and
the derivative needed elsewhere.  Fluxes are affine in the two controls,

    g(xi, u1, u2) = g1(xi) + g2(xi) u1 + g3(xi) u2,

and (except for :class:`TestGeneric`) vanish at xi = 0 and xi = 1, which is
what makes the transport equation on [0, 1] need no boundary condition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence, Union

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import DomainError

#: grid used for numeric Lipschitz / sup-derivative estimates
LIP_GRID = 2001
#: multiplicative safety margin applied to numerically estimated constants
LIP_MARGIN = 1.05


def smoothstep5(t):
    """Quintic smoothstep 6t^5 - 15t^4 + 10t^3, clamped to [0, 1] outside."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


def smoothstep5_deriv(t):
    t = np.asarray(t, dtype=float)
    inside = (t > 0.0) & (t < 1.0)
    tc = np.clip(t, 0.0, 1.0)
    return np.where(inside, 30.0 * tc * tc * (1.0 - tc) ** 2, 0.0)


def _max_abs_on_grid(fn, lo, hi, n=LIP_GRID):
    x = np.linspace(lo, hi, n)
    return float(np.max(np.abs(fn(x))))


# ---------------------------------------------------------------------------
# infection rate alpha
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Linear:
    """alpha(I) = abar * I."""

    abar: float

    def __post_init__(self):
        if not (math.isfinite(self.abar) and self.abar >= 0.0):
            raise DomainError(f"Linear rate needs abar >= 0, got {self.abar}")

    def __call__(self, I):
        return self.abar * np.asarray(I, dtype=float)

    def deriv(self, I):
        return np.full_like(np.asarray(I, dtype=float), self.abar)

    def lipschitz(self, imax: float = 1.0) -> float:
        return float(self.abar)


@dataclass(frozen=True)
class Holling:
    """Holling-type response alpha(I) = abar I^p / (1 + b I^q)."""

    abar: float
    p: float
    q: float
    b: float

    def __post_init__(self):
        for name in ("abar", "p", "q", "b"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise DomainError(f"Holling rate needs {name} > 0, got {v}")

    def __call__(self, I):
        I = np.asarray(I, dtype=float)
        return self.abar * I**self.p / (1.0 + self.b * I**self.q)

    def deriv(self, I):
        # written with I^(p+q-1) so that I = 0 stays finite for p >= 1
        I = np.asarray(I, dtype=float)
        den = 1.0 + self.b * I**self.q
        num = self.p * I ** (self.p - 1.0) + self.b * (self.p - self.q) * I ** (self.p + self.q - 1.0)
        return self.abar * num / den**2

    def lipschitz(self, imax: float = 1.0) -> float:
        if self.p < 1.0:
            raise DomainError(
                f"Holling rate with p = {self.p} < 1 has unbounded derivative at I = 0"
            )
        return LIP_MARGIN * _max_abs_on_grid(self.deriv, 0.0, max(imax, 1e-12))


RateSpec = Union[Linear, Holling]


# ---------------------------------------------------------------------------
# vaccination rate f
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Identity:
    test_only = False

    def __call__(self, xi):
        return np.asarray(xi, dtype=float).copy()

    def lipschitz(self) -> float:
        return 1.0


@dataclass(frozen=True)
class Power:
    r: float

    test_only = False

    def __post_init__(self):
        if not (math.isfinite(self.r) and self.r >= 1.0):
            raise DomainError(f"Power vaccination rate needs r >= 1, got {self.r}")

    def __call__(self, xi):
        return np.asarray(xi, dtype=float) ** self.r

    def lipschitz(self) -> float:
        return float(self.r)


@dataclass(frozen=True)
class Smoothstep:
    order: int = 3

    test_only = False

    def __post_init__(self):
        if self.order not in (3, 5):
            raise DomainError(f"Smoothstep order must be 3 or 5, got {self.order}")

    def __call__(self, xi):
        x = np.asarray(xi, dtype=float)
        if self.order == 3:
            return x * x * (3.0 - 2.0 * x)
        return smoothstep5(x)

    def lipschitz(self) -> float:
        return 1.5 if self.order == 3 else 1.875


@dataclass(frozen=True)
class TestVaccination:
    """Arbitrary f(xi) for unit tests; (F) is not enforced."""

    func: Callable
    test_only = True
    __test__ = False  # not a pytest class

    def __call__(self, xi):
        return np.broadcast_to(np.asarray(self.func(np.asarray(xi, dtype=float)), dtype=float),
                               np.shape(xi)).copy()

    def lipschitz(self) -> float:
        eps = 1e-6
        return LIP_MARGIN * _max_abs_on_grid(lambda x: (self(x + eps) - self(x - eps)) / (2 * eps), eps, 1 - eps)


VaccinationSpec = Union[Identity, Power, Smoothstep, TestVaccination]


# ---------------------------------------------------------------------------
# flux g
# ---------------------------------------------------------------------------


class _Flux:
    test_only = False
    bounds: Optional[tuple] = None

    def value(self, xi, u1, u2):  # pragma: no cover - interface
        raise NotImplementedError

    def dxi(self, xi, u1, u2):  # pragma: no cover - interface
        raise NotImplementedError

    def gamma(self, m1: float, m2: float, grid_n: int = LIP_GRID) -> float:
        """Bound on |d g / d xi| over [0,1] x box; corners suffice by affinity."""
        xi = np.linspace(0.0, 1.0, grid_n)
        worst = 0.0
        for u in (0.0, m1):
            for v in (0.0, m2):
                worst = max(worst, float(np.max(np.abs(self.dxi(xi, u, v)))))
        return LIP_MARGIN * worst


@dataclass(frozen=True)
class ZeroFlux(_Flux):
    def value(self, xi, u1, u2):
        return np.zeros_like(np.asarray(xi, dtype=float))

    def dxi(self, xi, u1, u2):
        return np.zeros_like(np.asarray(xi, dtype=float))


def _coeffs(c) -> tuple:
    return tuple(float(a) for a in np.atleast_1d(np.asarray(c, dtype=float)))


@dataclass(frozen=True)
class AffineTriple(_Flux):
    """g = g1 + g2 u1 + g3 u2 with polynomial g_i (ascending coefficients)."""

    g1: tuple = (0.0,)
    g2: tuple = (0.0,)
    g3: tuple = (0.0,)

    def __post_init__(self):
        for name in ("g1", "g2", "g3"):
            object.__setattr__(self, name, _coeffs(getattr(self, name)))

    def value(self, xi, u1, u2):
        xi = np.asarray(xi, dtype=float)
        return P.polyval(xi, self.g1) + P.polyval(xi, self.g2) * u1 + P.polyval(xi, self.g3) * u2

    def dxi(self, xi, u1, u2):
        xi = np.asarray(xi, dtype=float)
        d = [P.polyder(c) if len(c) > 1 else (0.0,) for c in (self.g1, self.g2, self.g3)]
        return P.polyval(xi, d[0]) + P.polyval(xi, d[1]) * u1 + P.polyval(xi, d[2]) * u2


def _window(xi, interval, delta):
    """Smoothed indicator of [lo, hi]; ramps of width delta centred on lo and hi."""
    lo, hi = interval
    a = (xi - (lo - 0.5 * delta)) / delta
    b = ((hi + 0.5 * delta) - xi) / delta
    return smoothstep5(a) * smoothstep5(b)


def _window_deriv(xi, interval, delta):
    lo, hi = interval
    a = (xi - (lo - 0.5 * delta)) / delta
    b = ((hi + 0.5 * delta) - xi) / delta
    return (smoothstep5_deriv(a) * smoothstep5(b) - smoothstep5(a) * smoothstep5_deriv(b)) / delta


@dataclass(frozen=True)
class RegularizedVax(_Flux):
    """Smoothed version of xi(1-xi)(xi - 1/2 - lam u2/m2 1_A2 + (1-lam) u1/m1 1_A1).

    The indicators of the action sets ``a1``, ``a2`` are replaced by quintic
    smoothstep windows with ramp width ``delta``, which keeps g in C^2.
    """

    lam: float = 0.5
    a1: tuple = (0.1, 0.666)
    a2: tuple = (0.45, 0.85)
    delta: float = 0.02
    m1: float = 1.0
    m2: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise DomainError(f"lam must lie in (0, 1), got {self.lam}")
        if not self.delta > 0.0:
            raise DomainError(f"delta must be positive, got {self.delta}")
        for name in ("a1", "a2"):
            lo, hi = (float(x) for x in getattr(self, name))
            if not 0.0 <= lo <= hi <= 1.0:
                raise DomainError(f"{name} = [{lo}, {hi}] is not a subinterval of [0, 1]")
            object.__setattr__(self, name, (lo, hi))
        if not (self.m1 > 0.0 and self.m2 > 0.0):
            raise DomainError("control bounds m1, m2 must be positive")

    @property
    def bounds(self):
        return (self.m1, self.m2)

    def _inner(self, xi, u1, u2):
        return (xi - 0.5
                - self.lam * (u2 / self.m2) * _window(xi, self.a2, self.delta)
                + (1.0 - self.lam) * (u1 / self.m1) * _window(xi, self.a1, self.delta))

    def value(self, xi, u1, u2):
        xi = np.asarray(xi, dtype=float)
        return xi * (1.0 - xi) * self._inner(xi, u1, u2)

    def dxi(self, xi, u1, u2):
        xi = np.asarray(xi, dtype=float)
        inner_d = (1.0
                   - self.lam * (u2 / self.m2) * _window_deriv(xi, self.a2, self.delta)
                   + (1.0 - self.lam) * (u1 / self.m1) * _window_deriv(xi, self.a1, self.delta))
        return (1.0 - 2.0 * xi) * self._inner(xi, u1, u2) + xi * (1.0 - xi) * inner_d


@dataclass(frozen=True)
class TestGeneric(_Flux):
    """Control-independent g(xi) for unit tests.  Boundary zeros are NOT enforced.

    Solvers of the full system refuse fluxes flagged ``test_only``.
    """

    func: Callable
    dfunc: Callable

    test_only = True
    __test__ = False  # not a pytest class

    @classmethod
    def polynomial(cls, coeffs: Sequence[float]) -> "TestGeneric":
        c = _coeffs(coeffs)
        dc = tuple(P.polyder(c)) if len(c) > 1 else (0.0,)
        return cls(lambda x: P.polyval(x, c), lambda x: P.polyval(x, dc))

    def value(self, xi, u1, u2):
        xi = np.asarray(xi, dtype=float)
        return np.broadcast_to(np.asarray(self.func(xi), dtype=float), xi.shape).copy()

    def dxi(self, xi, u1, u2):
        xi = np.asarray(xi, dtype=float)
        return np.broadcast_to(np.asarray(self.dfunc(xi), dtype=float), xi.shape).copy()


FluxSpec = Union[ZeroFlux, AffineTriple, RegularizedVax, TestGeneric]


# ---------------------------------------------------------------------------
# scenario
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    beta: float
    kappa: float
    theta: float
    m1: float
    m2: float
    alpha: RateSpec
    f: VaccinationSpec
    g: FluxSpec

    def __post_init__(self):
        for name in ("beta", "kappa", "theta", "m1", "m2"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise DomainError(f"scenario coefficient {name} must be positive, got {v!r}")
        if float(self.alpha(0.0)) != 0.0:
            raise DomainError("infection rate must vanish at I = 0")
        b = self.g.bounds
        if b is not None and (b[0] != self.m1 or b[1] != self.m2):
            raise DomainError(f"flux control bounds {b} differ from scenario ({self.m1}, {self.m2})")

    @classmethod
    def canonical(cls, **overrides) -> "Scenario":
        """The reference scenario used throughout the docs and tests."""
        m1 = overrides.get("m1", 1.0)
        m2 = overrides.get("m2", 1.0)
        base = dict(beta=0.5, kappa=1.0, theta=1.0, m1=m1, m2=m2,
                    alpha=Linear(0.8), f=Smoothstep(3),
                    g=RegularizedVax(lam=0.5, a1=(0.1, 0.666), a2=(0.45, 0.85), delta=0.02, m1=m1, m2=m2))
        base.update(overrides)
        return cls(**base)

    @cached_property
    def gamma(self) -> float:
        return self.g.gamma(self.m1, self.m2)

    def lip_alpha(self, imax: float = 1.0) -> float:
        return self.alpha.lipschitz(imax)

    def check_controls(self, u1, u2):
        if not (0.0 <= u1 <= self.m1):
            raise DomainError(f"u1 = {u1} outside [0, {self.m1}]")
        if not (0.0 <= u2 <= self.m2):
            raise DomainError(f"u2 = {u2} outside [0, {self.m2}]")


# ---------------------------------------------------------------------------
# public point evaluations
# ---------------------------------------------------------------------------


def eval_alpha(spec: RateSpec, I: float) -> float:
    if I < 0:
        raise DomainError(f"infection rate evaluated at negative I = {I}")
    return float(spec(I))


def _check_flux_args(spec, xi, u1, u2):
    xi_arr = np.asarray(xi, dtype=float)
    if np.any(xi_arr < 0.0) or np.any(xi_arr > 1.0):
        raise DomainError(f"xi = {xi} outside [0, 1]")
    m1, m2 = spec.bounds if spec.bounds is not None else (math.inf, math.inf)
    if not 0.0 <= u1 <= m1:
        raise DomainError(f"u1 = {u1} outside [0, {m1}]")
    if not 0.0 <= u2 <= m2:
        raise DomainError(f"u2 = {u2} outside [0, {m2}]")


def eval_g(spec: FluxSpec, xi, u1: float, u2: float):
    _check_flux_args(spec, xi, u1, u2)
    out = spec.value(xi, u1, u2)
    return float(out) if np.ndim(out) == 0 else out


def eval_dg(spec: FluxSpec, xi, u1: float, u2: float):
    _check_flux_args(spec, xi, u1, u2)
    out = spec.dxi(xi, u1, u2)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""
    point: Optional[tuple] = None

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        where = f" at {self.point}" if self.point is not None else ""
        return f"[{status}] {self.name}: {self.detail}{where}"


@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)
    gamma: float = float("nan")
    lip_alpha: float = float("nan")
    lip_f: float = float("nan")
    imax: float = float("nan")

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self):
        return [c for c in self.checks if not c.passed]

    def __str__(self):
        lines = [str(c) for c in self.checks]
        lines.append(f"gamma = {self.gamma:.17g}")
        lines.append(f"Lip(alpha) on [0, {self.imax:.6g}] = {self.lip_alpha:.17g}")
        lines.append(f"Lip(f) = {self.lip_f:.17g}")
        lines.append("all hypotheses hold" if self.ok else "hypotheses violated")
        return "\n".join(lines)


def validate_scenario(s: Scenario, grid_n: int = 201, imax: Optional[float] = None) -> ValidationReport:
    """Check the structural hypotheses on alpha, f and g numerically.

    A failing hypothesis is reported, never raised.  ``imax`` is the upper end
    of the range on which Lip(alpha) is estimated; pass ``l1(S_o) + I_o`` (the
    invariant region of the system).  Defaults to 1.
    """
    if grid_n < 16:
        raise DomainError(f"grid_n must be at least 16, got {grid_n}")
    imax = 1.0 if imax is None else float(imax)
    rep = ValidationReport(imax=imax)
    xi = np.linspace(0.0, 1.0, grid_n)

    a0 = float(s.alpha(0.0))
    rep.checks.append(Check("alpha(0) = 0", a0 == 0.0, f"alpha(0) = {a0:.3g}"))

    try:
        rep.lip_alpha = s.alpha.lipschitz(imax)
        rep.checks.append(Check("alpha Lipschitz", math.isfinite(rep.lip_alpha), f"Lip = {rep.lip_alpha:.6g}"))
    except DomainError as exc:
        rep.checks.append(Check("alpha Lipschitz", False, str(exc), (0.0,)))
    Igrid = np.linspace(0.0, imax, grid_n)
    avals = s.alpha(Igrid)
    neg = np.flatnonzero(avals < 0.0)
    rep.checks.append(Check("alpha >= 0", neg.size == 0, "on [0, Imax]",
                            (float(Igrid[neg[0]]),) if neg.size else None))

    fv = s.f(xi)
    ends_ok = abs(fv[0]) <= 1e-12 and abs(fv[-1] - 1.0) <= 1e-12
    rep.checks.append(Check("f(0) = 0, f(1) = 1", ends_ok, f"f(0) = {fv[0]:.3g}, f(1) = {fv[-1]:.3g}",
                            None if ends_ok else ((0.0,) if abs(fv[0]) > 1e-12 else (1.0,))))
    drops = np.flatnonzero(np.diff(fv) < -1e-14)
    rep.checks.append(Check("f nondecreasing", drops.size == 0, "on grid",
                            (float(xi[drops[0]]),) if drops.size else None))
    out = np.flatnonzero((fv < -1e-14) | (fv > 1.0 + 1e-14))
    rep.checks.append(Check("f in [0, 1]", out.size == 0, "on grid", (float(xi[out[0]]),) if out.size else None))
    rep.lip_f = s.f.lipschitz()

    bad = None
    for u in (0.0, s.m1):
        for v in (0.0, s.m2):
            for x in (0.0, 1.0):
                gv = float(s.g.value(np.array(x), u, v))
                if abs(gv) > 1e-14 and bad is None:
                    bad = (x, u, v)
    rep.checks.append(Check("g = 0 at xi in {0, 1}", bad is None, "at control-box corners", bad))

    rep.gamma = s.g.gamma(s.m1, s.m2, grid_n)
    rep.checks.append(Check("d g / d xi bounded", math.isfinite(rep.gamma), f"gamma = {rep.gamma:.6g}"))
    return rep
