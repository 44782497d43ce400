"""Randomised empirical checks of the proven growth and stability inequalities.

Each check compares a measured left-hand side with the right-hand side of
the inequality, built from the same constants the proofs use, and records
one row per (trial, time).  A check passes when ``lhs <= rhs * (1 + slack)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import coupled
from .characteristics import ControlSignal, SampledPath
from .errors import ConfigurationError
from .infection import solve_ode
from .model import Identity, Linear, Power, RegularizedVax, Scenario, Smoothstep
from .transport import ScalarField, l1_norm, l2_norm, solve_pde

SLACK = 1e-3
#: L2-type bounds get twice the relative slack
SLACK_L2 = 2e-3
#: mass monotonicity uses an absolute slack of MASS_SLACK * initial mass
MASS_SLACK = 1e-3

CSV_HEADER = ("check", "trial", "seed", "time", "lhs", "rhs", "margin", "pass")


@dataclass(frozen=True)
class Record:
    check: str
    trial: int
    seed: int
    time: float
    lhs: float
    rhs: float
    passed: bool

    @property
    def margin(self) -> float:
        """(rhs - lhs) / max(|rhs|, |lhs|); zero when both sides vanish."""
        scale = max(abs(self.rhs), abs(self.lhs))
        return 0.0 if scale == 0.0 else (self.rhs - self.lhs) / scale


@dataclass
class InequalityReport:
    name: str
    records: list = field(default_factory=list)

    def add(self, check, trial, seed, time, lhs, rhs, slack, absolute=0.0):
        lhs, rhs = float(lhs), float(rhs)
        ok = lhs <= rhs * (1.0 + slack) + absolute
        self.records.append(Record(check, trial, seed, float(time), lhs, rhs, ok))

    def extend(self, other: "InequalityReport"):
        self.records.extend(other.records)
        return self

    @property
    def trials(self) -> int:
        return len({r.trial for r in self.records})

    @property
    def passes(self) -> int:
        """Trials in which every record passed."""
        failed = {r.trial for r in self.records if not r.passed}
        return self.trials - len(failed)

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.records)

    @property
    def worst_margin(self) -> float:
        return min((r.margin for r in self.records), default=math.inf)

    def failures(self) -> list:
        return [r for r in self.records if not r.passed]

    @property
    def offending_seed(self):
        """(seed, trial) of the first failing record, or None."""
        bad = self.failures()
        return (bad[0].seed, bad[0].trial) if bad else None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.records:
            w.writerow([r.check, r.trial, r.seed, format(r.time, ".17g"), format(r.lhs, ".17g"),
                        format(r.rhs, ".17g"), format(r.margin, ".17g"), int(r.passed)])
        return buf.getvalue()

    def summary(self) -> str:
        s = f"{self.name}: {self.passes}/{self.trials} trials pass, worst margin {self.worst_margin:.3e}"
        if not self.ok:
            s += f", first failure at seed/trial {self.offending_seed} ({self.failures()[0].check})"
        return s


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------


def check_growth(traj: coupled.Trajectory, scenario: Scenario, trial: int = 0, seed: int = 0) -> InequalityReport:
    """L1 and L2 growth of S, the bound on I and monotone total mass, at every output time."""
    rep = InequalityReport("growth")
    S_o, I_o = traj.fields[0], float(traj.i_path[0])
    s1, s2 = l1_norm(S_o), l2_norm(S_o)
    gamma = scenario.gamma
    mass0 = traj.total_mass[0]
    for k in range(1, traj.times.size):
        t = traj.times[k]
        rep.add("l1_growth", trial, seed, t, traj.l1[k], s1, SLACK)
        rep.add("l2_growth", trial, seed, t, traj.l2[k], math.exp(0.5 * t * gamma) * s2, SLACK_L2)
        rep.add("infected_bound", trial, seed, t, traj.i_path[k], s1 + I_o, SLACK)
        rep.add("mass_monotone", trial, seed, t, traj.total_mass[k], traj.total_mass[k - 1], 0.0,
                MASS_SLACK * abs(mass0))
    return rep


def stability_rhs(lip, beta, S_o, I_o, Sb_o, Ib_o, t):
    """Right-hand side of the full stability estimate with K1, K2 and the time-dependent K."""
    d0 = l1_norm(S_o - Sb_o)
    k1 = beta + lip * l1_norm(S_o)
    k2 = lip * l1_norm(Sb_o)
    kt = k2 + lip * abs(Ib_o) * math.exp(k1 * t)
    a = t * math.exp(k2 * t) * kt
    return (d0 + math.exp(k1 * t) * abs(I_o - Ib_o)) * (1.0 + a * math.exp(a))


def aligned_step(times, dt: float) -> float:
    """Largest step <= dt of which every requested time is a multiple (times as fractions up to 1e-9)."""
    fr = [Fraction(float(t)).limit_denominator(10**9) for t in times if t > 0]
    if not fr:
        return dt
    g = fr[0]
    for f in fr[1:]:
        g = Fraction(math.gcd(g.numerator * f.denominator, f.numerator * g.denominator),
                     g.denominator * f.denominator)
    return float(g) / math.ceil(float(g) / dt - 1e-9)


def check_system_stability(scenario: Scenario, data, data_bar, u1: ControlSignal, u2: ControlSignal,
                           times, dt: float = 0.02, trial: int = 0, seed: int = 0,
                           **solver_kw) -> InequalityReport:
    """Solve both systems and compare the L1 + |I| distance with the stability bound."""
    (S_o, I_o), (Sb_o, Ib_o) = data, data_bar
    times = sorted(float(t) for t in times)
    T = times[-1]
    dt = aligned_step(times, dt)
    tr, _ = coupled.solve(scenario, S_o, I_o, u1, u2, T, dt, **solver_kw)
    trb, _ = coupled.solve(scenario, Sb_o, Ib_o, u1, u2, T, dt, **solver_kw)
    S_o, Sb_o = tr.fields[0], trb.fields[0]
    lip = scenario.lip_alpha(max(l1_norm(S_o) + I_o, l1_norm(Sb_o) + Ib_o))
    rep = InequalityReport("system_stability")
    for t in times:
        k = int(np.argmin(np.abs(tr.times - t)))
        lhs = l1_norm(tr.fields[k] - trb.fields[k]) + abs(tr.i_path[k] - trb.i_path[k])
        rhs = stability_rhs(lip, scenario.beta, S_o, I_o, Sb_o, Ib_o, t)
        rep.add("stability", trial, seed, t, lhs, rhs, SLACK)
    return rep


def _path_norms(I_path: SampledPath, Ib_path: SampledPath, t: float, n: int = 2001):
    s = np.linspace(0.0, t, n)
    d = np.abs(I_path(s) - Ib_path(s))
    return float(np.trapezoid(d, s)), float(np.sqrt(np.trapezoid(d * d, s)))


def check_pde_stability(scenario: Scenario, S_o, Sb_o, I_path: SampledPath, Ib_path: SampledPath,
                        u1: ControlSignal, u2: ControlSignal, times, trial: int = 0, seed: int = 0,
                        substeps: int = 8) -> InequalityReport:
    """L1 and L2 distance between transport solutions driven by two infected paths."""
    S_o = S_o if isinstance(S_o, ScalarField) else ScalarField(S_o)
    Sb_o = Sb_o if isinstance(Sb_o, ScalarField) else ScalarField(Sb_o)
    times = np.asarray(sorted(float(t) for t in times))
    S = solve_pde(scenario, S_o, I_path, u1, u2, times, substeps)
    Sb = solve_pde(scenario, Sb_o, Ib_path, u1, u2, times, substeps)
    imax = max(np.max(I_path.values), np.max(Ib_path.values))
    lip = scenario.lip_alpha(max(imax, 1e-12))
    d1, d2 = l1_norm(S_o - Sb_o), l2_norm(S_o - Sb_o)
    rep = InequalityReport("pde_stability")
    for t, St, Sbt in zip(times, S, Sb):
        i1, i2 = _path_norms(I_path, Ib_path, t)
        rep.add("pde_l1", trial, seed, t, l1_norm(St - Sbt), d1 + lip * l1_norm(Sb_o) * i1, SLACK)
        rhs2 = math.exp(0.5 * t * scenario.gamma) * (d2 + lip * math.sqrt(t) * l2_norm(Sb_o) * i2)
        rep.add("pde_l2", trial, seed, t, l2_norm(St - Sbt), rhs2, SLACK_L2)
    return rep


def check_ode_stability(scenario: Scenario, field_times, S_fields, Sb_fields, I_o: float, Ib_o: float,
                        times, dt_out: float = 2.5e-3, trial: int = 0, seed: int = 0) -> InequalityReport:
    """Infection ODE driven by two given density paths sampled at ``field_times``.

    Masses, the sup-norms inside K_t and the L1 distance are interpolated
    linearly between samples.
    """
    field_times = np.asarray(field_times, dtype=float)
    mass = SampledPath(field_times, np.array([l1_norm(S) for S in S_fields]))
    mass_bar = SampledPath(field_times, np.array([l1_norm(S) for S in Sb_fields]))
    dist = SampledPath(field_times, np.array([l1_norm(a - b) for a, b in zip(S_fields, Sb_fields)]))
    return _ode_check(scenario, mass, mass_bar, dist, I_o, Ib_o, times, dt_out, trial, seed)


def _ode_check(scenario, mass, mass_bar, dist, I_o, Ib_o, times, dt_out, trial, seed):
    times = sorted(float(t) for t in times)
    T = times[-1]
    I = solve_ode(scenario.beta, scenario.alpha, I_o, mass, dt_out, 0.0, T)
    Ib = solve_ode(scenario.beta, scenario.alpha, Ib_o, mass_bar, dt_out, 0.0, T)
    imax = max(np.max(I.values), np.max(Ib.values))
    lip = scenario.lip_alpha(max(imax, 1e-12))
    s = I.times
    m, mb = mass(s), mass_bar(s)
    k = scenario.beta + lip * np.maximum.accumulate(np.abs(m))
    kb = scenario.beta + lip * np.maximum.accumulate(np.abs(mb))
    d = dist(s)
    integrand = np.exp((kb - k) * s) * d
    cum = np.concatenate(([0.0], np.cumsum(0.5 * np.diff(s) * (integrand[1:] + integrand[:-1]))))
    rep = InequalityReport("ode_stability")
    for t in times:
        j = int(np.argmin(np.abs(s - t)))
        lhs = abs(I.values[j] - Ib.values[j])
        rhs = math.exp(k[j] * s[j]) * (abs(I_o - Ib_o) + lip * abs(Ib_o) * cum[j])
        rep.add("ode", trial, seed, s[j], lhs, rhs, SLACK)
    return rep


# ---------------------------------------------------------------------------
# random sampling
# ---------------------------------------------------------------------------


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(trial)])


def random_scenario(rng: np.random.Generator) -> Scenario:
    """beta in [0.1, 2], kappa and theta in [0.5, 2], Linear alpha with abar in [0, 1], M1 = M2 = 1.

    The flux is a regularised vaccination flux with a wide ramp (delta in
    [0.15, 0.25]) so that the transported densities stay resolved at n = 201.
    """
    beta, kappa, theta = rng.uniform(0.1, 2.0), rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0)
    abar = rng.uniform(0.0, 1.0)
    f = [Identity(), Power(float(rng.uniform(1.0, 3.0))), Smoothstep(3)][int(rng.integers(3))]
    g = RegularizedVax(lam=float(rng.uniform(0.2, 0.8)), delta=float(rng.uniform(0.15, 0.25)))
    return Scenario(float(beta), float(kappa), float(theta), 1.0, 1.0, Linear(float(abar)), f, g)


def random_density(rng: np.random.Generator, n: int = 201, max_l1: float = 2.0, modes: int = 4) -> ScalarField:
    """Nonnegative trigonometric polynomial scaled to an L1 norm in [0.1, max_l1]."""
    xi = np.linspace(0.0, 1.0, n)
    k = np.arange(1, modes + 1)[:, None]
    a = rng.normal(size=(modes, 1)) / k
    b = rng.normal(size=(modes, 1)) / k
    v = 1.0 + np.sum(a * np.cos(2 * np.pi * k * xi) + b * np.sin(2 * np.pi * k * xi), axis=0)
    v = v - min(0.0, v.min())
    target = rng.uniform(0.1, max_l1)
    return ScalarField(v * target / float(np.trapezoid(v, dx=1.0 / (n - 1))))


def random_control(rng: np.random.Generator, bound: float, horizon: float, max_pieces: int = 4) -> ControlSignal:
    pieces = int(rng.integers(1, max_pieces + 1))
    return ControlSignal(horizon / pieces, rng.uniform(0.0, bound, pieces), bound)


def random_i_path(rng: np.random.Generator, horizon: float, n: int = 401) -> SampledPath:
    t = np.linspace(0.0, horizon, n)
    a, b, w = rng.uniform(0.0, 1.0), rng.uniform(0.0, 0.5), rng.uniform(0.5, 6.0)
    return SampledPath(t, np.maximum(a + b * np.sin(w * t + rng.uniform(0, 2 * np.pi)), 0.0))


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

STABILITY_TIMES = (0.25, 0.5, 1.0)


def growth_trial(seed: int, trial: int, horizon: float = 1.0, dt: float = 0.02, n: int = 201):
    rng = trial_rng(seed, trial)
    sc = random_scenario(rng)
    S_o = random_density(rng, n)
    I_o = float(rng.uniform(0.0, 1.0))
    u1, u2 = random_control(rng, sc.m1, horizon), random_control(rng, sc.m2, horizon)
    traj, report = coupled.solve(sc, S_o, I_o, u1, u2, horizon, dt)
    return check_growth(traj, sc, trial, seed), report


def stability_trial(seed: int, trial: int, times=STABILITY_TIMES, dt: float = 0.02, n: int = 201):
    rng = trial_rng(seed, trial)
    sc = random_scenario(rng)
    S_o = random_density(rng, n)
    I_o = float(rng.uniform(0.0, 1.0))
    # the perturbed datum is a convex mix with a fresh density, so both stay admissible
    lam = rng.uniform(0.0, 1.0)
    Sb_o = ScalarField((1.0 - lam) * S_o.values + lam * random_density(rng, n).values)
    Ib_o = float(rng.uniform(0.0, 1.0))
    T = max(times)
    u1, u2 = random_control(rng, sc.m1, T), random_control(rng, sc.m2, T)
    return check_system_stability(sc, (S_o, I_o), (Sb_o, Ib_o), u1, u2, times, dt, trial, seed)


def pde_trial(seed: int, trial: int, times=STABILITY_TIMES, n: int = 201):
    rng = trial_rng(seed, trial)
    sc = random_scenario(rng)
    S_o, Sb_o = random_density(rng, n), random_density(rng, n)
    T = max(times)
    I, Ib = random_i_path(rng, T), random_i_path(rng, T)
    u1, u2 = random_control(rng, sc.m1, T), random_control(rng, sc.m2, T)
    return check_pde_stability(sc, S_o, Sb_o, I, Ib, u1, u2, times, trial, seed)


def ode_trial(seed: int, trial: int, times=STABILITY_TIMES, dt: float = 0.02, n: int = 201):
    """Density paths taken from two coupled solves with the same controls."""
    rng = trial_rng(seed, trial)
    sc = random_scenario(rng)
    S_o, Sb_o = random_density(rng, n), random_density(rng, n)
    I_o, Ib_o = float(rng.uniform(0.0, 1.0)), float(rng.uniform(0.0, 1.0))
    T = max(times)
    u1, u2 = random_control(rng, sc.m1, T), random_control(rng, sc.m2, T)
    dt = aligned_step(times, dt)
    tr, _ = coupled.solve(sc, S_o, I_o, u1, u2, T, dt)
    trb, _ = coupled.solve(sc, Sb_o, Ib_o, u1, u2, T, dt)
    return check_ode_stability(sc, tr.times, tr.fields, trb.fields, I_o, Ib_o, times, 2.5e-3, trial, seed)


SUITES = {
    "growth": ("growth",),
    "stability": ("stability", "pde", "ode"),
    "all": ("growth", "stability", "pde", "ode"),
}


def run_suite(name: str, trials: int, seed: int = 0) -> InequalityReport:
    """Run the named suite; trials are merged in trial order."""
    if name not in SUITES:
        raise ConfigurationError(f"unknown suite {name!r}; choose one of {sorted(SUITES)}")
    if trials < 1:
        raise ConfigurationError(f"trials must be at least 1, got {trials}")
    rep = InequalityReport(name)
    for part in SUITES[name]:
        for k in range(trials):
            if part == "growth":
                rep.extend(growth_trial(seed, k)[0])
            elif part == "stability":
                rep.extend(stability_trial(seed, k))
            elif part == "pde":
                rep.extend(pde_trial(seed, k))
            else:
                rep.extend(ode_trial(seed, k))
    return rep
