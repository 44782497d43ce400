"""Command-line entry point.

Exit codes: 0 success, 1 domain or configuration error (including a failed
``verify`` suite), 2 Picard non-convergence.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from . import coupled, csvio, game, verify
from .config import load_scenario
from .cost import functional
from .errors import ConfigurationError, DomainError, NonConvergenceError
from .model import validate_scenario
from .transport import ScalarField


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigurationError(message)


def _positive(name, value):
    if not (math.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be positive, got {value}")
    return value


def _nonneg(name, value):
    if not (math.isfinite(value) and value >= 0):
        raise DomainError(f"{name} must be nonnegative, got {value}")
    return value


def _at_least(name, value, low):
    if value < low:
        raise ConfigurationError(f"{name} must be at least {low}, got {value}")
    return value


def _initial_data(args):
    """(S_o, I_o) from --s0 (``const:v`` or an ``xi,S,I`` state file) and --i0."""
    I_file = None
    if args.s0.startswith("const:"):
        try:
            v = float(args.s0[6:])
        except ValueError:
            raise ConfigurationError(f"--s0: cannot parse constant in {args.s0!r}") from None
        _nonneg("--s0", v)
        S_o = ScalarField.constant(v, args.grid)
    else:
        S_o, I_file = csvio.read_state(args.s0, "--s0")
        S_o = S_o.resample(args.grid)
    if any(S_o.values < 0):
        raise DomainError("--s0: initial density must be nonnegative")
    I_o = args.i0 if args.i0 is not None else (I_file if I_file is not None else 0.1)
    return S_o, _nonneg("--i0", I_o)


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        csvio.write(out, text)


def cmd_validate(args, sc):
    rep = validate_scenario(sc, grid_n=args.grid)
    print(rep)
    if not rep.ok:
        raise DomainError("scenario failed validation: " + ", ".join(c.name for c in rep.failed()))


def cmd_simulate(args, sc):
    _nonneg("--t", args.t)
    _positive("--dt", args.dt)
    S_o, I_o = _initial_data(args)
    u1 = csvio.parse_control(args.u1, sc.m1, "--u1")
    u2 = csvio.parse_control(args.u2, sc.m2, "--u2")
    _at_least("--max-iters", args.max_iters, 1)
    traj, report = coupled.solve(sc, S_o, I_o, u1, u2, args.t, args.dt, substeps=args.substeps,
                                 max_iters=args.max_iters)
    if args.out is None:
        sys.stdout.write(csvio.trajectory_csv(traj))
        return
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csvio.write(out / "trajectory.csv", csvio.trajectory_csv(traj))
    csvio.write(out / "fields.csv", csvio.fields_csv(traj))
    print(f"wrote {out / 'trajectory.csv'} and {out / 'fields.csv'} "
          f"({len(report.windows)} Picard windows, {report.iterations} iterations)")


def cmd_cost(args, sc):
    _positive("--eps", args.eps)
    _positive("--dt", args.dt)
    if args.t is not None:
        _nonneg("--t", args.t)
    S_o, I_o = _initial_data(args)
    u1 = csvio.parse_control(args.u1, sc.m1, "--u1")
    u2 = csvio.parse_control(args.u2, sc.m2, "--u2")
    _at_least("--max-iters", args.max_iters, 1)
    res = functional(sc, S_o, I_o, u1, u2, eps=args.eps, horizon=args.t, dt=args.dt, substeps=args.substeps,
                     max_iters=args.max_iters)
    _emit(csvio.to_csv(("value", "tail_bound", "horizon"), [(res.value, res.tail_bound, res.horizon)]), args.out)


def cmd_best_response(args, sc):
    _positive("--eps", args.eps)
    _positive("--dt", args.dt)
    _at_least("--intervals", args.intervals, 1)
    S_o, I_o = _initial_data(args)
    if args.player == 1:
        against = csvio.parse_control(args.against, sc.m2, "--against")
        u, value = game.best_response_u1(sc, S_o, I_o, against, args.intervals, args.eps,
                                         dt=args.dt, substeps=args.substeps)
    else:
        against = csvio.parse_control(args.against, sc.m1, "--against")
        u, value = game.best_response_u2(sc, S_o, I_o, against, args.intervals, args.eps,
                                         dt=args.dt, substeps=args.substeps)
    _emit(csvio.control_csv(u), args.out)
    print(f"player {args.player} best response value {value:.17g}", file=sys.stderr)


def cmd_value(args, sc):
    _positive("--dt", args.dt)
    _at_least("--steps", args.steps, 1)
    _at_least("--lat1", args.lat1, 1)
    _at_least("--lat2", args.lat2, 1)
    cfg = game.GameConfig(args.steps, args.dt, game.ControlLattice(sc.m1, args.lat1),
                          game.ControlLattice(sc.m2, args.lat2), grid_n=args.grid, substeps=args.substeps,
                          budget=args.budget)
    game.worker_count()
    S_o, I_o = _initial_data(args)
    sides = ("lower", "upper") if args.side == "both" else (args.side,)
    results = [game.lower_value(sc, S_o, I_o, cfg) if s == "lower" else game.upper_value(sc, S_o, I_o, cfg)
               for s in sides]
    _emit(csvio.game_csv(results), args.out)


def cmd_hamiltonian(args, sc):
    _at_least("--lat1", args.lat1, 1)
    _at_least("--lat2", args.lat2, 1)
    S, I = csvio.read_state(args.state)
    P = csvio.read_costate(args.costate)
    lo, up = game.hamiltonians(sc, S, I, P, game.ControlLattice(sc.m1, args.lat1),
                               game.ControlLattice(sc.m2, args.lat2))
    rows = [("lower", lo.value, lo.u1, lo.u2, lo.inner_at_endpoints),
            ("upper", up.value, up.u1, up.u2, up.inner_at_endpoints)]
    _emit(csvio.to_csv(("side", "value", "u1", "u2", "inner_at_endpoints"), rows), args.out)


def cmd_verify(args, sc):
    _at_least("--trials", args.trials, 1)
    rep = verify.run_suite(args.suite, args.trials, args.seed)
    if args.out is not None:
        csvio.write(args.out, rep.to_csv())
    print(rep.summary())
    if not rep.ok:
        raise DomainError(f"verification suite {args.suite!r} failed")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="vaxgame", description="Vaccination game on a coupled transport / infection system.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, fn, help_text, grid=101):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("config", help="scenario config file")
        sp.add_argument("--grid", type=int, default=grid, help="number of xi nodes")
        sp.add_argument("--out", default=None, help="output path (stdout if omitted)")
        sp.set_defaults(func=fn)
        return sp

    def data_opts(sp):
        sp.add_argument("--s0", default="const:1", help="const:v or an xi,S,I state file")
        sp.add_argument("--i0", type=float, default=None, help="initial infected (default 0.1)")
        sp.add_argument("--substeps", type=int, default=8)

    command("validate", cmd_validate, "check the scenario hypotheses", grid=201)

    sp = command("simulate", cmd_simulate, "solve the coupled system", grid=201)
    data_opts(sp)
    sp.add_argument("--t", type=float, required=True, help="horizon")
    sp.add_argument("--u1", default="const:0")
    sp.add_argument("--u2", default="const:0")
    sp.add_argument("--dt", type=float, default=0.01)
    sp.add_argument("--max-iters", type=int, default=50, help="Picard iterations per window")

    sp = command("cost", cmd_cost, "discounted cost of a control pair", grid=51)
    data_opts(sp)
    sp.add_argument("--u1", default="const:0")
    sp.add_argument("--u2", default="const:0")
    sp.add_argument("--eps", type=float, default=1e-4)
    sp.add_argument("--t", type=float, default=None, help="truncation horizon (default from --eps)")
    sp.add_argument("--dt", type=float, default=0.05)
    sp.add_argument("--max-iters", type=int, default=50, help="Picard iterations per window")

    sp = command("best-response", cmd_best_response, "best response to a fixed opponent", grid=41)
    data_opts(sp)
    sp.add_argument("--player", type=int, choices=(1, 2), required=True)
    sp.add_argument("--against", default="const:0")
    sp.add_argument("--intervals", type=int, default=2)
    sp.add_argument("--eps", type=float, default=1e-3)
    sp.add_argument("--dt", type=float, default=0.1)

    sp = command("value", cmd_value, "lower / upper game values on control lattices", grid=51)
    data_opts(sp)
    sp.add_argument("--side", choices=("lower", "upper", "both"), default="both")
    sp.add_argument("--steps", type=int, default=2)
    sp.add_argument("--dt", type=float, default=0.25)
    sp.add_argument("--lat1", type=int, default=3)
    sp.add_argument("--lat2", type=int, default=3)
    sp.add_argument("--budget", type=int, default=10**6)

    sp = command("hamiltonian", cmd_hamiltonian, "lower / upper Hamiltonians at a state and costate")
    sp.add_argument("--state", required=True, help="xi,S,I file")
    sp.add_argument("--costate", required=True, help="xi,p,q file")
    sp.add_argument("--lat1", type=int, default=5)
    sp.add_argument("--lat2", type=int, default=5)

    sp = command("verify", cmd_verify, "randomised inequality suites")
    sp.add_argument("--suite", choices=("growth", "stability", "all"), default="all")
    sp.add_argument("--trials", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        _at_least("--grid", args.grid, 3)
        sc = load_scenario(args.config)
        args.func(args, sc)
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
