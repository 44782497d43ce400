"""CSV reading and writing with fixed formatting (17 significant digits, '\\n' endings)."""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .characteristics import ControlSignal
from .errors import ConfigurationError
from .game import Costate
from .transport import ScalarField

FMT = ".17g"


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), FMT)


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write(path, text: str):
    Path(path).write_bytes(text.encode())


def trajectory_csv(traj) -> str:
    return to_csv(("t", "I", "l1", "l2", "mass"),
                  zip(traj.times, traj.i_path, traj.l1, traj.l2, traj.total_mass))


def fields_csv(traj) -> str:
    def rows():
        for t, S in zip(traj.times, traj.fields):
            for x, v in zip(S.xi, S.values):
                yield t, x, v
    return to_csv(("t", "xi", "S"), rows())


def game_csv(results) -> str:
    return to_csv(("side", "value", "u1_first", "u2_first", "truncation_bound", "nodes"),
                  ((r.side, r.value, r.first_step[0], r.first_step[1], r.truncation_bound, r.nodes_expanded)
                   for r in results))


def control_csv(u: ControlSignal) -> str:
    return to_csv(("t", "value"), ((k * u.dt, v) for k, v in enumerate(u.values)))


def _read_table(path, header, what):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read {what} file {str(path)!r}: {exc.strerror}") from None
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r]
    if not rows or [c.strip() for c in rows[0]] != list(header):
        raise ConfigurationError(f"{what} file {str(path)!r} must start with header {','.join(header)}")
    try:
        data = np.array([[float(c) for c in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise ConfigurationError(f"{what} file {str(path)!r}: {exc}") from None
    if data.size == 0 or data.ndim != 2 or data.shape[1] != len(header):
        raise ConfigurationError(f"{what} file {str(path)!r} needs rows of {len(header)} numbers")
    return data


def parse_control(spec: str, bound: float, option: str = "--u") -> ControlSignal:
    """``const:v`` or a CSV file with header ``t,value`` on a uniform grid starting at 0."""
    if spec.startswith("const:"):
        try:
            v = float(spec[6:])
        except ValueError:
            raise ConfigurationError(f"{option}: cannot parse constant in {spec!r}") from None
        if not 0.0 <= v <= bound:
            raise ConfigurationError(f"{option}: constant {v} outside [0, {bound}]")
        return ControlSignal.constant(v, bound)
    data = _read_table(spec, ("t", "value"), option)
    t, vals = data[:, 0], data[:, 1]
    if t[0] != 0.0:
        raise ConfigurationError(f"{option}: control file must start at t = 0")
    if t.size == 1:
        dt = 1.0
    else:
        steps = np.diff(t)
        dt = float(steps[0])
        if not dt > 0 or not np.allclose(steps, dt, rtol=1e-9, atol=0.0):
            raise ConfigurationError(f"{option}: control breakpoints must be uniformly spaced")
    if np.any(vals < 0) or np.any(vals > bound):
        raise ConfigurationError(f"{option}: control values must lie in [0, {bound}]")
    return ControlSignal(dt, vals, bound)


def _uniform_xi(xi, option):
    n = xi.size
    if n < 3 or not np.allclose(xi, np.linspace(0.0, 1.0, n), rtol=0.0, atol=1e-12):
        raise ConfigurationError(f"{option}: xi column must be the uniform grid on [0, 1] with >= 3 nodes")


def read_state(path, option: str = "--state"):
    """``xi,S,I`` file -> (ScalarField, I); I is read from the first row."""
    data = _read_table(path, ("xi", "S", "I"), option)
    _uniform_xi(data[:, 0], option)
    return ScalarField(data[:, 1]), float(data[0, 2])


def read_costate(path, option: str = "--costate"):
    """``xi,p,q`` file -> Costate; q is read from the first row."""
    data = _read_table(path, ("xi", "p", "q"), option)
    _uniform_xi(data[:, 0], option)
    return Costate(ScalarField(data[:, 1]), float(data[0, 2]))


def state_csv(S: ScalarField, I: float) -> str:
    return to_csv(("xi", "S", "I"), ((x, v, I) for x, v in zip(S.xi, S.values)))


def costate_csv(P) -> str:
    return to_csv(("xi", "p", "q"), ((x, v, P.q) for x, v in zip(P.p.xi, P.p.values)))
