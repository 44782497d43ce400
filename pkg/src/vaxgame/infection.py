"""Scalar infection ODE  I' = -beta I + alpha(I) * mass(t)  for a known mass path."""

from __future__ import annotations

import math
import warnings

import numpy as np

from .characteristics import SampledPath
from .errors import DomainError

#: more clamps than this in a single solve triggers a RuntimeWarning
CLAMP_WARN_LIMIT = 10


def solve_ode(beta: float, alpha, I_o: float, mass_path: SampledPath, dt_out: float,
              t0: float | None = None, t_end: float | None = None) -> SampledPath:
    """Classical RK4 with step ``dt_out``, sampled at every step.

    ``mass_path`` (the integral of S over xi) is linearly interpolated at the
    stage times.  A negative value after a step is round-off; it is clamped
    to 0 and counted in ``clamped`` of the returned path.
    """
    if I_o < 0:
        raise DomainError(f"I_o must be nonnegative, got {I_o}")
    if not dt_out > 0:
        raise DomainError(f"dt_out must be positive, got {dt_out}")
    t0 = mass_path.t_start if t0 is None else float(t0)
    t_end = mass_path.t_end if t_end is None else float(t_end)
    mass_path.require(t0, t_end, "mass path")

    n_steps = max(0, math.ceil((t_end - t0) / dt_out - 1e-9))
    nodes = np.minimum(t0 + dt_out * np.arange(n_steps + 1), t_end)
    if n_steps:
        nodes[-1] = t_end
    m_nodes = mass_path(nodes).tolist()
    m_mid = mass_path(0.5 * (nodes[1:] + nodes[:-1])).tolist()
    h_all = np.diff(nodes).tolist()

    rate = alpha
    values = [float(I_o)]
    I = float(I_o)
    clamped = 0
    min_raw = I
    for k in range(n_steps):
        h = h_all[k]
        m0, mh, m1 = m_nodes[k], m_mid[k], m_nodes[k + 1]
        # the rate is only evaluated on I >= 0; stages may dip by round-off
        k1 = -beta * I + float(rate(max(I, 0.0))) * m0
        y = I + 0.5 * h * k1
        k2 = -beta * y + float(rate(max(y, 0.0))) * mh
        y = I + 0.5 * h * k2
        k3 = -beta * y + float(rate(max(y, 0.0))) * mh
        y = I + h * k3
        k4 = -beta * y + float(rate(max(y, 0.0))) * m1
        I = I + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        min_raw = min(min_raw, I)
        if I < 0.0:
            clamped += 1
            I = 0.0
        values.append(I)
    if clamped > CLAMP_WARN_LIMIT:
        warnings.warn(f"infection ODE clamped {clamped} negative values", RuntimeWarning, stacklevel=2)
    return SampledPath(nodes, np.array(values), clamped=clamped, min_raw=min_raw)
