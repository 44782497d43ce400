"""A small discrete game: lower and upper values, then a best response.

Both players pick from a two-point lattice {0, m} on each of two stages.
The lower value (player 2 commits first at every stage) never exceeds the
upper value.  Afterwards player 1 answers a fixed switching policy of
player 2 by pattern search over piecewise-constant controls.
"""

import numpy as np

import vaxgame as vg

sc = vg.Scenario.canonical()
S_o = vg.ScalarField.from_function(lambda x: 1.0 + 0.5 * np.cos(2 * np.pi * x), 31)
I_o = 0.1

cfg = vg.GameConfig(2, 0.25, vg.ControlLattice(sc.m1, 2), vg.ControlLattice(sc.m2, 2), grid_n=31)
lo = vg.lower_value(sc, S_o, I_o, cfg)
up = vg.upper_value(sc, S_o, I_o, cfg)
print(f"lower value {lo.value:.6f}  first step {lo.first_step}")
print(f"upper value {up.value:.6f}  first step {up.first_step}")
print(f"gap {up.value - lo.value:.2e}  (tree tail bound {lo.truncation_bound:.2e})")

u2 = vg.ControlSignal(1.0, np.array([1.0, 0.0]), sc.m2)
u1, value = vg.best_response_u1(sc, S_o, I_o, u2, 2, 1e-2, dt=0.2, grid_n=31)
print(f"player 1 answer to u2 = (1, 0): pieces {np.round(u1.values, 3)} cost {value:.6f}")
