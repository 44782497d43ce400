"""How the two controls move the epidemic and the discounted cost.

Player 1 pushes opinions towards vaccination (u1), player 2 pushes them away
(u2).  For each constant pair we integrate the canonical scenario until the
certified tail of the cost drops below 1e-3 and report where things end up.
"""

import numpy as np

import vaxgame as vg

sc = vg.Scenario.canonical()
S_o = vg.ScalarField.from_function(lambda x: 1.0 + 0.5 * np.cos(2 * np.pi * x), 51)
I_o = 0.1

print(f"{'u1':>4} {'u2':>4} {'cost':>10} {'horizon':>8} {'I(1)':>8} {'mass S(1)':>10}")
for u1_level, u2_level in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]:
    u1 = vg.ControlSignal.constant(u1_level, sc.m1)
    u2 = vg.ControlSignal.constant(u2_level, sc.m2)
    res = vg.functional(sc, S_o, I_o, u1, u2, eps=1e-3, dt=0.1)
    traj = res.trajectory
    k = int(np.argmin(np.abs(traj.times - 1.0)))
    print(f"{u1_level:4.1f} {u2_level:4.1f} {res.value:10.5f} {res.horizon:8.3f} "
          f"{traj.i_path[k]:8.5f} {traj.s_mass[k]:10.5f}")
