"""Switch the coupling off and compare against the exact solution.

With alpha = 0, no flux and f(xi) = xi the susceptible density decays in place,
S(t, xi) = S_o(xi) exp(-xi t), while the infected population decays at rate
beta.  The solver should reproduce both to round-off.
"""

import numpy as np

import vaxgame as vg

sc = vg.Scenario(beta=0.7, kappa=1.0, theta=1.0, m1=1.0, m2=1.0, alpha=vg.Linear(0.0), f=vg.Identity(), g=vg.ZeroFlux())
S_o = vg.ScalarField.from_function(lambda x: 1.0 + 0.5 * np.cos(2 * np.pi * x), 201)
u = vg.ControlSignal.constant(0.0, 1.0)

traj, report = vg.solve(sc, S_o, 0.3, u, u, horizon=1.0, dt=1e-3)
xi = S_o.xi
err_S = max(np.max(np.abs(S.values - S_o.values * np.exp(-xi * t))) for t, S in zip(traj.times, traj.fields))
err_I = np.max(np.abs(traj.i_path - 0.3 * np.exp(-sc.beta * traj.times)))

print(f"Picard iterations: {report.iterations} over {len(report.windows)} window(s)")
print(f"max |S - exact| = {err_S:.2e}")
print(f"max |I - exact| = {err_I:.2e}")
