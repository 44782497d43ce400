"""Run the randomised inequality suites and show the tightest cases.

Each trial draws a scenario, initial data and controls from a seeded
generator, solves, and compares every a priori estimate with what the
solver produced.  The margin is (rhs - lhs) / rhs, so small margins are the
sharpest estimates.
"""

import vaxgame.verify as verify

report = verify.run_suite("all", trials=4, seed=7)
print(report.summary())

tight = sorted(report.records, key=lambda r: r.margin)[:5]
for r in tight:
    print(f"{r.check:>16}  trial {r.trial}  t={r.time:<5g} lhs={r.lhs:.4e} rhs={r.rhs:.4e} margin={r.margin:.3e}")
