"""A single cell under the min-max rule.

Visits arrive after random gaps. Each time a drone enters, it flies at the
slowest allowed speed if the cell is under its coverage target and at the
fastest otherwise. When the speed bounds clear the feasibility thresholds
the coverage ratio settles on the target; when they do not, it stalls short.
"""

import numpy as np

from dronecover.adaptive_control import (
    CoverageTarget,
    VelocityBounds,
    bounds_feasible,
    monotone_step_violations,
    synthetic_cell_trace,
    speed_thresholds,
)

L, gaps, target = 100.0, (50.0, 400.0), 0.3
need, allow = speed_thresholds(L, target, *gaps)
print(f"need v_max >= {need:.2f} m/s and v_min <= {allow:.2f} m/s")

for name, b in [
    ("feasible", VelocityBounds(0.8 * allow, 1.2 * need)),
    ("v_min too high", VelocityBounds(3.0 * allow, 1.2 * need)),
]:
    tr = synthetic_cell_trace(L, CoverageTarget(target), b, gaps, 4000, np.random.default_rng(0))
    ratios = np.asarray(tr.ratios)
    checkpoints = [len(ratios) // 100, len(ratios) // 10, len(ratios) // 2, len(ratios) - 1]
    print(f"\n{name}: bounds {b.v_min:.2f}..{b.v_max:.2f} m/s, passes thresholds: "
          f"{bounds_feasible(b, L, target, *gaps)}")
    for j in checkpoints:
        print(f"  event {j:5d}  t={tr.times[j]:9.0f} s  p={ratios[j]:.4f}")
    n, bad = monotone_step_violations(tr.entry_ratios(), target)
    print(f"  entries stepping the wrong way: {bad}/{n}")
