"""Backward characteristics, the shift psi and the mollified commutator.

Run: python3 demos/03_shift_and_commutator.py
"""

import numpy as np

from nsfcontact import harness, shift
from nsfcontact.fields import PeriodicGrid, lp_norm

# %% tracer on a rotating field: RK4 error halves by 16 per substep doubling
g = PeriodicGrid(2, 32)
x, y = g.centers
rot = np.stack([-(y - 0.5), x - 0.5])
times = np.linspace(0, 0.5, 6)
hist = shift.VelocityHistory(g, times, np.array([(1 + t) * rot for t in times]))
pt = np.array([[0.7], [0.5]])
feet = [shift.trace_characteristic(hist, pt, 0.5, shift.ShiftConfig(0.1, 0.1, s), wrap=False)
        for s in (1, 2, 4, 8)]
d = [np.max(np.abs(feet[i] - feet[i + 1])) for i in range(3)]
print("successive differences:", ["%.2e" % v for v in d])
print("rates:", np.round(np.log2([d[0] / d[1], d[1] / d[2]]), 3))

# %% psi on a shear flow stays an indicator; psi_bar stays in [0, 1]
hist = shift.VelocityHistory(g, times, np.array([np.stack([0.3 * np.sin(2 * np.pi * y),
                                                           0 * y])] * 6))
sf = shift.build_psi(hist, shift.ShiftConfig(0.1, 0.1))
print("psi values:", np.unique(sf.psi), " psi_bar range:", sf.psi_bar.min(), sf.psi_bar.max())

# %% commutator decay at fixed delta = 0.05
eps = (0.1, 0.05, 0.025)
norms = harness.commutator_decay(1024, 0.05, eps)
for e, v in zip(eps, norms):
    print(f"eps {e:<6} ||R||_2 {v:.4f}   ||R||_2 / sqrt(eps) {v / np.sqrt(e):.4f}")
print("final/initial:", norms[-1] / norms[0], " sqrt(1/4) =", 0.5)

# %% the uniform bound on random smooth pairs
C, held = harness.commutator_bound(1024, 0.05, eps, train=200, heldout=20, seed=0)
print(f"C_fit {C:.4f}, held-out max {held.max():.4f}, covered {bool(np.all(held <= C))}")
