"""
The reference case: one mode, a Maxwell kernel, an exact solution
==================================================================

With lambda = 1 and k(t) = 2 exp(-2t) the mode equation

    u'' + u - int_0^t k(t - s) u(s) ds = 0,   u(0) = 1, u'(0) = 0

has the closed-form solution u(t) = (1 + t) exp(-t). We integrate it,
compare with the formula, and watch the energy decay.
"""

import numpy as np

from glassydecay.decay import check_bound, fit_decay_rate, theoretical_alpha
from glassydecay.energy import energy_series
from glassydecay.kernels import PronyKernel, validate
from glassydecay.operator import InitialData, diagonal_operator
from glassydecay.simulator import simulate

# The kernel has unit mass, so it is "glassy"; eta is its decay rate.

kernel = PronyKernel.maxwell(2.0)
print(validate(kernel).as_text())

# One mode with eigenvalue 1: the coercivity constant C is 1 as well.

op = diagonal_operator([1.0])
traj = simulate(op, kernel, InitialData([1.0], [0.0]), T=15.0, dt=1e-3)

exact = (1 + traj.times) * np.exp(-traj.times)
print(f"\nmax |u - (1+t)e^-t| = {np.max(np.abs(traj.u[:, 0] - exact)):.2e}")

# Energy: kinetic + elastic (weighted by the kernel tail) + history.

energies = energy_series(traj)
for t in (0.0, 1.0, 2.0, 5.0, 10.0):
    b = energies.breakdown(energies.index(t))
    print(f"t = {t:5.1f}  E = {b.total:.6e}  (kin {b.kinetic:.2e}, ela {b.elastic:.2e}, his {b.history:.2e})")

# The proved rate: alpha = 1 / (2((k(0) + 2)/C + 1 + 3/eta)) = 1/13 here.

alpha = theoretical_alpha(kernel.k0, op.coercivity, kernel.extract_eta())
margin, ok = check_bound(energies, alpha)
rate, _, r2 = fit_decay_rate(energies, (5.0, 15.0))
print(f"\nalpha_theory = {alpha:.6f}")
print(f"max E(t) / (E(0) e^(1 - alpha t)) = {margin:.4f}  -> bound {'holds' if ok else 'violated'}")
print(f"fitted decay rate on [5, 15] = {rate:.4f} (r^2 = {r2:.6f}); the bound is far from tight")
