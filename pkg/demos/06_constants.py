"""Error-bound shape, nonlinear mean-value constants and filter Bernstein inequalities."""

import math

import numpy as np

from nlsplit import make_grid, phi_alpha
from nlsplit.analysis import bernstein_suite, theorem2_bound, verify_mvt

# the bound decays like (-log tau)^(-alpha/2) once tau is tiny
grid = make_grid(2, 128, math.pi)
phi = phi_alpha(grid, 1.0)
for tau in (1e-4, 1e-8, 1e-16):
    tt = tau * (-math.log(tau))
    print(f"tau={tau:.0e}  bound {theorem2_bound(phi, tau, tt, 1.0, 2, 1.0):.4f}")

for p in (0.5, 1.0, 2.0, 3.0):
    r = verify_mvt(p, n=2**12)
    print(f"p={p}: Lipschitz {r.c_lipschitz:.3f}, consistency {r.c_consistency:.3f}, stable={r.passed}")

checks = bernstein_suite(make_grid(1, 2048, 8.0), np.logspace(-3, -1, 3), n_fields=40)
for c in checks[:6]:
    print(f"{c.name:12s} {c.params}  constants {np.round(c.constants, 3)}  spread {c.spread:.2f}")
print(f"{sum(c.passed for c in checks)}/{len(checks)} checks stable within 2x")
