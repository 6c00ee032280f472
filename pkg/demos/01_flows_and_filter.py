"""The two exact sub-flows and the smooth frequency filter on a 1-D grid."""

import math

import numpy as np

from nlsplit import chi, gaussian, make_filter, make_grid, norm
from nlsplit.flows import apply_filter, linear_flow, nonlinear_flow
from nlsplit.grid import Hs, Lr

grid = make_grid(1, 256, 16.0)
u = gaussian(grid, width=1.0, amplitude=1.5)
print(f"grid: N={grid.n_per_axis}, L={grid.half_width}, h={grid.spacing:.4f}")
print(f"||u||_2 = {norm(u):.12f}")

# both sub-flows are unitary on L2
print(f"after S(0.3): {norm(linear_flow(u, 0.3)):.12f}")
print(f"after N(0.3): {norm(nonlinear_flow(u, 0.3, 1.0, 2.0)):.12f}")

# the linear flow spreads the packet and moves mass to |x| large
for t in (0.0, 1.0, 4.0):
    v = linear_flow(u, t)
    print(f"t={t:3.1f}  ||u||_inf={norm(v, Lr(math.inf)):.4f}  ||u||_H1={norm(v, Hs(1)):.4f}")

# chi is 1 below 1, 0 above 2, smooth in between
r = np.linspace(0, 2.5, 11)
print("chi:", np.round(chi(r), 4))

# the filter at scale s keeps frequencies below 1/sqrt(s) and kills those above 2/sqrt(s)
for s in (1.0, 1e-1, 1e-2):
    k = make_filter(grid, s)
    tail = norm(u - apply_filter(u, k))
    print(f"scale {s:6.0e}: cutoff {1 / math.sqrt(s):5.1f}..{2 / math.sqrt(s):5.1f}, ||u - P u|| = {tail:.3e}")
