"""Admissible exponent pairs in exact arithmetic and a discrete Strichartz norm."""

from fractions import Fraction

from nlsplit import SplitConfig, evolve, gaussian, make_grid
from nlsplit.analysis import (
    INF,
    admissible_check,
    discrete_strichartz_norm,
    q0r0,
    q1r1,
    radial_range_check,
)

for d, p in ((1, Fraction(2)), (2, Fraction(1, 2)), (3, Fraction(1))):
    a, b = q0r0(d, p), q1r1(d, p)
    print(f"d={d} p={p}: (q0, r0)=({a.q}, {a.r})  (q1, r1)=({b.q}, {b.r})  "
          f"admissible: {admissible_check(a.q, a.r, d)}, {admissible_check(b.q, b.r, d)}")

print("endpoint (2, 2d/(d-2)) in d=3:", admissible_check(2, 6, 3))
print("(inf, 2) in d=2:", admissible_check(INF, 2, 2))
print("radial (2, 6) in d=3:", radial_range_check(2, 6, 3), "  radial (2, 10/3) in d=3:",
      radial_range_check(2, Fraction(10, 3), 3))

grid = make_grid(1, 256, 16.0)
traj = evolve(gaussian(grid), SplitConfig("strang", lam=1.0, p=2.0, tau=1e-2, T=1.0))
for q, r in ((INF, 2), (4, INF), (8, 4)):
    print(f"l^{q} L^{r} over [0, 1): {discrete_strichartz_norm(traj, q, r, (0.0, 1.0)):.5f}")
