"""Boundary g = -1: E[-S_T; T <= n] climbs to E[-S_T] = 1 and E Z*_n follows it."""

import numpy as np

from fptwalk import evolve, make_boundary, make_ssrw, submartingale_check

walk = make_ssrw(4000)
g = make_boundary("constant", {"x": -1.0})
res = evolve(walk, g, 4000, keep_laws=False)

for n in (10, 100, 1000, 4000):
    print(f"n={n:5d}  absorbed -S mean={res.absorbed_neg_s[n - 1]:.5f}  E Z*_n={res.ez_star[n - 1]:.5f}"
          f"  P(T>n)={res.survival[n - 1]:.5f}")

# the gap to the limit is about P(T > n), i.e. shrinks like n^-1/2
print("largest one-step increase after n=1000:", np.diff(res.absorbed_neg_s)[999:].max())
print("E Z*_n non-decreasing:", submartingale_check(res, g, 1))
