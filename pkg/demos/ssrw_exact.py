"""Exact survival of the simple symmetric walk above 0 and the ratio B_n P(T>n) / E Z*_n."""

import math

from fptwalk import evolve, make_boundary, make_ssrw, ssrw_survival_oracle
from fptwalk.report import ratio_report

n_max = 2000
walk = make_ssrw(n_max)
zero = make_boundary("constant", {"x": 0.0})

res = evolve(walk, zero, n_max, keep_laws=False)
print("P(T > 20) exact:", res.survival[19], " closed form:", ssrw_survival_oracle(10))

# E Z*_n stays at 1/2, so r_n = 2 sqrt(n) P(T > n)
rep = ratio_report(res, walk, [10, 100, 1000, 2000])
for row in rep.rows:
    print(f"n={row['n']:5d}  r_n={row['r_n']:.6f}  |r_n - sqrt(2/pi)|={row['alpha_star']:.2e}"
          f"  sqrt(lambda_n)={row['sqrt_lambda_n']:.3f}")
print("sqrt(2/pi) =", math.sqrt(2 / math.pi))
