"""Series conditions for a boundary drifting down like -B_n / log^2 B_n^2, and the Brownian analogue."""

import math

from fptwalk import (McConfig, bm_constant_survival, make_boundary, make_ssrw, series_sum_minus,
                     series_sum_plus)
from fptwalk.reference import bm_survival_curve

N = 10**7
walk = make_ssrw(N)
g = make_boundary("log_damped", {"c": -1.0, "gamma": 1.0}, schedule=walk)
print("g at 10^3, 10^5, 10^7:", g.g_at(10**3), g.g_at(10**5), g.g_at(10**7))

# the Sum- terms decay slowly; short horizons cannot tell yet
for horizon in (10**5, 10**6, 10**7):
    v = series_sum_minus(walk, g, horizon)
    print(f"Sum- up to {horizon:>8}: {v.classification:12s} q={v.decade_exponent:.2f}"
          f"  sum={v.partial_sums[-1][1]:.4f}")
print("Sum+:", series_sum_plus(walk, g, N).classification)

print("Brownian, constant boundary -1, t=4:", bm_constant_survival(1.0, 4.0))
bm_g = lambda t: -1 - math.sqrt(t) / math.log(math.e + t)  # noqa: E731
p1, p2 = bm_survival_curve(bm_g, [100.0, 200.0], 0.02, McConfig(seed=5, replications=20_000))
print("sqrt(t) P at t=100, 200:", 10 * p1.mean, math.sqrt(200) * p2.mean)
