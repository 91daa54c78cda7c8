"""Weights a_k = k: survival decays like n^-3/2 (B_n grows like n^3/2)."""

import numpy as np

from fptwalk import McConfig, evolve, make_boundary, make_power_weighted, survival_curve

walk = make_power_weighted(1, 3000)
zero = make_boundary("constant", {"x": 0.0})

exact = evolve(walk, zero, 1000, keep_laws=False)
ns = np.array([100, 300, 1000, 3000])
curve = survival_curve(walk, zero, ns, McConfig(seed=1, replications=5_000_000))

for n in ns:
    est = curve.estimate(n)
    ex = exact.survival[n - 1] if n <= 1000 else float("nan")
    print(f"n={n:5d}  MC {est.mean:.3e} +/- {est.std_error:.1e}   exact {ex:.3e}")

p = np.array([curve.estimate(n).mean for n in ns])
print("log-log slope:", np.polyfit(np.log(ns), np.log(p), 1)[0])
