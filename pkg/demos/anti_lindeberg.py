"""Four-point steps: rare jumps of size sqrt(n) break Lind+, and sqrt(n) P(T>n) keeps growing."""

import math

from fptwalk import McConfig, make_boundary, make_four_point, series_lind_plus, survival_curve

walk = make_four_point(10_000)
zero = make_boundary("constant", {"x": 0.0})

v = series_lind_plus(make_four_point(10**6), 0.5, 10**6)
print("Lind+ partial sums:", [(n, round(s, 4)) for n, s in v.partial_sums[-6:]])
print("verdict:", v.classification, " decade exponent:", round(v.decade_exponent, 3))

# ~ a minute; lower replications for a quicker (noisier) look
curve = survival_curve(walk, zero, [100, 1000, 10_000], McConfig(seed=3, replications=10_000_000))
for n in (100, 1000, 10_000):
    est = curve.estimate(n)
    print(f"n={n:6d}  sqrt(n) P = {math.sqrt(n) * est.mean:.4f} +/- {math.sqrt(n) * est.std_error:.4f}")
