"""Endpoint of the walk conditioned to stay positive vs the Rayleigh law, and the midpoint vs a Gaussian oracle."""

import math

from fptwalk import (McConfig, conditional_endpoint_sample, make_boundary, make_ssrw, meander_ks,
                     simulate_meander_oracle, two_sample_ks)

n = 5000
smp = conditional_endpoint_sample(make_ssrw(n), make_boundary("constant", {"x": 0.0}), n,
                                  McConfig(seed=11, replications=10_000_000), min_survivors=5000)
print(f"{smp.survivors} survivors from {smp.replications} paths")
for v in (0.5, 1.0, 1.5, 2.0):
    print(f"P(endpoint > {v}) = {smp.tail(v):.4f}   exp(-v^2/2) = {math.exp(-v * v / 2):.4f}")
print("KS vs Rayleigh:", meander_ks(smp))

oracle = simulate_meander_oracle(n, McConfig(seed=12, replications=10_000_000), min_survivors=5000)
print("two-sample KS of s(1/2):", two_sample_ks(smp.midpoints, oracle.midpoints))
print("two-sample KS of min over [1/2, 1]:", two_sample_ks(smp.window_min, oracle.window_min))
