"""Brownian-motion and meander reference quantities."""

import math

import numpy as np
from scipy import special

from .errors import InvalidArgument

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)  # = 2 phi(0)


def phi(x):
    return np.exp(-0.5 * np.square(x)) / math.sqrt(2.0 * math.pi)


def Phi(x):
    return special.ndtr(x)


def Psi(y):
    """2 * integral_0^y phi = P(y + min_{t<=1} W(t) > 0) for y >= 0."""
    return special.erf(np.asarray(y, dtype=float) / math.sqrt(2.0))


def bm_constant_survival(x, t):
    """P(x + W(s) > 0 for all s <= t) = Psi(x / sqrt(t))."""
    if not t > 0:
        raise InvalidArgument("t must be positive")
    if x < 0:
        raise InvalidArgument("x must be non-negative")
    return float(Psi(x / math.sqrt(t)))


def meander_endpoint_cdf(v):
    """1 - exp(-v^2/2), the Rayleigh law of the meander endpoint."""
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise InvalidArgument("v must be non-negative")
    out = -np.expm1(-0.5 * v * v)
    return float(out) if out.ndim == 0 else out


def bm_survival_curve(g, times, step, cfg):
    """Survival of W above a continuous boundary ``g`` at each of ``times``.

    W is sampled on the grid ``step``; between grid points each path carries
    the bridge non-crossing probability 1 - exp(-2 d1 d2 / dt), with d1, d2
    the distances to the boundary at the two ends (exact for a boundary that is
    linear over the step).  The per-path estimator is the product of these
    factors, zero once a grid point falls on or below the boundary.
    """
    from .montecarlo import McEstimate, _estimate, map_batches

    if not g(0.0) < 0:
        raise InvalidArgument("boundary must start strictly below 0")
    if not step > 0:
        raise InvalidArgument("step must be positive")
    times = np.sort(np.asarray(times, dtype=float))
    if times[0] <= 0:
        raise InvalidArgument("times must be positive")
    m = int(math.ceil(times[-1] / step - 1e-9))
    grid = np.minimum(np.arange(m + 1) * step, times[-1])
    grid = np.unique(np.concatenate([grid, times]))
    gvals = np.array([g(t) for t in grid])
    dts = np.diff(grid)
    marks = {int(np.searchsorted(grid, t)): i for i, t in enumerate(times)}

    def one(b, size, rng):
        w = np.zeros(size)
        wt = np.ones(size)
        sums = np.zeros(times.size)
        sqs = np.zeros(times.size)
        alive = np.zeros(times.size, dtype=np.int64)
        d_prev = w - gvals[0]
        for j, dt in enumerate(dts, 1):
            w = w + rng.standard_normal(w.size) * math.sqrt(dt)
            d = w - gvals[j]
            keep = d > 0
            wt = wt * -np.expm1(-2.0 * d_prev * np.maximum(d, 0.0) / dt)
            if not keep.all():
                w, wt, d = w[keep], wt[keep], d[keep]
            d_prev = d
            i = marks.get(j)
            if i is not None:
                sums[i] = wt.sum()
                sqs[i] = (wt * wt).sum()
                alive[i] = w.size
            if w.size == 0:
                break
        return sums, sqs, alive

    parts = map_batches(one, cfg)
    out = []
    for i in range(times.size):
        est = _estimate(math.fsum(p[0][i] for p in parts), math.fsum(p[1][i] for p in parts),
                        cfg.replications, int(sum(p[2][i] for p in parts)))
        out.append(McEstimate(est.mean, est.std_error, est.replications, est.survivors))
    return out


def bm_moving_boundary_mc(g, t, step, cfg):
    """Bridge-corrected estimate of P(T^bm_g > t)."""
    return bm_survival_curve(g, [t], step, cfg)[0]
