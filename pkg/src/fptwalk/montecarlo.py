"""Monte Carlo survival estimates and rejection-conditioned path samples.

Replications are split into fixed-size batches.  Batch ``b`` draws from a
Philox (counter-based) generator keyed by ``(seed, stream_id, b)``, and batch
results are merged in batch order, so estimates do not depend on how many
worker threads ran the batches.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math

import numpy as np
from scipy import stats

from .errors import InsufficientSurvivors, InvalidArgument
from .increments import IncrementSchedule
from .reference import meander_endpoint_cdf


@dataclass(frozen=True)
class McConfig:
    seed: int = 0
    replications: int = 100_000
    batch_size: int = 1 << 16
    stream_id: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.replications < 1 or self.batch_size < 1:
            raise InvalidArgument("replications and batch_size must be >= 1")

    @property
    def n_batches(self):
        return -(-self.replications // self.batch_size)

    def batch_len(self, b):
        return min(self.batch_size, self.replications - b * self.batch_size)

    def rng(self, b):
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, b))
        return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    replications: int
    survivors: int

    def to_dict(self):
        return {"mean": self.mean, "std_error": self.std_error,
                "replications": self.replications, "survivors": self.survivors}


def _estimate(total, total_sq, reps, survivors):
    mean = total / reps
    var = max(total_sq / reps - mean * mean, 0.0) * (reps / (reps - 1) if reps > 1 else 1.0)
    return McEstimate(mean, math.sqrt(var / reps), reps, survivors)


def map_batches(fn, cfg, stop=None):
    """Run ``fn(b, size, rng)`` over the batches of ``cfg`` and return results in order.

    ``stop(results_so_far)`` ends the run after the first batch (in batch
    order) for which it returns True; batches computed beyond that point are
    discarded so the outcome never depends on ``cfg.threads``.
    """
    out = []
    step = max(1, cfg.threads)
    with ThreadPoolExecutor(max_workers=step) as pool:
        for first in range(0, cfg.n_batches, step):
            ids = range(first, min(first + step, cfg.n_batches))
            for res in pool.map(lambda b: fn(b, cfg.batch_len(b), cfg.rng(b)), ids):
                out.append(res)
                if stop is not None and stop(out):
                    return out
    return out


def _midpoint_index(schedule, n):
    """First k with B_k^2 >= B_n^2 / 2 and the interpolation weight within step k."""
    cv = schedule.cum_vars
    half = cv[n] / 2
    k = int(np.searchsorted(cv[1:n + 1], half, side="left")) + 1
    return k, (half - cv[k - 1]) / schedule.sigma2[k - 1]


def _simulate(schedule, g, n, size, rng, checkpoints, record):
    """Killed paths for one batch.

    Returns survivor counts and sums of Z = S - g at ``checkpoints`` and, when
    ``record``, the survivors' S_n, s(B_n^2/2) and broken-line minimum over
    [B_n^2/2, B_n^2].
    """
    s = np.zeros(size)
    cps = {c: i for i, c in enumerate(checkpoints)}
    counts = np.zeros(len(checkpoints), dtype=np.int64)
    zsum = np.zeros(len(checkpoints))
    zsq = np.zeros(len(checkpoints))
    k_mid, w_mid = _midpoint_index(schedule, n) if record else (0, 0.0)
    mid = wmin = None
    for k in range(1, n + 1):
        x = schedule.sample(k, s.size, rng)
        if k == k_mid:
            mid = s + w_mid * x
        s += x
        if mid is not None:
            wmin = mid.copy() if wmin is None else wmin
            np.minimum(wmin, s, out=wmin)
        keep = s > g[k - 1]
        if not keep.all():
            s = s[keep]
            if mid is not None:
                mid, wmin = mid[keep], wmin[keep]
        i = cps.get(k)
        if i is not None:
            z = s - g[k - 1]
            counts[i] = s.size
            zsum[i] = z.sum()
            zsq[i] = (z * z).sum()
        if s.size == 0:
            break
    out = {"counts": counts, "zsum": zsum, "zsq": zsq}
    if record:
        empty = np.zeros(0)
        out.update(s_end=s, mid=mid if mid is not None else empty, wmin=wmin if wmin is not None else empty)
    return out


@dataclass(frozen=True)
class SurvivalCurve:
    """Survival counts and Z*_n moments at a grid of n from one set of paths."""

    ns: np.ndarray
    survivors: np.ndarray
    replications: int
    z_sum: np.ndarray
    z_sq: np.ndarray

    def _i(self, n):
        i = int(np.searchsorted(self.ns, n))
        if i >= self.ns.size or self.ns[i] != n:
            raise KeyError(f"n={n} not on the simulated grid")
        return i

    def estimate(self, n):
        i = self._i(n)
        c = int(self.survivors[i])
        return _estimate(float(c), float(c), self.replications, c)

    def ez_star(self, n):
        """Estimate of E Z*_n = E[S_n - g_n; T_g > n]."""
        i = self._i(n)
        return _estimate(float(self.z_sum[i]), float(self.z_sq[i]), self.replications,
                         int(self.survivors[i]))


def survival_curve(schedule, boundary, ns, cfg):
    ns = np.unique(np.asarray(ns, dtype=np.int64))
    if ns.size == 0 or ns[0] < 1:
        raise InvalidArgument("n grid must be non-empty with n >= 1")
    n = int(ns[-1])
    g = boundary.values(n)
    cps = [int(x) for x in ns]
    parts = map_batches(lambda b, size, rng: _simulate(schedule, g, n, size, rng, cps, False), cfg)
    counts = np.sum([p["counts"] for p in parts], axis=0)
    zsum = np.array([math.fsum(p["zsum"][i] for p in parts) for i in range(ns.size)])
    zsq = np.array([math.fsum(p["zsq"][i] for p in parts) for i in range(ns.size)])
    return SurvivalCurve(ns, counts, cfg.replications, zsum, zsq)


def estimate_survival(schedule, boundary, n, cfg):
    """Indicator-mean estimate of P(T_g > n)."""
    if n < 1:
        raise InvalidArgument("n must be >= 1")
    return survival_curve(schedule, boundary, [n], cfg).estimate(n)


@dataclass(frozen=True)
class ConditionalSample:
    """Rejection sample of paths with T_g > n, scaled by B_n.

    ``endpoints`` holds (S_n - g_n)/B_n, ``midpoints`` s_n(1/2) and
    ``window_min`` the minimum of s_n over [1/2, 1].
    """

    endpoints: np.ndarray
    midpoints: np.ndarray
    window_min: np.ndarray
    replications: int
    n: int = 0
    extra: dict = field(default_factory=dict, repr=False)

    @property
    def survivors(self):
        return self.endpoints.size

    def tail(self, v):
        """Empirical P(endpoint > v)."""
        return float(np.mean(self.endpoints > v))


def conditional_endpoint_sample(schedule, boundary, n, cfg, min_survivors=None):
    """Keep paths surviving to n.

    With ``min_survivors`` the run stops at the first batch (in order) that
    brings the count to the target; ``cfg.replications`` is then the budget.
    """
    g = boundary.values(n)
    b_n = math.sqrt(schedule.cum_var(n))

    def one(b, size, rng):
        return _simulate(schedule, g, n, size, rng, [n], True)

    stop = None
    if min_survivors is not None:
        stop = lambda parts: sum(p["s_end"].size for p in parts) >= min_survivors  # noqa: E731
    parts = map_batches(one, cfg, stop)
    reps = sum(cfg.batch_len(b) for b in range(len(parts)))
    s_end = np.concatenate([p["s_end"] for p in parts])
    found = s_end.size
    if found == 0 or (min_survivors is not None and found < min_survivors):
        raise InsufficientSurvivors(f"{found} survivors after {reps} paths", found)
    return ConditionalSample(endpoints=(s_end - g[n - 1]) / b_n,
                             midpoints=np.concatenate([p["mid"] for p in parts]) / b_n,
                             window_min=np.concatenate([p["wmin"] for p in parts]) / b_n,
                             replications=reps, n=n)


class GaussianSteps(IncrementSchedule):
    """Standard normal increments; used only as the meander oracle."""

    family = "gaussian"

    def __init__(self, n_max):
        super().__init__(n_max, sigma2=np.ones(int(n_max)), params={"n_max": int(n_max)})

    def sample(self, k, size, rng):
        return rng.standard_normal(size)

    def essup_at(self, k):
        return math.inf


def simulate_meander_oracle(steps, cfg, min_survivors=None):
    """Gaussian walk conditioned to stay positive for ``steps`` steps, scaled by sqrt(steps)."""
    if steps < 1000:
        raise InvalidArgument("oracle needs at least 1000 steps")
    from .boundaries import make_boundary
    return conditional_endpoint_sample(GaussianSteps(steps), make_boundary("constant", {"x": 0.0}),
                                       steps, cfg, min_survivors)


def meander_ks(sample):
    """KS distance of endpoints from the Rayleigh law 1 - exp(-v^2/2)."""
    v = sample.endpoints if isinstance(sample, ConditionalSample) else np.asarray(sample, dtype=float)
    if v.size == 0:
        raise InvalidArgument("empty sample")
    return float(stats.kstest(v, lambda x: meander_endpoint_cdf(np.maximum(x, 0.0))).statistic)


def two_sample_ks(a, b):
    return float(stats.ks_2samp(a, b).statistic)
