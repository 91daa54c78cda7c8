"""Lindeberg-type quantities and finite-horizon verdicts for series conditions.

All series here have non-negative terms.  A verdict is drawn from the last
decades of partial sums: with D_j the increment over the decade ending at
10^j, the decade increments are treated as a series in j and fitted locally
by j^-q.  Increments decaying no faster than ~1/j (q <= 1.25, and q not
rising from the previous decade) read as divergence; q >= 1.5 or a
negligible last increment read as convergence; anything else is inconclusive.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import optimize

from .boundaries import envelopes
from .errors import ConditionInapplicable, InvalidArgument

CONVERGED_REL = 1e-6
DIVERGE_Q = 1.25
CONVERGE_Q = 1.5
RISING_TOL = 0.05


@dataclass(frozen=True)
class ConditionVerdict:
    name: str
    partial_sums: list
    classification: str
    horizon_limited: bool = False
    decade_exponent: float = math.nan

    def to_dict(self):
        return {"name": self.name, "classification": self.classification,
                "horizon_limited": self.horizon_limited, "decade_exponent": self.decade_exponent,
                "partial_sums": [[int(n), float(v)] for n, v in self.partial_sums]}


def _grid(N):
    pts = {N}
    for e in range(0, int(math.log10(N)) + 1):
        for m in (1, 2, 5):
            if m * 10**e <= N:
                pts.add(m * 10**e)
    return sorted(pts)


def classify(cumsum):
    """Classify from cumulative sums ``cumsum[N-1] = sum_{n<=N}``; returns (label, q)."""
    N = cumsum.size
    total = float(cumsum[-1])

    def at(n):
        n = int(round(n))
        return float(cumsum[n - 1]) if n >= 1 else 0.0

    def exponent(end):
        last = at(end) - at(end / 10)
        prev = at(end / 10) - at(end / 100)
        if last <= 0 or prev <= 0:
            return math.nan
        j = math.log10(end)
        return math.log(prev / last) / math.log(j / (j - 1))

    if total - at(N / 10) <= CONVERGED_REL * (total + 1):
        return "converges", math.inf
    if N < 100:
        return "inconclusive", math.nan
    q = exponent(N)
    if math.isnan(q):
        return "inconclusive", q
    if q >= CONVERGE_Q:
        return "converges", q
    q_prev = exponent(N / 10) if N >= 1000 else q
    if q <= DIVERGE_Q and not q > q_prev + RISING_TOL:
        return "diverges", q
    return "inconclusive", q


def verdict(name, terms, horizon_limited=False, offset=0):
    """Build a verdict from terms for n = 1 + offset, 2 + offset, ...

    Leading indices not covered by a series are passed as zero terms.
    """
    terms = np.concatenate([np.zeros(offset), np.asarray(terms, dtype=float)])
    if np.any(terms < 0):
        raise ValueError(f"{name}: negative term")
    cs = np.cumsum(terms)
    label, q = classify(cs)
    return ConditionVerdict(name, [(n, float(cs[n - 1])) for n in _grid(cs.size)], label,
                            horizon_limited, q)


def _check_horizon(schedule, N):
    if N > schedule.n_max:
        raise InvalidArgument(f"schedule defined only up to {schedule.n_max}, asked for {N}")


def lindeberg_fraction(schedule, n, eps):
    """L_n^2(eps) = B_n^-2 sum_{k<=n} E[X_k^2; |X_k| > eps B_n]."""
    if not eps > 0 or n < 1:
        raise InvalidArgument("need eps > 0 and n >= 1")
    b2 = schedule.cum_var(n)
    ks = np.arange(1, n + 1)
    val = math.fsum(schedule.abs_tail_second_moment(ks, eps * math.sqrt(b2))) / b2
    return min(max(val, 0.0), 1.0)


def lambda_n(schedule, n):
    """Smallest eps > 0 with L_n(eps) <= eps."""
    if n < 1:
        raise InvalidArgument("n must be >= 1")
    b = math.sqrt(schedule.cum_var(n))
    atoms = schedule.abs_atoms(n)
    if atoms is None:
        top = max(schedule.essup_at(k) for k in range(1, n + 1)) / b
        fn = lambda e: math.sqrt(lindeberg_fraction(schedule, n, e)) - e  # noqa: E731
        if fn(top) <= 0 and top > 0 and fn(1e-300) > 0:
            return optimize.brentq(fn, 1e-300, top, xtol=1e-15, rtol=1e-13)
        return top
    mags, w = atoms
    keep = mags > 0
    mags, w = mags[keep], w[keep]
    jumps, inv = np.unique(mags / b, return_inverse=True)
    wsum = np.bincount(inv, weights=w, minlength=jumps.size)
    # level of L^2 on [e_i, e_{i+1}): mass strictly above e_i
    above = np.concatenate([np.cumsum(wsum[::-1])[::-1], [0.0]]) / (b * b)
    lo = np.concatenate([[0.0], jumps])
    hi = np.concatenate([jumps, [np.inf]])
    cand = np.maximum(lo, np.sqrt(np.clip(above, 0.0, None)))
    ok = np.flatnonzero(cand < hi)
    return float(cand[ok[0]])


def truncated_lindeberg(schedule, n, alpha, eps):
    """sum_{k<=n} E min(|X_k|^alpha/(eps B_n)^alpha, X_k^2/(eps B_n)^2)."""
    if not alpha > 2:
        raise InvalidArgument("alpha must exceed 2")
    if not eps > 0:
        raise InvalidArgument("eps must be positive")
    s = eps * math.sqrt(schedule.cum_var(n))
    return math.fsum(schedule.truncated_power_moment(np.arange(1, n + 1), alpha, s))


def series_lind_plus(schedule, eps, N):
    """sum_n B_n^-1 E[-X_n; -X_n > eps B_n]."""
    if not eps > 0:
        raise InvalidArgument("eps must be positive")
    _check_horizon(schedule, N)
    ks = np.arange(1, N + 1)
    b = np.sqrt(schedule.cum_vars[1:N + 1])
    return verdict("Lind+", schedule.neg_tail_mean(ks, eps * b) / b)


def _weights(schedule, N):
    b2 = schedule.cum_vars[1:N + 1]
    return schedule.sigma2[:N] / (b2 * np.sqrt(b2))


def series_sum_minus(schedule, boundary, N):
    """sum_{n>=2} sigma_n^2 B_n^-3 (sup g - sup_{k>=n} g_k)."""
    _check_horizon(schedule, N)
    env = envelopes(boundary, N)
    if not np.isfinite(env.upper[0]):
        raise ConditionInapplicable("sup g_n is infinite")
    terms = (_weights(schedule, N) * (env.upper[0] - env.upper))[1:]
    return verdict("Sum-", terms, env.horizon_limited, offset=1)


def series_sum_plus(schedule, boundary, N):
    """sum_{n>=2} sigma_n^2 B_n^-3 (g_1 - min_{k<=n} g_k)."""
    _check_horizon(schedule, N)
    env = envelopes(boundary, N)
    terms = (_weights(schedule, N) * (env.lower[0] - env.lower))[1:]
    return verdict("Sum+", terms, False, offset=1)


def series_h_conditions(schedule, boundary, h, N):
    """Verdicts for sum B_n^-1 E[-X_n; -X_n > H_n] and sum sigma_n^2 h_n B_n^-3.

    H_n = h_n + g_{n-1} - min_{k<=n} g_k with g_0 taken as g_1.
    ``h`` is an array (h_1, ...) or a callable on index arrays.
    """
    _check_horizon(schedule, N)
    ks = np.arange(1, N + 1)
    h = np.asarray(h(ks) if callable(h) else h, dtype=float)[:N]
    if h.size < N:
        raise InvalidArgument("h shorter than N")
    if np.any(h <= 0) or np.any(np.diff(h) < 0):
        raise InvalidArgument("h must be positive and non-decreasing")
    env = envelopes(boundary, N)
    g = boundary.values(N)
    g_prev = np.concatenate([[env.lower[0]], g[:-1]])
    big_h = h + g_prev - env.lower
    b = np.sqrt(schedule.cum_vars[1:N + 1])
    hlind = verdict("hLind", schedule.neg_tail_mean(ks, big_h) / b)
    hsum = verdict("hSum", _weights(schedule, N) * h)
    return hlind, hsum


def series_lind_plus_gamma(schedule, gamma, N):
    """sum_k B_k^-1 E[-X_{k+1}; -X_{k+1} > B_k / log^{1+gamma} B_k^2], k = 1..N-1.

    Indices with B_k^2 <= 1 (log not positive) contribute nothing.
    """
    if not gamma > 0:
        raise InvalidArgument("gamma must be positive")
    _check_horizon(schedule, N)
    k = np.arange(1, N)
    lb2 = schedule.log_cum_vars[1:N]
    b = np.exp(0.5 * lb2)
    with np.errstate(divide="ignore", invalid="ignore"):
        thr = np.where(lb2 > 0, b / np.where(lb2 > 0, lb2, 1.0) ** (1 + gamma), np.inf)
    terms = np.where(np.isfinite(thr), schedule.neg_tail_mean(k + 1, np.where(np.isfinite(thr), thr, 0.0)), 0.0)
    return verdict("Lind+gamma", terms / b)


corollary_gamma_check = series_lind_plus_gamma


@dataclass(frozen=True)
class FGamma:
    value: float
    divergent: bool


def weighted_f_gamma(weights, gamma, x, N, *, log_weights=False):
    """sum_{k<=N} (a_k/B_k) 1{x > B_k / (a_k log^{1+gamma} B_k)}.

    ``divergent`` flags an indicator still switched on over the last tenth of
    the range, i.e. a sum that keeps growing with N.  Pass log a_k with
    ``log_weights=True`` for weights that overflow.
    """
    if not x > 0:
        raise InvalidArgument("x must be positive")
    lw = np.asarray(weights, dtype=float)[:N]
    if not log_weights:
        lw = np.log(lw)
    if lw.size < N:
        raise InvalidArgument("fewer weights than N")
    lb = 0.5 * np.logaddexp.accumulate(2 * lw)  # log B_k
    ratio = np.exp(lw - lb)
    if gamma == -1:
        log_thr = lb - lw
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            log_thr = np.where(lb > 0, lb - lw - (1 + gamma) * np.log(np.where(lb > 0, lb, 1.0)), np.inf)
    on = math.log(x) > log_thr
    tail = on[int(0.9 * N):]
    return FGamma(math.fsum(ratio[on]), bool(tail.size and tail.all()))
