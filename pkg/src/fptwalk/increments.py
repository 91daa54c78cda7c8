"""Increment schedules: the laws of independent, non-identically distributed steps X_k.

Every schedule exposes per-index laws plus exact moment bookkeeping (sigma_k^2,
B_n^2 and its logarithm) and the tail expectations used by the condition
checks in :mod:`fptwalk.diagnostics`.  Indices are 1-based throughout.
"""

from fractions import Fraction
from functools import cached_property, lru_cache
import math

import numpy as np

from .errors import InvalidArgument, OutOfDomain

MEAN_TOL = 1e-12


class DiscreteDistribution:
    """A finitely supported law with strictly increasing atoms."""

    def __init__(self, values, probs):
        values = np.asarray(values, dtype=float)
        probs = np.asarray(probs, dtype=float)
        if values.ndim != 1 or values.shape != probs.shape or values.size == 0:
            raise InvalidArgument("values and probs must be non-empty 1-d arrays of equal length")
        if np.any(probs <= 0):
            raise InvalidArgument("atom probabilities must be positive")
        if abs(math.fsum(probs) - 1.0) > 1e-12:
            raise InvalidArgument(f"probabilities sum to {math.fsum(probs)!r}, not 1")
        if np.any(np.diff(values) <= 0):
            raise InvalidArgument("atom values must be strictly increasing")
        values.flags.writeable = False
        probs.flags.writeable = False
        self.values = values
        self.probs = probs

    @classmethod
    def from_atoms(cls, atoms, *, normalize=False):
        """Build from ``(value, prob)`` pairs or a ``{value: prob}`` mapping.

        Duplicate values are merged and zero-probability atoms dropped.
        """
        if isinstance(atoms, dict):
            atoms = atoms.items()
        merged = {}
        for v, p in atoms:
            merged[float(v)] = merged.get(float(v), 0.0) + float(p)
        pairs = sorted((v, p) for v, p in merged.items() if p > 0)
        if not pairs:
            raise InvalidArgument("law has no atoms with positive mass")
        values, probs = (np.array(x) for x in zip(*pairs))
        if normalize:
            probs = probs / math.fsum(probs)
        return cls(values, probs)

    def __repr__(self):
        inner = ", ".join(f"{v:g}: {p:g}" for v, p in zip(self.values, self.probs))
        return f"DiscreteDistribution({{{inner}}})"

    def __len__(self):
        return self.values.size

    @property
    def mean(self):
        return math.fsum(self.values * self.probs)

    @property
    def second_moment(self):
        return math.fsum(self.values**2 * self.probs)

    @property
    def essup(self):
        return float(self.values[-1])

    @property
    def essinf(self):
        return float(self.values[0])

    @cached_property
    def _cdf(self):
        cdf = np.cumsum(self.probs)
        cdf[-1] = 1.0
        return cdf

    def sample(self, size, rng):
        idx = np.searchsorted(self._cdf, rng.random(size), side="right")
        return self.values[np.minimum(idx, self.values.size - 1)]

    def neg_tail_mean(self, t):
        """E[-X; -X > t]."""
        neg = -self.values
        return math.fsum(neg[neg > t] * self.probs[neg > t])

    def abs_tail_second_moment(self, t):
        """E[X^2; |X| > t]."""
        mask = np.abs(self.values) > t
        return math.fsum(self.values[mask] ** 2 * self.probs[mask])

    def truncated_power_moment(self, alpha, s):
        """E min(|X|^alpha / s^alpha, X^2 / s^2)."""
        r = np.abs(self.values) / s
        return math.fsum(np.minimum(r**alpha, r**2) * self.probs)

    def snap_to_lattice(self, span):
        """Mean-preserving projection onto ``span * Z``.

        Each atom's mass is split between its two neighbouring lattice points in
        proportion to proximity, which keeps the mean exactly and inflates the
        variance by at most span^2 / 4.
        """
        pos = self.values / span
        lo = np.floor(pos)
        frac = pos - lo
        on_lo = frac < 1e-9
        on_hi = frac > 1 - 1e-9
        atoms = {}
        for k, f, p, a, b in zip(lo, frac, self.probs, on_lo, on_hi):
            if a:
                pts = ((k, p),)
            elif b:
                pts = ((k + 1, p),)
            else:
                pts = ((k, p * (1 - f)), (k + 1, p * f))
            for m, q in pts:
                atoms[m] = atoms.get(m, 0.0) + q
        return DiscreteDistribution.from_atoms(((m * span, q) for m, q in atoms.items()),
                                               normalize=True)


class TruncatedPareto:
    """Law of xi * 1{|xi| <= level} where xi has density |x|^-3 on |x| >= 1.

    Carries an atom of mass level^-2 at zero and the density |x|^-3 on
    1 <= |x| <= level.
    """

    def __init__(self, level):
        if not level > 1:
            raise InvalidArgument("truncation level must exceed 1")
        self.level = float(level)

    def __repr__(self):
        return f"TruncatedPareto(level={self.level:g})"

    mean = 0.0

    @property
    def second_moment(self):
        return 2.0 * math.log(self.level)

    @property
    def essup(self):
        return self.level

    @property
    def essinf(self):
        return -self.level

    def sample(self, size, rng):
        # P(|xi| > x) = x^-2 on x >= 1
        mag = (1.0 - rng.random(size)) ** -0.5
        sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
        return np.where(mag <= self.level, sign * mag, 0.0)

    def neg_tail_mean(self, t):
        t = abs(t)  # symmetric and centred: E[-X; -X > t] = E[-X; -X > |t|] for t < 0
        lo = max(t, 1.0)
        return 1.0 / lo - 1.0 / self.level if lo < self.level else 0.0

    def abs_tail_second_moment(self, t):
        lo = max(t, 1.0)
        return 2.0 * math.log(self.level / lo) if lo < self.level else 0.0

    def truncated_power_moment(self, alpha, s):
        m = min(s, self.level)
        inner = 2.0 * (m ** (alpha - 2) - 1.0) / (alpha - 2) if m > 1 else 0.0
        return inner / s**alpha + self.abs_tail_second_moment(s) / s**2

    def discretize(self, h):
        """Cell-integrated law on ``h * Z``: cell [mh - h/2, mh + h/2) goes to mh.

        The two innermost non-zero atoms absorb any residual mean.
        """
        c = self.level
        m_max = int(math.ceil(c / h + 0.5))
        m = np.arange(1, m_max + 1, dtype=float)
        lo = np.clip(m * h - h / 2, 1.0, c)
        hi = np.clip(m * h + h / 2, 1.0, c)
        # integral of x^-3 over [lo, hi]
        pos = 0.5 * (lo**-2 - hi**-2)
        # cell 0 holds the atom at zero plus any density inside (-h/2, h/2)
        zero = c**-2 + (1.0 - min(h / 2, c) ** -2 if h / 2 > 1 else 0.0)
        values = np.concatenate([-m[::-1] * h, [0.0], m * h])
        probs = np.concatenate([pos[::-1], [zero], pos])
        keep = probs > 0
        values, probs = values[keep], probs[keep] / math.fsum(probs[keep])
        if values.size < 2:
            raise InvalidArgument(f"grid step {h} leaves fewer than 2 atoms at level {c}")
        resid = math.fsum(values * probs)
        if resid != 0.0:
            ip = np.flatnonzero(values > 0)[0]
            ineg = np.flatnonzero(values < 0)[-1]
            q = resid / (values[ip] - values[ineg])
            probs[ip] -= q
            probs[ineg] += q
        return DiscreteDistribution(values, probs)


def _common_span(values, max_den=10**6, tol=1e-12):
    """Largest span s with every value in s * Z, or None if values are not rational enough."""
    fracs = []
    for v in np.unique(np.abs(np.asarray(values, dtype=float))):
        if v == 0:
            continue
        f = Fraction(float(v)).limit_denominator(max_den)
        if abs(float(f) - v) > tol * max(1.0, v):
            return None
        fracs.append(f)
    if not fracs:
        return None
    den = math.lcm(*(f.denominator for f in fracs))
    num = math.gcd(*(f.numerator * (den // f.denominator) for f in fracs))
    return float(Fraction(num, den))


class IncrementSchedule:
    """Base class: a sequence of independent zero-mean laws X_1, ..., X_{n_max}.

    Subclasses fill ``_sigma2`` (or ``_log_sigma2``) and implement ``law_at``.
    The tail-expectation methods take 1-based index arrays and broadcast; the
    defaults loop over ``law_at`` and families override them with closed forms.
    """

    family = "abstract"
    lattice = None

    def __init__(self, n_max, sigma2=None, log_sigma2=None, params=None):
        if n_max < 1:
            raise InvalidArgument("n_max must be >= 1")
        self.n_max = int(n_max)
        self.params = dict(params or {})
        if sigma2 is not None:
            sigma2 = np.asarray(sigma2, dtype=float)
            if np.any(sigma2 <= 0):
                raise InvalidArgument("every variance sigma_k^2 must be positive")
            self._sigma2 = sigma2
            self._cum_var = np.concatenate([[0.0], np.cumsum(sigma2)])
            with np.errstate(divide="ignore"):
                self._log_cum_var = np.log(self._cum_var)
        else:
            log_sigma2 = np.asarray(log_sigma2, dtype=float)
            with np.errstate(over="ignore"):
                self._sigma2 = np.exp(log_sigma2)
            self._log_cum_var = np.concatenate([[-np.inf], np.logaddexp.accumulate(log_sigma2)])
            with np.errstate(over="ignore"):
                self._cum_var = np.exp(self._log_cum_var)
        for a in (self._sigma2, self._cum_var, self._log_cum_var):
            a.flags.writeable = False

    def __repr__(self):
        return f"{type(self).__name__}(n_max={self.n_max}, {self.params})"

    def _check(self, k):
        if not 1 <= k <= self.n_max:
            raise OutOfDomain(f"index {k} outside 1..{self.n_max}")

    def law_at(self, k):
        raise NotImplementedError

    def sigma2_at(self, k):
        self._check(k)
        return float(self._sigma2[k - 1])

    def cum_var(self, n):
        if n != 0:
            self._check(n)
        return float(self._cum_var[n])

    def log_cum_var(self, n):
        if n != 0:
            self._check(n)
        return float(self._log_cum_var[n])

    @property
    def sigma2(self):
        """sigma_k^2 for k = 1..n_max."""
        return self._sigma2

    @property
    def cum_vars(self):
        """B_n^2 for n = 0..n_max (entry 0 is 0)."""
        return self._cum_var

    @property
    def log_cum_vars(self):
        return self._log_cum_var

    def b(self, n):
        return math.sqrt(self.cum_var(n))

    def essup_at(self, k):
        return self.law_at(k).essup

    def sample(self, k, size, rng):
        return self.law_at(k).sample(size, rng)

    # vectorised tail expectations; ks are 1-based index arrays

    def neg_tail_mean(self, ks, t):
        ks, t = np.broadcast_arrays(np.asarray(ks), np.asarray(t, dtype=float))
        return np.array([self.law_at(int(k)).neg_tail_mean(x) for k, x in zip(ks.ravel(), t.ravel())]
                        ).reshape(ks.shape)

    def abs_tail_second_moment(self, ks, t):
        ks, t = np.broadcast_arrays(np.asarray(ks), np.asarray(t, dtype=float))
        return np.array([self.law_at(int(k)).abs_tail_second_moment(x)
                         for k, x in zip(ks.ravel(), t.ravel())]).reshape(ks.shape)

    def truncated_power_moment(self, ks, alpha, s):
        return np.array([self.law_at(int(k)).truncated_power_moment(alpha, s) for k in np.ravel(ks)])

    def abs_atoms(self, n):
        """(|x|, x^2 p) over all atoms of X_1..X_n, or None for non-discrete laws."""
        mags, weights = [], []
        for k in range(1, n + 1):
            law = self.law_at(k)
            if not isinstance(law, DiscreteDistribution):
                return None
            mags.append(np.abs(law.values))
            weights.append(law.values**2 * law.probs)
        return np.concatenate(mags), np.concatenate(weights)

    def lattice_approximation(self, span):
        """Discrete schedule on ``span * Z`` obtained by mean-preserving snapping."""
        if not span > 0:
            raise InvalidArgument("span must be positive")
        laws = [self.law_at(k).snap_to_lattice(span) for k in range(1, self.n_max + 1)]
        sched = DiscreteSchedule(laws, span=span)
        sched.params = {"source": self.to_config(), "span": span}
        return sched

    def to_config(self):
        return {"family": self.family, "params": dict(self.params)}


class DiscreteSchedule(IncrementSchedule):
    """Arbitrary per-index discrete laws."""

    family = "discrete"

    def __init__(self, laws, span=None):
        laws = [law if isinstance(law, DiscreteDistribution) else DiscreteDistribution.from_atoms(law)
                for law in laws]
        for k, law in enumerate(laws, 1):
            scale = max(1.0, float(np.max(np.abs(law.values))))
            if abs(law.mean) > MEAN_TOL * scale:
                raise InvalidArgument(f"law at k={k} has mean {law.mean!r}, expected 0")
        self._laws = laws
        super().__init__(len(laws), sigma2=[law.second_moment for law in laws],
                         params={"laws": [[[float(v), float(p)] for v, p in zip(law.values, law.probs)]
                                          for law in laws]})
        if span is None:
            span = _common_span(np.concatenate([law.values for law in laws]))
        elif any(np.max(np.abs(law.values / span - np.round(law.values / span))) > 1e-9 for law in laws):
            raise InvalidArgument(f"laws are not supported on {span} * Z")
        self.lattice = span

    def law_at(self, k):
        self._check(k)
        return self._laws[k - 1]


class RademacherSchedule(IncrementSchedule):
    """X_k = a_k * xi_k with xi_k = +-1 equiprobable.

    Pass ``weights`` directly, or ``log_weights`` when a_k overflows doubles;
    in the latter case no lattice is declared and laws are built lazily.
    """

    family = "weighted_rademacher"

    def __init__(self, weights=None, log_weights=None, params=None):
        if (weights is None) == (log_weights is None):
            raise InvalidArgument("give exactly one of weights, log_weights")
        if weights is not None:
            w = np.asarray(weights, dtype=float)
            if w.ndim != 1 or w.size == 0 or np.any(~(w > 0)) or not np.all(np.isfinite(w)):
                raise InvalidArgument("weights must be a non-empty sequence of positive finite reals")
            self._w = w
            self._logw = np.log(w)
            super().__init__(w.size, sigma2=w**2,
                             params=params if params is not None else {"weights": w.tolist()})
            self.lattice = _common_span(w)
        else:
            lw = np.asarray(log_weights, dtype=float)
            self._logw = lw
            with np.errstate(over="ignore"):
                self._w = np.exp(lw)
            super().__init__(lw.size, log_sigma2=2 * lw, params=params)
        self._w.flags.writeable = False
        self._logw.flags.writeable = False

    @property
    def weights(self):
        return self._w

    @property
    def log_weights(self):
        return self._logw

    def law_at(self, k):
        self._check(k)
        a = self._w[k - 1]
        if not np.isfinite(a):
            raise OutOfDomain(f"weight at k={k} overflows double precision")
        return DiscreteDistribution([-a, a], [0.5, 0.5])

    def essup_at(self, k):
        self._check(k)
        return float(self._w[k - 1])

    def sample(self, k, size, rng):
        a = self._w[k - 1]
        return a * (2.0 * rng.integers(0, 2, size=size, dtype=np.int8) - 1.0)

    def neg_tail_mean(self, ks, t):
        a = self._w[np.asarray(ks) - 1]
        t = np.asarray(t, dtype=float)
        return 0.5 * a * (a > t) - 0.5 * a * (-a > t)

    def abs_tail_second_moment(self, ks, t):
        a = self._w[np.asarray(ks) - 1]
        return np.where(a > np.asarray(t), a**2, 0.0)

    def truncated_power_moment(self, ks, alpha, s):
        lr = self._logw[np.asarray(ks) - 1] - math.log(s)
        return np.exp(np.where(lr < 0, alpha * lr, 2 * lr))

    def abs_atoms(self, n):
        return self._w[:n].copy(), self._w[:n] ** 2


class FourPointSchedule(IncrementSchedule):
    """P(X_n = +-sqrt(n)) = p_n/2, P(X_n = +-a_n) = (1-p_n)/2 with unit variance.

    p_n = 1/(n log(2+n)) and a_n = sqrt((1 - n p_n)/(1 - p_n)).
    """

    family = "four_point"

    def __init__(self, n_max):
        n = np.arange(1, int(n_max) + 1, dtype=float)
        self.p = 1.0 / (n * np.log(2.0 + n))
        self.a = np.sqrt((1.0 - n * self.p) / (1.0 - self.p))
        self.big = np.sqrt(n)
        for x in (self.p, self.a, self.big):
            x.flags.writeable = False
        second = self.p * self.big**2 + (1.0 - self.p) * self.a**2
        super().__init__(n_max, sigma2=second, params={"n_max": int(n_max)})

    @lru_cache(maxsize=4096)
    def law_at(self, k):
        self._check(k)
        p, a, r = self.p[k - 1], self.a[k - 1], self.big[k - 1]
        return DiscreteDistribution.from_atoms([(-r, p / 2), (r, p / 2), (-a, (1 - p) / 2), (a, (1 - p) / 2)])

    def essup_at(self, k):
        self._check(k)
        return float(max(self.big[k - 1], self.a[k - 1]))

    def sample(self, k, size, rng):
        u = rng.random(size)
        p = self.p[k - 1]
        mag = np.where(u < p, self.big[k - 1], self.a[k - 1])
        # reuse u: conditional on the branch, its position within the branch is uniform
        upper = np.where(u < p, u < p / 2, u < p + (1 - p) / 2)
        return np.where(upper, mag, -mag)

    def _mix(self, ks, fn):
        i = np.asarray(ks) - 1
        p = self.p[i]
        return p * fn(self.big[i]) + (1 - p) * fn(self.a[i])

    def neg_tail_mean(self, ks, t):
        t = np.asarray(t, dtype=float)
        return self._mix(ks, lambda r: 0.5 * r * (r > t) - 0.5 * r * (-r > t))

    def abs_tail_second_moment(self, ks, t):
        t = np.asarray(t, dtype=float)
        return self._mix(ks, lambda r: np.where(r > t, r**2, 0.0))

    def truncated_power_moment(self, ks, alpha, s):
        return self._mix(ks, lambda r: np.minimum((r / s) ** alpha, (r / s) ** 2))

    def abs_atoms(self, n):
        return (np.concatenate([self.big[:n], self.a[:n]]),
                np.concatenate([self.p[:n] * self.big[:n] ** 2, (1 - self.p[:n]) * self.a[:n] ** 2]))


class TruncatedParetoSchedule(IncrementSchedule):
    """X_n = xi_n 1{|xi_n| <= sqrt(n) log^p(n+2)} with xi_n of density |x|^-3 on |x| >= 1.

    Levels that come out <= 1 (possible at small n when p < 0) would make X_n
    degenerate; they are lifted to 2.
    """

    family = "truncated_pareto"

    def __init__(self, p, grid_step, n_max):
        if not grid_step > 0:
            raise InvalidArgument("grid_step must be positive")
        self.p = float(p)
        self.grid_step = float(grid_step)
        n = np.arange(1, int(n_max) + 1, dtype=float)
        self.raw_levels = np.sqrt(n) * np.log(n + 2) ** self.p
        self.levels = np.where(self.raw_levels > 1, self.raw_levels, 2.0)
        self.levels.flags.writeable = False
        super().__init__(n_max, sigma2=2 * np.log(self.levels),
                         params={"p": self.p, "grid_step": self.grid_step, "n_max": int(n_max)})

    def law_at(self, k):
        self._check(k)
        return TruncatedPareto(self.levels[k - 1])

    def essup_at(self, k):
        self._check(k)
        return float(self.levels[k - 1])

    def sample(self, k, size, rng):
        return TruncatedPareto(self.levels[k - 1]).sample(size, rng)

    def neg_tail_mean(self, ks, t):
        c = self.levels[np.asarray(ks) - 1]
        lo = np.maximum(np.abs(np.asarray(t, dtype=float)), 1.0)
        return np.where(lo < c, 1.0 / lo - 1.0 / c, 0.0)

    def abs_tail_second_moment(self, ks, t):
        c = self.levels[np.asarray(ks) - 1]
        lo = np.maximum(np.asarray(t, dtype=float), 1.0)
        return np.where(lo < c, 2.0 * np.log(c / lo), 0.0)

    def truncated_power_moment(self, ks, alpha, s):
        return np.array([TruncatedPareto(c).truncated_power_moment(alpha, s)
                         for c in self.levels[np.asarray(ks) - 1]])

    def abs_atoms(self, n):
        return None

    def lattice_approximation(self, span=None):
        """Cell-integrated discretisation onto ``grid_step * Z`` (or ``span * Z``)."""
        h = self.grid_step if span is None else float(span)
        sched = DiscreteSchedule([TruncatedPareto(c).discretize(h) for c in self.levels], span=h)
        sched.params = {"source": self.to_config(), "span": h}
        return sched


def make_weighted_rademacher(weights):
    return RademacherSchedule(weights=weights)


def make_power_weighted(p, n_max):
    """Weights a_k = k^p."""
    k = np.arange(1, int(n_max) + 1, dtype=float)
    sched = RademacherSchedule(weights=k**p, params={"p": float(p), "n_max": int(n_max)})
    sched.family = "power_weighted"
    return sched


def make_ssrw(n_max):
    sched = RademacherSchedule(weights=np.ones(int(n_max)), params={"n_max": int(n_max)})
    sched.family = "ssrw"
    return sched


def make_four_point(n_max):
    return FourPointSchedule(n_max)


def make_truncated_pareto(p, grid_step, n_max):
    return TruncatedParetoSchedule(p, grid_step, n_max)


def make_weibullian(alpha, n_max):
    """Weights a_k = exp(k^alpha), 0 < alpha < 1, tracked in log scale."""
    if not 0 < alpha < 1:
        raise InvalidArgument("alpha must lie in (0, 1)")
    k = np.arange(1, int(n_max) + 1, dtype=float)
    sched = RademacherSchedule(log_weights=k**alpha, params={"alpha": float(alpha), "n_max": int(n_max)})
    sched.family = "weibullian"
    return sched


def feasibility_check(schedule, boundary, n):
    """True iff sum_{k<=m} essup X_k > g_m for every m <= n."""
    if n < 1:
        raise InvalidArgument("n must be >= 1")
    total = 0.0
    for m in range(1, n + 1):
        total += schedule.essup_at(m)
        if math.isinf(total):
            return True
        if not total > boundary.g_at(m):
            return False
    return True
