"""Exact forward dynamic programming for walks on a lattice ``span * Z``.

The sub-probability law of S_n on {T_g > n} is evolved step by step: convolve
with the law of X_n, then remove (kill) all mass at S_n <= g_n.  Killed mass
and its first moment are accumulated so that the optional-stopping identity
can be checked to rounding error.
"""

from dataclasses import dataclass, field
from fractions import Fraction
import logging
import math

import numpy as np

from .boundaries import is_non_increasing_from
from .errors import (BudgetExceeded, IncompatibleLattice, InvalidArgument, PreconditionViolated,
                     UndefinedConditional)

log = logging.getLogger(__name__)

FLUSH = 1e-300
DEFAULT_MAX_STATES = 50_000_000


@dataclass(frozen=True)
class LatticeDistribution:
    """Masses on the points offset + (start + i) * span, i = 0..len-1."""

    span: float
    start: int
    masses: np.ndarray
    offset: float = 0.0

    @property
    def total_mass(self):
        return float(np.sum(self.masses))

    @property
    def values(self):
        return self.offset + (self.start + np.arange(self.masses.size)) * self.span

    @property
    def stop(self):
        return self.start + self.masses.size

    def as_dict(self):
        return {float(v): float(m) for v, m in zip(self.values, self.masses) if m > 0}

    def expect(self, fn):
        return float(np.sum(fn(self.values) * self.masses))

    def tail_above(self, lo, hi):
        """P(S > (start+i)*span) for lattice indices lo..hi-1 (sub-probability)."""
        idx = np.arange(lo, hi)
        # suffix sums strictly above each point
        suffix = np.concatenate([np.cumsum(self.masses[::-1])[::-1], [0.0]])
        pos = np.clip(idx - self.start + 1, 0, self.masses.size)
        return suffix[pos]


@dataclass(frozen=True)
class ExactResult:
    """Per-step outputs of :func:`evolve`; arrays are indexed by n-1."""

    span: float
    g: np.ndarray
    g_effective: np.ndarray
    cum_var: np.ndarray
    survival: np.ndarray
    ez_star: np.ndarray
    absorbed_neg_s: np.ndarray
    absorbed_mass: np.ndarray
    lost_mass: float
    laws: dict = field(repr=False)

    @property
    def n_max(self):
        return self.survival.size

    def law(self, n):
        try:
            return self.laws[n]
        except KeyError:
            raise KeyError(f"law at n={n} was not kept; pass keep_laws covering it") from None

    def at(self, n):
        i = n - 1
        return {"n": n, "B2": float(self.cum_var[i]), "survival": float(self.survival[i]),
                "ez_star": float(self.ez_star[i]), "absorbed_neg_s": float(self.absorbed_neg_s[i]),
                "absorbed_mass": float(self.absorbed_mass[i])}


def _lattice_offsets(law, span, k):
    idx = np.rint(law.values / span)
    if np.any(np.abs(idx * span - law.values) > 1e-9 * np.maximum(1.0, np.abs(law.values))):
        raise IncompatibleLattice(f"law at k={k} is not supported on {span} * Z")
    return idx.astype(np.int64)


def _convolve(masses, start, offsets, probs):
    jmin = int(offsets[0])
    out = np.zeros(masses.size + int(offsets[-1]) - jmin)
    for j, p in zip(offsets, probs):
        lo = int(j) - jmin
        out[lo:lo + masses.size] += p * masses
    return out, start + jmin


def _trim(masses, start):
    nz = np.flatnonzero(masses)
    if nz.size == 0:
        return masses[:0], start
    return masses[nz[0]:nz[-1] + 1], start + int(nz[0])


def _keep_set(keep_laws, n_max):
    if keep_laws is True:
        return range(1, n_max + 1)
    if keep_laws is False or keep_laws is None:
        return ()
    if keep_laws == "last":
        return (n_max,)
    return set(keep_laws)


def _require_lattice(schedule):
    span = schedule.lattice
    if span is None:
        raise IncompatibleLattice(f"{schedule.family} schedule has no lattice; "
                                  "use schedule.lattice_approximation(span)")
    return span


def evolve(schedule, boundary, n_max, *, keep_laws=True, max_states=DEFAULT_MAX_STATES):
    """Evolve the killed law of S_n for n = 1..n_max.

    Off-lattice boundary values are replaced by their lattice floor for the
    killing decision (equivalent for a lattice walk); Z*_n still uses g_n.
    Feasibility is not enforced, so survival may reach zero.
    """
    span = _require_lattice(schedule)
    if n_max < 1:
        raise InvalidArgument("n_max must be >= 1")
    keep = _keep_set(keep_laws, n_max)
    g = boundary.values(n_max)
    g_idx = np.floor(g / span + 1e-9).astype(np.int64)
    surv = np.zeros(n_max)
    ez = np.zeros(n_max)
    neg_s = np.zeros(n_max)
    absorbed = np.zeros(n_max)
    masses, start = np.ones(1), 0
    acc_mass = acc_neg = 0.0
    lost = 0.0
    laws = {}
    for n in range(1, n_max + 1):
        law = schedule.law_at(n)
        offsets = _lattice_offsets(law, span, n)
        if masses.size:
            masses, start = _convolve(masses, start, offsets, law.probs)
        if masses.size > max_states:
            raise BudgetExceeded(f"state width {masses.size} exceeds {max_states}", n - 1)
        cut = min(max(int(g_idx[n - 1]) - start + 1, 0), masses.size)
        if cut:
            killed = masses[:cut]
            pts = (start + np.arange(cut)) * span
            acc_mass += float(np.sum(killed))
            acc_neg += float(np.sum(-pts * killed))
            masses, start = masses[cut:], start + cut
        tiny = (masses > 0) & (masses < FLUSH)
        if tiny.any():
            lost += float(np.sum(masses[tiny]))
            masses = np.where(tiny, 0.0, masses)
            log.debug("flushed %.3g mass at n=%d", lost, n)
        masses, start = _trim(masses, start)
        pts = (start + np.arange(masses.size)) * span
        surv[n - 1] = np.sum(masses)
        ez[n - 1] = np.sum((pts - g[n - 1]) * masses)
        neg_s[n - 1] = acc_neg
        absorbed[n - 1] = acc_mass
        if n in keep:
            frozen = masses.copy()
            frozen.flags.writeable = False
            laws[n] = LatticeDistribution(span, start, frozen)
    return ExactResult(span=span, g=g, g_effective=g_idx * span,
                       cum_var=np.asarray(schedule.cum_vars[1:n_max + 1]), survival=surv, ez_star=ez,
                       absorbed_neg_s=neg_s, absorbed_mass=absorbed, lost_mass=lost, laws=laws)


def evolve_free(schedule, n_max, *, keep_laws=True, max_states=DEFAULT_MAX_STATES):
    """Unkilled laws of S_1..S_n_max; entry n-1 is None when not kept."""
    span = _require_lattice(schedule)
    keep = _keep_set(keep_laws, n_max)
    masses, start = np.ones(1), 0
    out = []
    for n in range(1, n_max + 1):
        law = schedule.law_at(n)
        masses, start = _convolve(masses, start, _lattice_offsets(law, span, n), law.probs)
        if masses.size > max_states:
            raise BudgetExceeded(f"state width {masses.size} exceeds {max_states}", n - 1)
        masses, start = _trim(masses, start)
        if n in keep:
            frozen = masses.copy()
            frozen.flags.writeable = False
            out.append(LatticeDistribution(span, start, frozen))
        else:
            out.append(None)
    return out


def evolve_rational(laws, g, n_max):
    """Exact-arithmetic reference for short horizons.

    ``laws`` are ``{value: prob}`` mappings with Fraction-compatible entries,
    ``g`` a sequence of boundary values.  Returns per-n dicts of Fractions.
    """
    state = {Fraction(0): Fraction(1)}
    absorbed = neg_s = Fraction(0)
    rows = []
    for n in range(1, n_max + 1):
        law = {Fraction(v): Fraction(p) for v, p in laws[n - 1].items()}
        gn = Fraction(g[n - 1])
        nxt = {}
        for s, m in state.items():
            for x, p in law.items():
                nxt[s + x] = nxt.get(s + x, 0) + m * p
        state = {}
        for s, m in nxt.items():
            if s <= gn:
                absorbed += m
                neg_s -= s * m
            else:
                state[s] = m
        rows.append({"survival": sum(state.values(), Fraction(0)),
                     "ez_star": sum(((s - gn) * m for s, m in state.items()), Fraction(0)),
                     "absorbed_neg_s": neg_s, "absorbed_mass": absorbed})
    return rows


def check_martingale_identity(result, boundary, n):
    """|E Z*_n - (E[-S_T; T <= n] - g_n P(T > n))|."""
    i = n - 1
    gn = boundary.g_at(n)
    return abs(float(result.ez_star[i]) - (float(result.absorbed_neg_s[i]) - gn * float(result.survival[i])))


def _aligned_tails(cond, free):
    lo = min(cond.start, free.start) - 1
    hi = max(cond.stop, free.stop) + 1
    return cond.tail_above(lo, hi), free.tail_above(lo, hi)


def check_domination(result, free_laws, n, tol=1e-12):
    """P(S_n > x | T_g > n) >= P(S_n > x) at every lattice point x."""
    surv = float(result.survival[n - 1])
    if surv <= 0:
        raise UndefinedConditional(f"P(T_g > {n}) = 0")
    cond_tail, free_tail = _aligned_tails(result.law(n), free_laws[n - 1])
    return bool(np.all(cond_tail / surv >= free_tail - tol))


def check_positive_part_bound(result, free_laws, n, tol=1e-12):
    """E(S_n - g_n)^+ P(T_g > n) <= E Z*_n."""
    gn = float(result.g[n - 1])
    pos_part = free_laws[n - 1].expect(lambda x: np.maximum(x - gn, 0.0))
    return bool(pos_part * float(result.survival[n - 1]) <= float(result.ez_star[n - 1]) + tol)


check_up7 = check_positive_part_bound


def submartingale_check(result, boundary, start, tol=1e-12):
    """E Z*_n is non-decreasing from ``start`` on, given g non-increasing there."""
    if not is_non_increasing_from(boundary, start, result.n_max):
        raise PreconditionViolated(f"boundary is not non-increasing from n={start}")
    ez = result.ez_star[start - 1:]
    return bool(np.all(np.diff(ez) >= -tol))


def ssrw_survival_oracle(m):
    """P(T_0 > 2m) = C(2m, m) 2^{-2m} / 2 for the simple symmetric walk."""
    if m < 1:
        raise InvalidArgument("m must be >= 1")
    return float(Fraction(math.comb(2 * m, m), 2 ** (2 * m + 1)))


def results_table(result, boundary):
    """Rows for CSV dumping: n, B_n^2, survival, ez_star, absorbed_neg_s, stopping_residual."""
    rows = []
    for n in range(1, result.n_max + 1):
        r = result.at(n)
        rows.append({"n": n, "B2": r["B2"], "survival": r["survival"], "ez_star": r["ez_star"],
                     "absorbed_neg_s": r["absorbed_neg_s"],
                     "stopping_residual": check_martingale_identity(result, boundary, n)})
    return rows
