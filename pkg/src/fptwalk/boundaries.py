"""Moving boundaries g_n, their envelopes, and the interpolated curve U_g."""

from dataclasses import dataclass
import warnings

import numpy as np

from .errors import InvalidArgument, OutOfDomain

GOOD_RATIO_THRESHOLD = 0.5


class Boundary:
    """A deterministic sequence g_1, g_2, ... .

    ``monotone_from`` is the index from which the family is provably
    non-increasing (``None`` if unknown); ``unbounded_above`` marks families
    whose supremum over any tail is +inf.
    """

    def __init__(self, family, params, values=None, func=None, n_max=None,
                 monotone_from=None, unbounded_above=False):
        self.family = family
        self.params = dict(params)
        self._values = None if values is None else np.asarray(values, dtype=float)
        self._func = func
        self.n_max = n_max if values is None else self._values.size
        self.monotone_from = monotone_from
        self.unbounded_above = unbounded_above
        self.warning = False

    def __repr__(self):
        return f"Boundary({self.family!r}, {self.params})"

    def g_at(self, n):
        if n < 1 or (self.n_max is not None and n > self.n_max):
            raise OutOfDomain(f"boundary index {n} outside 1..{self.n_max}")
        if self._values is not None:
            return float(self._values[n - 1])
        return float(self._func(np.array([n]))[0])

    def values(self, n):
        """Array (g_1, ..., g_n)."""
        if n < 1 or (self.n_max is not None and n > self.n_max):
            raise OutOfDomain(f"boundary horizon {n} outside 1..{self.n_max}")
        if self._values is not None:
            return self._values[:n].copy()
        return np.asarray(self._func(np.arange(1, n + 1)), dtype=float)

    def to_config(self):
        return {"family": self.family, "params": dict(self.params)}


def _log_damped(schedule, c, gamma):
    def g(ns):
        lcv = schedule.log_cum_vars[np.asarray(ns)]
        # log B_n^2 is floored at 1 so the first few indices (B_n^2 < e) stay finite
        return c * np.exp(0.5 * lcv) / np.maximum(lcv, 1.0) ** (1 + gamma)

    return g


def make_boundary(family, params=None, schedule=None):
    """Build a boundary.

    Families: ``constant`` (g_n = x), ``log_damped`` (g_n = c B_n / log^{1+gamma} B_n^2,
    needs ``schedule``), ``custom`` (verbatim table ``values``).
    """
    params = dict(params or {})
    if family == "constant":
        x = float(params.get("x", 0.0))
        b = Boundary("constant", {"x": x}, func=lambda ns: np.full(np.shape(ns), x), monotone_from=1)
    elif family == "log_damped":
        c, gamma = float(params.get("c", 1.0)), float(params["gamma"])
        if not gamma > 0:
            raise InvalidArgument("log_damped needs gamma > 0")
        if schedule is None:
            raise InvalidArgument("log_damped boundary needs the increment schedule for B_n")
        # t / log^{1+gamma} t is increasing once log t > 2(1+gamma), and B_n^2 is increasing
        turn = int(np.searchsorted(schedule.log_cum_vars[1:], 2 * (1 + gamma))) + 1
        b = Boundary("log_damped", {"c": c, "gamma": gamma}, func=_log_damped(schedule, c, gamma),
                     n_max=schedule.n_max,
                     monotone_from=(turn if c < 0 else 1 if c == 0 else None),
                     unbounded_above=c > 0)
    elif family == "custom":
        values = params.get("values")
        if values is None or len(values) == 0:
            raise InvalidArgument("custom boundary table is empty")
        values = np.asarray(values, dtype=float)
        if not np.all(np.isfinite(values)):
            raise InvalidArgument("custom boundary values must be finite")
        b = Boundary("custom", {"values": values.tolist()}, values=values)
    else:
        raise InvalidArgument(f"unknown boundary family {family!r}")
    if schedule is not None and family == "custom":
        b.warning = good_ratio_warning(b, schedule)
        if b.warning:
            warnings.warn(f"boundary may violate g_n = o(B_n): max |g_n|/B_n exceeds "
                          f"{GOOD_RATIO_THRESHOLD} without a decreasing trend", stacklevel=2)
    return b


def good_ratio_warning(boundary, schedule, horizon=None):
    """Heuristic o(B_n) check: ratio above threshold and not trending down."""
    n = min(boundary.n_max or schedule.n_max, schedule.n_max, horizon or schedule.n_max)
    ratio = np.abs(boundary.values(n)) / np.sqrt(schedule.cum_vars[1:n + 1])
    if ratio.max() <= GOOD_RATIO_THRESHOLD:
        return False
    half = ratio[n // 2:]
    return not (n >= 4 and half[-1] < half[0])


@dataclass(frozen=True)
class Envelopes:
    """Running minimum, tail supremum and running max |g| for n = 1..horizon (index n-1)."""

    lower: np.ndarray
    upper: np.ndarray
    gmax: np.ndarray
    horizon_limited: bool

    def at(self, n):
        return float(self.lower[n - 1]), float(self.upper[n - 1]), float(self.gmax[n - 1])


def envelopes(boundary, horizon):
    if horizon < 1:
        raise InvalidArgument("horizon must be >= 1")
    g = boundary.values(horizon)
    lower = np.minimum.accumulate(g)
    gmax = np.maximum.accumulate(np.abs(g))
    if boundary.unbounded_above:
        return Envelopes(lower, np.full(horizon, np.inf), gmax, False)
    upper = np.maximum.accumulate(g[::-1])[::-1]
    exact = boundary.monotone_from is not None and horizon >= boundary.monotone_from
    return Envelopes(lower, upper, gmax, not exact)


@dataclass(frozen=True)
class UgCurve:
    """Piecewise-linear U_g through knots (B_k^2, E Z*_k)."""

    abscissae: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.abscissae.size == 0 or np.any(np.diff(self.abscissae) <= 0):
            raise InvalidArgument("knot abscissae must be strictly increasing")

    @classmethod
    def from_knots(cls, knots):
        t, u = zip(*knots)
        return cls(np.asarray(t, dtype=float), np.asarray(u, dtype=float))

    def eval(self, t):
        return ug_interpolate(self, t)


def ug_interpolate(knots, t):
    """Linear interpolation in variance time between consecutive knots."""
    curve = knots if isinstance(knots, UgCurve) else UgCurve.from_knots(knots)
    x, y = curve.abscissae, curve.values
    if not x[0] <= t <= x[-1]:
        raise OutOfDomain(f"t={t} outside [{x[0]}, {x[-1]}]")
    i = int(np.searchsorted(x, t, side="right")) - 1
    if i >= x.size - 1 or t == x[i]:
        return float(y[i])
    w = (t - x[i]) / (x[i + 1] - x[i])
    return float(y[i] + w * (y[i + 1] - y[i]))


def is_non_increasing_from(boundary, start, horizon):
    g = boundary.values(horizon)[start - 1:]
    return bool(np.all(np.diff(g) <= 0))


__all__ = ["Boundary", "Envelopes", "UgCurve", "make_boundary", "envelopes", "ug_interpolate",
           "good_ratio_warning", "is_non_increasing_from"]
