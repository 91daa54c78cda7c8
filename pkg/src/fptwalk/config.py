"""JSON experiment configuration and CSV loaders for schedules and boundaries."""

import csv
from dataclasses import asdict, dataclass, field
import json
from pathlib import Path

import numpy as np

from . import increments as inc
from .boundaries import make_boundary
from .errors import InvalidArgument
from .montecarlo import McConfig


class ConfigError(InvalidArgument):
    pass


ENGINES = ("exact", "mc", "both")


@dataclass
class ExperimentConfig:
    schedule: dict
    boundary: dict
    n_max: int
    engine: str = "exact"
    mc: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)
    lattice_span: float = None
    report_grid: list = None
    max_states: int = 50_000_000
    output: str = "out"

    def __post_init__(self):
        if not isinstance(self.schedule, dict) or "family" not in self.schedule:
            raise ConfigError("schedule needs a 'family'")
        if not isinstance(self.boundary, dict) or "family" not in self.boundary:
            raise ConfigError("boundary needs a 'family'")
        if not isinstance(self.n_max, int) or self.n_max < 1:
            raise ConfigError("n_max must be a positive integer")
        if not isinstance(self.max_states, int) or self.max_states < 1:
            raise ConfigError("max_states must be a positive integer")
        if self.engine not in ENGINES:
            raise ConfigError(f"engine must be one of {ENGINES}")
        try:
            self.mc_config()
        except (TypeError, InvalidArgument) as exc:
            raise ConfigError(f"bad mc section: {exc}") from None

    def mc_config(self):
        return McConfig(**self.mc)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def load(cls, path):
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(data)


def load_schedule_csv(path):
    """Rows ``k, value, prob`` (optional header) -> DiscreteSchedule."""
    laws = {}
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().lower() in ("k", "#"):
                continue
            try:
                k, v, p = int(row[0]), float(row[1]), float(row[2])
            except (ValueError, IndexError):
                raise ConfigError(f"bad schedule row {row!r}") from None
            laws.setdefault(k, []).append((v, p))
    if not laws or sorted(laws) != list(range(1, len(laws) + 1)):
        raise ConfigError("schedule CSV must define laws for k = 1..n without gaps")
    return inc.DiscreteSchedule([laws[k] for k in range(1, len(laws) + 1)])


def load_boundary_csv(path):
    """Rows ``n, g_n`` (optional header) -> list of g values ordered by n."""
    vals = {}
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().lower() in ("n", "#"):
                continue
            try:
                vals[int(row[0])] = float(row[1])
            except (ValueError, IndexError):
                raise ConfigError(f"bad boundary row {row!r}") from None
    if not vals or sorted(vals) != list(range(1, len(vals) + 1)):
        raise ConfigError("boundary CSV must cover n = 1..N without gaps")
    return [vals[n] for n in range(1, len(vals) + 1)]


def schedule_from_config(spec, n_max):
    family = spec["family"]
    p = dict(spec.get("params", {}))
    try:
        if family == "ssrw":
            return inc.make_ssrw(n_max)
        if family == "power_weighted":
            return inc.make_power_weighted(p["p"], n_max)
        if family == "weighted_rademacher":
            return inc.make_weighted_rademacher(np.asarray(p["weights"], dtype=float)[:n_max])
        if family == "four_point":
            return inc.make_four_point(n_max)
        if family == "truncated_pareto":
            return inc.make_truncated_pareto(p["p"], p["grid_step"], n_max)
        if family == "weibullian":
            return inc.make_weibullian(p["alpha"], n_max)
        if family == "discrete":
            if "csv" in p:
                return load_schedule_csv(p["csv"])
            return inc.DiscreteSchedule(p["laws"][:n_max])
    except KeyError as exc:
        raise ConfigError(f"schedule family {family!r} is missing parameter {exc}") from None
    raise ConfigError(f"unknown schedule family {family!r}")


def boundary_from_config(spec, schedule):
    family = spec["family"]
    p = dict(spec.get("params", {}))
    if family == "custom" and "csv" in p:
        p = {"values": load_boundary_csv(p.pop("csv"))}
    try:
        return make_boundary(family, p, schedule=schedule)
    except KeyError as exc:
        raise ConfigError(f"boundary family {family!r} is missing parameter {exc}") from None
