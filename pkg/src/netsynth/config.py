"""Flat ``key = value`` run configuration with range checks."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

from .dsl import InitParams
from .errors import InputError
from .evolve import SearchConfig
from .graph import PageRankParams
from .metrics import MetricConfig


@dataclass(frozen=True)
class Settings:
    sampling_ratio: float = 0.0006
    anti_bloat: float = 0.10
    snapshot_tolerance: float = 0.05
    bins: int = 100
    d_min: int = 2
    d_max: int = 5
    p_terminal: float = 0.4
    infinite_distance: int = 10
    stagnation: int = 1000
    rw_steps: int = 5
    heuristic_init: int = 6
    distance_mode: str = "heuristic"
    recombination: bool = True
    recombination_probability: float = 0.5
    per_snapshot_slots: bool = False
    pagerank_alpha: float = 0.85
    pagerank_tolerance: float = 1e-8
    pagerank_max_iterations: int = 200
    sample_floor: int = 2
    baseline_samples: int = 30
    max_steps: int = 0  # 0 means no cap

    def validate(self):
        checks = [
            (0 < self.sampling_ratio <= 1, "sampling_ratio must lie in (0, 1]"),
            (self.anti_bloat >= 0, "anti_bloat must be >= 0"),
            (self.snapshot_tolerance >= 0, "snapshot_tolerance must be >= 0"),
            (self.bins >= 1, "bins must be >= 1"),
            (1 <= self.d_min <= self.d_max, "need 1 <= d_min <= d_max"),
            (0 <= self.p_terminal <= 1, "p_terminal must lie in [0, 1]"),
            (self.infinite_distance >= 1, "infinite_distance must be >= 1"),
            (self.stagnation >= 1, "stagnation must be >= 1"),
            (self.rw_steps >= 1, "rw_steps must be >= 1"),
            (self.heuristic_init >= 1, "heuristic_init must be >= 1"),
            (self.distance_mode in ("exact", "heuristic"), "distance_mode must be exact or heuristic"),
            (0 <= self.recombination_probability <= 1, "recombination_probability must lie in [0, 1]"),
            (0 < self.pagerank_alpha < 1, "pagerank_alpha must lie in (0, 1)"),
            (self.pagerank_tolerance > 0, "pagerank_tolerance must be > 0"),
            (self.pagerank_max_iterations >= 1, "pagerank_max_iterations must be >= 1"),
            (self.sample_floor >= 1, "sample_floor must be >= 1"),
            (self.baseline_samples >= 1, "baseline_samples must be >= 1"),
            (self.max_steps >= 0, "max_steps must be >= 0"),
        ]
        bad = [msg for ok, msg in checks if not ok]
        if bad:
            raise InputError("; ".join(bad))
        return self

    def metric_config(self):
        pr = PageRankParams(self.pagerank_alpha, self.pagerank_tolerance, self.pagerank_max_iterations)
        return MetricConfig(self.bins, self.infinite_distance, pr)

    def search_config(self, snapshot_ratios=(1.0,), seed=None):
        return SearchConfig(
            anti_bloat=self.anti_bloat, snapshot_tolerance=self.snapshot_tolerance,
            stagnation=self.stagnation, recombination=self.recombination,
            recombination_probability=self.recombination_probability,
            snapshot_ratios=tuple(snapshot_ratios), per_snapshot_slots=self.per_snapshot_slots,
            max_steps=self.max_steps or None, seed=seed, baseline_samples=self.baseline_samples,
            metrics=self.metric_config(), init=InitParams(self.d_min, self.d_max, self.p_terminal),
            sampling_ratio=self.sampling_ratio, distance_mode=self.distance_mode,
            rw_steps=self.rw_steps, sample_floor=self.sample_floor,
            heuristic_init=self.heuristic_init,
        ).validate()


_TYPES = {f.name: f.type for f in fields(Settings)}
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _convert(key, raw):
    kind = _TYPES[key]
    try:
        if kind == "bool":
            low = raw.lower()
            if low not in _TRUE | _FALSE:
                raise ValueError(raw)
            return low in _TRUE
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError:
        raise InputError(f"bad value for {key}: {raw!r}") from None


def parse_settings(text, base=Settings()):
    values = {}
    unknown = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"line {lineno}: expected key = value")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _TYPES:
            unknown.append(key)
            continue
        values[key] = _convert(key, raw)
    if unknown:
        raise InputError(f"unknown config keys: {', '.join(unknown)}")
    return replace(base, **values).validate()


def load_settings(path=None, overrides=None):
    """Defaults, then the file at ``path``, then ``overrides`` (a dict)."""
    settings = Settings()
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                settings = parse_settings(fh.read())
        except OSError as exc:
            raise InputError(f"cannot read config {path}: {exc.strerror}") from None
    if overrides:
        unknown = sorted(set(overrides) - set(_TYPES))
        if unknown:
            raise InputError(f"unknown config keys: {', '.join(unknown)}")
        settings = replace(settings, **overrides)
    return settings.validate()


def format_settings(settings):
    return "".join(f"{f.name} = {_format(getattr(settings, f.name))}\n" for f in fields(Settings))


def _format(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)
