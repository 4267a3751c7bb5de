"""Metric profiles, dissimilarities and the ER-normalised fitness."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .graph import INFINITE_DISTANCE, Network, PageRankParams, distance_matrix, pagerank, triad_census

BINS = 100
NULL_SAMPLES = 30
BASELINE_FLOOR = 1e-9

UNDIRECTED_METRICS = ("degree", "pagerank", "distance", "triads")
DIRECTED_METRICS = ("in_degree", "out_degree", "pagerank_direct", "pagerank_reverse",
                    "distance_directed", "distance", "triads")
SAMPLE_METRICS = frozenset({"degree", "in_degree", "out_degree", "pagerank",
                            "pagerank_direct", "pagerank_reverse"})
UNDIRECTED_DISTANCE_METRIC = "distance"


@dataclass(frozen=True)
class MetricConfig:
    bins: int = BINS
    max_distance: int = INFINITE_DISTANCE
    pagerank: PageRankParams = PageRankParams()

    def validate(self):
        if self.bins < 1 or self.max_distance < 1:
            raise InputError("bins and max_distance must be positive")
        return self


DEFAULT_METRICS = MetricConfig()


def metric_names(directed):
    return DIRECTED_METRICS if directed else UNDIRECTED_METRICS


def distance_counts(net, kind="undirected", max_distance=INFINITE_DISTANCE):
    """Counts for distances 1..max_distance, then an unreachable bucket.

    Undirected distances count unordered pairs, directed ones ordered pairs.
    Reachable distances beyond ``max_distance`` land in the last finite bucket.
    """
    dm = distance_matrix(net, kind)
    n = net.node_count
    if kind == "undirected":
        vals = dm[np.triu_indices(n, 1)]
    else:
        vals = dm[~np.eye(n, dtype=bool)]
    out = np.zeros(max_distance + 1, dtype=np.int64)
    reach = vals[vals > 0]
    np.add.at(out, np.minimum(reach, max_distance) - 1, 1)
    out[max_distance] = np.count_nonzero(vals < 0)
    return out


@dataclass(frozen=True)
class MetricProfile:
    directed: bool
    node_count: int
    edge_count: int
    data: dict

    def __getitem__(self, name):
        return self.data[name]

    @property
    def names(self):
        return metric_names(self.directed)


def profile(net, mc=DEFAULT_METRICS):
    if net.node_count < 3:
        raise InputError("metric profiles need at least 3 nodes")
    data = {}
    if net.directed:
        data["in_degree"] = net.degrees("in").astype(float)
        data["out_degree"] = net.degrees("out").astype(float)
        data["pagerank_direct"] = pagerank(net, mc.pagerank, "direct")
        data["pagerank_reverse"] = pagerank(net, mc.pagerank, "reverse")
        data["distance_directed"] = distance_counts(net, "directed", mc.max_distance)
    else:
        data["degree"] = net.degrees().astype(float)
        data["pagerank"] = pagerank(net, mc.pagerank)
    data["distance"] = distance_counts(net, "undirected", mc.max_distance)
    data["triads"] = triad_census(net)
    return MetricProfile(net.directed, net.node_count, net.edge_count, data)


def emd_histograms(ha, hb):
    """1-D transport cost between two normalised histograms, in bin widths."""
    ha = np.asarray(ha, dtype=np.float64)
    hb = np.asarray(hb, dtype=np.float64)
    if ha.shape != hb.shape:
        raise InputError("histograms differ in length")
    return float(np.abs(np.cumsum(ha - hb)).sum())


def histograms(sample_a, sample_b, bins=BINS):
    a = np.asarray(sample_a, dtype=np.float64).ravel()
    b = np.asarray(sample_b, dtype=np.float64).ravel()
    if a.size == 0 or b.size == 0:
        raise InputError("emd needs two non-empty samples")
    if bins < 1:
        raise InputError("bins must be positive")
    lo = min(a.min(), b.min())
    hi = max(a.max(), b.max())
    if hi <= lo:
        return np.ones(1), np.ones(1)
    ha, _ = np.histogram(a, bins=bins, range=(lo, hi))
    hb, _ = np.histogram(b, bins=bins, range=(lo, hi))
    return ha / a.size, hb / b.size


def emd(sample_a, sample_b, bins=BINS):
    return emd_histograms(*histograms(sample_a, sample_b, bins))


def ratio_dissimilarity(target_counts, generated_counts):
    c = np.asarray(target_counts, dtype=np.float64)
    g = np.asarray(generated_counts, dtype=np.float64)
    if c.shape != g.shape:
        raise InputError(f"count vectors differ in length ({c.size} vs {g.size})")
    return float((np.abs(c - g) / np.where(g != 0, g, 1.0)).sum())


def raw_dissimilarities(generated, target, mc=DEFAULT_METRICS):
    """Per-metric dissimilarity of two profiles (or networks)."""
    if isinstance(generated, Network):
        generated = profile(generated, mc)
    if isinstance(target, Network):
        target = profile(target, mc)
    if generated.directed != target.directed:
        raise InputError("cannot compare a directed network with an undirected one")
    out = {}
    for name in target.names:
        if name in SAMPLE_METRICS:
            out[name] = emd(generated[name], target[name], mc.bins)
        else:
            out[name] = ratio_dissimilarity(target[name], generated[name])
    return out


# --- null baseline ----------------------------------------------------------

def random_network(node_count, edge_count, directed, rng):
    """Uniform G(N, e): every e-subset of possible edges equally likely."""
    n = node_count
    cap = n * (n - 1) if directed else n * (n - 1) // 2
    if edge_count > cap:
        raise InputError("too many edges for a simple graph")
    idx = rng.choice(cap, size=edge_count, replace=False)
    if directed:
        u = idx // (n - 1)
        v = idx % (n - 1)
        v = v + (v >= u)
    else:
        # unrank the upper triangle row by row
        rows = np.cumsum(np.arange(n - 1, 0, -1))
        u = np.searchsorted(rows, idx, side="right")
        start = np.concatenate(([0], rows))[u]
        v = u + 1 + (idx - start)
    return Network._trusted(n, directed, np.stack([u, v], axis=1).astype(np.int64))


@dataclass
class NullBaseline:
    target_id: str
    directed: bool
    values: dict
    samples: int = NULL_SAMPLES
    seed: int = 0

    def to_json(self):
        return json.dumps({"target_id": self.target_id, "directed": self.directed,
                           "samples": self.samples, "seed": self.seed,
                           "values": self.values}, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        try:
            d = json.loads(text)
            return cls(d["target_id"], bool(d["directed"]),
                       {k: float(v) for k, v in d["values"].items()},
                       int(d["samples"]), int(d["seed"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed baseline file: {exc}") from None


def network_id(net):
    """Content hash of a network, stable across runs."""
    h = hashlib.sha1(f"{net.node_count}|{int(net.directed)}|".encode())
    h.update(net.edge_array().tobytes())
    return h.hexdigest()[:16]


_BASELINE_CACHE: dict = {}


def null_baseline(target, seed=0, samples=NULL_SAMPLES, mc=DEFAULT_METRICS):
    if target.node_count < 3 or target.edge_count < 1:
        raise InputError("a null baseline needs at least 3 nodes and 1 edge")
    key = (network_id(target), int(seed), int(samples), mc)
    if key in _BASELINE_CACHE:
        return _BASELINE_CACHE[key]
    rng = np.random.default_rng(seed)
    tprof = profile(target, mc)
    totals = dict.fromkeys(tprof.names, 0.0)
    for _ in range(samples):
        er = random_network(target.node_count, target.edge_count, target.directed, rng)
        for name, v in raw_dissimilarities(profile(er, mc), tprof, mc).items():
            totals[name] += v
    values = {k: max(v / samples, BASELINE_FLOOR) for k, v in totals.items()}
    base = NullBaseline(key[0], target.directed, values, samples, int(seed))
    _BASELINE_CACHE[key] = base
    return base


# --- fitness ----------------------------------------------------------------

@dataclass(frozen=True)
class FitnessReport:
    raw: dict
    baseline: dict
    ratios: dict = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "ratios", {k: self.raw[k] / self.baseline[k] for k in self.raw})

    @property
    def fitness(self):
        return max(self.ratios.values())

    @property
    def mean_dissimilarity(self):
        return float(np.mean(list(self.ratios.values())))

    def ratio(self, name):
        return self.ratios[name]

    def to_dict(self):
        d = {k: {"raw": self.raw[k], "baseline": self.baseline[k], "ratio": self.ratios[k]}
             for k in self.raw}
        d["fitness"] = self.fitness
        d["mean_dissimilarity"] = self.mean_dissimilarity
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def fitness(generated, target, baseline, mc=DEFAULT_METRICS):
    """Normalised per-metric ratios; ``target`` may be a precomputed profile."""
    if generated.directed != target.directed or baseline.directed != target.directed:
        raise InputError("generated network, target and baseline must share directedness")
    raw = raw_dissimilarities(generated, target, mc)
    return FitnessReport(raw, {k: baseline.values[k] for k in raw})


def is_finite_report(report):
    return all(math.isfinite(v) for v in report.ratios.values())
