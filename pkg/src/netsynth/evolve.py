"""Evolutionary search over generator trees."""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace

import numpy as np

from . import dsl
from .errors import InputError
from .metrics import (DEFAULT_METRICS, NULL_SAMPLES, UNDIRECTED_DISTANCE_METRIC, MetricConfig,
                      fitness, null_baseline, profile)
from .netgen import GenerationConfig, generate, generate_from

BEST, SHORTEST, MEAN, UDIST = "best", "shortest", "mean", "udist"


@dataclass(frozen=True)
class SearchConfig:
    anti_bloat: float = 0.10
    snapshot_tolerance: float = 0.05
    stagnation: int = 1000
    recombination: bool = True
    recombination_probability: float = 0.5
    snapshot_ratios: tuple = (1.0,)
    per_snapshot_slots: bool = False
    max_steps: int | None = None
    seed: int | None = None
    baseline_seed: int | None = None
    baseline_samples: int = NULL_SAMPLES
    metrics: MetricConfig = DEFAULT_METRICS
    init: dsl.InitParams = dsl.InitParams()
    # growth settings; node/edge counts and directedness come from the targets
    sampling_ratio: float = 0.0006
    distance_mode: str = "heuristic"
    rw_steps: int = 5
    sample_floor: int = 2
    heuristic_init: int = 6

    def validate(self):
        if self.anti_bloat < 0 or self.snapshot_tolerance < 0:
            raise InputError("tolerances must be non-negative")
        if self.stagnation < 1:
            raise InputError("stagnation window must be at least 1")
        if not 0.0 <= self.recombination_probability <= 1.0:
            raise InputError("recombination_probability must lie in [0, 1]")
        r = list(self.snapshot_ratios)
        if not r or r != sorted(set(r)) or r[-1] != 1.0 or r[0] <= 0:
            raise InputError(f"snapshot ratios must increase and end at 1.0: {r}")
        self.metrics.validate()
        if self.max_steps is not None and self.max_steps < 0:
            raise InputError("max_steps must be non-negative")
        return self

    @property
    def tolerance(self):
        return self.anti_bloat if len(self.snapshot_ratios) == 1 else self.snapshot_tolerance

    def slot_names(self):
        """Pool members: two without recombination, otherwise best and shortest
        plus either the mean/udist pair or one best-at-snapshot slot per snapshot."""
        if not self.recombination:
            return (BEST, SHORTEST)
        if self.per_snapshot_slots:
            return (BEST, SHORTEST) + tuple(f"snap{k + 1}" for k in range(len(self.snapshot_ratios)))
        return (BEST, SHORTEST, MEAN, UDIST)


@dataclass(frozen=True)
class Solution:
    tree: dsl.Node
    reports: tuple

    @property
    def size(self):
        return self.tree.size

    @property
    def fitness(self):
        return tuple(r.fitness for r in self.reports)

    @property
    def mean_dissimilarity(self):
        return float(np.mean([r.mean_dissimilarity for r in self.reports]))

    @property
    def udist(self):
        return float(np.mean([r.ratio(UNDIRECTED_DISTANCE_METRIC) for r in self.reports]))


@dataclass
class SolutionPool:
    slots: dict

    def __getitem__(self, name):
        return self.slots[name]

    def names(self):
        return tuple(self.slots)

    def offer(self, cand, tol):
        """Update slots that ``cand`` beats and return their names."""
        s = self.slots
        taken = []
        best = s[BEST]
        if all(c < b for c, b in zip(cand.fitness, best.fitness)):
            s[BEST] = best = cand
            taken.append(BEST)
            sh = s[SHORTEST]
            if sh.size > best.size or not _within(sh, best, tol):
                s[SHORTEST] = best
                taken.append(SHORTEST)
        if SHORTEST not in taken and cand.size < s[SHORTEST].size and _within(cand, best, tol):
            s[SHORTEST] = cand
            taken.append(SHORTEST)
        if MEAN in s and cand.mean_dissimilarity < s[MEAN].mean_dissimilarity:
            s[MEAN] = cand
            taken.append(MEAN)
        if UDIST in s and cand.udist < s[UDIST].udist:
            s[UDIST] = cand
            taken.append(UDIST)
        for name in s:
            if name.startswith("snap"):
                k = int(name[4:]) - 1
                if cand.fitness[k] < s[name].fitness[k]:
                    s[name] = cand
                    taken.append(name)
        return taken


def _within(sol, best, tol):
    return all(f <= b * (1.0 + tol) for f, b in zip(sol.fitness, best.fitness))


@dataclass(frozen=True)
class StepRecord:
    step: int
    proposal: str
    accepted: tuple
    fitness: tuple
    mean_dissimilarity: float
    tree_size: int


@dataclass
class RunLog:
    seed: int
    snapshot_ratios: tuple
    records: list = field(default_factory=list)
    pool: SolutionPool | None = None
    last_improvement: int = 0
    initial_edge_count: int = 0

    @property
    def best(self):
        return self.pool[BEST]

    @property
    def best_tree(self):
        return self.best.tree

    @property
    def best_simplified(self):
        return dsl.simplify(self.best.tree)

    @property
    def best_fitness(self):
        return self.best.fitness

    @property
    def steps(self):
        return self.records[-1].step if self.records else 0

    def header(self):
        cols = ["step", "proposal", "accepted_slots"]
        cols += [f"fitness_s{k + 1}" for k in range(len(self.snapshot_ratios))]
        return ",".join(cols + ["mean_dissim", "tree_size"])

    @staticmethod
    def format_record(r):
        vals = [str(r.step), r.proposal, "|".join(r.accepted)]
        vals += [f"{f:.10g}" for f in r.fitness]
        return ",".join(vals + [f"{r.mean_dissimilarity:.10g}", str(r.tree_size)])

    def preamble(self):
        ratios = ",".join(f"{r:g}" for r in self.snapshot_ratios)
        return (f"# seed={self.seed} snapshots={ratios} "
                f"initial_edges={self.initial_edge_count}\n")

    def to_csv(self):
        buf = io.StringIO()
        buf.write(self.preamble())
        buf.write(self.header() + "\n")
        for r in self.records:
            buf.write(self.format_record(r) + "\n")
        return buf.getvalue()


def _check_targets(targets, ratios):
    if len(targets) != len(ratios):
        raise InputError(f"{len(targets)} target networks for {len(ratios)} snapshot ratios")
    first = targets[0]
    for t in targets:
        if t.node_count != first.node_count or t.directed != first.directed:
            raise InputError("targets differ in node count or directedness")
        if t.node_count < 3 or t.edge_count < 1:
            raise InputError("targets need at least 3 nodes and 1 edge")
    counts = [t.edge_count for t in targets]
    if counts != sorted(counts):
        raise InputError("target edge counts must not decrease across snapshots")


def _search(targets, cfg, initial=None, on_step=None):
    cfg.validate()
    ratios = tuple(cfg.snapshot_ratios)
    _check_targets(targets, ratios)
    seed = cfg.seed if cfg.seed is not None else int(np.random.SeedSequence().entropy) % 2**63
    rng = np.random.default_rng(seed)
    base_seed = seed if cfg.baseline_seed is None else cfg.baseline_seed
    final = targets[-1]
    profiles = [profile(t, cfg.metrics) for t in targets]
    baselines = [null_baseline(t, base_seed + k, cfg.baseline_samples, cfg.metrics)
                 for k, t in enumerate(targets)]
    gen_cfg = GenerationConfig(final.node_count, final.edge_count, final.directed,
                               cfg.sampling_ratio, cfg.distance_mode, cfg.rw_steps,
                               ratios, None, cfg.sample_floor,
                               cfg.metrics.max_distance, cfg.heuristic_init)
    if initial is not None and (initial.node_count != final.node_count
                                or initial.directed != final.directed
                                or initial.edge_count >= final.edge_count):
        raise InputError("initial network must match the target and have fewer edges")
    variables = dsl.VARIABLES if final.directed else dsl.UNDIRECTED_VARIABLES

    def evaluate(tree):
        c = replace(gen_cfg, seed=int(rng.integers(2**63)))
        res = generate(tree, c) if initial is None else generate_from(initial, tree, c)
        reports = tuple(fitness(net, p, b, cfg.metrics)
                        for (_, net), p, b in zip(res.snapshots, profiles, baselines))
        return Solution(tree, reports)

    log = RunLog(seed, ratios, initial_edge_count=0 if initial is None else initial.edge_count)
    first = evaluate(dsl.random_tree(cfg.init, rng, variables))
    pool = SolutionPool({name: first for name in cfg.slot_names()})
    log.pool = pool

    def record(step, proposal, taken, sol):
        r = StepRecord(step, proposal, tuple(taken), sol.fitness, sol.mean_dissimilarity, sol.size)
        log.records.append(r)
        if on_step is not None:
            on_step(log, r)

    record(0, "init", pool.names(), first)
    names = pool.names()
    quiet = 0
    step = 0
    while quiet < cfg.stagnation and (cfg.max_steps is None or step < cfg.max_steps):
        step += 1
        k = int(rng.integers(len(names)))
        parent = pool[names[k]].tree
        if cfg.recombination and rng.random() < cfg.recombination_probability:
            others = names[:k] + names[k + 1:]
            donor = pool[others[int(rng.integers(len(others)))]].tree
            child, proposal = dsl.recombine(parent, donor, rng), "recombine"
        else:
            child, proposal = dsl.mutate(parent, cfg.init, rng, variables), "mutate"
        cand = evaluate(child)
        taken = pool.offer(cand, cfg.tolerance)
        if BEST in taken:
            log.last_improvement = step
        quiet = 0 if taken else quiet + 1
        record(step, proposal, taken, cand)
    return log


def evolve(targets, cfg, on_step=None):
    """Search for a generator reproducing ``targets`` (one per snapshot ratio)."""
    if not isinstance(targets, (list, tuple)):
        targets = [targets]
    return _search(list(targets), cfg, on_step=on_step)


def evolve_from_initial(initial, target, cfg, on_step=None):
    """Search for a generator that grows ``initial`` into ``target``."""
    return _search([target], replace(cfg, snapshot_ratios=(1.0,)), initial, on_step)
