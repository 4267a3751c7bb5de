"""Batch experiments: generator recovery, Δ distinctiveness, walker quality.

A spec is a JSON object with a ``kind`` and its parameters, or
``{"experiments": [...]}`` holding several. Every run derives its seed from
the spec seed, so a spec reproduces its tables exactly.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import dsl, families
from .config import Settings, load_settings
from .errors import InputError
from .evolve import evolve, evolve_from_initial
from .graph import HeuristicDistances, distance_matrix
from .metrics import fitness, null_baseline, profile
from .netgen import GenerationConfig, generate, generate_from, snapshot_edge_count

COMMON_KEYS = {"kind", "name", "seed", "nodes", "edges", "directed", "runs", "workers"}
KIND_KEYS = {
    "recovery": {"generator", "snapshots", "expect", "variants", "settings", "shared_target",
                 "initial_generator", "initial_fraction", "threshold_range", "target_mode"},
    "distinctiveness": {"first", "second", "switches", "snapshots", "targets", "target_mode"},
    "rw_benchmark": {"generator", "steps", "checkpoints", "compare_modes"},
}
REQUIRED = {
    "recovery": {"generator", "nodes", "edges"},
    "distinctiveness": {"nodes", "edges"},
    "rw_benchmark": {"nodes", "edges"},
}
EXPECTATIONS = ("constant", "degree_monotone", "distance", "delta", "none")


def derive_seed(seed, *keys):
    return int(np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(1, np.uint64)[0] >> 1)


@dataclass
class ExperimentResult:
    rows: list = field(default_factory=list)
    summary: list = field(default_factory=list)

    def extend(self, other):
        self.rows += other.rows
        self.summary += other.summary

    def rows_csv(self):
        return _to_csv(self.rows)

    def summary_csv(self):
        return _to_csv(self.summary)

    def to_json(self):
        return json.dumps({"summary": self.summary, "rows": self.rows}, indent=2)


def _to_csv(rows):
    if not rows:
        return ""
    cols = []
    for r in rows:
        cols += [k for k in r if k not in cols]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def validate_spec(spec):
    if not isinstance(spec, dict):
        raise InputError("experiment spec must be a JSON object")
    kind = spec.get("kind")
    if kind not in KIND_KEYS:
        raise InputError(f"unknown or missing experiment kind: {kind!r} (offending key: kind)")
    unknown = sorted(set(spec) - COMMON_KEYS - KIND_KEYS[kind])
    missing = sorted(REQUIRED[kind] - set(spec))
    problems = []
    if unknown:
        problems.append("unknown keys: " + ", ".join(unknown))
    if missing:
        problems.append("missing keys: " + ", ".join(missing))
    if "expect" in spec and spec["expect"] not in EXPECTATIONS:
        problems.append(f"bad value for expect: {spec['expect']!r}")
    if "settings" in spec:
        bad = sorted(set(spec["settings"]) - set(Settings.__dataclass_fields__))
        if bad:
            problems.append("unknown settings keys: " + ", ".join(bad))
    for k, v in enumerate(spec.get("variants", [])):
        bad = sorted(set(v) - set(Settings.__dataclass_fields__) - {"name"})
        if bad:
            problems.append(f"unknown keys in variants[{k}]: " + ", ".join(bad))
    if problems:
        raise InputError("malformed experiment spec: " + "; ".join(problems))
    return spec


def run_experiment(spec):
    """Run one spec (or a list of them) and return aggregated tables."""
    if isinstance(spec, dict) and not spec:
        return ExperimentResult()
    if isinstance(spec, dict) and set(spec) == {"experiments"}:
        spec = spec["experiments"]
    if isinstance(spec, list):
        out = ExperimentResult()
        for s in spec:
            out.extend(run_experiment(s))
        return out
    validate_spec(spec)
    return _RUNNERS[spec["kind"]](spec)


def _map(fn, jobs, workers):
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


# --- recovery ---------------------------------------------------------------

def classify(tree, expect, threshold_range=(0.40, 0.60), directed=False):
    grid = families.ProbeGrid.build(directed)
    if expect == "constant":
        return families.is_constant(tree)
    if expect == "degree_monotone":
        return families.is_degree_monotone(dsl.simplify(tree), grid)
    if expect == "distance":
        return families.is_distance_family(dsl.simplify(tree), grid)
    if expect == "delta":
        return families.recovers_delta(tree, tuple(threshold_range), grid=grid)
    return False


def _target(spec, seed):
    ratios = tuple(spec.get("snapshots", [1.0]))
    cfg = GenerationConfig(spec["nodes"], spec["edges"], spec.get("directed", False),
                           snapshot_ratios=ratios, seed=seed,
                           distance_mode=spec.get("target_mode", "heuristic"))
    if "initial_generator" in spec:
        frac = spec.get("initial_fraction", 0.5)
        init_cfg = replace(cfg, target_edge_count=snapshot_edge_count(frac, spec["edges"]),
                           snapshot_ratios=())
        initial = generate(spec["initial_generator"], init_cfg).network
        res = generate_from(initial, spec["generator"], replace(cfg, snapshot_ratios=()))
        return [res.network], initial
    res = generate(spec["generator"], cfg)
    return [net for _, net in res.snapshots], None


def _recovery_job(job):
    spec, variant, run = job
    seed = spec.get("seed", 0)
    target_seed = derive_seed(seed, 0 if spec.get("shared_target") else run + 1, 0)
    targets, initial = _target(spec, target_seed)
    overrides = dict(spec.get("settings", {}))
    overrides.update({k: v for k, v in variant.items() if k != "name"})
    settings = load_settings(overrides=overrides)
    ratios = (1.0,) if initial is not None else tuple(spec.get("snapshots", [1.0]))
    run_seed = derive_seed(seed, run + 1, 1)
    cfg = settings.search_config(ratios, run_seed)
    log = evolve_from_initial(initial, targets[0], cfg) if initial is not None else evolve(targets, cfg)
    expect = spec.get("expect", "none")
    simplified = log.best_simplified
    row = {
        "experiment": spec.get("name", "recovery"),
        "variant": variant.get("name", "default"),
        "run": run,
        "seed": run_seed,
        "steps": log.steps,
        "best_step": log.last_improvement,
        "mean_dissimilarity": log.best.mean_dissimilarity,
        "tree_size": log.best.size,
        "best_raw": dsl.format_tree(log.best_tree),
        "best_simplified": dsl.format_tree(simplified),
        "family": families.family(simplified, families.ProbeGrid.build(targets[0].directed)),
        "delta_thresholds": ";".join(f"{f.threshold:g}" for f in families.delta_forms(simplified)),
        "recovered": bool(classify(simplified, expect, spec.get("threshold_range", (0.40, 0.60)),
                                   targets[0].directed)),
    }
    for k, f in enumerate(log.best_fitness):
        row[f"fitness_s{k + 1}"] = f
    return row


def _run_recovery(spec):
    runs = int(spec.get("runs", 1))
    variants = spec.get("variants") or [{"name": "default"}]
    jobs = [(spec, v, r) for v in variants for r in range(runs)]
    rows = _map(_recovery_job, jobs, spec.get("workers", 1))
    summary = []
    for v in variants:
        sel = [r for r in rows if r["variant"] == v.get("name", "default")]
        if not sel:
            continue
        fit_cols = sorted(k for k in sel[0] if k.startswith("fitness_s"))
        item = {"experiment": spec.get("name", "recovery"), "variant": v.get("name", "default"),
                "runs": len(sel), "recovered": sum(r["recovered"] for r in sel),
                "mean_best_step": float(np.mean([r["best_step"] for r in sel])),
                "mean_dissimilarity": float(np.mean([r["mean_dissimilarity"] for r in sel]))}
        for c in fit_cols:
            item[f"mean_{c}"] = float(np.mean([r[c] for r in sel]))
        summary.append(item)
    return ExperimentResult(rows, summary)


# --- Δ distinctiveness ------------------------------------------------------

def comparison_generators(first, second, switch):
    """The three comparison generators for a two-phase target."""
    a, b = dsl.parse(first), dsl.parse(second)
    g = dsl.const(switch)
    return {
        "delta": dsl.op("delta", g, a, b),
        "conditional": dsl.op(">", dsl.var("xi"), g, b, a),
        "pure": a,
    }


def _distinct_job(job):
    spec, switch, t = job
    seed = spec.get("seed", 0)
    first = spec.get("first", "k_i")
    second = spec.get("second", "(pow k_i k_i)")
    ratios = tuple(spec.get("snapshots", sorted({switch, 1.0})))
    n, e, directed = spec["nodes"], spec["edges"], spec.get("directed", False)
    mode = spec.get("target_mode", "heuristic")
    gens = comparison_generators(first, second, switch)
    cfg = GenerationConfig(n, e, directed, snapshot_ratios=ratios, distance_mode=mode,
                           seed=derive_seed(seed, int(switch * 1000), t, 0))
    targets = generate(gens["delta"], cfg).snapshots
    bases = [null_baseline(net, derive_seed(seed, t, k, 9)) for k, (_, net) in enumerate(targets)]
    profs = [profile(net) for _, net in targets]
    rows = []
    for ki, (kind, gen) in enumerate(gens.items()):
        for r in range(int(spec.get("runs", 10))):
            c = replace(cfg, seed=derive_seed(seed, int(switch * 1000), t, 1 + r, 1 + ki))
            for (xi, net), p, b in zip(generate(gen, c).snapshots, profs, bases):
                rep = fitness(net, p, b)
                rows.append({"experiment": spec.get("name", "distinctiveness"), "switch": switch,
                             "comparison": kind, "target": t, "run": r, "xi": xi,
                             "fitness": rep.fitness, "mean_dissimilarity": rep.mean_dissimilarity})
    return rows


def _run_distinctiveness(spec):
    switches = spec.get("switches", [0.5])
    jobs = [(spec, s, t) for s in switches for t in range(int(spec.get("targets", 5)))]
    if int(spec.get("runs", 10)) == 0:
        return ExperimentResult()
    rows = [row for chunk in _map(_distinct_job, jobs, spec.get("workers", 1)) for row in chunk]
    summary = []
    keys = sorted({(r["switch"], r["xi"], r["comparison"]) for r in rows},
                  key=lambda k: (k[0], k[1], ["delta", "conditional", "pure"].index(k[2])))
    for s, xi, kind in keys:
        sel = [r for r in rows if (r["switch"], r["xi"], r["comparison"]) == (s, xi, kind)]
        summary.append({"experiment": spec.get("name", "distinctiveness"), "switch": s, "xi": xi,
                        "comparison": kind, "runs": len(sel),
                        "mean_fitness": float(np.mean([r["fitness"] for r in sel])),
                        "mean_dissimilarity": float(np.mean([r["mean_dissimilarity"] for r in sel]))})
    return ExperimentResult(rows, summary)


# --- random-walk benchmark --------------------------------------------------

def correct_fraction(estimate, exact, init):
    """Share of node pairs whose estimate equals the exact distance.

    Estimates cannot exceed ``init``, so a pair at exact distance >= init (or
    unreachable) counts as correct while its estimate still reads ``init``.
    """
    n = exact.shape[0]
    iu = np.triu_indices(n, 1)
    truth = np.where(exact[iu] < 0, init, np.minimum(exact[iu], init))
    return float(np.mean(estimate[iu] == truth))


def _rw_job(job):
    spec, run = job
    seed = spec.get("seed", 0)
    n, e = spec["nodes"], spec["edges"]
    gen = spec.get("generator", "d")
    checkpoints = spec.get("checkpoints", [round(0.1 * k, 1) for k in range(1, 11)])
    cfg = GenerationConfig(n, e, False, distance_mode="exact", seed=derive_seed(seed, run, 0))
    net = generate(gen, cfg).network
    edges = net.edge_array()
    marks = {snapshot_edge_count(x, e): x for x in checkpoints}
    rows = []
    for steps in spec.get("steps", [1, 5]):
        walkers = HeuristicDistances(n, False, steps, seed=derive_seed(seed, run, steps))
        for count, (u, v) in enumerate(edges, 1):
            walkers.add_edge(int(u), int(v))
            if count in marks:
                exact = distance_matrix(net.prefix(count))
                rows.append({"experiment": spec.get("name", "rw_benchmark"), "run": run,
                             "steps": steps, "xi": marks[count],
                             "correct_fraction": correct_fraction(walkers.undirected, exact, walkers.init)})
    if spec.get("compare_modes", True):
        heur = generate(gen, replace(cfg, distance_mode="heuristic", seed=derive_seed(seed, run, 1))).network
        rep = fitness(heur, net, null_baseline(net, derive_seed(seed, run, 2)))
        rows.append({"experiment": spec.get("name", "rw_benchmark"), "run": run, "steps": "mode",
                     "xi": 1.0, "mode_mean_dissimilarity": rep.mean_dissimilarity,
                     "mode_fitness": rep.fitness})
    return rows


def _run_rw(spec):
    jobs = [(spec, r) for r in range(int(spec.get("runs", 1)))]
    rows = [row for chunk in _map(_rw_job, jobs, spec.get("workers", 1)) for row in chunk]
    summary = []
    for key in sorted({(r["steps"], r["xi"]) for r in rows if r["steps"] != "mode"}):
        sel = [r for r in rows if (r["steps"], r["xi"]) == key]
        summary.append({"experiment": spec.get("name", "rw_benchmark"), "steps": key[0], "xi": key[1],
                        "runs": len(sel),
                        "mean_correct_fraction": float(np.mean([r["correct_fraction"] for r in sel]))})
    modes = [r for r in rows if r["steps"] == "mode"]
    if modes:
        summary.append({"experiment": spec.get("name", "rw_benchmark"), "steps": "mode", "xi": 1.0,
                        "runs": len(modes),
                        "mean_dissimilarity": float(np.mean([r["mode_mean_dissimilarity"] for r in modes]))})
    return ExperimentResult(rows, summary)


_RUNNERS = {"recovery": _run_recovery, "distinctiveness": _run_distinctiveness, "rw_benchmark": _run_rw}
