"""Command-line interface.

Exit codes: 0 success, 2 user error (bad input, config or file), 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

import numpy as np

from . import dsl
from .config import load_settings
from .errors import InputError
from .evolve import evolve, evolve_from_initial
from .experiments import correct_fraction, run_experiment
from .graph import (TRIAD_NAMES, UNDIRECTED_TRIAD_NAMES, HeuristicDistances, distance_matrix,
                    read_edgelist, triad_census, write_edgelist)
from .metrics import NullBaseline, fitness, network_id, null_baseline, profile
from .netgen import GenerationConfig, generate, snapshot_edge_count

EXIT_OK, EXIT_USER, EXIT_INTERNAL = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise InputError(message)


def _ratios(text):
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise InputError(f"bad ratio list: {text!r}") from None


def _seed(value):
    return int(np.random.SeedSequence().entropy) % 2**63 if value is None else value


def snapshot_path(prefix, ratio):
    return f"{prefix}.xi{ratio:.2f}"


def _overrides(args, **mapping):
    return {key: getattr(args, attr) for key, attr in mapping.items()
            if getattr(args, attr, None) is not None}


def _summary(net):
    census = triad_census(net) if net.node_count >= 3 else []
    names = TRIAD_NAMES if net.directed else UNDIRECTED_TRIAD_NAMES
    return {"nodes": net.node_count, "edges": net.edge_count, "directed": net.directed,
            "max_degree": int(net.degrees().max(initial=0)),
            "census": dict(zip(names, map(int, census)))}


def cmd_gen(args):
    settings = load_settings(args.config, _overrides(args, sampling_ratio="sampling_ratio",
                                                      distance_mode="distance_mode"))
    seed = _seed(args.seed)
    ratios = _ratios(args.snapshots) if args.snapshots else ()
    cfg = GenerationConfig(args.nodes, args.edges, args.directed, settings.sampling_ratio,
                           settings.distance_mode, settings.rw_steps, ratios, seed,
                           settings.sample_floor, settings.infinite_distance, settings.heuristic_init)
    res = generate(dsl.parse(args.generator), cfg)
    files = []
    if ratios:
        for r, net in res.snapshots:
            path = snapshot_path(args.out, r)
            write_edgelist(net, path, seed=seed, xi=f"{r:g}")
            files.append(path)
    else:
        write_edgelist(res.network, args.out, seed=seed)
        files.append(args.out)
    out = _summary(res.network)
    out.update(seed=seed, generator=dsl.format_tree(dsl.parse(args.generator)), files=files)
    print(json.dumps(out, indent=2))


def _load_baseline(target, args, settings):
    mc = settings.metric_config()
    if args.baseline_cache and Path(args.baseline_cache).exists():
        base = NullBaseline.from_json(Path(args.baseline_cache).read_text())
        if base.target_id != network_id(target):
            raise InputError(f"{args.baseline_cache} was built for a different target")
        return base
    base = null_baseline(target, _seed(args.baseline_seed), settings.baseline_samples, mc)
    if args.baseline_cache:
        Path(args.baseline_cache).write_text(base.to_json())
    return base


def cmd_fit(args):
    settings = load_settings(args.config)
    target = read_edgelist(args.target)
    seed = _seed(args.seed)
    if Path(args.candidate).exists():
        cand = read_edgelist(args.candidate)
    else:
        try:
            tree = dsl.parse(args.candidate)
        except InputError:
            raise InputError(f"no such file: {args.candidate}") from None
        cfg = GenerationConfig(target.node_count, target.edge_count, target.directed,
                               settings.sampling_ratio, settings.distance_mode, settings.rw_steps,
                               (), seed, settings.sample_floor, settings.infinite_distance,
                               settings.heuristic_init)
        cand = generate(tree, cfg).network
    if cand.directed != target.directed:
        raise InputError("candidate and target differ in directedness")
    if cand.node_count != target.node_count:
        raise InputError("candidate and target differ in node count")
    args.baseline_seed = args.seed if args.baseline_seed is None else args.baseline_seed
    base = _load_baseline(target, args, settings)
    report = fitness(cand, profile(target, settings.metric_config()), base, settings.metric_config())
    out = report.to_dict()
    out["seed"] = seed
    print(json.dumps(out, indent=2))


def cmd_baseline(args):
    settings = load_settings(args.config)
    target = read_edgelist(args.target)
    seed = _seed(args.seed)
    base = null_baseline(target, seed, settings.baseline_samples, settings.metric_config())
    text = base.to_json()
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)


_XI_SUFFIX = re.compile(r"\.xi(\d+(?:\.\d+)?)$")


def cmd_evolve(args):
    over = _overrides(args, stagnation="stagnation", max_steps="max_steps",
                      distance_mode="distance_mode")
    if args.no_recombination:
        over["recombination"] = False
    settings = load_settings(args.config, over)
    paths = [p for p in (args.targets or "").split(",") if p] + list(args.target or [])
    if not paths:
        raise InputError("no target network given")
    targets = [read_edgelist(p) for p in paths]
    if args.snapshots:
        ratios = _ratios(args.snapshots)
    elif len(paths) == 1:
        ratios = (1.0,)
    else:
        found = [_XI_SUFFIX.search(p) for p in paths]
        if not all(found):
            raise InputError("pass --snapshots or name targets with .xi<ratio> suffixes")
        ratios = tuple(float(m.group(1)) for m in found)
    seed = _seed(args.seed)
    cfg = settings.search_config(ratios, seed)
    prefix = args.out_prefix
    log_fh = open(f"{prefix}.log.csv", "w", encoding="utf-8", newline="\n")
    stream = args.stream

    def on_step(log, rec):
        if rec.step == 0:
            log_fh.write(log.preamble() + log.header() + "\n")
            if stream:
                sys.stdout.write(log.preamble() + log.header() + "\n")
        line = log.format_record(rec) + "\n"
        log_fh.write(line)
        if stream:
            sys.stdout.write(line)

    try:
        if args.initial:
            if len(targets) != 1:
                raise InputError("--initial works with a single target")
            log = evolve_from_initial(read_edgelist(args.initial), targets[0], cfg, on_step)
        else:
            log = evolve(targets, cfg, on_step)
    finally:
        log_fh.close()
    Path(f"{prefix}.best.gen").write_text(dsl.format_tree(log.best_tree) + "\n")
    Path(f"{prefix}.best.simplified.gen").write_text(dsl.format_tree(log.best_simplified) + "\n")
    summary = {"seed": seed, "steps": log.steps, "best_step": log.last_improvement,
               "best_fitness": list(log.best_fitness), "best": dsl.format_tree(log.best_tree),
               "best_simplified": dsl.format_tree(log.best_simplified),
               "log": f"{prefix}.log.csv"}
    print(json.dumps(summary, indent=2), file=sys.stderr if stream else sys.stdout)


def cmd_experiment(args):
    try:
        spec = json.loads(Path(args.spec).read_text())
    except FileNotFoundError:
        raise InputError(f"no such file: {args.spec}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{args.spec}: invalid JSON ({exc})") from None
    if args.workers is not None and isinstance(spec, dict) and "kind" in spec:
        spec = dict(spec, workers=args.workers)
    result = run_experiment(spec)
    prefix = args.out_prefix
    Path(f"{prefix}.csv").write_text(result.rows_csv())
    Path(f"{prefix}.summary.csv").write_text(result.summary_csv())
    Path(f"{prefix}.json").write_text(result.to_json() + "\n")
    print(result.summary_csv(), end="")


def cmd_census(args):
    net = read_edgelist(args.network)
    if net.node_count < 3:
        raise InputError("triad census needs at least 3 nodes")
    print(json.dumps(_summary(net), indent=2))


def cmd_distcheck(args):
    net = read_edgelist(args.network)
    if net.directed:
        raise InputError("distcheck replays undirected networks only")
    seed = _seed(args.seed)
    settings = load_settings(args.config)
    walkers = HeuristicDistances(net.node_count, False, args.steps or settings.rw_steps,
                                 settings.heuristic_init, seed)
    marks = {snapshot_edge_count(r, net.edge_count): r for r in _ratios(args.checkpoints)}
    rows = []
    for count, (u, v) in enumerate(net.edge_array().tolist(), 1):
        walkers.add_edge(u, v)
        if count in marks:
            exact = distance_matrix(net.prefix(count))
            rows.append({"xi": marks[count], "edges": count,
                         "correct_fraction": correct_fraction(walkers.undirected, exact, walkers.init)})
    print(json.dumps({"seed": seed, "steps": walkers.steps, "checkpoints": rows}, indent=2))


def build_parser():
    p = _Parser(prog="netsynth", description="Evolve network generators from target networks.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="grow a network from a generator")
    g.add_argument("generator")
    g.add_argument("--nodes", type=int, required=True)
    g.add_argument("--edges", type=int, required=True)
    g.add_argument("--directed", action="store_true")
    g.add_argument("--snapshots", help="comma-separated edge ratios ending at 1.0")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", default="network.edges")
    g.add_argument("--config")
    g.add_argument("--sampling-ratio", type=float, dest="sampling_ratio")
    g.add_argument("--distance-mode", choices=("exact", "heuristic"), dest="distance_mode")
    g.set_defaults(func=cmd_gen)

    f = sub.add_parser("fit", help="fitness of a candidate network or generator against a target")
    f.add_argument("target")
    f.add_argument("candidate", help="edge-list file or generator expression")
    f.add_argument("--seed", type=int)
    f.add_argument("--baseline-seed", type=int, dest="baseline_seed")
    f.add_argument("--baseline-cache", dest="baseline_cache")
    f.add_argument("--config")
    f.set_defaults(func=cmd_fit)

    b = sub.add_parser("baseline", help="ER null baseline of a target")
    b.add_argument("target")
    b.add_argument("--seed", type=int)
    b.add_argument("--out")
    b.add_argument("--config")
    b.set_defaults(func=cmd_baseline)

    e = sub.add_parser("evolve", help="search for a generator")
    e.add_argument("target", nargs="*")
    e.add_argument("--targets", help="comma-separated snapshot files, earliest first")
    e.add_argument("--snapshots")
    e.add_argument("--initial", help="grow from this network (fits the remaining edges)")
    e.add_argument("--config")
    e.add_argument("--seed", type=int)
    e.add_argument("--no-recombination", action="store_true", dest="no_recombination")
    e.add_argument("--stagnation", type=int)
    e.add_argument("--max-steps", type=int, dest="max_steps")
    e.add_argument("--distance-mode", choices=("exact", "heuristic"), dest="distance_mode")
    e.add_argument("--out-prefix", default="run", dest="out_prefix")
    e.add_argument("--stream", action="store_true", help="also echo the step log to stdout")
    e.set_defaults(func=cmd_evolve)

    x = sub.add_parser("experiment", help="run a batch experiment spec (JSON)")
    x.add_argument("spec")
    x.add_argument("--out-prefix", default="experiment", dest="out_prefix")
    x.add_argument("--workers", type=int)
    x.set_defaults(func=cmd_experiment)

    c = sub.add_parser("census", help="summary and triad census of an edge list")
    c.add_argument("network")
    c.set_defaults(func=cmd_census)

    d = sub.add_parser("distcheck", help="replay a network through the walker heuristic")
    d.add_argument("network")
    d.add_argument("--steps", type=int)
    d.add_argument("--seed", type=int)
    d.add_argument("--checkpoints", default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0")
    d.add_argument("--config")
    d.set_defaults(func=cmd_distcheck)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
