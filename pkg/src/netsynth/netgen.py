"""Grow a network edge by edge from a generator.

At every step a uniform sample of the missing ordered pairs is weighted by
the generator and one pair is drawn with probability proportional to its
weight. The whole loop runs inside one numba kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numba as nb
import numpy as np

from . import dsl
from ._prng import new_state, next_below, next_float
from .graph import HEURISTIC_INIT, INFINITE_DISTANCE, Network, _walk_batch
from .errors import InputError

DISTANCE_MODES = ("exact", "heuristic")


@dataclass(frozen=True)
class GenerationConfig:
    node_count: int
    target_edge_count: int
    directed: bool = False
    sampling_ratio: float = 0.0006
    distance_mode: str = "heuristic"
    rw_steps: int = 5
    snapshot_ratios: tuple = ()
    seed: int | None = None
    sample_floor: int = 2
    infinite_distance: int = INFINITE_DISTANCE
    heuristic_init: int = HEURISTIC_INIT

    @property
    def capacity(self):
        n = self.node_count
        return n * (n - 1) if self.directed else n * (n - 1) // 2

    def validate(self):
        if self.node_count < 2:
            raise InputError("need at least 2 nodes")
        if not 1 <= self.target_edge_count <= self.capacity:
            raise InputError(f"{self.target_edge_count} edges do not fit in "
                             f"{self.node_count} nodes (capacity {self.capacity})")
        if not 0.0 < self.sampling_ratio <= 1.0:
            raise InputError(f"sampling_ratio must lie in (0, 1], got {self.sampling_ratio}")
        if self.distance_mode not in DISTANCE_MODES:
            raise InputError(f"distance_mode must be one of {DISTANCE_MODES}")
        if self.rw_steps < 1 or self.sample_floor < 1:
            raise InputError("rw_steps and sample_floor must be positive")
        ratios = list(self.snapshot_ratios)
        if ratios:
            if any(not 0.0 < r <= 1.0 for r in ratios) or ratios != sorted(set(ratios)):
                raise InputError(f"snapshot ratios must be increasing in (0, 1]: {ratios}")
            if ratios[-1] != 1.0:
                raise InputError("the last snapshot ratio must be 1.0")
        return self


def snapshot_edge_count(ratio, total):
    return int(math.floor(ratio * total + 0.5))


@dataclass
class GenerationResult:
    network: Network
    snapshots: list = field(default_factory=list)
    seed: int = 0
    initial_edge_count: int = 0

    def snapshot(self, ratio):
        for r, net in self.snapshots:
            if r == ratio:
                return net
        raise KeyError(ratio)


# --- kernel ----------------------------------------------------------------

@nb.njit(cache=True)
def select_index(w, s, state):
    """Draw index k < s with probability w[k] / sum(w); uniform if all zero."""
    total = 0.0
    top = 0.0
    for k in range(s):
        total += w[k]
        if w[k] > top:
            top = w[k]
    if total == 0.0:
        return next_below(state, s)
    scale = 1.0
    if not math.isfinite(total):
        scale = 1.0 / top
        total = 0.0
        for k in range(s):
            total += w[k] * scale
    r = next_float(state) * total
    acc = 0.0
    for k in range(s):
        acc += w[k] * scale
        if r < acc:
            return k
    for k in range(s - 1, -1, -1):
        if w[k] > 0.0:
            return k
    return s - 1


@nb.njit(cache=True)
def _sample_size(n_missing, ratio, floor_):
    s = np.int64(math.floor(ratio * n_missing + 0.5))
    if s < floor_:
        s = floor_
    if s > n_missing:
        s = n_missing
    return s


@nb.njit(cache=True)
def _cached_bfs(src, nbr, cnt, cache, valid, queue):
    if not valid[src]:
        _bfs_lists(src, nbr, cnt, cache[src], queue)
        valid[src] = True
    return cache[src]


@nb.njit(cache=True)
def _bfs_lists(src, nbr, cnt, dist, queue):
    dist[:] = -1
    dist[src] = 0
    head, tail = 0, 1
    queue[0] = src
    while head < tail:
        x = queue[head]
        head += 1
        for p in range(cnt[x]):
            y = nbr[x, p]
            if dist[y] < 0:
                dist[y] = dist[x] + 1
                queue[tail] = y
                tail += 1


@nb.njit(cache=True, error_model="numpy")
def _grow(n, directed, total, init_edges, codes, operands, ratio, floor_, heuristic,
          rw_steps, infinite, h_init, state, need_d, need_dd, need_dr):
    width = max(n - 1, 1)
    edges = np.empty((total, 2), dtype=np.int64)
    adj = np.zeros((n, n), dtype=np.uint8)
    picked = np.zeros((n, n), dtype=np.uint8)
    deg = np.zeros(n, dtype=np.int64)
    deg_in = np.zeros(n, dtype=np.int64)
    deg_out = np.zeros(n, dtype=np.int64)
    und_nbr = np.empty((n, width), dtype=np.int64)
    und_cnt = np.zeros(n, dtype=np.int64)
    out_nbr = np.empty((n if directed else 1, width), dtype=np.int64)
    out_cnt = np.zeros(n, dtype=np.int64)
    msize = n if heuristic else 1
    m_und = np.full((msize, msize), h_init, dtype=np.int64)
    m_dir = np.full((msize if directed else 1, msize if directed else 1), h_init, dtype=np.int64)
    csize = 1 if heuristic else n
    cache_und = np.empty((csize, csize), dtype=np.int32)
    cache_out = np.empty((csize if directed else 1, csize if directed else 1), dtype=np.int32)
    valid_und = np.zeros(n, dtype=np.bool_)
    valid_out = np.zeros(n, dtype=np.bool_)
    queue = np.empty(n, dtype=np.int64)
    stack = np.empty(codes.shape[0] + 1)
    row = np.empty(12)
    all_pairs = n * (n - 1)
    # walkers only matter when the generator reads a distance
    walk_und = need_d or (not directed and (need_dd or need_dr))
    walk_dir = directed and (need_dd or need_dr)

    e = 0
    for k in range(init_edges.shape[0]):
        u, v = init_edges[k, 0], init_edges[k, 1]
        if directed:
            if adj[v, u] == 0:
                und_nbr[u, und_cnt[u]] = v
                und_cnt[u] += 1
                und_nbr[v, und_cnt[v]] = u
                und_cnt[v] += 1
            adj[u, v] = 1
            out_nbr[u, out_cnt[u]] = v
            out_cnt[u] += 1
            deg_out[u] += 1
            deg_in[v] += 1
        else:
            adj[u, v] = 1
            adj[v, u] = 1
            und_nbr[u, und_cnt[u]] = v
            und_cnt[u] += 1
            und_nbr[v, und_cnt[v]] = u
            und_cnt[v] += 1
        deg[u] += 1
        deg[v] += 1
        edges[e, 0] = u
        edges[e, 1] = v
        e += 1

    if heuristic and e > 0:
        # seed the estimates with what the walkers would have found by now
        dist = np.empty(n, dtype=np.int32)
        for s in range(n):
            _bfs_lists(s, und_nbr, und_cnt, dist, queue)
            for t in range(n):
                if dist[t] > 0 and dist[t] < h_init:
                    m_und[s, t] = dist[t]
            if directed:
                _bfs_lists(s, out_nbr, out_cnt, dist, queue)
                for t in range(n):
                    if dist[t] > 0 and dist[t] < h_init:
                        m_dir[s, t] = dist[t]

    first_missing = all_pairs - (e if directed else 2 * e)
    max_s = _sample_size(first_missing, ratio, floor_)
    cand = np.empty((max_s, 2), dtype=np.int64)
    weights = np.empty(max_s)
    pool = np.empty((0, 2), dtype=np.int64)

    while e < total:
        missing = all_pairs - (e if directed else 2 * e)
        s = _sample_size(missing, ratio, floor_)
        if 4 * missing >= all_pairs:
            got = 0
            while got < s:
                u = next_below(state, n)
                v = next_below(state, n - 1)
                if v >= u:
                    v += 1
                if adj[u, v] or picked[u, v]:
                    continue
                picked[u, v] = 1
                cand[got, 0] = u
                cand[got, 1] = v
                got += 1
            for k in range(s):
                picked[cand[k, 0], cand[k, 1]] = 0
        else:
            if pool.shape[0] < missing:
                pool = np.empty((missing, 2), dtype=np.int64)
            m = 0
            for u in range(n):
                for v in range(n):
                    if u != v and adj[u, v] == 0:
                        pool[m, 0] = u
                        pool[m, 1] = v
                        m += 1
            for k in range(s):
                r = k + next_below(state, m - k)
                a0, a1 = pool[r, 0], pool[r, 1]
                pool[r, 0], pool[r, 1] = pool[k, 0], pool[k, 1]
                cand[k, 0] = a0
                cand[k, 1] = a1

        xi = e / total
        for k in range(s):
            u, v = cand[k, 0], cand[k, 1]
            row[0] = u
            row[1] = v
            row[2] = deg[u]
            row[3] = deg[v]
            if directed:
                row[4] = deg_in[u]
                row[5] = deg_in[v]
                row[6] = deg_out[u]
                row[7] = deg_out[v]
            else:
                row[4] = deg[u]
                row[5] = deg[v]
                row[6] = deg[u]
                row[7] = deg[v]
            d = dd = dr = 0.0
            if need_d or (not directed and (need_dd or need_dr)):
                if heuristic:
                    d = m_und[u, v]
                else:
                    dist = _cached_bfs(u, und_nbr, und_cnt, cache_und, valid_und, queue)
                    d = infinite if dist[v] < 0 else dist[v]
            if directed:
                if need_dd:
                    if heuristic:
                        dd = m_dir[u, v]
                    else:
                        dist = _cached_bfs(u, out_nbr, out_cnt, cache_out, valid_out, queue)
                        dd = infinite if dist[v] < 0 else dist[v]
                if need_dr:
                    if heuristic:
                        dr = m_dir[v, u]
                    else:
                        dist = _cached_bfs(v, out_nbr, out_cnt, cache_out, valid_out, queue)
                        dr = infinite if dist[u] < 0 else dist[u]
            else:
                dd = d
                dr = d
            row[8] = d
            row[9] = dd
            row[10] = dr
            row[11] = xi
            weights[k] = dsl.clamp_weight(dsl.run_program(codes, operands, row, stack))

        k = select_index(weights, s, state)
        u, v = cand[k, 0], cand[k, 1]
        if directed:
            if adj[v, u] == 0:
                und_nbr[u, und_cnt[u]] = v
                und_cnt[u] += 1
                und_nbr[v, und_cnt[v]] = u
                und_cnt[v] += 1
            adj[u, v] = 1
            out_nbr[u, out_cnt[u]] = v
            out_cnt[u] += 1
            deg_out[u] += 1
            deg_in[v] += 1
        else:
            adj[u, v] = 1
            adj[v, u] = 1
            und_nbr[u, und_cnt[u]] = v
            und_cnt[u] += 1
            und_nbr[v, und_cnt[v]] = u
            und_cnt[v] += 1
        deg[u] += 1
        deg[v] += 1
        edges[e, 0] = u
        edges[e, 1] = v
        e += 1
        if heuristic:
            if walk_und:
                _walk_batch(und_nbr, und_cnt, m_und, rw_steps, True, state)
            if walk_dir:
                _walk_batch(out_nbr, out_cnt, m_dir, rw_steps, False, state)
        else:
            valid_und[:] = False
            valid_out[:] = False
    return edges


# --- public API ------------------------------------------------------------

def _as_tree(gen):
    return dsl.parse(gen) if isinstance(gen, str) else gen


def _resolve_seed(seed):
    if seed is None:
        return int(np.random.SeedSequence().entropy) & (2**63 - 1)
    return int(seed)


def _run(initial, gen, cfg):
    cfg.validate()
    tree = _as_tree(gen)
    if not dsl.is_well_formed(tree):
        raise InputError("generator tree is not well formed")
    seed = _resolve_seed(cfg.seed)
    codes, operands = dsl.compile_tree(tree)
    used = dsl.variables_in(tree)
    init = initial.edge_array() if initial is not None else np.empty((0, 2), dtype=np.int64)
    arr = _grow(cfg.node_count, cfg.directed, cfg.target_edge_count,
                np.ascontiguousarray(init, dtype=np.int64), codes, operands,
                float(cfg.sampling_ratio), int(cfg.sample_floor),
                cfg.distance_mode == "heuristic", int(cfg.rw_steps),
                float(cfg.infinite_distance), int(cfg.heuristic_init), new_state(seed),
                "d" in used, "dd" in used, "dr" in used)
    net = Network._trusted(cfg.node_count, cfg.directed, arr, cfg.target_edge_count)
    snaps = [(r, net.prefix(snapshot_edge_count(r, cfg.target_edge_count)))
             for r in cfg.snapshot_ratios]
    return GenerationResult(net, snaps, seed, 0 if initial is None else initial.edge_count)


def generate(gen, cfg):
    """Grow ``cfg.target_edge_count`` edges on ``cfg.node_count`` empty nodes."""
    return _run(None, gen, cfg)


def generate_from(initial, gen, cfg):
    """Continue growing from ``initial``; the edge ratio counts its edges too."""
    if initial.node_count != cfg.node_count or initial.directed != cfg.directed:
        raise InputError("initial network does not match the generation config")
    if initial.edge_count >= cfg.target_edge_count:
        raise InputError("initial network already has the target edge count")
    return _run(initial, gen, cfg)


def selection_probabilities(weights):
    """The per-candidate probabilities the kernel draws from."""
    w = np.asarray(weights, dtype=np.float64)
    with np.errstate(over="ignore"):
        total = w.sum()
    if total == 0.0:
        return np.full(w.shape, 1.0 / w.size)
    if not np.isfinite(total):
        w = w / w.max()
        total = w.sum()
    return w / total


def config_for(net, **overrides):
    """A GenerationConfig sized like ``net``."""
    cfg = GenerationConfig(net.node_count, net.edge_count, net.directed)
    return replace(cfg, **overrides)
