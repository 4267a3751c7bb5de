"""Network storage and the structural measurements built on it.

Everything here works on plain integer node ids ``0..N-1``. Edges are kept in
insertion order so that any prefix of the edge list is a valid earlier state
of a grown network.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numba as nb
import numpy as np

from ._prng import new_state, next_below
from .errors import InputError

INFINITE_DISTANCE = 10
HEURISTIC_INIT = 6

TRIAD_NAMES = (
    "003", "012", "102", "021D", "021U", "021C", "111D", "111U",
    "030T", "030C", "201", "120D", "120U", "120C", "210", "300",
)
UNDIRECTED_TRIAD_NAMES = ("empty", "edge", "path", "triangle")


class Network:
    """Simple graph on ``node_count`` nodes; no self-loops, no multi-edges.

    ``target_edge_count`` is the size the network is meant to reach when it
    is being grown; it defaults to the current edge count.
    """

    def __init__(self, node_count, directed=False, edges=(), target_edge_count=None):
        if int(node_count) < 1:
            raise InputError(f"node_count must be positive, got {node_count}")
        self.node_count = int(node_count)
        self.directed = bool(directed)
        arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        self._validate(arr)
        self._edges = arr
        self._keys = None
        self._cache = {}
        self._target = None if target_edge_count is None else int(target_edge_count)

    @classmethod
    def _trusted(cls, node_count, directed, arr, target_edge_count=None):
        # Skips validation; only for arrays produced by our own kernels.
        net = cls.__new__(cls)
        net.node_count = int(node_count)
        net.directed = bool(directed)
        net._edges = arr
        net._keys = None
        net._cache = {}
        net._target = None if target_edge_count is None else int(target_edge_count)
        return net

    def _validate(self, arr):
        n = self.node_count
        if arr.size == 0:
            return
        if arr.min() < 0 or arr.max() >= n:
            bad = arr[(arr < 0).any(axis=1) | (arr >= n).any(axis=1)][0]
            raise InputError(f"edge {tuple(bad)} references a node outside 0..{n - 1}")
        loops = arr[:, 0] == arr[:, 1]
        if loops.any():
            raise InputError(f"self-loop on node {arr[loops][0, 0]}")
        keys = self._pair_keys(arr)
        if np.unique(keys).size != keys.size:
            raise InputError("duplicate edge")

    def _pair_keys(self, arr):
        if self.directed:
            return arr[:, 0] * self.node_count + arr[:, 1]
        lo = np.minimum(arr[:, 0], arr[:, 1])
        hi = np.maximum(arr[:, 0], arr[:, 1])
        return lo * self.node_count + hi

    @property
    def edge_count(self):
        return int(self._edges.shape[0])

    @property
    def target_edge_count(self):
        return self.edge_count if self._target is None else self._target

    @property
    def capacity(self):
        n = self.node_count
        return n * (n - 1) if self.directed else n * (n - 1) // 2

    @property
    def edges(self):
        """Edges as a list of ``(u, v)`` tuples in insertion order."""
        return [tuple(e) for e in self._edges.tolist()]

    def edge_array(self):
        return self._edges

    def has_edge(self, u, v):
        if self._keys is None:
            self._keys = set(self._pair_keys(self._edges).tolist())
        if self.directed:
            return u * self.node_count + v in self._keys
        return min(u, v) * self.node_count + max(u, v) in self._keys

    def add_edge(self, u, v):
        u, v = int(u), int(v)
        self._check_node(u)
        self._check_node(v)
        if u == v:
            raise InputError(f"self-loop on node {u}")
        if self.has_edge(u, v):
            raise InputError(f"duplicate edge ({u}, {v})")
        self._edges = np.vstack([self._edges, [[u, v]]])
        self._keys.add(self._pair_keys(self._edges[-1:])[0].item())
        self._cache.clear()

    def prefix(self, count):
        """The network made of the first ``count`` inserted edges."""
        return Network._trusted(self.node_count, self.directed, self._edges[:count],
                                self.target_edge_count)

    def copy(self):
        return Network._trusted(self.node_count, self.directed, self._edges.copy(), self._target)

    def _check_node(self, v):
        if not 0 <= v < self.node_count:
            raise InputError(f"unknown node id {v} (network has {self.node_count} nodes)")

    def degrees(self, kind="total"):
        """Degree of every node as an int array."""
        key = ("deg", kind)
        if key not in self._cache:
            n = self.node_count
            src, dst = self._edges[:, 0], self._edges[:, 1]
            out_deg = np.bincount(src, minlength=n)
            in_deg = np.bincount(dst, minlength=n)
            if kind == "total":
                deg = out_deg + in_deg
            elif not self.directed:
                raise InputError(f"{kind}-degree requested on an undirected network")
            elif kind == "in":
                deg = in_deg
            elif kind == "out":
                deg = out_deg
            else:
                raise InputError(f"unknown degree kind {kind!r}")
            self._cache[key] = deg
        return self._cache[key]

    def neighbors(self, kind="all"):
        """CSR ``(indptr, indices)`` adjacency.

        ``out`` follows edge direction, ``in`` reverses it, ``all`` ignores it.
        For undirected networks the three coincide.
        """
        if not self.directed:
            kind = "all"
        key = ("csr", kind)
        if key not in self._cache:
            src, dst = self._edges[:, 0], self._edges[:, 1]
            if kind == "out":
                a, b = src, dst
            elif kind == "in":
                a, b = dst, src
            elif kind == "all":
                a = np.concatenate([src, dst])
                b = np.concatenate([dst, src])
                if self.directed:
                    keys = np.unique(a * self.node_count + b)
                    a, b = keys // self.node_count, keys % self.node_count
            else:
                raise InputError(f"unknown neighbor kind {kind!r}")
            self._cache[key] = _to_csr(self.node_count, a, b)
        return self._cache[key]

    def adjacency(self):
        """Dense uint8 matrix with ``adj[u, v] = 1`` for every edge u->v."""
        if "adj" not in self._cache:
            n = self.node_count
            adj = np.zeros((n, n), dtype=np.uint8)
            adj[self._edges[:, 0], self._edges[:, 1]] = 1
            if not self.directed:
                adj[self._edges[:, 1], self._edges[:, 0]] = 1
            self._cache["adj"] = adj
        return self._cache["adj"]

    def __repr__(self):
        kind = "directed" if self.directed else "undirected"
        return f"Network({self.node_count}N|{self.edge_count}E, {kind})"


def _to_csr(n, a, b):
    order = np.lexsort((b, a))
    indices = b[order].astype(np.int64)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(a, minlength=n), out=indptr[1:])
    return indptr, indices


def degree(net, v, kind="total"):
    net._check_node(v)
    if kind not in ("total", "in", "out"):
        raise InputError(f"unknown degree kind {kind!r}")
    return int(net.degrees(kind)[v])


# --- distances -------------------------------------------------------------

@nb.njit(cache=True)
def _bfs(src, indptr, indices, dist, queue):
    dist[:] = -1
    dist[src] = 0
    head, tail = 0, 1
    queue[0] = src
    while head < tail:
        x = queue[head]
        head += 1
        dx = dist[x] + 1
        for p in range(indptr[x], indptr[x + 1]):
            y = indices[p]
            if dist[y] < 0:
                dist[y] = dx
                queue[tail] = y
                tail += 1


@nb.njit(cache=True)
def _bfs_all(n, indptr, indices):
    out = np.empty((n, n), dtype=np.int32)
    dist = np.empty(n, dtype=np.int32)
    queue = np.empty(n, dtype=np.int64)
    for s in range(n):
        _bfs(s, indptr, indices, dist, queue)
        out[s, :] = dist
    return out


_KIND_CSR = {"undirected": "all", "directed": "out", "reverse": "out"}


def distance_matrix(net, kind="undirected"):
    """All-pairs hop distances; -1 marks unreachable pairs, 0 the diagonal.

    ``reverse`` is the transpose of ``directed``: entry (i, j) is d(j -> i).
    """
    if kind not in _KIND_CSR:
        raise InputError(f"unknown distance kind {kind!r}")
    key = ("dist", kind)
    if key not in net._cache:
        if kind == "reverse":
            net._cache[key] = distance_matrix(net, "directed").T
        else:
            indptr, indices = net.neighbors(_KIND_CSR[kind])
            net._cache[key] = _bfs_all(net.node_count, indptr, indices)
    return net._cache[key]


def exact_distance(net, u, v, kind="undirected", infinite=INFINITE_DISTANCE):
    """Shortest hop count from u to v, or ``infinite`` when unreachable.

    BFS rows are cached on the network and dropped on every edge insertion.
    """
    net._check_node(u)
    net._check_node(v)
    if u == v:
        raise InputError("distance between a node and itself is undefined here")
    if kind not in _KIND_CSR:
        raise InputError(f"unknown distance kind {kind!r}")
    if kind == "reverse":
        u, v = v, u
    key = ("bfs", kind, u)
    if key not in net._cache:
        n = net.node_count
        indptr, indices = net.neighbors(_KIND_CSR[kind])
        dist = np.empty(n, dtype=np.int32)
        _bfs(u, indptr, indices, dist, np.empty(n, dtype=np.int64))
        net._cache[key] = dist
    d = int(net._cache[key][v])
    return infinite if d < 0 else d


@nb.njit(cache=True)
def _walk_batch(nbr, cnt, m, steps, symmetric, state):
    n = cnt.shape[0]
    pos = np.arange(n)
    # all walkers advance in lockstep; independent chains pipeline better
    for c in range(1, steps + 1):
        for origin in range(n):
            cur = pos[origin]
            k = cnt[cur]
            if k == 0:
                continue
            cur = nbr[cur, next_below(state, k)]
            pos[origin] = cur
            if cur != origin and c < m[origin, cur]:
                m[origin, cur] = c
                if symmetric:
                    m[cur, origin] = c


@nb.njit(cache=True)
def _append_neighbor(nbr, cnt, u, v):
    nbr[u, cnt[u]] = v
    cnt[u] += 1


class HeuristicDistances:
    """Random-walk distance estimates, refined after every edge addition.

    One walker per node. After each edge insertion every walker takes
    ``steps`` uniform moves starting from its origin; when it reaches a node
    j after c moves and c beats the stored estimate, the estimate becomes c.
    Entries start at ``init`` and never increase.

    Directed networks carry two walker sets: one ignoring edge direction (for
    the undirected distance) and one following it (for directed and reverse
    distances).
    """

    def __init__(self, node_count, directed=False, steps=5, init=HEURISTIC_INIT, seed=0):
        n = int(node_count)
        self.node_count = n
        self.directed = bool(directed)
        self.steps = int(steps)
        self.init = int(init)
        self._state = new_state(seed)
        self.undirected = np.full((n, n), self.init, dtype=np.int64)
        self._und_nbr = np.zeros((n, max(n - 1, 1)), dtype=np.int64)
        self._und_cnt = np.zeros(n, dtype=np.int64)
        if self.directed:
            self.forward = np.full((n, n), self.init, dtype=np.int64)
            self._out_nbr = np.zeros((n, max(n - 1, 1)), dtype=np.int64)
            self._out_cnt = np.zeros(n, dtype=np.int64)
            self._und_seen = set()

    def add_edge(self, u, v):
        """Record a new edge and advance every walker by one batch."""
        if self.directed:
            _append_neighbor(self._out_nbr, self._out_cnt, u, v)
            key = (min(u, v), max(u, v))
            if key not in self._und_seen:
                self._und_seen.add(key)
                _append_neighbor(self._und_nbr, self._und_cnt, u, v)
                _append_neighbor(self._und_nbr, self._und_cnt, v, u)
        else:
            _append_neighbor(self._und_nbr, self._und_cnt, u, v)
            _append_neighbor(self._und_nbr, self._und_cnt, v, u)
        self.advance()

    def advance(self):
        _walk_batch(self._und_nbr, self._und_cnt, self.undirected, self.steps, True, self._state)
        if self.directed:
            _walk_batch(self._out_nbr, self._out_cnt, self.forward, self.steps, False, self._state)

    def lookup(self, u, v, kind="undirected"):
        if kind == "undirected" or not self.directed:
            return int(self.undirected[u, v])
        if kind == "directed":
            return int(self.forward[u, v])
        if kind == "reverse":
            return int(self.forward[v, u])
        raise InputError(f"unknown distance kind {kind!r}")

    def matrix(self, kind="undirected"):
        if kind == "undirected" or not self.directed:
            return self.undirected
        return self.forward if kind == "directed" else self.forward.T


# --- PageRank --------------------------------------------------------------

@dataclass(frozen=True)
class PageRankParams:
    alpha: float = 0.85
    tolerance: float = 1e-8
    max_iterations: int = 200
    beta: float | None = None  # None means (1 - alpha) / N

    def teleport(self, n):
        return (1.0 - self.alpha) / n if self.beta is None else self.beta


@nb.njit(cache=True)
def _pagerank(n, in_indptr, in_indices, out_deg, alpha, beta, tol, max_iter):
    x = np.full(n, 1.0 / n)
    new = np.empty(n)
    inv = np.empty(n)
    for m in range(n):
        inv[m] = 1.0 / max(out_deg[m], 1)
    for _ in range(max_iter):
        diff = 0.0
        for i in range(n):
            s = 0.0
            for p in range(in_indptr[i], in_indptr[i + 1]):
                m = in_indices[p]
                s += x[m] * inv[m]
            new[i] = alpha * s + beta
            diff = max(diff, abs(new[i] - x[i]))
        x[:] = new
        if diff < tol:
            return x, True
    return x, False


def pagerank(net, params=PageRankParams(), direction="direct"):
    """PageRank with out-degree 1 substituted for dangling nodes.

    ``reverse`` runs the same iteration with every edge flipped. Undirected
    networks treat each edge as two arcs, so both directions coincide.
    """
    if direction not in ("direct", "reverse"):
        raise InputError(f"unknown PageRank direction {direction!r}")
    key = ("pagerank", direction, params)
    if key in net._cache:
        return net._cache[key]
    n = net.node_count
    if not net.directed:
        indptr, indices = net.neighbors("all")
        out_deg = net.degrees("total")
    elif direction == "direct":
        indptr, indices = net.neighbors("in")
        out_deg = net.degrees("out")
    else:
        indptr, indices = net.neighbors("out")
        out_deg = net.degrees("in")
    x, converged = _pagerank(n, indptr, indices, out_deg, params.alpha,
                             params.teleport(n), params.tolerance, params.max_iterations)
    if not converged:
        warnings.warn(f"PageRank did not converge in {params.max_iterations} iterations",
                      RuntimeWarning, stacklevel=2)
    net._cache[key] = x
    return x


# --- triad census ----------------------------------------------------------

def _triad_class(code):
    # bits: v->u, u->v, v->w, w->v, u->w, w->u
    arcs = [(a, b) for bit, (a, b) in enumerate(
        [(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)]) if code >> bit & 1]
    arcset = set(arcs)
    mutual = asym = 0
    for a, b in ((0, 1), (0, 2), (1, 2)):
        fwd, back = (a, b) in arcset, (b, a) in arcset
        mutual += fwd and back
        asym += fwd != back
    man = f"{mutual}{asym}{3 - mutual - asym}"
    if man not in ("021", "111", "030", "120"):
        return TRIAD_NAMES.index(man)
    out_deg = [sum(a == x for a, _ in arcs) for x in range(3)]
    in_deg = [sum(b == x for _, b in arcs) for x in range(3)]
    if man == "021":
        name = "021D" if 2 in out_deg else "021U" if 2 in in_deg else "021C"
    elif man == "030":
        name = "030T" if 2 in out_deg else "030C"
    elif man == "111":
        # the lone asymmetric arc points into the mutual pair -> 111D
        (a, b), = [(a, b) for a, b in arcs if (b, a) not in arcset]
        mutual_nodes = {x for x, y in arcs if (y, x) in arcset}
        name = "111D" if b in mutual_nodes else "111U"
    else:
        asym_arcs = [(a, b) for a, b in arcs if (b, a) not in arcset]
        outs = [a for a, _ in asym_arcs]
        ins = [b for _, b in asym_arcs]
        name = "120D" if outs[0] == outs[1] else "120U" if ins[0] == ins[1] else "120C"
    return TRIAD_NAMES.index(name)


TRIAD_CODE_TABLE = np.array([_triad_class(c) for c in range(64)], dtype=np.int64)


@nb.njit(cache=True)
def _census(n, indptr, indices, adj, table):
    census = np.zeros(16, dtype=np.int64)
    mark = np.full(n, -1, dtype=np.int64)
    buf = np.empty(n, dtype=np.int64)
    for v in range(n):
        for p in range(indptr[v], indptr[v + 1]):
            u = indices[p]
            if u <= v:
                continue
            stamp = v * n + u
            size = 0
            for q in range(indptr[v], indptr[v + 1]):
                w = indices[q]
                if w != u and mark[w] != stamp:
                    mark[w] = stamp
                    buf[size] = w
                    size += 1
            for q in range(indptr[u], indptr[u + 1]):
                w = indices[q]
                if w != v and mark[w] != stamp:
                    mark[w] = stamp
                    buf[size] = w
                    size += 1
            dyad = 2 if adj[v, u] and adj[u, v] else 1
            census[dyad] += n - size - 2
            for k in range(size):
                w = buf[k]
                if u < w or (v < w and w < u and adj[v, w] == 0 and adj[w, v] == 0):
                    code = (adj[v, u] + 2 * adj[u, v] + 4 * adj[v, w] + 8 * adj[w, v]
                            + 16 * adj[u, w] + 32 * adj[w, u])
                    census[table[code]] += 1
    return census


def triad_census(net):
    """Counts of every three-node isomorphism class.

    Directed networks give 16 counts ordered as ``TRIAD_NAMES``; undirected
    ones give 4 (``UNDIRECTED_TRIAD_NAMES``: no edge, one edge, path,
    triangle). Only connected triads are enumerated, via each edge's
    neighbourhood; the empty class is what remains of C(N, 3).
    """
    n = net.node_count
    if n < 3:
        raise InputError("triad census needs at least 3 nodes")
    if "census" not in net._cache:
        indptr, indices = net.neighbors("all")
        counts = _census(n, indptr, indices, net.adjacency(), TRIAD_CODE_TABLE)
        counts[0] = math.comb(n, 3) - counts[1:].sum()
        if not net.directed:
            counts = counts[[0, 2, 10, 15]]
        net._cache["census"] = counts
    return net._cache["census"].copy()


# --- edge-list files -------------------------------------------------------

def read_edgelist(path):
    """Parse the edge-list text format.

    Optional header ``# nodes=<N> directed=<0|1>``; otherwise the node count
    is inferred from the largest id and the network is undirected.
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"no such file: {path}")
    nodes, directed, pairs = None, False, []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            fields = dict(f.split("=", 1) for f in line[1:].split() if "=" in f)
            if "nodes" in fields:
                try:
                    nodes = int(fields["nodes"])
                except ValueError:
                    raise InputError(f"{path}:{lineno}: bad node count {fields['nodes']!r}") from None
                directed = fields.get("directed", "0") in ("1", "true", "True")
            continue
        parts = line.split()
        try:
            pairs.append((int(parts[0]), int(parts[1])))
        except (IndexError, ValueError):
            raise InputError(f"{path}:{lineno}: expected '<u> <v>', got {line!r}") from None
    if nodes is None:
        nodes = 1 + max(itertools.chain.from_iterable(pairs), default=0)
    return Network(nodes, directed, pairs)


def write_edgelist(net, path, **header):
    """Write the header (plus any ``key=value`` extras) and edges in insertion order."""
    extra = "".join(f" {k}={v}" for k, v in header.items())
    lines = [f"# nodes={net.node_count} directed={int(net.directed)}{extra}"]
    lines += [f"{u} {v}" for u, v in net.edge_array().tolist()]
    Path(path).write_text("\n".join(lines) + "\n")
