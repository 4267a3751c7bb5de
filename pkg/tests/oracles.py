"""Slow, independent reference implementations used as test oracles."""

import itertools
import math

import networkx as nx
import numpy as np
from scipy.optimize import linprog

from netsynth import dsl

# --- triad census -----------------------------------------------------------

_NAME_OF_CODE = {}


def _triad_name(arcs):
    """Name the isomorphism class of a 3-node digraph using networkx."""
    key = frozenset(arcs)
    if key not in _NAME_OF_CODE:
        g = nx.DiGraph()
        g.add_nodes_from(range(3))
        g.add_edges_from(arcs)
        census = nx.triadic_census(g)
        _NAME_OF_CODE[key] = next(k for k, v in census.items() if v == 1)
    return _NAME_OF_CODE[key]


def brute_triad_census(net):
    adj = net.adjacency().astype(bool)
    counts = {}
    for a, b, c in itertools.combinations(range(net.node_count), 3):
        ids = {a: 0, b: 1, c: 2}
        if net.directed:
            arcs = [(ids[x], ids[y]) for x, y in itertools.permutations((a, b, c), 2) if adj[x, y]]
            name = _triad_name(arcs)
        else:
            name = sum(adj[x, y] for x, y in ((a, b), (a, c), (b, c)))
        counts[name] = counts.get(name, 0) + 1
    return counts


# --- transport --------------------------------------------------------------

def transport_cost(ha, hb):
    """Minimum-cost transport between two histograms with |i-j| ground cost (LP)."""
    n = len(ha)
    cost = np.abs(np.subtract.outer(np.arange(n), np.arange(n))).ravel().astype(float)
    a_eq = np.zeros((2 * n, n * n))
    for i in range(n):
        a_eq[i, i * n:(i + 1) * n] = 1
        a_eq[n + i, i::n] = 1
    res = linprog(cost, A_eq=a_eq, b_eq=np.concatenate([ha, hb]), bounds=(0, None), method="highs")
    assert res.success
    return res.fun


def greedy_transport(ha, hb):
    """Move mass left to right, always shipping to the nearest open deficit."""
    supply = list(np.asarray(ha, float))
    demand = list(np.asarray(hb, float))
    total = 0.0
    i = j = 0
    while i < len(supply) and j < len(demand):
        if supply[i] <= 1e-15:
            i += 1
            continue
        if demand[j] <= 1e-15:
            j += 1
            continue
        move = min(supply[i], demand[j])
        total += move * abs(i - j)
        supply[i] -= move
        demand[j] -= move
    return total


# --- PageRank ---------------------------------------------------------------

def dense_pagerank(net, alpha=0.85, reverse=False, iterations=2000):
    a = net.adjacency().astype(float)
    if reverse:
        a = a.T
    n = net.node_count
    out = np.maximum(a.sum(axis=1), 1.0)
    m = (a / out[:, None]).T
    x = np.full(n, 1.0 / n)
    for _ in range(iterations):
        x = alpha * m @ x + (1 - alpha) / n
    return x


def solved_pagerank(net, alpha=0.85, reverse=False):
    """Fixed point of the same iteration via a linear solve."""
    a = net.adjacency().astype(float)
    if reverse:
        a = a.T
    n = net.node_count
    out = np.maximum(a.sum(axis=1), 1.0)
    m = (a / out[:, None]).T
    return np.linalg.solve(np.eye(n) - alpha * m, np.full(n, (1 - alpha) / n))


# --- generator evaluation ---------------------------------------------------

def _group(g):
    if not math.isfinite(g):
        return 1
    g = math.floor(abs(g))
    return 1 if g < 1 else int(min(g, 1e18))


def recursive_eval(node, ctx):
    """Tree-walking evaluator written independently of the stack machine."""
    with np.errstate(all="ignore"):
        return float(_rec(node, ctx))


def _rec(node, ctx):
    if node.is_const:
        return np.float64(node.value)
    if node.is_var:
        return np.float64(ctx[node.sym])
    s = node.sym
    if s == "delta":
        return _rec(node.args[1], ctx) if ctx["xi"] <= node.args[0].value else _rec(node.args[2], ctx)
    if s == "psi":
        g = _group(node.args[0].value)
        same = int(ctx["i"]) % g == int(ctx["j"]) % g
        return _rec(node.args[1], ctx) if same else _rec(node.args[2], ctx)
    vals = [_rec(a, ctx) for a in node.args]
    if s == "+":
        return vals[0] + vals[1]
    if s == "-":
        return vals[0] - vals[1]
    if s == "*":
        return vals[0] * vals[1]
    if s == "/":
        return np.float64(0.0) if vals[1] == 0 else vals[0] / vals[1]
    if s == "pow":
        a, b = vals
        if a < 0 and b != np.floor(b):
            a = -a
        return np.power(a, b)
    if s in ("min", "max"):
        a, b = vals
        if np.isnan(a) or np.isnan(b):
            return np.float64(np.nan)
        return min(a, b) if s == "min" else max(a, b)
    if s == "exp":
        return min(np.exp(vals[0]), np.float64(dsl.EXP_CAP))
    if s == "log":
        return np.log(vals[0]) if vals[0] > 0 else np.float64(0.0)
    if s == "abs":
        return abs(vals[0])
    if s in (">", "<", "="):
        a, b, then, other = vals
        hold = a > b if s == ">" else a < b if s == "<" else a == b
        return then if hold else other
    if s == "=0":
        return vals[1] if vals[0] == 0 else vals[2]
    raise ValueError(s)


def as_dict(row):
    return dict(zip(dsl.VARIABLES, row))
