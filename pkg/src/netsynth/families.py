"""Behavioural classification of generator trees on a probe grid.

Symbolic equality of trees is not decidable in general, so trees are
compared through the clamped weights they assign on a fixed set of probe
contexts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dsl

DEGREE_LADDER = np.array([0, 1, 2, 3, 4, 5, 7, 10, 15, 20, 30], dtype=float)
DISTANCE_LADDER = np.arange(1, 11, dtype=float)
_COL = {name: k for k, name in enumerate(dsl.VARIABLES)}
_GROUPS = {
    "degree": ("k_i", "k_j", "kin_i", "kin_j", "kout_i", "kout_j"),
    "distance": ("d", "dd", "dr"),
    "id": ("i", "j"),
    "xi": ("xi",),
}
# degree growth between k=5 and k=10 above which a generator counts as PA'
SUPERPOLY_RATIO = 50.0


@dataclass(frozen=True)
class ProbeGrid:
    directed: bool
    rows: np.ndarray

    @classmethod
    def build(cls, directed=False, count=400, seed=12345):
        rng = np.random.default_rng(seed)
        rows = np.empty((count, len(dsl.VARIABLES)))
        rows[:, _COL["i"]] = rng.integers(0, 300, count)
        rows[:, _COL["j"]] = rng.integers(0, 300, count)
        for name in _GROUPS["degree"]:
            rows[:, _COL[name]] = rng.choice(DEGREE_LADDER, count)
        for name in _GROUPS["distance"]:
            rows[:, _COL[name]] = rng.choice(DISTANCE_LADDER, count)
        rows[:, _COL["xi"]] = rng.integers(0, 101, count) / 100.0
        return cls(directed, _tie(rows, directed))


def _tie(rows, directed):
    """Make undirected rows consistent: in/out degrees equal k, all distances equal d."""
    if directed:
        return rows
    rows = rows.copy()
    for side in ("i", "j"):
        rows[:, _COL[f"kin_{side}"]] = rows[:, _COL[f"k_{side}"]]
        rows[:, _COL[f"kout_{side}"]] = rows[:, _COL[f"k_{side}"]]
    rows[:, _COL["dd"]] = rows[:, _COL["d"]]
    rows[:, _COL["dr"]] = rows[:, _COL["d"]]
    return rows


def _weights(tree, rows):
    return dsl.evaluate_batch(tree, rows)


def _same(a, b):
    return np.allclose(a, b, rtol=1e-9, atol=1e-12, equal_nan=True)


def depends_only_on(tree, keep, grid):
    """True when perturbing every variable outside ``keep`` leaves weights unchanged."""
    base = _weights(tree, grid.rows)
    rng = np.random.default_rng(7)
    other = ProbeGrid.build(grid.directed, grid.rows.shape[0], seed=int(rng.integers(1 << 30))).rows
    mixed = other.copy()
    for name in keep:
        mixed[:, _COL[name]] = grid.rows[:, _COL[name]]
    return _same(base, _weights(tree, _tie(mixed, grid.directed)))


def _monotone_in(tree, names, ladder, grid):
    """Weights never decrease when the variables in ``names`` step up the ladder."""
    for name in names:
        prev = None
        for value in ladder:
            rows = grid.rows.copy()
            rows[:, _COL[name]] = value
            w = _weights(tree, _tie(rows, grid.directed))
            if prev is not None and np.any(w < prev * (1 - 1e-9) - 1e-12):
                return False
            prev = w
    return True


def _varies(tree, grid):
    w = _weights(tree, grid.rows)
    return not np.allclose(w, w[0], rtol=1e-9, atol=1e-12)


def _present(tree, group, directed):
    names = _GROUPS[group]
    if not directed:
        names = tuple(n for n in names if n in dsl.UNDIRECTED_VARIABLES)
    used = dsl.variables_in(tree)
    return tuple(n for n in names if n in used) or names[:1]


def is_constant(tree):
    return not dsl.variables_in(dsl.simplify(tree))


def is_degree_monotone(tree, grid=None):
    grid = grid or ProbeGrid.build()
    names = _GROUPS["degree"]
    return (depends_only_on(tree, names, grid) and _varies(tree, grid)
            and _monotone_in(tree, _present(tree, "degree", grid.directed), DEGREE_LADDER, grid))


def is_distance_family(tree, grid=None):
    grid = grid or ProbeGrid.build()
    return (not dsl.contains(dsl.simplify(tree), "delta")
            and depends_only_on(tree, _GROUPS["distance"], grid) and _varies(tree, grid)
            and _monotone_in(tree, _present(tree, "distance", grid.directed), DISTANCE_LADDER, grid))


def _degree_growth(tree, grid):
    hi = grid.rows.copy()
    lo = grid.rows.copy()
    for name in _GROUPS["degree"]:
        hi[:, _COL[name]] = 10.0
        lo[:, _COL[name]] = 5.0
    a = _weights(tree, _tie(lo, grid.directed))
    b = _weights(tree, _tie(hi, grid.directed))
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(a > 0, b / a, np.inf)
    return float(np.median(r))


def family(tree, grid=None):
    """One of ER, PA, PA', ID, d, other."""
    grid = grid or ProbeGrid.build()
    tree = dsl.simplify(tree)
    if not _varies(tree, grid):
        return "ER"
    if is_degree_monotone(tree, grid):
        return "PA'" if _degree_growth(tree, grid) > SUPERPOLY_RATIO else "PA"
    if is_distance_family(tree, grid):
        return "d"
    if depends_only_on(tree, _GROUPS["id"], grid):
        return "ID"
    return "other"


@dataclass(frozen=True)
class DeltaForm:
    threshold: float
    before: str
    after: str


def delta_forms(tree, grid=None):
    """Every delta node of the simplified tree with its branch families."""
    grid = grid or ProbeGrid.build()
    out = []
    for _, node, _ in dsl.walk(dsl.simplify(tree)):
        if node.sym == "delta":
            g, before, after = node.args
            out.append(DeltaForm(g.value, family(before, grid), family(after, grid)))
    return out


def recovers_delta(tree, threshold_range=(0.40, 0.60), before=None, after=None, grid=None):
    lo, hi = threshold_range
    for form in delta_forms(tree, grid):
        if lo <= form.threshold <= hi and before in (None, form.before) and after in (None, form.after):
            return True
    return False
