"""Generator expressions: the evolvable programs that weight candidate edges.

A generator is a tree in prefix syntax, e.g. ``(delta 0.5 k_i (pow k_i k_i))``.
Trees are immutable; mutation and recombination build new ones.

Evaluation goes through one compiled stack machine (``evaluate_batch``) so
that the growth kernel, constant folding and reporting all share exactly the
same floating-point behaviour.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .errors import GeneratorSyntaxError, InputError

VARIABLES = ("i", "j", "k_i", "k_j", "kin_i", "kin_j", "kout_i", "kout_j",
             "d", "dd", "dr", "xi")
UNDIRECTED_VARIABLES = ("i", "j", "k_i", "k_j", "d", "xi")
DEGREE_VARIABLES = ("k_i", "k_j", "kin_i", "kin_j", "kout_i", "kout_j")
DISTANCE_VARIABLES = ("d", "dd", "dr")
ALIASES = {"k": "k_i", "kin": "kin_i", "kout": "kout_i", "ξ": "xi"}

ARITY = {
    "+": 2, "-": 2, "*": 2, "/": 2, "pow": 2, "min": 2, "max": 2,
    "exp": 1, "log": 1, "abs": 1,
    ">": 4, "<": 4, "=": 4, "=0": 3,
    "psi": 3, "delta": 3,
}
OPERATORS = tuple(ARITY)
# operators whose first operand must be a literal constant
CONSTANT_HEAD = ("psi", "delta")
CONST = "#"

EXP_CAP = 1e300

# stack-machine opcodes
_CODES = {CONST: 0, "var": 1, "+": 2, "-": 3, "*": 4, "/": 5, "pow": 6, "min": 7,
          "max": 8, "exp": 9, "log": 10, "abs": 11, ">": 12, "<": 13, "=": 14,
          "=0": 15, "psi": 16, "delta": 17}
_XI = VARIABLES.index("xi")


@dataclass(frozen=True, eq=True)
class Node:
    """One tree node: an operator with ``args``, a variable, or a constant."""

    sym: str
    args: tuple = ()
    value: float = 0.0
    size: int = field(default=1, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "size", 1 + sum(a.size for a in self.args))

    @property
    def is_const(self):
        return self.sym == CONST

    @property
    def is_var(self):
        return self.sym in VARIABLES

    def __str__(self):
        return format_tree(self)


def const(value):
    value = float(value)
    return Node(CONST, value=0.0 if value == 0 else value)


def var(name):
    name = ALIASES.get(name, name)
    if name not in VARIABLES:
        raise InputError(f"unknown variable {name!r}")
    return Node(name)


def op(sym, *args):
    if sym not in ARITY:
        raise InputError(f"unknown operator {sym!r}")
    if len(args) != ARITY[sym]:
        raise InputError(f"{sym} takes {ARITY[sym]} operands, got {len(args)}")
    if sym in CONSTANT_HEAD and not args[0].is_const:
        raise InputError(f"first operand of {sym} must be a constant")
    return Node(sym, tuple(args))


# --- traversal -------------------------------------------------------------

def walk(tree):
    """Preorder list of ``(path, node, constant_slot)``.

    ``path`` is the tuple of child indices from the root; ``constant_slot``
    marks positions that only accept a literal (the head of psi/delta).
    """
    out = []
    stack = [((), tree, False)]
    while stack:
        path, node, slot = stack.pop()
        out.append((path, node, slot))
        for k in range(len(node.args) - 1, -1, -1):
            stack.append((path + (k,), node.args[k], k == 0 and node.sym in CONSTANT_HEAD))
    return out


def replace(tree, path, new):
    if not path:
        return new
    k = path[0]
    args = list(tree.args)
    args[k] = replace(args[k], path[1:], new)
    return Node(tree.sym, tuple(args), tree.value)


def variables_in(tree):
    return {n.sym for _, n, _ in walk(tree) if n.is_var}


def contains(tree, sym):
    return any(n.sym == sym for _, n, _ in walk(tree))


def is_well_formed(tree):
    for _, node, slot in walk(tree):
        if node.is_const or node.is_var:
            if node.args:
                return False
        elif node.sym not in ARITY or len(node.args) != ARITY[node.sym]:
            return False
        if slot and not node.is_const:
            return False
    return True


# --- text syntax -----------------------------------------------------------

def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        ch = text[pos]
        if ch.isspace():
            pos += 1
        elif ch in "()":
            tokens.append((ch, pos))
            pos += 1
        else:
            start = pos
            while pos < len(text) and not text[pos].isspace() and text[pos] not in "()":
                pos += 1
            tokens.append((text[start:pos], start))
    return tokens


def parse(text):
    """Parse canonical prefix syntax into a tree."""
    tokens = _tokenize(text)
    end = len(text)
    if not tokens:
        raise GeneratorSyntaxError("empty expression", 0)

    def expr(k):
        if k >= len(tokens):
            raise GeneratorSyntaxError("unexpected end of input", end)
        tok, pos = tokens[k]
        if tok == ")":
            raise GeneratorSyntaxError("unexpected ')'", pos)
        if tok != "(":
            return atom(tok, pos), k + 1
        if k + 1 >= len(tokens):
            raise GeneratorSyntaxError("unexpected end of input", end)
        sym, sym_pos = tokens[k + 1]
        if sym not in ARITY:
            raise GeneratorSyntaxError(f"unknown operator {sym!r}", sym_pos)
        args = []
        k += 2
        while True:
            if k >= len(tokens):
                raise GeneratorSyntaxError("unexpected end of input", end)
            if tokens[k][0] == ")":
                break
            node, k = expr(k)
            args.append(node)
        if len(args) != ARITY[sym]:
            raise GeneratorSyntaxError(
                f"{sym} takes {ARITY[sym]} operands, got {len(args)}", pos)
        if sym in CONSTANT_HEAD and not args[0].is_const:
            raise GeneratorSyntaxError(f"first operand of {sym} must be a number", pos)
        return Node(sym, tuple(args)), k + 1

    def atom(tok, pos):
        name = ALIASES.get(tok, tok)
        if name in VARIABLES:
            return Node(name)
        try:
            return const(float(tok))
        except ValueError:
            raise GeneratorSyntaxError(f"unknown symbol {tok!r}", pos) from None

    tree, k = expr(0)
    if k != len(tokens):
        raise GeneratorSyntaxError("trailing input", tokens[k][1])
    return tree


def _format_number(x):
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def format_tree(tree):
    """Canonical prefix text; ``parse(format_tree(t)) == t``."""
    if tree.is_const:
        return _format_number(tree.value)
    if tree.is_var:
        return tree.sym
    return "(" + " ".join([tree.sym] + [format_tree(a) for a in tree.args]) + ")"


_INFIX = {"+", "-", "*", "/"}


def to_infix(tree):
    """Human-oriented rendering for reports; not parseable."""
    if tree.is_const:
        return _format_number(round(tree.value, 4))
    if tree.is_var:
        return tree.sym
    a = [to_infix(x) for x in tree.args]
    s = tree.sym
    if s in _INFIX:
        return f"({a[0]} {s} {a[1]})"
    if s == "pow":
        return f"{a[0]}^{a[1]}"
    if s == "delta":
        return f"Δ_{a[0]}({a[1]}, {a[2]})"
    if s == "psi":
        return f"ψ_{a[0]}({a[1]}, {a[2]})"
    if s in (">", "<", "="):
        return f"({a[0]} {s} {a[1]} ? {a[2]} : {a[3]})"
    if s == "=0":
        return f"({a[0]} == 0 ? {a[1]} : {a[2]})"
    return f"{s}({', '.join(a)})"


# --- evaluation ------------------------------------------------------------

def compile_tree(tree):
    """Postfix program ``(codes, operands)`` for the stack machine."""
    codes, operands = [], []

    def emit(node):
        for a in node.args:
            emit(a)
        if node.is_const:
            codes.append(0)
            operands.append(node.value)
        elif node.is_var:
            codes.append(1)
            operands.append(float(VARIABLES.index(node.sym)))
        else:
            codes.append(_CODES[node.sym])
            operands.append(0.0)

    emit(tree)
    return np.array(codes, dtype=np.int64), np.array(operands, dtype=np.float64)


@nb.njit(cache=True, error_model="numpy")
def _group(g):
    if not math.isfinite(g):
        return 1
    g = math.floor(abs(g))
    if g < 1.0:
        return 1
    return np.int64(min(g, 1e18))


@nb.njit(cache=True, error_model="numpy")
def run_program(codes, operands, ctx, stack):
    """Evaluate one context row; returns the unclamped value."""
    sp = 0
    for pc in range(codes.shape[0]):
        c = codes[pc]
        if c == 0:
            stack[sp] = operands[pc]
            sp += 1
            continue
        if c == 1:
            stack[sp] = ctx[np.int64(operands[pc])] + 0.0
            sp += 1
            continue
        if c <= 8:
            b = stack[sp - 1]
            a = stack[sp - 2]
            sp -= 2
            if c == 2:
                r = a + b
            elif c == 3:
                r = a - b
            elif c == 4:
                r = a * b
            elif c == 5:
                r = 0.0 if b == 0.0 else a / b
            elif c == 6:
                if a < 0.0 and b != math.floor(b):
                    a = -a
                r = a ** b
            elif c == 7:
                r = np.nan if (a != a or b != b) else (a if a < b else b)
            else:
                r = np.nan if (a != a or b != b) else (a if a > b else b)
        elif c <= 11:
            a = stack[sp - 1]
            sp -= 1
            if c == 9:
                r = math.exp(a)
                if r > EXP_CAP:
                    r = EXP_CAP
            elif c == 10:
                r = math.log(a) if a > 0.0 else 0.0
            else:
                r = abs(a)
        elif c <= 14:
            other = stack[sp - 1]
            then = stack[sp - 2]
            b = stack[sp - 3]
            a = stack[sp - 4]
            sp -= 4
            if c == 12:
                hold = a > b
            elif c == 13:
                hold = a < b
            else:
                hold = a == b
            r = then if hold else other
        else:
            other = stack[sp - 1]
            then = stack[sp - 2]
            a = stack[sp - 3]
            sp -= 3
            if c == 15:
                r = then if a == 0.0 else other
            elif c == 16:
                g = _group(a)
                same = np.int64(ctx[0]) % g == np.int64(ctx[1]) % g
                r = then if same else other
            else:
                r = then if ctx[_XI] <= a else other
        # collapse -0.0 so that sign-of-zero never leaks into later operators
        stack[sp] = r + 0.0
        sp += 1
    return stack[0]


@nb.njit(cache=True)
def clamp_weight(r):
    if r >= 0.0 and r != np.inf:
        return r + 0.0
    return 0.0


@nb.njit(cache=True, error_model="numpy")
def eval_rows(codes, operands, ctxs, out, raw):
    stack = np.empty(codes.shape[0] + 1)
    for r in range(ctxs.shape[0]):
        v = run_program(codes, operands, ctxs[r], stack)
        out[r] = v if raw else clamp_weight(v)


@dataclass(frozen=True)
class EdgeContext:
    """Everything a generator may read about one candidate edge i -> j.

    Directed-only fields default to their undirected counterparts, which is
    how undirected networks expose them.
    """

    i: int
    j: int
    k_i: float = 0.0
    k_j: float = 0.0
    d: float = 1.0
    xi: float = 0.0
    kin_i: float | None = None
    kin_j: float | None = None
    kout_i: float | None = None
    kout_j: float | None = None
    dd: float | None = None
    dr: float | None = None

    def __post_init__(self):
        if self.i == self.j:
            raise InputError("edge context needs i != j")
        if not 0.0 <= self.xi <= 1.0:
            raise InputError(f"edge ratio must lie in [0, 1], got {self.xi}")

    def as_row(self):
        def pick(x, fallback):
            return fallback if x is None else x
        return np.array([
            self.i, self.j, self.k_i, self.k_j,
            pick(self.kin_i, self.k_i), pick(self.kin_j, self.k_j),
            pick(self.kout_i, self.k_i), pick(self.kout_j, self.k_j),
            self.d, pick(self.dd, self.d), pick(self.dr, self.d), self.xi,
        ], dtype=np.float64)


def evaluate_batch(tree, ctxs, raw=False):
    """Evaluate over a ``(n, 12)`` array of context rows (VARIABLES order)."""
    ctxs = np.ascontiguousarray(ctxs, dtype=np.float64).reshape(-1, len(VARIABLES))
    codes, operands = compile_tree(tree)
    out = np.empty(ctxs.shape[0])
    eval_rows(codes, operands, ctxs, out, raw)
    return out


def evaluate(tree, ctx):
    """Weight of one candidate edge: finite and non-negative."""
    return float(evaluate_batch(tree, ctx.as_row())[0])


# --- random construction ---------------------------------------------------

@dataclass(frozen=True)
class InitParams:
    d_min: int = 2
    d_max: int = 5
    p_terminal: float = 0.4

    def __post_init__(self):
        if not 1 <= self.d_min <= self.d_max:
            raise InputError(f"need 1 <= d_min <= d_max, got {self.d_min}, {self.d_max}")
        if not 0.0 <= self.p_terminal <= 1.0:
            raise InputError(f"p_terminal must lie in [0, 1], got {self.p_terminal}")


def random_constant(rng):
    """0 w.p. 0.1, a uniform digit 0..9 w.p. 0.4, a uniform real in [0, 1) w.p. 0.5."""
    u = rng.random()
    if u < 0.1:
        return const(0.0)
    if u < 0.5:
        return const(float(rng.integers(10)))
    return const(rng.random())


def random_tree(params=InitParams(), rng=None, variables=VARIABLES, strategy=None):
    """Random generator via fixed-depth or grow, picked per tree when unset.

    A depth D is drawn from [d_min, d_max] and every node at depth D is a
    terminal. Fixed-depth makes all shallower nodes operators. Grow keeps
    operators above d_min and, between d_min and D, makes each node a
    terminal with probability ``p_terminal``.
    """
    rng = np.random.default_rng() if rng is None else rng
    depth_goal = int(rng.integers(params.d_min, params.d_max + 1))
    if strategy is None:
        strategy = "fixed_depth" if rng.random() < 0.5 else "grow"
    if strategy not in ("fixed_depth", "grow"):
        raise InputError(f"unknown strategy {strategy!r}")

    def terminal():
        if rng.random() < 0.5:
            return Node(variables[int(rng.integers(len(variables)))])
        return random_constant(rng)

    def build(depth):
        if depth >= depth_goal:
            return terminal()
        if (strategy == "grow" and depth >= params.d_min
                and rng.random() < params.p_terminal):
            return terminal()
        sym = OPERATORS[int(rng.integers(len(OPERATORS)))]
        args = [build(depth + 1) for _ in range(ARITY[sym])]
        if sym in CONSTANT_HEAD:
            args[0] = random_constant(rng)
        return Node(sym, tuple(args))

    return build(0)


def mutate(tree, params=InitParams(), rng=None, variables=VARIABLES):
    """Headless-chicken mutation.

    A uniformly chosen node is replaced by a uniformly chosen subtree of a
    fresh random tree. Literal-only slots receive a fresh random constant.
    """
    rng = np.random.default_rng() if rng is None else rng
    points = walk(tree)
    path, _, slot = points[int(rng.integers(len(points)))]
    if slot:
        return replace(tree, path, random_constant(rng))
    donor = walk(random_tree(params, rng, variables))
    return replace(tree, path, donor[int(rng.integers(len(donor)))][1])


def recombine(parent1, parent2, rng=None):
    """Graft a uniformly chosen subtree of parent2 onto a uniformly chosen
    node of parent1. A literal-only slot draws its donor among parent2's
    constants and is left alone when parent2 has none."""
    rng = np.random.default_rng() if rng is None else rng
    points = walk(parent1)
    path, _, slot = points[int(rng.integers(len(points)))]
    donors = [n for _, n, _ in walk(parent2)]
    if slot:
        donors = [n for n in donors if n.is_const]
        if not donors:
            return parent1
    return replace(parent1, path, donors[int(rng.integers(len(donors)))])


# --- simplification --------------------------------------------------------

_EMPTY_CTX = np.zeros((1, len(VARIABLES)))


def _fold(node):
    v = evaluate_batch(node, _EMPTY_CTX, raw=True)[0]
    return const(v) if math.isfinite(v) else node


def _is(node, value):
    return node.is_const and node.value == value


def _simplify_node(node):
    if not node.args:
        return node
    args = tuple(_simplify_node(a) for a in node.args)
    node = Node(node.sym, args)
    s = node.sym
    if all(a.is_const for a in args) and s not in CONSTANT_HEAD:
        return _fold(node)
    if s == "+":
        if _is(args[1], 0.0):
            return args[0]
        if _is(args[0], 0.0):
            return args[1]
    elif s == "-":
        if _is(args[1], 0.0):
            return args[0]
    elif s == "*":
        if _is(args[1], 1.0):
            return args[0]
        if _is(args[0], 1.0):
            return args[1]
    elif s == "/":
        if _is(args[1], 1.0):
            return args[0]
    elif s == "pow":
        if _is(args[1], 1.0):
            return args[0]
        if _is(args[1], 0.0):
            return const(1.0)
    elif s in ("min", "max"):
        if args[0] == args[1]:
            return args[0]
    elif s == "abs":
        if args[0].sym == "abs":
            return args[0]
    elif s in (">", "<", "="):
        if args[2] == args[3]:
            return args[2]
        if args[0].is_const and args[1].is_const:
            return _fold_condition(node)
    elif s == "=0":
        if args[1] == args[2]:
            return args[1]
        if args[0].is_const:
            return args[1] if args[0].value == 0.0 else args[2]
    elif s == "psi":
        if args[1] == args[2]:
            return args[1]
        if _group(args[0].value) == 1:
            return args[1]
    elif s == "delta":
        if args[1] == args[2]:
            return args[1]
        g = args[0].value
        if g >= 1.0:
            return args[1]
        if g < 0.0:
            return args[2]
        before, after = args[1], args[2]
        if before.sym == "delta" and before.args[0] == args[0]:
            before = before.args[1]
        if after.sym == "delta" and after.args[0] == args[0]:
            after = after.args[2]
        if (before, after) != (args[1], args[2]):
            return Node("delta", (args[0], before, after))
    return node


def _fold_condition(node):
    a, b = node.args[0].value, node.args[1].value
    hold = {">": a > b, "<": a < b, "=": a == b}[node.sym]
    return node.args[2] if hold else node.args[3]


def simplify(tree):
    """Behaviour-preserving rewrite: folding, identities, decided branches."""
    while True:
        new = _simplify_node(tree)
        if new == tree:
            return new
        tree = new
