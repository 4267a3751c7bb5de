import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from netsynth import dsl
from netsynth.dsl import EdgeContext, InitParams, evaluate, parse, simplify
from netsynth.errors import GeneratorSyntaxError, InputError

from oracles import as_dict, recursive_eval


def ctx(**kw):
    base = dict(i=0, j=1, k_i=0, k_j=0, d=1, xi=0.0)
    base.update(kw)
    return EdgeContext(**base)


def random_rows(rng, count):
    rows = np.empty((count, len(dsl.VARIABLES)))
    rows[:, 0:2] = rng.integers(0, 200, (count, 2))
    rows[:, 2:8] = rng.integers(0, 40, (count, 6))
    rows[:, 8:11] = rng.integers(1, 11, (count, 3))
    rows[:, 11] = rng.random(count)
    return rows


trees = st.integers(0, 2**32 - 1).map(lambda s: dsl.random_tree(rng=np.random.default_rng(s)))


class TestParse:
    def test_delta_example(self):
        t = parse("(delta 0.5 k (pow k k))")
        assert t.sym == "delta" and t.args[0].value == 0.5
        assert dsl.format_tree(t) == "(delta 0.5 k_i (pow k_i k_i))"

    def test_unbalanced_reports_end_offset(self):
        with pytest.raises(GeneratorSyntaxError) as exc:
            parse("(+ k")
        assert exc.value.offset == 4
        assert "offset 4" in str(exc.value)

    @pytest.mark.parametrize("text", ["(foo 1 2)", "(+ 1)", "(+ 1 2 3)", "(delta k 1 2)",
                                      "(psi (+ 1 1) k d)", "q", "(+ 1 2) 3", ")", ""])
    def test_rejects(self, text):
        with pytest.raises(GeneratorSyntaxError):
            parse(text)

    def test_aliases(self):
        assert parse("(+ kin kout)") == parse("(+ kin_i kout_i)")
        assert parse("ξ") == parse("xi")

    def test_numbers(self):
        assert parse("-2.5").value == -2.5
        assert parse("1e3").value == 1000.0
        assert dsl.format_tree(parse("3.0")) == "3"

    @given(trees)
    def test_round_trip(self, tree):
        assert parse(dsl.format_tree(tree)) == tree

    def test_infix_renders(self):
        assert dsl.to_infix(parse("(+ k_i (* 2 d))")) == "(k_i + (2 * d))"


class TestEvaluate:
    def test_psi_example(self):
        assert evaluate(parse("(psi 2 10 2)"), ctx(i=2, j=4)) == 10
        assert evaluate(parse("(psi 2 10 2)"), ctx(i=2, j=5)) == 2

    def test_delta_example(self):
        t = parse("(delta 0.5 3 k)")
        assert evaluate(t, ctx(k_i=7, xi=0.2)) == 3
        assert evaluate(t, ctx(k_i=7, xi=0.7)) == 7
        assert evaluate(t, ctx(k_i=7, xi=0.5)) == 3

    def test_exp_example(self):
        assert evaluate(parse("(exp (- 4 (* 2 d)))"), ctx(d=1)) == pytest.approx(math.e ** 2)

    @pytest.mark.parametrize("x", [0, 3.5, -2, 1e300])
    def test_protected_division(self, x):
        assert evaluate(dsl.op("/", dsl.const(x), dsl.const(0)), ctx()) == 0

    def test_protections(self):
        assert evaluate(parse("(log -3)"), ctx()) == 0
        assert evaluate(parse("(exp 1000)"), ctx()) == dsl.EXP_CAP
        assert evaluate(parse("(pow -8 0.5)"), ctx()) == pytest.approx(math.sqrt(8))
        assert evaluate(parse("(pow 0 -1)"), ctx()) == 0      # inf clamps to 0
        assert evaluate(parse("(- 0 5)"), ctx()) == 0         # negative clamps to 0
        assert evaluate(parse("(=0 0 4 5)"), ctx()) == 4

    def test_conditionals_are_if_then_else(self):
        assert evaluate(parse("(> k d 1 2)"), ctx(k_i=5, d=2)) == 1
        assert evaluate(parse("(< k d 1 2)"), ctx(k_i=5, d=2)) == 2
        assert evaluate(parse("(= k d 1 2)"), ctx(k_i=2, d=2)) == 1

    def test_context_validation(self):
        with pytest.raises(InputError):
            EdgeContext(i=1, j=1, k_i=0, k_j=0)
        with pytest.raises(InputError):
            EdgeContext(i=0, j=1, k_i=0, k_j=0, xi=1.5)

    def test_shorthand_equivalence(self, rng):
        rows = random_rows(rng, 500)
        a = dsl.evaluate_batch(parse("(delta 0.5 k (pow k k))"), rows)
        b = dsl.evaluate_batch(parse("(> xi 0.5 (pow k k) k)"), rows)
        assert np.array_equal(a, b)

    @given(trees, st.integers(0, 2**32 - 1))
    def test_total_and_matches_recursive_oracle(self, tree, seed):
        rows = random_rows(np.random.default_rng(seed), 20)
        raw = dsl.evaluate_batch(tree, rows, raw=True)
        weights = dsl.evaluate_batch(tree, rows)
        assert np.all(np.isfinite(weights)) and np.all(weights >= 0)
        for r, row in zip(raw, rows):
            ref = recursive_eval(tree, as_dict(row))
            assert (math.isnan(r) and math.isnan(ref)) or r == ref or math.isclose(r, ref, rel_tol=1e-12)


class TestRandomTrees:
    def test_constant_distribution(self):
        rng = np.random.default_rng(1)
        n = 100_000
        vals = np.array([dsl.random_constant(rng).value for _ in range(n)])
        # the explicit zero branch has probability 0.1; digits add another 0.4/10
        assert abs(np.mean(vals == 0) - 0.14) < 0.01
        rng = np.random.default_rng(1)
        branch = np.array([rng.random() for _ in range(n)]) < 0.1
        assert abs(branch.mean() - 0.10) < 0.01

    def test_fixed_depth_one(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            t = dsl.random_tree(InitParams(1, 1), rng, strategy="fixed_depth")
            assert t.args and all(not a.args for a in t.args)

    @given(st.integers(0, 2**32 - 1), st.sampled_from(["fixed_depth", "grow"]))
    def test_well_formed(self, seed, strategy):
        t = dsl.random_tree(InitParams(), np.random.default_rng(seed), strategy=strategy)
        assert dsl.is_well_formed(t)
        assert t.size >= 1

    def test_undirected_vocabulary(self):
        rng = np.random.default_rng(3)
        used = set()
        for _ in range(200):
            used |= dsl.variables_in(dsl.random_tree(rng=rng, variables=dsl.UNDIRECTED_VARIABLES))
        assert used <= set(dsl.UNDIRECTED_VARIABLES)


def _diff_paths(a, b, path=()):
    if a.sym != b.sym or len(a.args) != len(b.args) or a.value != b.value:
        return [path]
    out = []
    for k, (x, y) in enumerate(zip(a.args, b.args)):
        out += _diff_paths(x, y, path + (k,))
    return out


def _common_prefix(paths):
    first = paths[0]
    n = 0
    while all(len(p) > n and p[n] == first[n] for p in paths):
        n += 1
    return first[:n]


class TestVariation:
    def test_single_constant_mutation_is_graft(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            out = dsl.mutate(dsl.const(3.25), rng=rng)
            assert dsl.is_well_formed(out)

    def test_graft_point_uniform(self):
        tree = parse("(+ (* 1.5 2.5) (- 3.5 4.5))")
        points = [p for p, _, _ in dsl.walk(tree)]
        counts = dict.fromkeys(points, 0)
        rng = np.random.default_rng(5)
        for _ in range(1000):
            out = dsl.mutate(tree, rng=rng)
            diffs = _diff_paths(tree, out)
            counts[_common_prefix(diffs)] += 1
        for c in counts.values():
            assert abs(c / 1000 - 1 / 7) < 0.05

    @given(trees, trees, st.integers(0, 2**32 - 1))
    def test_closure(self, a, b, seed):
        rng = np.random.default_rng(seed)
        m = dsl.mutate(a, rng=rng)
        r = dsl.recombine(a, b, rng)
        assert dsl.is_well_formed(m) and dsl.is_well_formed(r)
        assert r.size <= a.size - 1 + b.size

    def test_recombine_constant_with_itself(self):
        t = dsl.const(2.0)
        assert dsl.recombine(t, t, np.random.default_rng(0)) == t

    def test_recombine_reaches_known_offspring(self):
        p1 = parse("(+ (+ (* (* (+ k k) k) k) (/ k k)) k)")
        p2 = parse("(+ (* k k) (* k k))")
        want = parse("(+ (+ (* (* (+ k k) k) k) (* k k)) k)")
        rng = np.random.default_rng(6)
        seen = {dsl.recombine(p1, p2, rng) for _ in range(2000)}
        assert want in seen

    def test_constant_slots_stay_literal(self):
        rng = np.random.default_rng(7)
        t = parse("(delta 0.5 k d)")
        for _ in range(300):
            t2 = dsl.mutate(t, rng=rng)
            if t2.sym == "delta":
                assert t2.args[0].is_const
            t3 = dsl.recombine(t, parse("(+ k 4)"), rng)
            if t3.sym == "delta":
                assert t3.args[0].is_const


class TestSimplify:
    @pytest.mark.parametrize("text,want", [
        ("(* k 1)", "k_i"),
        ("(> 3 2 k d)", "k_i"),
        ("(delta 0.5 k k)", "k_i"),
        ("(+ (* 2 3) k)", "(+ 6 k_i)"),
        ("(pow d 0)", "1"),
        ("(pow d 1)", "d"),
        ("(delta 1.5 k d)", "k_i"),
        ("(delta -1 k d)", "d"),
        ("(psi 0.3 k d)", "k_i"),
        ("(delta 0.5 (delta 0.5 k i) d)", "(delta 0.5 k_i d)"),
    ])
    def test_examples(self, text, want):
        assert dsl.format_tree(simplify(parse(text))) == want

    def test_never_grows(self, rng):
        for _ in range(300):
            t = dsl.random_tree(rng=rng)
            assert simplify(t).size <= t.size

    def test_preserves_semantics_exactly(self):
        rng = np.random.default_rng(8)
        rows = random_rows(rng, 1000)
        rows[::7, 11] = 0.5   # hit delta thresholds exactly now and then
        for _ in range(1000):
            t = dsl.random_tree(rng=rng)
            a = dsl.evaluate_batch(t, rows)
            b = dsl.evaluate_batch(simplify(t), rows)
            assert np.array_equal(a, b), dsl.format_tree(t)
