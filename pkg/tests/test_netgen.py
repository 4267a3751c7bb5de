import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from netsynth._prng import new_state
from netsynth.errors import InputError
from netsynth.graph import Network
from netsynth.netgen import (GenerationConfig, config_for, generate, generate_from, select_index,
                             selection_probabilities, snapshot_edge_count)


def cfg(n, e, **kw):
    return GenerationConfig(n, e, **kw)


class TestGrowth:
    @pytest.mark.parametrize("directed", [False, True])
    def test_fills_to_complete(self, directed):
        n = 10
        full = n * (n - 1) // (1 if directed else 2)
        net = generate("1", cfg(n, full, directed=directed, seed=1)).network
        assert net.edge_count == full
        assert len(set(net.edges)) == full

    @pytest.mark.parametrize("gen", ["1", "k_i", "(* d k_j)", "(delta 0.3 k_i (/ 1 d))"])
    @pytest.mark.parametrize("mode", ["heuristic", "exact"])
    def test_same_seed_same_network(self, gen, mode):
        c = cfg(60, 200, seed=11, distance_mode=mode)
        assert generate(gen, c).network.edges == generate(gen, c).network.edges

    def test_directed_distance_variables(self):
        c = cfg(40, 150, directed=True, seed=2)
        for gen in ["dd", "dr", "(+ dd dr)"]:
            net = generate(gen, c).network
            assert net.edge_count == 150 and net.directed

    def test_different_seeds_differ(self):
        a = generate("1", cfg(50, 100, seed=1)).network.edges
        b = generate("1", cfg(50, 100, seed=2)).network.edges
        assert a != b

    def test_string_and_tree_agree(self):
        from netsynth.dsl import parse
        c = cfg(30, 60, seed=5)
        assert generate("k_i", c).network.edges == generate(parse("k_i"), c).network.edges

    def test_unseeded_reports_seed(self):
        res = generate("1", cfg(20, 30))
        again = generate("1", cfg(20, 30, seed=res.seed))
        assert res.network.edges == again.network.edges

    @given(st.integers(2, 14), st.booleans(), st.integers(0, 2**31), st.data())
    @settings(max_examples=40)
    def test_simple_graph_invariants(self, n, directed, seed, data):
        cap = n * (n - 1) // (1 if directed else 2)
        e = data.draw(st.integers(1, cap))
        net = generate("(+ k_i d)", cfg(n, e, directed=directed, seed=seed)).network
        Network(n, directed, net.edges)     # revalidates: no loops, no duplicates
        assert net.edge_count == e


class TestSnapshots:
    def test_prefix_chain(self):
        ratios = (0.1, 0.25, 0.5, 1.0)
        res = generate("k_i", cfg(80, 333, snapshot_ratios=ratios, seed=3))
        prev = []
        for r, net in res.snapshots:
            assert net.edge_count == snapshot_edge_count(r, 333)
            assert net.edges[:len(prev)] == prev
            prev = net.edges
        assert res.snapshot(1.0).edges == res.network.edges
        with pytest.raises(KeyError):
            res.snapshot(0.3)

    def test_rounding(self):
        assert snapshot_edge_count(0.5, 3) == 2
        assert snapshot_edge_count(0.1, 14) == 1
        assert snapshot_edge_count(1.0, 999) == 999

    @pytest.mark.parametrize("ratios", [(0.5,), (0.5, 0.2, 1.0), (0.0, 1.0), (0.5, 0.5, 1.0)])
    def test_bad_ratios(self, ratios):
        with pytest.raises(InputError):
            generate("1", cfg(10, 20, snapshot_ratios=ratios))


class TestSelection:
    def test_probabilities_sum_to_one(self, rng):
        for _ in range(20):
            w = rng.exponential(size=int(rng.integers(1, 50)))
            w[rng.random(w.size) < 0.3] = 0
            p = selection_probabilities(w)
            assert p.sum() == pytest.approx(1.0)
        assert np.allclose(selection_probabilities([0, 0, 0, 0]), 0.25)
        assert np.allclose(selection_probabilities([1e308, 1e308, 0.0]), [0.5, 0.5, 0.0])

    def test_constant_weights_are_uniform(self):
        state = new_state(42)
        w = np.ones(10)
        draws = np.array([select_index(w, 10, state) for _ in range(10_000)])
        counts = np.bincount(draws, minlength=10)
        assert stats.chisquare(counts).pvalue > 0.001

    def test_proportional(self):
        state = new_state(7)
        w = np.array([1.0, 2.0, 0.0, 5.0])
        draws = np.array([select_index(w, 4, state) for _ in range(20_000)])
        counts = np.bincount(draws, minlength=4)
        assert counts[2] == 0
        assert stats.chisquare(counts[[0, 1, 3]], 20_000 * np.array([1, 2, 5]) / 8).pvalue > 0.001

    def test_all_zero_is_uniform(self):
        state = new_state(9)
        draws = np.array([select_index(np.zeros(5), 5, state) for _ in range(5000)])
        assert stats.chisquare(np.bincount(draws, minlength=5)).pvalue > 0.001

    def test_overflowing_weights(self):
        state = new_state(1)
        w = np.array([1e308, 1e308, 1.0])
        draws = {select_index(w, 3, state) for _ in range(200)}
        assert draws == {0, 1}


class TestInitialNetwork:
    def test_one_edge_left(self, rng):
        net = generate("1", cfg(20, 60, seed=4)).network
        start = net.prefix(59)
        res = generate_from(start, "k_i", config_for(net, seed=1))
        assert res.network.edges[:59] == start.edges
        assert res.network.edge_count == 60
        assert res.initial_edge_count == 59

    @pytest.mark.parametrize("initial,expected_source", [(5, 1), (6, 0)])
    def test_xi_counts_initial_edges(self, initial, expected_source):
        # xi is measured before each addition, so 5 of 10 edges gives exactly 0.5
        pool = [(2, 3), (3, 2), (2, 4), (4, 2), (3, 4), (4, 3)]
        start = Network(5, True, pool[:initial])
        gen = "(> xi 0.5 (= i 0 1 0) (= i 1 1 0))"
        c = cfg(5, 10, directed=True, sampling_ratio=1.0, seed=8)
        for seed in range(10):
            res = generate_from(start, gen, GenerationConfig(**{**c.__dict__, "seed": seed}))
            assert res.network.edges[initial][0] == expected_source

    def test_errors(self):
        start = Network(5, False, [(0, 1), (1, 2)])
        with pytest.raises(InputError):
            generate_from(start, "1", cfg(6, 4))
        with pytest.raises(InputError):
            generate_from(start, "1", cfg(5, 2))
        with pytest.raises(InputError):
            generate_from(start, "1", cfg(5, 4, directed=True))


class TestDistributions:
    def test_constant_generator_matches_gnm(self):
        n, e, runs = 60, 150, 40
        ours, ref = [], []
        for s in range(runs):
            ours.extend(generate("1", cfg(n, e, seed=s)).network.degrees().tolist())
            g = nx.gnm_random_graph(n, e, seed=1000 + s)
            ref.extend(d for _, d in g.degree())
        assert stats.ks_2samp(ours, ref).pvalue > 0.001
        assert abs(np.mean(ours) - 2 * e / n) < 1e-9

    def test_degree_generator_concentrates(self):
        wins = 0
        for s in range(30):
            c = cfg(200, 1000, seed=s)
            pa = generate("k_i", c).network.degrees().max()
            er = generate("1", c).network.degrees().max()
            wins += pa > er
        assert wins >= 28


class TestConfigErrors:
    @pytest.mark.parametrize("kw", [
        dict(node_count=1, target_edge_count=1),
        dict(node_count=5, target_edge_count=11),
        dict(node_count=5, target_edge_count=0),
        dict(node_count=5, target_edge_count=3, sampling_ratio=0.0),
        dict(node_count=5, target_edge_count=3, sampling_ratio=1.5),
        dict(node_count=5, target_edge_count=3, distance_mode="psychic"),
        dict(node_count=5, target_edge_count=3, rw_steps=0),
    ])
    def test_rejected(self, kw):
        with pytest.raises(InputError):
            generate("1", GenerationConfig(**kw))

    def test_directed_capacity(self):
        assert generate("1", cfg(5, 20, directed=True, seed=0)).network.edge_count == 20
