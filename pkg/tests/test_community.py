import math

import numpy as np
import pytest

from tazone.community import (
    HardPartition,
    MembershipTable,
    SweepRecord,
    detect_characteristic_scales,
    ensemble_membership,
    louvain,
    modularity,
    resolution_sweep,
)
from tazone.errors import (
    ConfigurationError,
    ConsistencyError,
    DegenerateGraphError,
    InsufficientDataError,
)
from tazone.graphs import InteractionGraph

from conftest import brute_modularity, nested_clique_graph, random_graph, random_partition


def two_triangles():
    edges = {}
    for a, b in [("a0", "a1"), ("a1", "a2"), ("a0", "a2"), ("b0", "b1"), ("b1", "b2"), ("b0", "b2")]:
        edges[(a, b)] = 1.0
    return InteractionGraph(nodes=["a0", "a1", "a2", "b0", "b1", "b2"], edges=edges)


def two_cliques(k=4, weight=1.0):
    nodes = [f"a{i}" for i in range(k)] + [f"b{i}" for i in range(k)]
    edges = {}
    for grp in ("a", "b"):
        for i in range(k):
            for j in range(i + 1, k):
                edges[(f"{grp}{i}", f"{grp}{j}")] = weight
    return InteractionGraph(nodes=nodes, edges=edges)


def set_partitions(items):
    """All set partitions of a list (Bell-number many)."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]
        yield [[first]] + part


class TestModularity:
    def test_all_in_one_is_exactly_zero(self, rng):
        for _ in range(50):
            g = random_graph(rng, max_nodes=20)
            partition = HardPartition(assignment={n: 0 for n in g.nodes})
            assert modularity(g, partition, 1.0) == 0.0

    def test_two_triangles_score_half(self):
        g = two_triangles()
        assignment = {n: 0 if n.startswith("a") else 1 for n in g.nodes}
        q = modularity(g, HardPartition(assignment=assignment), 1.0)
        assert q == pytest.approx(0.5, abs=1e-12)
        assert q == pytest.approx(brute_modularity(g, assignment, 1.0), abs=1e-12)

    def test_split_triangle_scores_below_half(self):
        g = two_triangles()
        assignment = {"a0": 0, "a1": 0, "a2": 2, "b0": 1, "b1": 1, "b2": 1}
        dense = HardPartition.from_labels(assignment, list(g.nodes))
        q = modularity(g, dense, 1.0)
        assert q < 0.5
        assert q == pytest.approx(brute_modularity(g, assignment, 1.0), abs=1e-12)

    def test_matches_bruteforce_on_random_graphs(self, rng):
        for _ in range(60):
            g = random_graph(rng, max_nodes=12)
            assignment = random_partition(rng, g.nodes)
            gamma = float(rng.uniform(0.2, 3.0))
            q = modularity(g, HardPartition(assignment=assignment), gamma)
            assert q == pytest.approx(brute_modularity(g, assignment, gamma), abs=1e-12)

    def test_zero_weight_graph_is_degenerate(self):
        g = InteractionGraph(nodes=["a", "b"], edges={})
        with pytest.raises(DegenerateGraphError):
            modularity(g, HardPartition(assignment={"a": 0, "b": 1}), 1.0)

    def test_partition_must_cover_graph(self):
        g = two_triangles()
        with pytest.raises(ConsistencyError):
            modularity(g, HardPartition(assignment={"a0": 0}), 1.0)


class TestLouvain:
    def test_recovers_cliques_and_matches_exhaustive_optimum(self):
        g = two_cliques(k=4)
        # exhaustive search over all 4140 partitions of the 8 nodes
        best_q, best_parts = -math.inf, None
        for parts in set_partitions(list(g.nodes)):
            assignment = {n: k for k, blk in enumerate(parts) for n in blk}
            q = brute_modularity(g, assignment, 1.0)
            if q > best_q:
                best_q, best_parts = q, parts
        clique_partition = {frozenset(f"a{i}" for i in range(4)), frozenset(f"b{i}" for i in range(4))}
        assert {frozenset(p) for p in best_parts} == clique_partition

        found = louvain(g, 1.0, seed=7)
        groups = {frozenset(m) for m in found.communities().values()}
        assert groups == clique_partition
        assert modularity(g, found, 1.0) == pytest.approx(best_q, abs=1e-12)

    def test_single_edge_merges_below_unit_resolution(self):
        g = InteractionGraph(nodes=["a", "b"], edges={("a", "b"): 1.0})
        # merged beats split for gamma < 1 by the merge criterion
        merged = {"a": 0, "b": 0}
        split = {"a": 0, "b": 1}
        assert brute_modularity(g, merged, 0.01) > brute_modularity(g, split, 0.01)
        part = louvain(g, 0.01, seed=0)
        assert part.n_communities == 1

    def test_isolated_only_graph_errors(self):
        g = InteractionGraph(nodes=["a", "b", "c"], edges={})
        with pytest.raises(DegenerateGraphError):
            louvain(g, 1.0, seed=0)

    def test_isolated_nodes_become_singletons(self):
        g = InteractionGraph(nodes=["a", "b", "lone"], edges={("a", "b"): 1.0})
        part = louvain(g, 0.5, seed=1)
        assert part.assignment["lone"] not in (
            part.assignment["a"],
        )
        assert part.n_communities == 2

    def test_never_below_all_in_one(self, rng):
        for _ in range(25):
            g = random_graph(rng, max_nodes=15)
            gamma = float(rng.uniform(0.3, 2.0))
            part = louvain(g, gamma, seed=int(rng.integers(0, 1000)))
            allinone = HardPartition(assignment={n: 0 for n in g.nodes})
            assert modularity(g, part, gamma) >= modularity(g, allinone, gamma) - 1e-12

    def test_scale_invariance(self, rng):
        for scale in (0.5, 2.0, 8.0, 3.0):
            for _ in range(5):
                g = random_graph(rng, max_nodes=10)
                scaled = InteractionGraph(
                    nodes=g.nodes,
                    edges={(a, b): w * scale for a, b, w in g.edges()},
                    kind=g.kind,
                )
                p1 = louvain(g, 1.0, seed=11)
                p2 = louvain(scaled, 1.0, seed=11)
                assert p1.assignment == p2.assignment

    def test_deterministic_per_seed(self, rng):
        g = random_graph(rng, max_nodes=20)
        assert louvain(g, 1.0, seed=5).assignment == louvain(g, 1.0, seed=5).assignment


class TestEnsemble:
    def test_single_run_is_crisp(self):
        g = two_cliques()
        table, consensus = ensemble_membership(g, 1.0, n_runs=1, seed=3)
        for node, row in table.memberships.items():
            assert all(v in (0.0, 1.0) for v in row.values())
        single = louvain(g, 1.0, seed=[3, 0])
        assert consensus.assignment == HardPartition.from_labels(
            single.assignment, list(g.nodes)
        ).assignment

    def test_cliques_give_unanimous_memberships(self):
        g = two_cliques()
        table, consensus = ensemble_membership(g, 1.0, n_runs=8, seed=0)
        assert consensus.n_communities == 2
        for node, row in table.memberships.items():
            assert max(row.values()) == 1.0

    def test_rows_sum_to_one(self, rng):
        g = random_graph(rng, max_nodes=15)
        table, _ = ensemble_membership(g, 1.0, n_runs=7, seed=2)
        for row in table.memberships.values():
            assert sum(row.values()) == pytest.approx(1.0, abs=1e-9)

    def test_consensus_is_argmax_of_rows(self, rng):
        g = random_graph(rng, max_nodes=15)
        table, consensus = ensemble_membership(g, 1.2, n_runs=5, seed=9)
        raw = table.argmax_assignment()
        dense = HardPartition.from_labels(raw, list(g.nodes))
        assert consensus.assignment == dense.assignment


class TestSweep:
    def test_single_resolution_single_record(self):
        g = two_cliques()
        records = resolution_sweep(g, [1.0], seed=0, n_runs=2)
        assert len(records) == 1 and records[0].resolution == 1.0

    def test_cliques_stable_at_low_resolution(self):
        g = two_cliques()
        records = resolution_sweep(g, [0.5, 1.0, 2.0], seed=0, n_runs=4)
        assert records[0].n_communities == 2
        assert records[1].n_communities == 2

    def test_nested_cliques_two_then_four(self):
        g = nested_clique_graph()
        # brute-force comparison of the two planted candidate partitions
        two_level = {n: 0 if n[1] in "01" else 1 for n in g.nodes}
        four_level = {n: int(n[1]) for n in g.nodes}
        gamma_low, gamma_high = 0.05, 1.0
        assert brute_modularity(g, two_level, gamma_low) > brute_modularity(g, four_level, gamma_low)
        assert brute_modularity(g, four_level, gamma_high) > brute_modularity(g, two_level, gamma_high)

        records = resolution_sweep(g, [gamma_low, gamma_high], seed=1, n_runs=4)
        assert records[0].n_communities == 2
        assert records[1].n_communities == 4

    def test_requires_increasing_grid(self):
        g = two_cliques()
        with pytest.raises(ConfigurationError):
            resolution_sweep(g, [1.0, 0.5], seed=0)

    def test_count_monotone_on_most_steps(self):
        g = nested_clique_graph()
        grid = list(np.geomspace(0.02, 2.0, 12))
        good = 0
        total = 0
        for seed in range(5):
            records = resolution_sweep(g, grid, seed=seed, n_runs=3)
            counts = [r.n_communities for r in records]
            for a, b in zip(counts, counts[1:]):
                total += 1
                good += b >= a
        assert good / total >= 0.9


class TestScales:
    def _records(self, resolutions, counts):
        out = []
        for r, c in zip(resolutions, counts):
            # partition content is irrelevant for plateau detection; only the
            # (resolution, count) series matters, so fabricate partitions
            fake = HardPartition(assignment={f"n{i}": i for i in range(c)})
            out.append(SweepRecord(resolution=r, n_communities=c, modularity=0.0, partition=fake))
        return out

    def test_constant_counts_single_scale(self):
        res = list(np.geomspace(0.1, 10, 9))
        records = self._records(res, [4] * 9)
        scales = detect_characteristic_scales(records, stability_tol=0.0)
        assert len(scales) == 1
        assert scales[0].resolution_low == res[0]
        assert scales[0].resolution_high == res[-1]
        assert scales[0].stable_count == 4

    def test_two_exact_plateaus(self):
        res = list(np.geomspace(0.1, 1.0, 3)) + list(np.geomspace(2.0, 20.0, 3))
        records = self._records(res, [2, 2, 2, 7, 7, 7])
        scales = detect_characteristic_scales(records, stability_tol=0.0)
        assert [s.stable_count for s in scales] == [2, 7]
        assert scales[0].label == "district"
        assert scales[1].label == "sub-district"

    def test_min_span_filters_short_plateaus(self):
        res = [1.0, 1.05, 1.1, 5.0, 6.0, 20.0, 21.0]
        records = self._records(res, [3, 3, 3, 9, 9, 15, 15])
        scales = detect_characteristic_scales(records, stability_tol=0.0, min_span=math.log(1.5))
        # only the 9-count window spans >= 1.5x in resolution
        assert len(scales) == 0 or all(
            s.resolution_high / s.resolution_low >= 1.5 for s in scales
        )

    def test_insufficient_records(self):
        records = self._records([1.0, 2.0], [2, 2])
        with pytest.raises(InsufficientDataError):
            detect_characteristic_scales(records)

    def test_tolerance_allows_small_wobble(self):
        res = list(np.geomspace(0.1, 10, 8))
        records = self._records(res, [10, 10, 11, 10, 9, 10, 10, 10])
        scales = detect_characteristic_scales(records, stability_tol=0.1)
        assert len(scales) == 1
        assert scales[0].stable_count == 10


class TestMembershipTable:
    def test_row_sum_validated(self):
        with pytest.raises(ConsistencyError):
            MembershipTable(memberships={"a": {0: 0.4, 1: 0.4}})

    def test_value_range_validated(self):
        with pytest.raises(ConsistencyError):
            MembershipTable(memberships={"a": {0: 1.5, 1: -0.5}})
