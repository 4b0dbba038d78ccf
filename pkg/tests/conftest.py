"""Shared fixtures and independent oracles used across the test suite.

The oracles deliberately avoid the library's own code paths: spacing by
dense boundary sampling, modularity and Moran's I by literal double loops
over ordered pairs, Pareto by a quadratic dominance scan, and agreement by a
from-scratch adjusted Rand index.
"""

from __future__ import annotations

import math
from math import comb

import numpy as np
import pytest
from shapely.geometry import box

from tazone.graphs import InteractionGraph
from tazone.spatial import BasicSpatialUnit


def square_unit(uid: str, x0: float, y0: float, size: float = 1.0, block: str = "", level: int = 0) -> BasicSpatialUnit:
    return BasicSpatialUnit(id=uid, polygon=box(x0, y0, x0 + size, y0 + size), block_id=block, level=level)


def grid_units(n: int, size: float = 100.0, road: float = 20.0, block: str = "b0") -> list[BasicSpatialUnit]:
    """n x n square units separated by road-width gaps."""
    pitch = size + road
    return [
        square_unit(f"u{i}{j}", i * pitch, j * pitch, size, block)
        for i in range(n)
        for j in range(n)
    ]


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------

def sampled_boundary_distance(a, b, step: float = 1e-3) -> float:
    """Minimum distance between polygon boundaries by dense vertex sampling."""

    def sample(geom):
        boundary = geom.boundary
        n = max(2, int(math.ceil(boundary.length / step)))
        return [boundary.interpolate(k * boundary.length / n) for k in range(n)]

    pts_a = sample(a)
    pts_b = sample(b)
    xb = np.array([[p.x, p.y] for p in pts_b])
    best = math.inf
    for p in pts_a:
        d = np.sqrt(((xb - [p.x, p.y]) ** 2).sum(axis=1)).min()
        best = min(best, float(d))
    return best


def brute_modularity(graph: InteractionGraph, assignment: dict[str, int], gamma: float = 1.0) -> float:
    """Literal ordered-pair summation of the modularity formula."""
    nodes = list(graph.nodes)
    total = sum(sum(graph.neighbors(n).values()) for n in nodes)
    q = 0.0
    for a in nodes:
        for b in nodes:
            if assignment[a] != assignment[b]:
                continue
            w = graph.edge_weight(a, b)
            da = sum(graph.neighbors(a).values())
            db = sum(graph.neighbors(b).values())
            q += w - gamma * da * db / total
    return q / total


def brute_moran(x: np.ndarray, w: np.ndarray) -> float:
    """Literal double-loop Moran's I over an explicit weight matrix."""
    n = len(x)
    xbar = x.mean()
    num = 0.0
    wsum = 0.0
    for a in range(n):
        for b in range(n):
            num += w[a, b] * (x[a] - xbar) * (x[b] - xbar)
            wsum += w[a, b]
    den = ((x - xbar) ** 2).sum()
    return (n / wsum) * (num / den)


def brute_pareto(values: list[tuple[float, ...]]) -> list[bool]:
    """Quadratic dominance scan; True means the point is non-dominated."""
    flags = []
    for i, vi in enumerate(values):
        dominated = False
        for j, vj in enumerate(values):
            if i == j:
                continue
            if all(a >= b for a, b in zip(vj, vi)) and any(a > b for a, b in zip(vj, vi)):
                dominated = True
                break
        flags.append(not dominated)
    return flags


def adjusted_rand_index(labels_a: dict[str, int], labels_b: dict[str, int]) -> float:
    """Adjusted Rand index between two labelings of the same key set."""
    keys = sorted(labels_a)
    assert sorted(labels_b) == keys
    table: dict[tuple[int, int], int] = {}
    for k in keys:
        pair = (labels_a[k], labels_b[k])
        table[pair] = table.get(pair, 0) + 1
    a_sizes: dict[int, int] = {}
    b_sizes: dict[int, int] = {}
    for (ca, cb), cnt in table.items():
        a_sizes[ca] = a_sizes.get(ca, 0) + cnt
        b_sizes[cb] = b_sizes.get(cb, 0) + cnt
    n = len(keys)
    sum_ab = sum(comb(c, 2) for c in table.values())
    sum_a = sum(comb(c, 2) for c in a_sizes.values())
    sum_b = sum(comb(c, 2) for c in b_sizes.values())
    expected = sum_a * sum_b / comb(n, 2)
    max_index = (sum_a + sum_b) / 2
    if max_index == expected:
        return 1.0
    return (sum_ab - expected) / (max_index - expected)


def random_graph(rng: np.random.Generator, max_nodes: int = 12, p_edge: float = 0.5) -> InteractionGraph:
    """Random weighted graph with at least one edge."""
    while True:
        n = int(rng.integers(2, max_nodes + 1))
        nodes = [f"n{i:02d}" for i in range(n)]
        edges = {}
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < p_edge:
                    edges[(nodes[i], nodes[j])] = float(rng.uniform(0.1, 5.0))
        if edges:
            return InteractionGraph(nodes=nodes, edges=edges, kind="aggregate")


def random_partition(rng: np.random.Generator, nodes, max_parts: int | None = None) -> dict[str, int]:
    """Random assignment with dense labels."""
    nodes = list(nodes)
    k = int(rng.integers(1, (max_parts or len(nodes)) + 1))
    labels = {n: int(rng.integers(0, k)) for n in nodes}
    dense: dict[int, int] = {}
    out = {}
    for n in nodes:
        c = labels[n]
        if c not in dense:
            dense[c] = len(dense)
        out[n] = dense[c]
    return out


def nested_clique_graph(
    n_cliques=4, clique_size=8, intra=1.0, pair_bridge=2.0, cross_bridge=0.1
):
    """Four cliques, bridged pairwise into two groups: a 2-level hierarchy.

    Bridges inside a pair carry ``pair_bridge`` total weight over 4 edges;
    the two groups are tied together by ``cross_bridge`` total weight so the
    graph is connected. Low resolution recovers the 2 groups, high
    resolution the 4 cliques.
    """
    assert n_cliques == 4
    nodes = [f"c{c}n{i}" for c in range(n_cliques) for i in range(clique_size)]
    edges = {}
    for c in range(n_cliques):
        for i in range(clique_size):
            for j in range(i + 1, clique_size):
                edges[(f"c{c}n{i}", f"c{c}n{j}")] = intra
    for ca, cb in [(0, 1), (2, 3)]:
        for k in range(4):
            edges[(f"c{ca}n{k}", f"c{cb}n{k}")] = pair_bridge / 4.0
    for ca, cb in [(0, 2), (1, 3)]:
        edges[(f"c{ca}n0", f"c{cb}n1")] = cross_bridge / 2.0
    return InteractionGraph(nodes=nodes, edges=edges)


def heterogeneous_city(seed: int = 0):
    """A synthetic city with one unit split into undersized quarters and one
    adjacent pair merged into an oversized unit, so the size constraint has
    real work to do. Attribute mass matches the unmodified city exactly.
    """
    from shapely.geometry import box
    from shapely.ops import unary_union

    from tazone.spatial import AttributeField, BasicSpatialUnit, City, InteractionMatrix
    from tazone.synth import default_city_config, make_city

    base = make_city(default_city_config(seed=seed))
    units = {u.id: u for u in base.units}
    split_id = "u0000-0101"
    merge_a, merge_b = "u0101-0000", "u0101-0100"
    assert split_id in units and merge_a in units and merge_b in units

    new_units = []
    quarter_ids = []
    sem = dict(base.semantics.assignment)
    fields = {name: dict(f.values) for name, f in base.fields.items()}
    for u in base.units:
        if u.id == split_id:
            x0, y0, x1, y1 = u.polygon.bounds
            mx, my = (x0 + x1) / 2, (y0 + y1) / 2
            corners = [(x0, y0, mx, my), (mx, y0, x1, my), (x0, my, mx, y1), (mx, my, x1, y1)]
            for k, (a, b, c, d) in enumerate(corners):
                qid = f"{u.id}q{k}"
                quarter_ids.append(qid)
                new_units.append(
                    BasicSpatialUnit(id=qid, polygon=box(a, b, c, d), block_id=u.block_id, level=0)
                )
                sem[qid] = sem[u.id]
                for name in fields:
                    fields[name][qid] = fields[name][u.id] / 4.0
            del sem[u.id]
            for name in fields:
                del fields[name][u.id]
        elif u.id == merge_a:
            other = units[merge_b]
            merged = BasicSpatialUnit(
                id="u0101-wide",
                polygon=unary_union([u.polygon, other.polygon]),
                block_id=u.block_id,
                level=0,
            )
            new_units.append(merged)
            sem["u0101-wide"] = sem[u.id]
            for name in fields:
                fields[name]["u0101-wide"] = fields[name][u.id] + fields[name][merge_b]
                del fields[name][u.id], fields[name][merge_b]
            del sem[u.id], sem[merge_b]
        elif u.id == merge_b:
            continue
        else:
            new_units.append(u)

    remap = {split_id: quarter_ids[0], merge_a: "u0101-wide", merge_b: "u0101-wide"}
    od = base.od.remap(remap)
    city = City(
        units=tuple(new_units),
        blocks=base.blocks,
        fields={name: AttributeField(name=name, values=vals) for name, vals in fields.items()},
        semantics=type(base.semantics)(categories=base.semantics.categories, assignment=sem),
        od=od,
    )
    city.validate()
    return city


def nested_city(seed: int = 0):
    """A 2x2-block city whose OD has two planted hierarchy levels.

    Each 4x4-unit block splits into a left and a right half; halves are
    cliques in the OD graph, the two halves of a block are bridged, and
    blocks are tied together only weakly. Low resolution recovers the 4
    blocks, high resolution the 8 halves.
    """
    from tazone.spatial import City, InteractionMatrix
    from tazone.synth import default_city_config, generate_fields, generate_units

    cfg = default_city_config(seed=seed, blocks_per_side=2, units_per_block_side=4)
    units, blocks = generate_units(cfg)
    pop, traffic, sem = generate_fields(cfg, units)
    by_block: dict[str, list] = {}
    for u in units:
        by_block.setdefault(u.block_id, []).append(u)
    entries = {}
    halves = {}
    for bid, us in sorted(by_block.items()):
        us = sorted(us, key=lambda u: u.id)
        left = [u.id for u in us if int(u.id.split("-")[1][:2]) < 2]
        right = [u.id for u in us if int(u.id.split("-")[1][:2]) >= 2]
        halves[bid] = (left, right)
        for half in (left, right):
            for i in range(len(half)):
                for j in range(i + 1, len(half)):
                    entries[(half[i], half[j])] = 1.0
        for k in range(4):
            entries[(left[k], right[k])] = 0.5
    bids = sorted(by_block)
    for a, b in [(bids[0], bids[1]), (bids[2], bids[3]), (bids[0], bids[2]), (bids[1], bids[3])]:
        entries[(halves[a][0][0], halves[b][0][1])] = 0.025
    od = InteractionMatrix(kind="od", entries=entries)
    city = City(
        units=units,
        blocks=blocks,
        fields={"population": pop, "traffic": traffic},
        semantics=sem,
        od=od,
    )
    city.validate()
    return city


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240815)
