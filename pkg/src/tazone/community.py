"""Resolution-parameterized Louvain detection, fuzzy ensemble memberships,
modularity scoring, and characteristic-scale detection on resolution sweeps.

Modularity of a partition is

    Q = (1 / SUM_D) * sum_{a,b} [ w_ab - gamma * D_a * D_b / SUM_D ] * delta(c_a, c_b)

summed over ordered node pairs, where D is the weighted degree, SUM_D the sum
of all degrees, and gamma the resolution multiplier on the null-model term.
At gamma = 1 the all-in-one partition scores exactly 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import median
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    ConfigurationError,
    ConsistencyError,
    DegenerateGraphError,
    InsufficientDataError,
)
from .graphs import InteractionGraph

#: Ordinal names for detected scales, coarsest first.
SCALE_LABELS = ("district", "sub-district", "neighborhood", "community")

_GAIN_EPS = 1e-12


@dataclass(frozen=True)
class HardPartition:
    """Crisp node -> community assignment with dense community ids."""

    assignment: Mapping[str, int]

    def __post_init__(self) -> None:
        if not self.assignment:
            raise ConsistencyError("empty partition")
        ids = set(self.assignment.values())
        if ids != set(range(len(ids))):
            raise ConsistencyError("community ids must be dense from 0")
        object.__setattr__(self, "assignment", dict(self.assignment))

    @property
    def n_communities(self) -> int:
        return len(set(self.assignment.values()))

    def communities(self) -> dict[int, list[str]]:
        out: dict[int, list[str]] = {}
        for node in sorted(self.assignment):
            out.setdefault(self.assignment[node], []).append(node)
        return out

    @classmethod
    def from_labels(cls, labels: Mapping[str, int], node_order: Sequence[str]) -> "HardPartition":
        """Relabel arbitrary community labels densely, by first appearance."""
        remap: dict[int, int] = {}
        assignment = {}
        for node in node_order:
            c = labels[node]
            if c not in remap:
                remap[c] = len(remap)
            assignment[node] = remap[c]
        return cls(assignment=assignment)


@dataclass(frozen=True)
class MembershipTable:
    """Fuzzy memberships: per node, community -> value in [0, 1], summing to 1."""

    memberships: Mapping[str, Mapping[int, float]]

    def __post_init__(self) -> None:
        for node, row in self.memberships.items():
            total = sum(row[c] for c in sorted(row))
            if abs(total - 1.0) > 1e-9:
                raise ConsistencyError(f"memberships of {node!r} sum to {total}, not 1")
            for c, v in row.items():
                if not (0.0 <= v <= 1.0):
                    raise ConsistencyError(f"membership ({node!r}, {c}) = {v} outside [0, 1]")

    def value(self, node: str, community: int) -> float:
        return self.memberships[node].get(community, 0.0)

    def argmax_assignment(self) -> dict[str, int]:
        """Per node, the community with maximal membership (ties: smaller id)."""
        out = {}
        for node in sorted(self.memberships):
            row = self.memberships[node]
            best_c, best_v = None, -1.0
            for c in sorted(row):
                if row[c] > best_v + _GAIN_EPS:
                    best_c, best_v = c, row[c]
            out[node] = best_c
        return out


@dataclass(frozen=True)
class SweepRecord:
    """One resolution step of a sweep.

    ``partition`` is None for records reloaded from CSV; scale detection
    only needs the (resolution, n_communities) series.
    """

    resolution: float
    n_communities: int
    modularity: float
    partition: HardPartition | None = None

    def __post_init__(self) -> None:
        if self.partition is not None and self.n_communities != self.partition.n_communities:
            raise ConsistencyError("n_communities disagrees with partition")


@dataclass(frozen=True)
class CharacteristicScale:
    """A resolution interval with a stable community count."""

    resolution_low: float
    resolution_high: float
    stable_count: int
    label: str

    def __post_init__(self) -> None:
        if not (self.resolution_low < self.resolution_high):
            raise ConsistencyError("scale interval must have low < high")
        if self.stable_count <= 0:
            raise ConsistencyError("stable_count must be positive")


# ---------------------------------------------------------------------------
# modularity
# ---------------------------------------------------------------------------

def modularity(graph: InteractionGraph, partition: HardPartition, resolution: float = 1.0) -> float:
    """Ordered-pair modularity of ``partition`` at the given resolution.

    Community sums are accumulated in the exact node/neighbor order used for
    the graph's cached degrees, so the all-in-one partition scores an exact
    0.0 at resolution 1 rather than merely a value within rounding error.
    """
    if set(partition.assignment) != set(graph.nodes):
        raise ConsistencyError("partition does not cover exactly the graph's nodes")
    total = graph.total_weight
    if total <= 0:
        raise DegenerateGraphError("graph has zero total weight")
    n_comms = partition.n_communities
    win = [0.0] * n_comms   # ordered-pair intra-community interaction
    dsum = [0.0] * n_comms  # sum of member degrees
    assign = partition.assignment
    for node in graph.nodes:
        c = assign[node]
        acc = 0.0
        for nb, w in graph.neighbors(node).items():
            if assign[nb] == c:
                acc += w
        win[c] += acc
        dsum[c] += graph.degrees[node]
    q = 0.0
    for c in range(n_comms):
        q += win[c] / total - resolution * (dsum[c] / total) ** 2
    return q


# ---------------------------------------------------------------------------
# Louvain
# ---------------------------------------------------------------------------

def _local_move_pass(
    adj: list[dict[int, float]],
    deg: list[float],
    total: float,
    resolution: float,
    comm: list[int],
    tot: list[float],
    order: Sequence[int],
) -> int:
    """One full sweep of greedy node moves; returns the number of moves.

    Gains are normalized by the total weight so the tie tolerance is
    expressed in modularity units, which keeps decisions invariant under
    uniform edge-weight scaling.
    """
    moves = 0
    for i in order:
        c_old = comm[i]
        w2c: dict[int, float] = {}
        for j, w in adj[i].items():
            cj = comm[j]
            w2c[cj] = w2c.get(cj, 0.0) + w
        tot[c_old] -= deg[i]
        best_c = c_old
        best_gain = w2c.get(c_old, 0.0) / total - resolution * deg[i] * tot[c_old] / (total * total)
        for c in sorted(w2c):
            if c == c_old:
                continue
            gain = w2c[c] / total - resolution * deg[i] * tot[c] / (total * total)
            if gain > best_gain + _GAIN_EPS:
                best_c, best_gain = c, gain
        comm[i] = best_c
        tot[best_c] += deg[i]
        if best_c != c_old:
            moves += 1
    return moves


def louvain(graph: InteractionGraph, resolution: float = 1.0, seed: int | Sequence[int] = 0) -> HardPartition:
    """Greedy modularity maximization with a resolution parameter.

    Deterministic for a given (graph, resolution, seed): node visitation
    order is a seeded shuffle and equal-gain moves resolve to the lowest
    community id. Isolated nodes end up as singleton communities.
    """
    if resolution <= 0:
        raise ConfigurationError(f"resolution must be positive, got {resolution}")
    total = graph.total_weight
    if total <= 0:
        raise DegenerateGraphError("cannot detect communities on a zero-weight graph")
    rng = np.random.default_rng(seed)

    nodes = list(graph.nodes)
    index = {n: i for i, n in enumerate(nodes)}
    # Working copy at the current aggregation level. Self weights hold twice
    # the internal weight of an aggregated community so degrees are conserved
    # across levels.
    adj: list[dict[int, float]] = [
        {index[nb]: w for nb, w in graph.neighbors(n).items()} for n in nodes
    ]
    self_w = [0.0] * len(nodes)
    node_to_final = list(range(len(nodes)))

    while True:
        n = len(adj)
        deg = [sum(adj[i].values()) + self_w[i] for i in range(n)]
        comm = list(range(n))
        tot = deg.copy()
        order = rng.permutation(n).tolist()

        total_moves = 0
        while True:
            moves = _local_move_pass(adj, deg, total, resolution, comm, tot, order)
            total_moves += moves
            if moves == 0:
                break

        # Dense relabel of this level's communities, by ascending old id.
        live = sorted(set(comm))
        relabel = {c: k for k, c in enumerate(live)}
        comm = [relabel[c] for c in comm]
        node_to_final = [comm[c] for c in node_to_final]
        if total_moves == 0 or len(live) == n:
            break

        # Aggregate communities into the next level's nodes.
        k = len(live)
        new_adj: list[dict[int, float]] = [{} for _ in range(k)]
        new_self = [0.0] * k
        for i in range(n):
            ci = comm[i]
            new_self[ci] += self_w[i]
            for j, w in adj[i].items():
                cj = comm[j]
                if ci == cj:
                    new_self[ci] += w  # both directions visited -> twice the edge
                else:
                    new_adj[ci][cj] = new_adj[ci].get(cj, 0.0) + w
        adj, self_w = new_adj, new_self

    labels = {nodes[i]: node_to_final[i] for i in range(len(nodes))}
    return HardPartition.from_labels(labels, nodes)


# ---------------------------------------------------------------------------
# ensembles
# ---------------------------------------------------------------------------

def _child_seed(seed: int | Sequence[int], k: int) -> list[int]:
    if isinstance(seed, (list, tuple)):
        return [*seed, k]
    return [int(seed), k]


def _align_labels(
    run: HardPartition, reference: HardPartition, next_fresh: int
) -> tuple[dict[int, int], int]:
    """Greedy maximal-overlap matching of run communities onto the reference.

    Ties resolve to the smaller reference id, then the smaller run id;
    unmatched run communities receive fresh ids starting at ``next_fresh``.
    """
    overlaps: dict[tuple[int, int], int] = {}
    for node, rc in run.assignment.items():
        key = (rc, reference.assignment[node])
        overlaps[key] = overlaps.get(key, 0) + 1
    ranked = sorted(overlaps.items(), key=lambda kv: (-kv[1], kv[0][1], kv[0][0]))
    mapping: dict[int, int] = {}
    used_ref: set[int] = set()
    for (rc, refc), _count in ranked:
        if rc in mapping or refc in used_ref:
            continue
        mapping[rc] = refc
        used_ref.add(refc)
    for rc in sorted(set(run.assignment.values())):
        if rc not in mapping:
            mapping[rc] = next_fresh
            next_fresh += 1
    return mapping, next_fresh


def ensemble_membership(
    graph: InteractionGraph,
    resolution: float = 1.0,
    n_runs: int = 8,
    seed: int | Sequence[int] = 0,
) -> tuple[MembershipTable, HardPartition]:
    """Fuzzy memberships from label-aligned repeated Louvain runs.

    Each run uses a seed derived from (seed, run index). Labels are aligned
    against the best-modularity run; the membership of a node in community c
    is the fraction of runs that placed it there, so each row sums to 1. The
    consensus partition takes the argmax community per node (ties to the
    smaller id), relabeled densely in node order.
    """
    if n_runs < 1:
        raise ConfigurationError(f"n_runs must be >= 1, got {n_runs}")
    runs = [louvain(graph, resolution, seed=_child_seed(seed, k)) for k in range(n_runs)]
    scores = [modularity(graph, p, resolution) for p in runs]
    best = max(range(n_runs), key=lambda k: (scores[k], -k))
    reference = runs[best]

    next_fresh = reference.n_communities
    counts: dict[str, dict[int, int]] = {n: {} for n in graph.nodes}
    for p in runs:
        mapping, next_fresh = _align_labels(p, reference, next_fresh)
        for node, rc in p.assignment.items():
            c = mapping[rc]
            counts[node][c] = counts[node].get(c, 0) + 1

    memberships = {
        node: {c: counts[node][c] / n_runs for c in sorted(counts[node])}
        for node in graph.nodes
    }
    table = MembershipTable(memberships=memberships)
    consensus = HardPartition.from_labels(table.argmax_assignment(), list(graph.nodes))
    return table, consensus


def resolution_sweep(
    graph: InteractionGraph,
    resolutions: Sequence[float],
    seed: int | Sequence[int] = 0,
    n_runs: int = 4,
) -> list[SweepRecord]:
    """Ensemble consensus at each resolution of a strictly increasing grid.

    The recorded modularity is evaluated at the record's own resolution.
    """
    res = list(resolutions)
    if not res:
        raise ConfigurationError("empty resolution grid")
    if any(b <= a for a, b in zip(res, res[1:])):
        raise ConfigurationError("resolutions must be strictly increasing")
    records = []
    for i, gamma in enumerate(res):
        _, consensus = ensemble_membership(graph, gamma, n_runs=n_runs, seed=_child_seed(seed, i))
        records.append(
            SweepRecord(
                resolution=gamma,
                n_communities=consensus.n_communities,
                modularity=modularity(graph, consensus, gamma),
                partition=consensus,
            )
        )
    return records


def default_resolution_grid(low: float = 0.05, high: float = 20.0, count: int = 40) -> list[float]:
    """Logarithmically spaced resolution grid."""
    if not (0 < low < high) or count < 2:
        raise ConfigurationError("grid needs 0 < low < high and count >= 2")
    return list(np.geomspace(low, high, count))


def detect_characteristic_scales(
    records: Sequence[SweepRecord],
    stability_tol: float = 0.1,
    min_span: float = math.log(1.5),
) -> list[CharacteristicScale]:
    """Maximal resolution plateaus of the community count.

    A window of consecutive records is stable when every count deviates from
    the window median by at most ``stability_tol`` (relative); a stable window
    is reported when its resolution ratio reaches exp(min_span). Windows are
    grown greedily left to right, so the returned intervals are disjoint and
    ordered, labeled from coarsest to finest.
    """
    if len(records) < 3:
        raise InsufficientDataError(f"need at least 3 sweep records, got {len(records)}")
    res = [r.resolution for r in records]
    if any(b <= a for a, b in zip(res, res[1:])):
        raise ConfigurationError("sweep records must be sorted by increasing resolution")
    if stability_tol < 0:
        raise ConfigurationError("stability_tol must be >= 0")
    counts = [r.n_communities for r in records]

    def stable(i: int, j: int) -> bool:
        window = counts[i : j + 1]
        med = median(window)
        return all(abs(c - med) <= stability_tol * med for c in window)

    scales: list[CharacteristicScale] = []
    i = 0
    n = len(records)
    while i < n:
        j = i
        while j + 1 < n and stable(i, j + 1):
            j += 1
        if j > i and res[j] / res[i] >= math.exp(min_span) * (1 - 1e-12):
            med = median(counts[i : j + 1])
            scales.append(
                CharacteristicScale(
                    resolution_low=res[i],
                    resolution_high=res[j],
                    stable_count=int(round(med)),
                    label="",
                )
            )
            i = j + 1
        else:
            i += 1

    labeled = []
    for k, s in enumerate(scales):
        label = SCALE_LABELS[k] if k < len(SCALE_LABELS) else f"level-{k + 1}"
        labeled.append(
            CharacteristicScale(
                resolution_low=s.resolution_low,
                resolution_high=s.resolution_high,
                stable_count=s.stable_count,
                label=label,
            )
        )
    return labeled
