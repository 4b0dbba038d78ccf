"""Weighted interaction graphs over spatial units and their aggregation.

Three layers feed community detection: origin-destination flows, geometric
proximity, and attribute similarity. Layers are normalized to unit total edge
weight before they are combined so the layer coefficients stay interpretable
across data scales.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import ConfigurationError, ConsistencyError
from .spatial import Adjacency, AttributeField, BasicSpatialUnit, InteractionMatrix, _norm_pair


class InteractionGraph:
    """Undirected weighted graph with no self loops.

    Degrees and the cached total weight (sum of all degrees) are computed
    once at construction in sorted-neighbor order, so repeated runs over the
    same input are bit-identical.
    """

    __slots__ = ("kind", "nodes", "_adj", "degrees", "total_weight")

    def __init__(
        self,
        nodes: Iterable[str],
        edges: Mapping[tuple[str, str], float],
        kind: str = "aggregate",
    ) -> None:
        self.kind = kind
        self.nodes: tuple[str, ...] = tuple(nodes)
        node_set = set(self.nodes)
        if len(node_set) != len(self.nodes):
            raise ConsistencyError("duplicate node ids")
        adj: dict[str, dict[str, float]] = {n: {} for n in self.nodes}
        for (a, b), w in edges.items():
            if a == b:
                raise ConsistencyError(f"self loop on node {a!r}")
            if a not in node_set or b not in node_set:
                raise ConsistencyError(f"edge ({a!r}, {b!r}) references unknown node")
            if not math.isfinite(w) or w < 0:
                raise ConsistencyError(f"edge ({a!r}, {b!r}) has bad weight {w}")
            if w == 0:
                continue
            adj[a][b] = adj[a].get(b, 0.0) + w
            adj[b][a] = adj[b].get(a, 0.0) + w
        self._adj = {n: dict(sorted(adj[n].items())) for n in self.nodes}
        self.degrees = {n: sum(self._adj[n].values()) for n in self.nodes}
        self.total_weight = sum(self.degrees[n] for n in self.nodes)

    # -- accessors ---------------------------------------------------------
    def neighbors(self, node: str) -> Mapping[str, float]:
        return self._adj[node]

    def degree(self, node: str) -> float:
        return self.degrees[node]

    def edge_weight(self, a: str, b: str) -> float:
        return self._adj[a].get(b, 0.0)

    def edges(self) -> list[tuple[str, str, float]]:
        out = []
        for a in self.nodes:
            for b, w in self._adj[a].items():
                if a < b:
                    out.append((a, b, w))
        return out

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return sum(len(v) for v in self._adj.values()) // 2

    def sum_edge_weights(self) -> float:
        return sum(w for _, _, w in self.edges())

    def subgraph(self, nodes: Iterable[str]) -> "InteractionGraph":
        keep = set(nodes)
        unknown = sorted(keep - set(self.nodes))
        if unknown:
            raise ConsistencyError(f"subgraph nodes not in graph: {unknown[:5]}")
        edges = {
            (a, b): w for a, b, w in self.edges() if a in keep and b in keep
        }
        return InteractionGraph(
            nodes=[n for n in self.nodes if n in keep], edges=edges, kind=self.kind
        )

    def __repr__(self) -> str:  # pragma: no cover
        return (
            f"InteractionGraph(kind={self.kind!r}, nodes={self.n_nodes}, "
            f"edges={self.n_edges}, total_weight={self.total_weight:.6g})"
        )


@dataclass(frozen=True)
class LayerWeights:
    """Non-negative coefficient per layer kind; at least one positive."""

    coefficients: Mapping[str, float]

    def __post_init__(self) -> None:
        coeffs = dict(self.coefficients)
        for kind, c in coeffs.items():
            if not math.isfinite(c) or c < 0:
                raise ConfigurationError(f"layer weight for {kind!r} must be finite and >= 0")
        if not any(c > 0 for c in coeffs.values()):
            raise ConfigurationError("at least one layer weight must be positive")
        object.__setattr__(self, "coefficients", coeffs)

    def get(self, kind: str) -> float:
        return self.coefficients.get(kind, 0.0)


def build_od_graph(
    od: InteractionMatrix,
    eligible_ids: Iterable[str],
    known_ids: Iterable[str] | None = None,
) -> InteractionGraph:
    """Graph of OD flows restricted to eligible units.

    Entries touching a unit outside ``known_ids`` (default: the eligible set)
    are a consistency error; entries touching known but non-eligible units are
    silently dropped, which is how size-filtered singletons fall out of the
    detection graph.
    """
    if od.kind != "od":
        raise ConfigurationError(f"expected an od matrix, got kind {od.kind!r}")
    eligible = sorted(set(eligible_ids))
    known = set(eligible) if known_ids is None else set(known_ids)
    offenders = sorted(od.unit_ids() - known)
    if offenders:
        raise ConsistencyError(f"od matrix references unknown units: {offenders[:10]}")
    eligible_set = set(eligible)
    edges = {
        p: w
        for p, w in od.entries.items()
        if p[0] in eligible_set and p[1] in eligible_set and w > 0
    }
    return InteractionGraph(nodes=eligible, edges=edges, kind="od")


def build_proximity_graph(
    units: Iterable[BasicSpatialUnit],
    adjacency: Adjacency,
    sigma: float,
) -> InteractionGraph:
    """Exponential-decay proximity weights exp(-spacing/sigma) on adjacent pairs.

    Larger weight means closer, so maximizing modularity of this graph favors
    spatially compact regions; touching units get weight 1.
    """
    if sigma <= 0:
        raise ConfigurationError(f"sigma must be positive, got {sigma}")
    ids = sorted(u.id for u in units)
    id_set = set(ids)
    edges: dict[tuple[str, str], float] = {}
    for pair in adjacency.pairs:
        if pair[0] in id_set and pair[1] in id_set:
            edges[pair] = math.exp(-adjacency.spacing[pair] / sigma)
    return InteractionGraph(nodes=ids, edges=edges, kind="proximity")


def build_attribute_similarity_graph(
    fields: Mapping[str, AttributeField],
    units: Iterable[BasicSpatialUnit],
    adjacency: Adjacency,
    bandwidths: Mapping[str, float],
) -> InteractionGraph:
    """Gaussian similarity of attribute densities on adjacent pairs.

    weight(a, b) = exp(-sum_f ((rho_f(a) - rho_f(b)) / bandwidth_f)^2) with
    rho = value / area, giving weights in (0, 1]. Restricting edges to
    adjacent pairs keeps the layer sparse and biases detection toward
    contiguous attribute clusters.
    """
    unit_list = sorted(units, key=lambda u: u.id)
    by_id = {u.id: u for u in unit_list}
    names = sorted(fields)
    for name in names:
        bw = bandwidths.get(name)
        if bw is None or bw <= 0:
            raise ConfigurationError(f"bandwidth for field {name!r} must be positive")
        fields[name].require_complete(by_id)

    def density(name: str, uid: str) -> float:
        return fields[name].values[uid] / by_id[uid].area

    ids = [u.id for u in unit_list]
    id_set = set(ids)
    edges: dict[tuple[str, str], float] = {}
    for a, b in adjacency.pairs:
        if a not in id_set or b not in id_set:
            continue
        expo = 0.0
        for name in names:
            gap = (density(name, a) - density(name, b)) / bandwidths[name]
            expo += gap * gap
        edges[(a, b)] = math.exp(-expo)
    return InteractionGraph(nodes=ids, edges=edges, kind="attribute_similarity")


def aggregate_layers(
    layers: Sequence[InteractionGraph], weights: LayerWeights
) -> InteractionGraph:
    """Convex-style combination of layers after per-layer normalization.

    Each layer is scaled so its total edge weight is 1 (all-zero layers are
    skipped), then summed with its coefficient. The output's total edge
    weight therefore equals the sum of the coefficients of non-empty layers.
    """
    if not layers:
        raise ConfigurationError("no layers to aggregate")
    node_set = set(layers[0].nodes)
    for layer in layers[1:]:
        if set(layer.nodes) != node_set:
            raise ConsistencyError(
                f"layer {layer.kind!r} has a different node set than {layers[0].kind!r}"
            )
    edges: dict[tuple[str, str], float] = {}
    for layer in layers:
        coeff = weights.get(layer.kind)
        total = layer.sum_edge_weights()
        if coeff == 0 or total == 0:
            continue
        scale = coeff / total
        for a, b, w in layer.edges():
            key = _norm_pair(a, b)
            edges[key] = edges.get(key, 0.0) + w * scale
    nodes = sorted(node_set)
    return InteractionGraph(nodes=nodes, edges=edges, kind="aggregate")
