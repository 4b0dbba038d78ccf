"""The five regionalization objectives, their three group indicators, Pareto
extraction, and scenario-driven scheme selection.

Semantics: area-weighted product of intra-region homogeneity (one minus the
normalized area entropy of categories) and inter-region dissimilarity
(area-weighted Euclidean distance between neighboring regions' category
share vectors).

Quantity: one minus Moran's I of region densities, for population and
traffic; spatially anti-correlated (self-contained) regions score high.

Interaction: modularity of the OD and proximity graphs under the partition
induced by region membership.

All five objectives are maximized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .community import HardPartition, modularity
from .errors import ConfigurationError, ConsistencyError, DegenerateInputError, GeometryError
from .graphs import InteractionGraph
from .regions import PartitionScheme
from .spatial import Adjacency, AttributeField, BasicSpatialUnit, SemanticField, region_adjacency

GROUP_AXES = ("semantics", "quantity", "interaction")

SCENARIOS = {
    "user_coverage": "f_pop",
    "mobility_coverage": "f_od",
    "high_value_coverage": "f_sem",
}


@dataclass(frozen=True)
class ObjectiveVector:
    """The five objective values plus provenance for one scheme."""

    f_sem: float
    f_pop: float
    f_traffic: float
    f_od: float
    f_prox: float
    n_regions: int
    params: Mapping[str, object]

    def __post_init__(self) -> None:
        if self.n_regions < 1:
            raise ConsistencyError("n_regions must be >= 1")
        object.__setattr__(self, "params", dict(self.params))

    @property
    def g_semantics(self) -> float:
        return self.f_sem

    @property
    def g_quantity(self) -> float:
        return (self.f_pop + self.f_traffic) / 2.0

    @property
    def g_interaction(self) -> float:
        return (self.f_od + self.f_prox) / 2.0

    def group(self, axis: str) -> float:
        if axis not in GROUP_AXES:
            raise ConfigurationError(f"unknown group axis {axis!r}")
        return getattr(self, f"g_{axis}")

    def as_row(self) -> dict[str, float]:
        return {
            "f_sem": self.f_sem,
            "f_pop": self.f_pop,
            "f_traffic": self.f_traffic,
            "f_od": self.f_od,
            "f_prox": self.f_prox,
            "g_semantics": self.g_semantics,
            "g_quantity": self.g_quantity,
            "g_interaction": self.g_interaction,
        }


@dataclass(frozen=True)
class SpatialWeights:
    """Binary contiguity weights over dense region ids (zero diagonal)."""

    n_regions: int
    pairs: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        for a, b in self.pairs:
            if a == b:
                raise ConsistencyError("spatial weights must have a zero diagonal")
            if not (0 <= a < self.n_regions and 0 <= b < self.n_regions):
                raise ConsistencyError("spatial weight pair outside region range")
        object.__setattr__(
            self, "pairs", frozenset((min(a, b), max(a, b)) for a, b in self.pairs)
        )

    @classmethod
    def from_region_adjacency(cls, n_regions: int, adjacent: Iterable) -> "SpatialWeights":
        return cls(n_regions=n_regions, pairs=frozenset(adjacent))

    def weight(self, a: int, b: int) -> float:
        return 1.0 if (min(a, b), max(a, b)) in self.pairs else 0.0

    def total(self) -> float:
        """Sum over ordered pairs (each unordered pair counts twice)."""
        return 2.0 * len(self.pairs)


class MoranResult(NamedTuple):
    value: float
    degenerate: bool


def _region_members(scheme: PartitionScheme, unit_ids: Iterable[str]) -> dict[int, list[str]]:
    keep = set(unit_ids)
    members: dict[int, list[str]] = {}
    for uid in sorted(scheme.assignment):
        if uid in keep:
            members.setdefault(scheme.assignment[uid], []).append(uid)
    return members


def semantic_objective(
    scheme: PartitionScheme,
    semantics: SemanticField,
    units: Mapping[str, BasicSpatialUnit],
    adjacency: Adjacency,
) -> float:
    """Area-weighted intra-similarity times inter-dissimilarity of semantics.

    Per region: intra = 1 - H / ln(T) with H the area entropy of categories
    present (intra = 1 when only one global category exists); inter = the
    area-weighted mean Euclidean distance between this region's category
    share vector and those of its adjacent regions (0 without neighbors).
    """
    semantics.require_complete(units)
    t = len(semantics.categories)
    members = _region_members(scheme, units)
    adj_pairs = region_adjacency(
        {u: scheme.assignment[u] for u in units}, adjacency
    )
    neighbors: dict[int, set[int]] = {rid: set() for rid in members}
    for a, b in adj_pairs:
        neighbors[a].add(b)
        neighbors[b].add(a)

    areas: dict[int, float] = {}
    shares: dict[int, np.ndarray] = {}
    intra: dict[int, float] = {}
    for rid, mem in sorted(members.items()):
        area = sum(units[m].area for m in mem)
        if area <= 0:
            raise GeometryError(f"region {rid} has zero area")
        cat_area = np.zeros(t)
        for m in mem:
            cat_area[semantics.assignment[m]] += units[m].area
        share = cat_area / area
        if t == 1:
            h_norm = 0.0
        else:
            present = share[share > 0]
            h_norm = float(-(present * np.log(present)).sum()) / math.log(t)
        areas[rid] = area
        shares[rid] = share
        intra[rid] = 1.0 - h_norm

    total_area = sum(areas[rid] for rid in sorted(areas))
    acc = 0.0
    for rid in sorted(members):
        nbrs = sorted(neighbors[rid])
        if nbrs:
            nb_area = sum(areas[j] for j in nbrs)
            inter = (
                sum(
                    areas[j] * float(np.linalg.norm(shares[rid] - shares[j]))
                    for j in nbrs
                )
                / nb_area
            )
        else:
            inter = 0.0
        acc += areas[rid] * intra[rid] * inter
    return acc / total_area


def morans_i(
    scheme: PartitionScheme,
    field: AttributeField,
    units: Mapping[str, BasicSpatialUnit],
    weights: SpatialWeights,
) -> MoranResult:
    """Global Moran's I of region densities under binary contiguity weights.

    Densities are region attribute totals divided by region areas. A constant
    density field has no spatial structure; by convention it scores 0 and is
    flagged degenerate.
    """
    members = _region_members(scheme, units)
    n = len(members)
    if n < 2:
        raise DegenerateInputError("Moran's I needs at least 2 regions")
    if weights.n_regions != n:
        raise ConsistencyError(
            f"weights cover {weights.n_regions} regions, scheme has {n}"
        )
    w_total = weights.total()
    if w_total == 0:
        raise DegenerateInputError("all-zero spatial weights")
    field.require_complete(units)

    rids = sorted(members)
    x = np.array(
        [
            sum(field.values[m] for m in members[rid])
            / sum(units[m].area for m in members[rid])
            for rid in rids
        ]
    )
    if x.min() == x.max():
        return MoranResult(value=0.0, degenerate=True)
    dev = x - x.mean()
    cross = 0.0
    for a, b in sorted(weights.pairs):
        cross += 2.0 * dev[a] * dev[b]  # both ordered directions
    value = (n / w_total) * (cross / float((dev * dev).sum()))
    return MoranResult(value=float(value), degenerate=False)


def quantity_objectives(
    scheme: PartitionScheme,
    population: AttributeField,
    traffic: AttributeField,
    units: Mapping[str, BasicSpatialUnit],
    weights: SpatialWeights,
) -> tuple[float, float]:
    """(1 - I_population, 1 - I_traffic); each lies in [0, 2]."""
    i_pop = morans_i(scheme, population, units, weights)
    i_traffic = morans_i(scheme, traffic, units, weights)
    return (1.0 - i_pop.value, 1.0 - i_traffic.value)


def induced_partition(scheme: PartitionScheme, graph: InteractionGraph) -> HardPartition:
    """Region membership restricted to the graph's nodes, densely relabeled."""
    missing = sorted(set(graph.nodes) - set(scheme.assignment))
    if missing:
        raise ConsistencyError(f"scheme does not cover graph nodes: {missing[:5]}")
    labels = {n: scheme.assignment[n] for n in graph.nodes}
    return HardPartition.from_labels(labels, list(graph.nodes))


def interaction_objectives(
    scheme: PartitionScheme,
    od_graph: InteractionGraph,
    proximity_graph: InteractionGraph,
) -> tuple[float, float]:
    """Modularity (resolution 1) of the OD and proximity graphs under the
    region partition."""
    f_od = modularity(od_graph, induced_partition(scheme, od_graph), 1.0)
    f_prox = modularity(proximity_graph, induced_partition(scheme, proximity_graph), 1.0)
    return (f_od, f_prox)


@dataclass(frozen=True)
class EvaluationInputs:
    """Everything needed to score a scheme."""

    units: Mapping[str, BasicSpatialUnit]
    semantics: SemanticField
    population: AttributeField
    traffic: AttributeField
    adjacency: Adjacency
    od_graph: InteractionGraph
    proximity_graph: InteractionGraph


def evaluate(scheme: PartitionScheme, inputs: EvaluationInputs) -> ObjectiveVector:
    """All five objectives plus group aggregates for one scheme."""
    try:
        f_sem = semantic_objective(scheme, inputs.semantics, inputs.units, inputs.adjacency)
        adj_pairs = region_adjacency(
            {u: scheme.assignment[u] for u in inputs.units}, inputs.adjacency
        )
        n_regions = len(_region_members(scheme, inputs.units))
        weights = SpatialWeights(n_regions=n_regions, pairs=frozenset(adj_pairs))
        f_pop, f_traffic = quantity_objectives(
            scheme, inputs.population, inputs.traffic, inputs.units, weights
        )
        f_od, f_prox = interaction_objectives(
            scheme, inputs.od_graph, inputs.proximity_graph
        )
    except Exception as exc:
        raise type(exc)(f"evaluating scheme with {scheme.n_regions} regions: {exc}") from exc
    return ObjectiveVector(
        f_sem=f_sem,
        f_pop=f_pop,
        f_traffic=f_traffic,
        f_od=f_od,
        f_prox=f_prox,
        n_regions=scheme.n_regions,
        params=scheme.params,
    )


def pareto_front(
    vectors: Sequence[ObjectiveVector],
    axes: Sequence[str] = GROUP_AXES,
) -> list[ObjectiveVector]:
    """Vectors not weakly dominated on the chosen group axes.

    v dominates u when v >= u on every axis and v > u on at least one, with
    all axes maximized. Input order is preserved; vectors that are equal on
    every axis do not dominate each other, so duplicates are all retained.
    """
    if not vectors:
        raise DegenerateInputError("empty objective batch")
    axes = tuple(axes)
    if len(axes) < 2 or any(a not in GROUP_AXES for a in axes):
        raise ConfigurationError(f"axes must be >= 2 of {GROUP_AXES}, got {axes}")
    values = np.array([[v.group(a) for a in axes] for v in vectors])
    keep = []
    for i in range(len(vectors)):
        geq = (values >= values[i]).all(axis=1)
        gt = (values > values[i]).any(axis=1)
        if not (geq & gt).any():
            keep.append(vectors[i])
    return keep


def select_scenario(front: Sequence[ObjectiveVector], scenario: str) -> ObjectiveVector:
    """Front member maximizing the scenario's preferred objective.

    Ties resolve to fewer regions, then earlier input order.
    """
    if not front:
        raise DegenerateInputError("empty Pareto front")
    if scenario not in SCENARIOS:
        raise ConfigurationError(
            f"unknown scenario {scenario!r}; expected one of {sorted(SCENARIOS)}"
        )
    key = SCENARIOS[scenario]
    best = front[0]
    for v in front[1:]:
        if getattr(v, key) > getattr(best, key) or (
            getattr(v, key) == getattr(best, key) and v.n_regions < best.n_regions
        ):
            best = v
    return best
