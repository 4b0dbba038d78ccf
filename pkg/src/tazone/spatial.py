"""Spatial data model: units, blocks, attributes, semantics, interactions.

All coordinates are planar and expressed in meters. Geographic input must be
projected before it reaches this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from shapely.geometry import MultiPolygon, Polygon
from shapely.geometry.base import BaseGeometry
from shapely.ops import unary_union
from shapely.strtree import STRtree

from .errors import (
    ConfigurationError,
    ConsistencyError,
    GeometryError,
    IngestionError,
)

AREA_RTOL = 1e-9


def _check_polygon(geom: BaseGeometry, unit_id: str) -> None:
    if not isinstance(geom, (Polygon, MultiPolygon)):
        raise GeometryError(f"unit {unit_id!r}: geometry must be polygonal, got {geom.geom_type}")
    if not geom.is_valid:
        raise GeometryError(f"unit {unit_id!r}: invalid polygon ({geom.geom_type})")
    if geom.is_empty or geom.area <= 0.0:
        raise GeometryError(f"unit {unit_id!r}: polygon has zero area")


@dataclass(frozen=True)
class BasicSpatialUnit:
    """One atomic polygon of the regionalization.

    Parameters
    ----------
    id : str
        Unique identifier.
    polygon : shapely Polygon or MultiPolygon
        Planar geometry in meters.
    block_id : str
        Identifier of the enclosing higher-level block ("" for top level).
    level : int
        Hierarchy level, 0 = finest.
    area : float, optional
        Cached area; validated against the polygon area when given.
    """

    id: str
    polygon: BaseGeometry
    block_id: str = ""
    level: int = 0
    area: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        _check_polygon(self.polygon, self.id)
        if self.level < 0:
            raise GeometryError(f"unit {self.id!r}: negative hierarchy level")
        computed = self.polygon.area
        if self.area is None:
            object.__setattr__(self, "area", computed)
        elif abs(self.area - computed) > AREA_RTOL * computed:
            raise GeometryError(
                f"unit {self.id!r}: cached area {self.area} disagrees with "
                f"polygon area {computed}"
            )

    @property
    def centroid(self) -> tuple[float, float]:
        c = self.polygon.centroid
        return (c.x, c.y)


@dataclass(frozen=True)
class AttributeField:
    """A named non-negative quantity per unit (counts or load)."""

    name: str
    values: Mapping[str, float]

    def __post_init__(self) -> None:
        bad = [u for u, v in self.values.items() if not math.isfinite(v) or v < 0]
        if bad:
            raise IngestionError(
                f"field {self.name!r}: non-finite or negative values",
                issues=[{"field": self.name, "unit": u} for u in sorted(bad)],
            )

    def require_complete(self, unit_ids: Iterable[str]) -> None:
        missing = sorted(set(unit_ids) - set(self.values))
        if missing:
            raise IngestionError(
                f"field {self.name!r}: missing values for {len(missing)} unit(s)",
                issues=[{"field": self.name, "unit": u} for u in missing],
            )

    def total(self) -> float:
        return sum(self.values[u] for u in sorted(self.values))


@dataclass(frozen=True)
class SemanticField:
    """Single categorical label per unit, drawn from a global category list."""

    categories: tuple[str, ...]
    assignment: Mapping[str, int]

    def __post_init__(self) -> None:
        if len(self.categories) < 1:
            raise IngestionError("semantic field needs at least one category")
        t = len(self.categories)
        bad = [u for u, c in self.assignment.items() if not (0 <= c < t)]
        if bad:
            raise IngestionError(
                "semantic assignment outside category range",
                issues=[{"unit": u} for u in sorted(bad)],
            )

    def require_complete(self, unit_ids: Iterable[str]) -> None:
        missing = sorted(set(unit_ids) - set(self.assignment))
        if missing:
            raise IngestionError(
                f"semantic field: missing labels for {len(missing)} unit(s)",
                issues=[{"unit": u} for u in missing],
            )

    def label_of(self, unit_id: str) -> str:
        return self.categories[self.assignment[unit_id]]


def _norm_pair(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class InteractionMatrix:
    """Sparse symmetric non-negative weights between unit pairs.

    Keys are normalized to sorted unordered pairs; duplicate directions are
    summed at construction. Self pairs are rejected.
    """

    kind: str
    entries: Mapping[tuple[str, str], float]

    def __post_init__(self) -> None:
        if self.kind not in ("od", "proximity"):
            raise ConfigurationError(f"unknown interaction kind {self.kind!r}")
        normalized: dict[tuple[str, str], float] = {}
        for (a, b), w in self.entries.items():
            if a == b:
                raise IngestionError(f"interaction matrix: self pair {a!r}")
            if not math.isfinite(w) or w < 0:
                raise IngestionError(f"interaction matrix: bad weight for ({a!r}, {b!r})")
            key = _norm_pair(a, b)
            normalized[key] = normalized.get(key, 0.0) + w
        object.__setattr__(self, "entries", normalized)

    @classmethod
    def from_records(cls, records: Iterable[tuple[str, str, float]], kind: str = "od") -> "InteractionMatrix":
        entries: dict[tuple[str, str], float] = {}
        for a, b, w in records:
            key = _norm_pair(a, b)
            entries[key] = entries.get(key, 0.0) + w
        return cls(kind=kind, entries=entries)

    def unit_ids(self) -> set[str]:
        ids: set[str] = set()
        for a, b in self.entries:
            ids.add(a)
            ids.add(b)
        return ids

    def weight(self, a: str, b: str) -> float:
        return self.entries.get(_norm_pair(a, b), 0.0)

    def remap(self, mapping: Mapping[str, str]) -> "InteractionMatrix":
        """Reassign unit ids through ``mapping``; flows folded onto the same
        id (now internal) are dropped."""
        entries: dict[tuple[str, str], float] = {}
        for (a, b), w in self.entries.items():
            a2 = mapping.get(a, a)
            b2 = mapping.get(b, b)
            if a2 == b2:
                continue
            key = _norm_pair(a2, b2)
            entries[key] = entries.get(key, 0.0) + w
        return InteractionMatrix(kind=self.kind, entries=entries)

    def restrict(self, ids: Iterable[str]) -> "InteractionMatrix":
        keep = set(ids)
        entries = {p: w for p, w in self.entries.items() if p[0] in keep and p[1] in keep}
        return InteractionMatrix(kind=self.kind, entries=entries)

    def total(self) -> float:
        return sum(self.entries[p] for p in sorted(self.entries))


@dataclass(frozen=True)
class SizeBounds:
    """Minimum and maximum admissible unit areas in square meters."""

    a_min: float
    a_max: float

    def __post_init__(self) -> None:
        if not (0 < self.a_min < self.a_max):
            raise ConfigurationError(
                f"size bounds must satisfy 0 < a_min < a_max, got ({self.a_min}, {self.a_max})"
            )


@dataclass(frozen=True)
class Adjacency:
    """Symmetric irreflexive adjacency over unit ids, with boundary spacing.

    ``pairs`` holds sorted unordered id pairs; ``spacing`` maps each pair to
    its boundary-to-boundary distance; ``unit_ids`` is the full universe the
    relation was computed over (units without neighbors included).
    """

    unit_ids: frozenset[str]
    pairs: frozenset[tuple[str, str]]
    spacing: Mapping[tuple[str, str], float]

    def __post_init__(self) -> None:
        neighbors: dict[str, set[str]] = {u: set() for u in self.unit_ids}
        for a, b in self.pairs:
            neighbors[a].add(b)
            neighbors[b].add(a)
        object.__setattr__(self, "_neighbors", neighbors)

    def __contains__(self, pair: tuple[str, str]) -> bool:
        return _norm_pair(*pair) in self.pairs

    def __iter__(self) -> Iterator[tuple[str, str]]:
        return iter(sorted(self.pairs))

    def __len__(self) -> int:
        return len(self.pairs)

    def neighbors(self, unit_id: str) -> set[str]:
        return set(self._neighbors[unit_id])  # type: ignore[attr-defined]

    def spacing_of(self, a: str, b: str) -> float:
        return self.spacing[_norm_pair(a, b)]

    def restricted(self, ids: Iterable[str]) -> "Adjacency":
        keep = frozenset(ids)
        pairs = frozenset(p for p in self.pairs if p[0] in keep and p[1] in keep)
        spacing = {p: self.spacing[p] for p in pairs}
        return Adjacency(unit_ids=keep, pairs=pairs, spacing=spacing)


def compute_spacing(a: BasicSpatialUnit, b: BasicSpatialUnit) -> float:
    """Minimum Euclidean distance between the boundaries of two units.

    Returns 0 for touching polygons. Units with overlapping interiors are a
    geometry error: units are expected to tile the study area.
    """
    _check_polygon(a.polygon, a.id)
    _check_polygon(b.polygon, b.id)
    if a.polygon.relate_pattern(b.polygon, "2********"):
        raise GeometryError(f"units {a.id!r} and {b.id!r} have overlapping interiors")
    return a.polygon.distance(b.polygon)


def compute_adjacency(units: Iterable[BasicSpatialUnit], gap_threshold: float) -> Adjacency:
    """All unordered unit pairs whose boundary spacing is <= ``gap_threshold``.

    Road-separated blocks never literally touch, so adjacency is defined by a
    configurable gap rather than shared boundaries. An STR-tree prunes the
    candidate pairs; the retained distances are exact.
    """
    if gap_threshold <= 0:
        raise ConfigurationError(f"gap_threshold must be positive, got {gap_threshold}")
    unit_list = sorted(units, key=lambda u: u.id)
    seen: set[str] = set()
    for u in unit_list:
        _check_polygon(u.polygon, u.id)
        if u.id in seen:
            raise ConsistencyError(f"duplicate unit id {u.id!r}")
        seen.add(u.id)

    geoms = [u.polygon for u in unit_list]
    tree = STRtree(geoms)
    pairs: set[tuple[str, str]] = set()
    spacing: dict[tuple[str, str], float] = {}
    for i, u in enumerate(unit_list):
        for j in tree.query(u.polygon, predicate="dwithin", distance=gap_threshold):
            j = int(j)
            if j <= i:
                continue
            v = unit_list[j]
            d = compute_spacing(u, v)
            if d <= gap_threshold:
                key = _norm_pair(u.id, v.id)
                pairs.add(key)
                spacing[key] = d
    return Adjacency(
        unit_ids=frozenset(u.id for u in unit_list),
        pairs=frozenset(pairs),
        spacing=spacing,
    )


@dataclass(frozen=True)
class SizeFilterResult:
    """Outcome of the area constraint.

    eligible
        Units that participate in detection, with undersized neighbors merged
        in (multipolygon geometry, summed attributes).
    singletons
        Oversized units (and undersized ones without an eligible neighbor, or
        all undersized ones under the "singleton" policy) that become forced
        one-unit regions.
    absorbed
        Mapping absorbed unit id -> host unit id.
    fields
        Attribute fields rewritten onto the post-filter universe.
    members
        Post-filter unit id -> tuple of original unit ids it covers.
    warnings
        Human-readable diagnostics (e.g. undersized units left as singletons).
    """

    eligible: tuple[BasicSpatialUnit, ...]
    singletons: tuple[BasicSpatialUnit, ...]
    absorbed: Mapping[str, str]
    fields: Mapping[str, AttributeField]
    members: Mapping[str, tuple[str, ...]]
    warnings: tuple[str, ...]

    def assignable_units(self) -> tuple[BasicSpatialUnit, ...]:
        return tuple(sorted(self.eligible + self.singletons, key=lambda u: u.id))

    def original_of(self, unit_id: str) -> tuple[str, ...]:
        return self.members.get(unit_id, (unit_id,))


def apply_size_constraint(
    units: Iterable[BasicSpatialUnit],
    fields: Mapping[str, AttributeField],
    bounds: SizeBounds,
    adjacency: Adjacency,
    undersized_policy: str = "absorb",
) -> SizeFilterResult:
    """Enforce the unit-area range.

    Units above ``a_max`` leave the eligible set as forced singleton regions.
    Units below ``a_min`` are, under the default "absorb" policy, merged into
    their nearest adjacent eligible unit (minimum spacing, ties to the smaller
    id); under "singleton" they become forced singletons instead. Attribute
    mass is conserved exactly up to float addition.
    """
    if undersized_policy not in ("absorb", "singleton"):
        raise ConfigurationError(f"unknown undersized_policy {undersized_policy!r}")
    unit_list = sorted(units, key=lambda u: u.id)
    by_id = {u.id: u for u in unit_list}
    missing = sorted(set(by_id) - adjacency.unit_ids)
    if missing:
        raise ConsistencyError(f"units absent from adjacency relation: {missing[:5]}")

    oversized = [u for u in unit_list if u.area > bounds.a_max]
    undersized = [u for u in unit_list if u.area < bounds.a_min]
    eligible_ids = {
        u.id for u in unit_list if bounds.a_min <= u.area <= bounds.a_max
    }

    warnings: list[str] = []
    absorbed: dict[str, str] = {}
    singleton_ids = {u.id for u in oversized}

    if undersized_policy == "singleton":
        for u in undersized:
            singleton_ids.add(u.id)
            warnings.append(f"unit {u.id}: area {u.area:.1f} below a_min, kept as singleton (policy)")
    else:
        for u in undersized:
            candidates = [
                (adjacency.spacing_of(u.id, n), n)
                for n in sorted(adjacency.neighbors(u.id))
                if n in eligible_ids
            ]
            if not candidates:
                singleton_ids.add(u.id)
                warnings.append(
                    f"unit {u.id}: area {u.area:.1f} below a_min but no adjacent "
                    f"eligible unit; kept as singleton"
                )
                continue
            candidates.sort()  # min spacing, then smaller id
            absorbed[u.id] = candidates[0][1]

    # Assemble merged hosts.
    members: dict[str, list[str]] = {uid: [uid] for uid in sorted(eligible_ids | singleton_ids)}
    for small, host in sorted(absorbed.items()):
        members[host].append(small)

    def _merged_unit(host_id: str) -> BasicSpatialUnit:
        ids = members[host_id]
        host = by_id[host_id]
        if len(ids) == 1:
            return host
        geom = unary_union([by_id[i].polygon for i in ids])
        return BasicSpatialUnit(
            id=host_id,
            polygon=geom,
            block_id=host.block_id,
            level=host.level,
            area=sum(by_id[i].area for i in ids),
        )

    eligible_units = tuple(_merged_unit(uid) for uid in sorted(eligible_ids))
    singleton_units = tuple(by_id[uid] for uid in sorted(singleton_ids))

    merged_fields: dict[str, AttributeField] = {}
    for name in sorted(fields):
        f = fields[name]
        f.require_complete(by_id)
        merged_fields[name] = AttributeField(
            name=name,
            values={
                uid: sum(f.values[m] for m in members[uid])
                for uid in sorted(members)
            },
        )

    return SizeFilterResult(
        eligible=eligible_units,
        singletons=singleton_units,
        absorbed=absorbed,
        fields=merged_fields,
        members={uid: tuple(ms) for uid, ms in members.items()},
        warnings=tuple(warnings),
    )


def region_adjacency(
    assignment: Mapping[str, int], unit_adjacency: Adjacency
) -> frozenset[tuple[int, int]]:
    """Region pairs that contain at least one adjacent unit pair.

    Symmetric and irreflexive; pairs are returned as (smaller, larger) ids.
    """
    missing = sorted(set(assignment) - unit_adjacency.unit_ids)
    if missing:
        raise ConsistencyError(
            f"assignment references units absent from adjacency: {missing[:5]}"
        )
    pairs: set[tuple[int, int]] = set()
    for a, b in unit_adjacency.pairs:
        if a not in assignment or b not in assignment:
            continue
        ra, rb = assignment[a], assignment[b]
        if ra != rb:
            pairs.add((ra, rb) if ra < rb else (rb, ra))
    return frozenset(pairs)


@dataclass(frozen=True)
class City:
    """A study area: level-0 units, higher-level blocks, and their data."""

    units: tuple[BasicSpatialUnit, ...]
    blocks: tuple[BasicSpatialUnit, ...]
    fields: Mapping[str, AttributeField]
    semantics: SemanticField
    od: InteractionMatrix | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "units", tuple(sorted(self.units, key=lambda u: u.id)))
        object.__setattr__(self, "blocks", tuple(sorted(self.blocks, key=lambda u: u.id)))

    def unit_ids(self) -> list[str]:
        return [u.id for u in self.units]

    def units_by_id(self) -> dict[str, BasicSpatialUnit]:
        return {u.id: u for u in self.units}

    def blocks_by_id(self) -> dict[str, BasicSpatialUnit]:
        return {b.id: b for b in self.blocks}

    def validate(self) -> None:
        """Run all ingestion-time invariants; raises on first failure."""
        ids = set()
        for u in self.units + self.blocks:
            if u.id in ids:
                raise ConsistencyError(f"duplicate id {u.id!r}")
            ids.add(u.id)
        unit_levels = {u.level for u in self.units}
        if len(unit_levels) > 1:
            raise ConsistencyError(f"units span multiple hierarchy levels: {sorted(unit_levels)}")
        if unit_levels:
            base = unit_levels.pop()
            low = [b.id for b in self.blocks if b.level <= base]
            if low:
                raise ConsistencyError(f"blocks at or below the unit level: {low[:5]}")
        blocks = self.blocks_by_id()
        for u in self.units:
            if self.blocks and u.block_id:
                if u.block_id not in blocks:
                    raise ConsistencyError(f"unit {u.id!r}: unknown block {u.block_id!r}")
                if not blocks[u.block_id].polygon.covers(u.polygon):
                    raise GeometryError(
                        f"block {u.block_id!r} does not contain unit {u.id!r}"
                    )
        for b in self.blocks:
            if b.block_id:
                if b.block_id not in blocks:
                    raise ConsistencyError(f"block {b.id!r}: unknown parent {b.block_id!r}")
                if not blocks[b.block_id].polygon.covers(b.polygon):
                    raise GeometryError(f"block {b.block_id!r} does not contain block {b.id!r}")
        unit_ids = self.unit_ids()
        for f in self.fields.values():
            f.require_complete(unit_ids)
        self.semantics.require_complete(unit_ids)
        if self.od is not None:
            unknown = sorted(self.od.unit_ids() - set(unit_ids))
            if unknown:
                raise IngestionError(
                    "interaction matrix references unknown units",
                    issues=[{"unit": u} for u in unknown],
                )
