"""Kernel/marginal splitting, greedy kernel extension within blocks, and the
building blocks of multilevel regionalization.

Units whose fuzzy membership in some community clears a threshold (> 0.5, so
the community is unique) are kernels; the rest are marginal and are absorbed
one at a time, closest attribute profile first, into an adjacent kernel
region of the same block. Absorption chains outward, so regions stay
contiguous by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from shapely.ops import unary_union

from .community import MembershipTable
from .errors import ConfigurationError, ConsistencyError
from .spatial import (
    Adjacency,
    AttributeField,
    BasicSpatialUnit,
    City,
    SemanticField,
)


@dataclass(frozen=True)
class PartitionScheme:
    """Assignment of every unit to exactly one region, with provenance.

    ``params`` carries the generating parameter set (layer weights,
    resolution, membership threshold, size bounds, seed, ...) so schemes stay
    comparable across sweeps.
    """

    assignment: Mapping[str, int]
    params: Mapping[str, object]
    level: int = 0

    def __post_init__(self) -> None:
        if not self.assignment:
            raise ConsistencyError("empty partition scheme")
        object.__setattr__(self, "assignment", dict(self.assignment))
        object.__setattr__(self, "params", dict(self.params))

    @property
    def n_regions(self) -> int:
        return len(set(self.assignment.values()))

    def regions(self) -> dict[int, list[str]]:
        out: dict[int, list[str]] = {}
        for unit in sorted(self.assignment):
            out.setdefault(self.assignment[unit], []).append(unit)
        return out

    def contiguity_violations(self, adjacency: Adjacency) -> list[int]:
        """Region ids that are not connected under the unit adjacency."""
        bad = []
        for rid, members in sorted(self.regions().items()):
            member_set = set(members)
            seen = {members[0]}
            stack = [members[0]]
            while stack:
                u = stack.pop()
                for v in sorted(adjacency.neighbors(u)):
                    if v in member_set and v not in seen:
                        seen.add(v)
                        stack.append(v)
            if seen != member_set:
                bad.append(rid)
        return bad


@dataclass(frozen=True)
class KernelSplit:
    """Kernel unit sets per community, plus the marginal remainder."""

    kernels: Mapping[int, frozenset[str]]
    marginals: frozenset[str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "kernels", {c: frozenset(v) for c, v in self.kernels.items()})
        for c, units in self.kernels.items():
            if not units:
                raise ConsistencyError(f"community {c} retained with no kernel units")


def split_kernel_marginal(membership: MembershipTable, threshold: float = 0.6) -> KernelSplit:
    """Partition units into kernels (membership >= threshold) and marginals.

    The threshold must exceed 0.5 so a unit can be kernel for at most one
    community. Communities that end up with no kernel unit are dissolved and
    their would-be members become marginal.
    """
    if not (0.5 < threshold <= 1.0):
        raise ConfigurationError(
            f"membership threshold must lie in (0.5, 1], got {threshold}"
        )
    kernels: dict[int, set[str]] = {}
    marginals: set[str] = set()
    for unit in sorted(membership.memberships):
        row = membership.memberships[unit]
        winner = None
        for c in sorted(row):
            if row[c] >= threshold:
                winner = c
                break
        if winner is None:
            marginals.add(unit)
        else:
            kernels.setdefault(winner, set()).add(unit)
    return KernelSplit(
        kernels={c: frozenset(v) for c, v in sorted(kernels.items())},
        marginals=frozenset(marginals),
    )


@dataclass(frozen=True)
class ExtensionResult:
    scheme: PartitionScheme
    diagnostics: tuple[str, ...]


class _Region:
    __slots__ = ("rid", "block", "members", "value_sums", "area")

    def __init__(self, rid: int, block: str, field_names: Sequence[str]):
        self.rid = rid
        self.block = block
        self.members: list[str] = []
        self.value_sums = {name: 0.0 for name in field_names}
        self.area = 0.0

    def absorb(self, unit: BasicSpatialUnit, fields: Mapping[str, AttributeField]) -> None:
        self.members.append(unit.id)
        self.area += unit.area
        for name in self.value_sums:
            self.value_sums[name] += fields[name].values[unit.id]


def _standardizers(
    fields: Mapping[str, AttributeField], units: Mapping[str, BasicSpatialUnit]
) -> dict[str, tuple[float, float]]:
    """Per-field (mean, std) of densities over the given units."""
    out = {}
    ids = sorted(units)
    for name in sorted(fields):
        dens = [fields[name].values[u] / units[u].area for u in ids]
        mu = sum(dens) / len(dens)
        var = sum((d - mu) ** 2 for d in dens) / len(dens)
        out[name] = (mu, math.sqrt(var))
    return out


def _profile(
    value_sums: Mapping[str, float], area: float, standardizers: Mapping[str, tuple[float, float]]
) -> list[float]:
    vec = []
    for name in sorted(standardizers):
        mu, sd = standardizers[name]
        density = value_sums[name] / area
        vec.append((density - mu) / sd if sd > 0 else 0.0)
    return vec


def _distance(a: Sequence[float], b: Sequence[float]) -> float:
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))


def _components(ids: Iterable[str], adjacency: Adjacency) -> list[list[str]]:
    """Connected components of a unit subset, each sorted, ordered by min id."""
    remaining = set(ids)
    comps = []
    for start in sorted(remaining):
        if start not in remaining:
            continue
        comp = {start}
        stack = [start]
        remaining.discard(start)
        while stack:
            u = stack.pop()
            for v in sorted(adjacency.neighbors(u)):
                if v in remaining:
                    remaining.discard(v)
                    comp.add(v)
                    stack.append(v)
        comps.append(sorted(comp))
    return comps


def extend_kernels(
    split: KernelSplit,
    units: Mapping[str, BasicSpatialUnit],
    fields: Mapping[str, AttributeField],
    adjacency: Adjacency,
    blocks: Mapping[str, str] | None = None,
) -> ExtensionResult:
    """Grow kernel regions by greedy absorption of marginals within blocks.

    Every iteration absorbs the marginal unit with the smallest standardized
    attribute-density distance to an adjacent kernel region of its own block
    (ties: smaller unit id, then smaller region id); the absorbed unit then
    extends that region, so chains of marginals are reached in later
    iterations. Blocks without any kernel unit collapse into one region per
    connected component, recorded in the diagnostics.
    """
    if blocks is None:
        blocks = {uid: units[uid].block_id for uid in units}
    all_ids = set(units)
    covered = set(split.marginals)
    for members in split.kernels.values():
        covered |= members
    if covered != all_ids:
        raise ConsistencyError("kernel split does not partition the unit set")
    for name in sorted(fields):
        fields[name].require_complete(all_ids)

    standardizers = _standardizers(fields, units)
    field_names = sorted(fields)
    diagnostics: list[str] = []

    # Seed regions: connected components of each community's kernels within
    # each block, created in (block, community, min unit id) order.
    regions: list[_Region] = []
    seeds = []
    for c in sorted(split.kernels):
        by_block: dict[str, list[str]] = {}
        for uid in sorted(split.kernels[c]):
            by_block.setdefault(blocks[uid], []).append(uid)
        for block in sorted(by_block):
            for comp in _components(by_block[block], adjacency):
                seeds.append((block, c, comp))
    seeds.sort(key=lambda s: (s[0], s[1], s[2][0]))
    for block, _c, comp in seeds:
        region = _Region(len(regions), block, field_names)
        for uid in comp:
            region.absorb(units[uid], fields)
        regions.append(region)

    # Greedy absorption, independently per block.
    marginals_by_block: dict[str, set[str]] = {}
    for uid in sorted(split.marginals):
        marginals_by_block.setdefault(blocks[uid], set()).add(uid)
    regions_by_block: dict[str, list[_Region]] = {}
    for region in regions:
        regions_by_block.setdefault(region.block, []).append(region)

    leftovers: dict[str, set[str]] = {}
    for block in sorted(marginals_by_block):
        pool = marginals_by_block[block]
        candidates_regions = regions_by_block.get(block, [])
        while pool:
            best = None  # (distance, unit id, region id)
            for uid in sorted(pool):
                unit = units[uid]
                uvec = _profile(
                    {n: fields[n].values[uid] for n in field_names}, unit.area, standardizers
                )
                nbrs = adjacency.neighbors(uid)
                for region in candidates_regions:
                    if not nbrs.intersection(region.members):
                        continue
                    d = _distance(uvec, _profile(region.value_sums, region.area, standardizers))
                    key = (d, uid, region.rid)
                    if best is None or key < best:
                        best = key
            if best is None:
                leftovers[block] = set(pool)
                break
            _d, uid, rid = best
            regions[rid].absorb(units[uid], fields)
            pool.discard(uid)

    # Fallback: marginals unreachable from any kernel region of their block
    # (including blocks with no kernels at all) become their own regions.
    for block in sorted(leftovers):
        comps = _components(leftovers[block], adjacency)
        if not regions_by_block.get(block):
            diagnostics.append(
                f"block {block}: no kernel units; {len(comps)} fallback region(s) "
                f"cover its {len(leftovers[block])} unit(s)"
            )
        else:
            diagnostics.append(
                f"block {block}: {len(leftovers[block])} marginal unit(s) not connected "
                f"to any kernel region; emitted as {len(comps)} fallback region(s)"
            )
        for comp in comps:
            region = _Region(len(regions), block, field_names)
            for uid in comp:
                region.absorb(units[uid], fields)
            regions.append(region)

    assignment = relabel_regions(
        {uid: r.rid for r in regions for uid in r.members}
    )
    scheme = PartitionScheme(assignment=assignment, params={}, level=0)
    return ExtensionResult(scheme=scheme, diagnostics=tuple(diagnostics))


def relabel_regions(assignment: Mapping[str, int]) -> dict[str, int]:
    """Dense region ids ordered by each region's smallest member unit id."""
    min_member: dict[int, str] = {}
    for uid in sorted(assignment):
        rid = assignment[uid]
        if rid not in min_member:
            min_member[rid] = uid
    order = sorted(min_member, key=lambda rid: min_member[rid])
    remap = {rid: k for k, rid in enumerate(order)}
    return {uid: remap[rid] for uid, rid in assignment.items()}


# ---------------------------------------------------------------------------
# multilevel building blocks
# ---------------------------------------------------------------------------

def multilevel_method2(city: City) -> list[PartitionScheme]:
    """Nested schemes read directly off the block hierarchy.

    Level 0 puts every unit in its own region; level k >= 1 uses the level-k
    blocks as regions. The schemes are perfectly nested because each unit's
    block chain is a function of the unit.
    """
    unit_ids = city.unit_ids()
    schemes = [
        PartitionScheme(
            assignment={uid: i for i, uid in enumerate(sorted(unit_ids))},
            params={"method": 2, "level": 0},
            level=0,
        )
    ]
    if not city.blocks:
        return schemes
    blocks = city.blocks_by_id()
    levels = sorted({b.level for b in city.blocks})
    parent_of: dict[str, str] = {u.id: u.block_id for u in city.units}
    parent_of.update({b.id: b.block_id for b in city.blocks})

    for level in levels:
        level_blocks = sorted(b.id for b in city.blocks if b.level == level)
        index = {bid: i for i, bid in enumerate(level_blocks)}
        assignment = {}
        for uid in unit_ids:
            anc = uid
            while anc and anc not in index:
                anc = parent_of.get(anc, "")
            if not anc:
                raise ConsistencyError(
                    f"unit {uid!r} has no ancestor block at level {level}"
                )
            assignment[uid] = index[anc]
        schemes.append(
            PartitionScheme(
                assignment=relabel_regions(assignment),
                params={"method": 2, "level": level},
                level=level,
            )
        )
    return schemes


def aggregate_scheme_to_city(city: City, assignment: Mapping[str, int], params: Mapping[str, object]) -> tuple[City, dict[str, int]]:
    """Fold a partition of ``city`` into a coarser city whose units are the
    regions (summed attributes, majority-area semantics, aggregated OD).

    Returns the new city plus the mapping new-unit-id -> source region id.
    """
    by_id = city.units_by_id()
    missing = sorted(set(by_id) - set(assignment))
    if missing:
        raise ConsistencyError(f"assignment does not cover units: {missing[:5]}")
    region_members: dict[int, list[str]] = {}
    for uid in sorted(assignment):
        if uid in by_id:
            region_members.setdefault(assignment[uid], []).append(uid)

    new_level = max(u.level for u in city.units) + 1
    name_width = max(4, len(str(len(region_members))))
    region_unit_id = {
        rid: f"r{rid:0{name_width}d}" for rid in sorted(region_members)
    }

    new_units = []
    sem_assign: dict[str, int] = {}
    field_values: dict[str, dict[str, float]] = {name: {} for name in city.fields}
    t = len(city.semantics.categories)
    for rid, members in sorted(region_members.items()):
        nid = region_unit_id[rid]
        geom = unary_union([by_id[m].polygon for m in members])
        area = sum(by_id[m].area for m in members)
        new_units.append(
            BasicSpatialUnit(id=nid, polygon=geom, block_id="city", level=new_level, area=area)
        )
        for name in city.fields:
            field_values[name][nid] = sum(city.fields[name].values[m] for m in members)
        cat_area = [0.0] * t
        for m in members:
            cat_area[city.semantics.assignment[m]] += by_id[m].area
        sem_assign[nid] = max(range(t), key=lambda c: (cat_area[c], -c))

    root_geom = unary_union([u.polygon for u in new_units]).envelope
    root = BasicSpatialUnit(id="city", polygon=root_geom, block_id="", level=new_level + 1)

    new_od = None
    if city.od is not None:
        unit_to_new = {
            m: region_unit_id[rid] for rid, members in region_members.items() for m in members
        }
        new_od = city.od.remap(unit_to_new)

    new_city = City(
        units=tuple(new_units),
        blocks=(root,),
        fields={
            name: AttributeField(name=name, values=vals)
            for name, vals in field_values.items()
        },
        semantics=SemanticField(categories=city.semantics.categories, assignment=sem_assign),
        od=new_od,
    )
    return new_city, {region_unit_id[rid]: rid for rid in region_members}
