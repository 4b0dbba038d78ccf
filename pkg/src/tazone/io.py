"""GeoJSON and CSV serialization for every external interface.

Units travel as a GeoJSON FeatureCollection whose features carry `id`,
`block_id`, `level`, `semantic`, and one numeric property per attribute
field. Interaction matrices travel as `src_id,dst_id,weight` CSV and are
symmetrized on read by summing both directions. All writers are
deterministic: sorted keys, fixed float formatting via repr.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from shapely.geometry import shape
from shapely.geometry import mapping as geom_mapping

from .community import CharacteristicScale, SweepRecord
from .errors import IngestionError
from .spatial import (
    AttributeField,
    BasicSpatialUnit,
    City,
    InteractionMatrix,
    SemanticField,
)

RESERVED_PROPS = ("id", "block_id", "level", "semantic")


def load_units_geojson(path: str | Path) -> City:
    """Read a FeatureCollection into a (not yet OD-equipped) city.

    Level-0 features become units and must carry a semantic label plus every
    attribute property; features at level >= 1 become blocks. The global
    semantic category list is the sorted set of level-0 labels.
    """
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"units file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise IngestionError(f"units file is not valid JSON: {path}: {exc}") from exc
    features = data.get("features")
    if data.get("type") != "FeatureCollection" or features is None:
        raise IngestionError(f"units file is not a GeoJSON FeatureCollection: {path}")

    issues = []
    units: list[BasicSpatialUnit] = []
    blocks: list[BasicSpatialUnit] = []
    unit_props: dict[str, dict] = {}
    for k, feat in enumerate(features):
        props = feat.get("properties") or {}
        fid = props.get("id")
        if fid is None:
            issues.append({"feature": k, "problem": "missing id"})
            continue
        geom = feat.get("geometry")
        if geom is None or geom.get("type") not in ("Polygon", "MultiPolygon"):
            issues.append({"feature": k, "id": fid, "problem": "geometry must be Polygon/MultiPolygon"})
            continue
        level = props.get("level", 0)
        try:
            unit = BasicSpatialUnit(
                id=str(fid),
                polygon=shape(geom),
                block_id=str(props.get("block_id", "") or ""),
                level=int(level),
            )
        except Exception as exc:
            issues.append({"feature": k, "id": fid, "problem": str(exc)})
            continue
        if unit.level == 0:
            units.append(unit)
            unit_props[unit.id] = props
        else:
            blocks.append(unit)
    if issues:
        raise IngestionError(f"units file has {len(issues)} bad feature(s)", issues=issues)
    if not units:
        raise IngestionError(f"units file contains no level-0 units: {path}")

    labels = {}
    for uid, props in unit_props.items():
        if "semantic" not in props or props["semantic"] is None:
            issues.append({"id": uid, "problem": "missing semantic label"})
        else:
            labels[uid] = str(props["semantic"])
    if issues:
        raise IngestionError("units missing semantic labels", issues=issues)
    categories = tuple(sorted(set(labels.values())))
    cat_index = {c: i for i, c in enumerate(categories)}
    semantics = SemanticField(
        categories=categories, assignment={u: cat_index[l] for u, l in labels.items()}
    )

    field_names: set[str] = set()
    for props in unit_props.values():
        for key, value in props.items():
            if key not in RESERVED_PROPS and isinstance(value, (int, float)) and not isinstance(value, bool):
                field_names.add(key)
    fields = {}
    for name in sorted(field_names):
        values = {}
        for uid, props in unit_props.items():
            v = props.get(name)
            if v is None or isinstance(v, bool) or not isinstance(v, (int, float)):
                issues.append({"id": uid, "field": name, "problem": "missing or non-numeric value"})
            else:
                values[uid] = float(v)
        fields[name] = AttributeField(name=name, values=values)
    if issues:
        raise IngestionError("units missing attribute values", issues=issues)

    return City(units=tuple(units), blocks=tuple(blocks), fields=fields, semantics=semantics, od=None)


def _feature(unit: BasicSpatialUnit, props: Mapping[str, object]) -> dict:
    geometry = geom_mapping(unit.polygon)
    # shapely mapping() yields tuples; lists keep the JSON round-trippable
    return {
        "type": "Feature",
        "geometry": json.loads(json.dumps(geometry)),
        "properties": dict(props),
    }


def write_units_geojson(city: City, path: str | Path) -> None:
    features = []
    for u in city.units:
        props: dict[str, object] = {
            "id": u.id,
            "block_id": u.block_id,
            "level": u.level,
            "semantic": city.semantics.label_of(u.id),
        }
        for name in sorted(city.fields):
            props[name] = city.fields[name].values[u.id]
        features.append(_feature(u, props))
    for b in city.blocks:
        features.append(_feature(b, {"id": b.id, "block_id": b.block_id, "level": b.level}))
    doc = {"type": "FeatureCollection", "features": features}
    Path(path).write_text(json.dumps(doc, sort_keys=True) + "\n")


def load_od_csv(path: str | Path) -> InteractionMatrix:
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"od file not found: {path}")
    records = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        expected = ["src_id", "dst_id", "weight"]
        if reader.fieldnames != expected:
            raise IngestionError(
                f"od file {path}: header must be {','.join(expected)}, got {reader.fieldnames}"
            )
        for k, row in enumerate(reader):
            try:
                records.append((row["src_id"], row["dst_id"], float(row["weight"])))
            except (TypeError, ValueError) as exc:
                raise IngestionError(f"od file {path}: bad row {k + 2}: {exc}") from exc
    return InteractionMatrix.from_records(records, kind="od")


def write_od_csv(od: InteractionMatrix, path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["src_id", "dst_id", "weight"])
        for (a, b) in sorted(od.entries):
            writer.writerow([a, b, repr(od.entries[(a, b)])])


def write_partition_csv(assignment: Mapping[str, int], level: int, path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["unit_id", "region_id", "level"])
        for uid in sorted(assignment):
            writer.writerow([uid, assignment[uid], level])


def write_partition_geojson(
    city: City, assignment: Mapping[str, int], level: int, path: str | Path
) -> None:
    """Original unit features with `region_id` and `level` added."""
    features = []
    for u in city.units:
        props: dict[str, object] = {
            "id": u.id,
            "block_id": u.block_id,
            "level": level,
            "region_id": assignment[u.id],
            "semantic": city.semantics.label_of(u.id),
        }
        for name in sorted(city.fields):
            props[name] = city.fields[name].values[u.id]
        features.append(_feature(u, props))
    doc = {"type": "FeatureCollection", "features": features}
    Path(path).write_text(json.dumps(doc, sort_keys=True) + "\n")


def write_sweep_csv(records: Sequence[SweepRecord], path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["resolution", "n_communities", "modularity"])
        for r in records:
            writer.writerow([repr(r.resolution), r.n_communities, repr(r.modularity)])


def load_sweep_csv(path: str | Path) -> list[SweepRecord]:
    """Reload sweep records (without partitions) for plotting or scale
    detection."""
    rows = []
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            rows.append(
                SweepRecord(
                    resolution=float(row["resolution"]),
                    n_communities=int(row["n_communities"]),
                    modularity=float(row["modularity"]),
                )
            )
    return rows


def write_scales_csv(scales: Sequence[CharacteristicScale], path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["label", "resolution_low", "resolution_high", "stable_count"])
        for s in scales:
            writer.writerow([s.label, repr(s.resolution_low), repr(s.resolution_high), s.stable_count])


def write_objectives_csv(
    rows: Sequence[Mapping[str, object]], path: str | Path
) -> None:
    """Objective batch rows; `pareto` is 1 for front members, 0 otherwise."""
    header = [
        "scheme_id",
        "n_regions",
        "f_sem",
        "f_pop",
        "f_traffic",
        "f_od",
        "f_prox",
        "g_semantics",
        "g_quantity",
        "g_interaction",
        "pareto",
    ]
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [
                    row["scheme_id"],
                    row["n_regions"],
                    *(repr(float(row[k])) for k in header[2:-1]),
                    row["pareto"],
                ]
            )


def load_objectives_csv(path: str | Path) -> list[dict[str, object]]:
    rows = []
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            parsed: dict[str, object] = {"scheme_id": row["scheme_id"], "pareto": int(row["pareto"])}
            parsed["n_regions"] = int(row["n_regions"])
            for k in ("f_sem", "f_pop", "f_traffic", "f_od", "f_prox", "g_semantics", "g_quantity", "g_interaction"):
                parsed[k] = float(row[k])
            rows.append(parsed)
    return rows


def write_nesting_csv(
    unit_ids: Iterable[str], per_level: Sequence[Mapping[str, int]], path: str | Path
) -> None:
    """Manifest `unit_id,region_l0,region_l1,...` over original units."""
    header = ["unit_id"] + [f"region_l{k}" for k in range(len(per_level))]
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for uid in sorted(unit_ids):
            writer.writerow([uid] + [level[uid] for level in per_level])


def write_error_report(path: str | Path, message: str, issues: Sequence[Mapping] = ()) -> None:
    doc = {"error": message, "issues": list(issues)}
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
