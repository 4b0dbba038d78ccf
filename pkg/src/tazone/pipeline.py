"""End-to-end pipeline: ingest -> size filter -> graphs -> detection ->
kernel extension -> evaluation, plus parameter sweeps and the three
multilevel modes."""

from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields as dc_fields, replace
from pathlib import Path
from statistics import median
from typing import Mapping, Sequence

from . import io as tio
from . import report as trep
from .community import (
    HardPartition,
    MembershipTable,
    SweepRecord,
    default_resolution_grid,
    detect_characteristic_scales,
    ensemble_membership,
    resolution_sweep,
)
from .errors import ConfigurationError, TazoneError
from .graphs import (
    InteractionGraph,
    LayerWeights,
    aggregate_layers,
    build_attribute_similarity_graph,
    build_od_graph,
    build_proximity_graph,
)
from .objectives import (
    GROUP_AXES,
    SCENARIOS,
    EvaluationInputs,
    ObjectiveVector,
    evaluate,
    pareto_front,
    select_scenario,
)
from .regions import (
    ExtensionResult,
    PartitionScheme,
    aggregate_scheme_to_city,
    extend_kernels,
    multilevel_method2,
    relabel_regions,
    split_kernel_marginal,
)
from .spatial import (
    Adjacency,
    City,
    SizeBounds,
    SizeFilterResult,
    apply_size_constraint,
    compute_adjacency,
)
from .synth import CityConfig, default_city_config, make_city

SWEEPABLE_KEYS = (
    "resolution",
    "membership_threshold",
    "w_od",
    "w_proximity",
    "w_attribute",
    "sigma",
    "gap_threshold",
    "a_min",
    "a_max",
    "n_runs",
)


@dataclass(frozen=True)
class PipelineConfig:
    """Flat, file-serializable parameter set for every pipeline mode."""

    # input: exactly one of (units path [+ od path], synth)
    units: str | None = None
    od: str | None = None
    synth: bool = False
    synth_blocks_per_side: int = 3
    synth_units_per_block_side: int = 3
    synth_unit_size: float = 100.0
    synth_minor_road: float = 25.0
    synth_major_road: float = 28.0
    synth_od_exponent: float = 2.0
    synth_od_total: float = 10_000.0
    synth_noise: float = 0.1
    # geometry / size constraint
    gap_threshold: float = 30.0
    a_min: float = 1_000.0
    a_max: float = 1_000_000.0
    undersized_policy: str = "absorb"
    # graph layers
    w_od: float = 1.0
    w_proximity: float = 1.0
    w_attribute: float = 0.0
    sigma: float | None = None  # None: median spacing over adjacent pairs
    bandwidths: Mapping[str, float] | None = None  # None: per-field density std
    # detection
    resolution: float = 1.0
    n_runs: int = 8
    membership_threshold: float = 0.6
    # resolution sweep / scales
    resolutions: Sequence[float] | None = None
    resolution_min: float = 0.05
    resolution_max: float = 20.0
    resolution_steps: int = 40
    stability_tol: float = 0.1
    min_span: float = math.log(1.5)
    # evaluation / reporting
    population_field: str = "population"
    traffic_field: str = "traffic"
    scenario: str = "user_coverage"
    region_bands: Sequence[int] = (50, 100, 300)
    figures: bool = True
    # sweeps / multilevel
    sweep: Mapping[str, Sequence[object]] = field(default_factory=dict)
    method: int = 2
    levels: int = 2
    method1_resolution: float | None = None
    # run control
    out: str = "out"
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        has_files = self.units is not None
        if has_files == self.synth:
            raise ConfigurationError(
                "exactly one of a units path or synth=true must be configured"
            )
        if has_files and self.od is None:
            raise ConfigurationError("an od path is required with a units path")
        if self.scenario not in SCENARIOS:
            raise ConfigurationError(f"unknown scenario {self.scenario!r}")
        if self.method not in (1, 2, 3):
            raise ConfigurationError(f"method must be 1, 2, or 3, got {self.method}")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        if self.seed < 0:
            raise ConfigurationError("seed must be >= 0")
        if self.levels < 2:
            raise ConfigurationError("multilevel runs need levels >= 2")
        for key in self.sweep:
            if key not in SWEEPABLE_KEYS:
                raise ConfigurationError(
                    f"cannot sweep {key!r}; sweepable keys: {SWEEPABLE_KEYS}"
                )

    @classmethod
    def from_dict(cls, raw: Mapping[str, object]) -> "PipelineConfig":
        known = {f.name for f in dc_fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigurationError(f"unknown config keys: {unknown}")
        return cls(**raw)

    def to_dict(self) -> dict:
        out = {}
        for f in dc_fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = list(v)
            elif isinstance(v, Mapping):
                v = dict(v)
            out[f.name] = v
        return out

    def city_config(self) -> CityConfig:
        return default_city_config(
            seed=self.seed,
            blocks_per_side=self.synth_blocks_per_side,
            units_per_block_side=self.synth_units_per_block_side,
            unit_size=self.synth_unit_size,
            road_widths=(self.synth_minor_road, self.synth_major_road),
            od_exponent=self.synth_od_exponent,
            od_total=self.synth_od_total,
            noise=self.synth_noise,
        )

    def resolution_grid(self) -> list[float]:
        if self.resolutions is not None:
            grid = [float(r) for r in self.resolutions]
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ConfigurationError("explicit resolutions must be strictly increasing")
            return grid
        return default_resolution_grid(
            self.resolution_min, self.resolution_max, self.resolution_steps
        )


def load_config(path: str | Path) -> PipelineConfig:
    import yaml

    raw = yaml.safe_load(Path(path).read_text())
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigurationError(f"config file {path} must hold a mapping of keys")
    return PipelineConfig.from_dict(raw)


def load_city(config: PipelineConfig) -> City:
    if config.synth:
        return make_city(config.city_config())
    city = tio.load_units_geojson(config.units)
    od = tio.load_od_csv(config.od)
    city = City(
        units=city.units,
        blocks=city.blocks,
        fields=city.fields,
        semantics=city.semantics,
        od=od,
    )
    city.validate()
    return city


# ---------------------------------------------------------------------------
# core pipeline
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Prepared:
    """Everything that depends on geometry and layer parameters only."""

    city: City
    adjacency: Adjacency            # over original level-0 units
    size_filter: SizeFilterResult
    post_adjacency: Adjacency       # over the post-filter universe
    od_graph: InteractionGraph      # over the post-filter universe
    proximity_graph: InteractionGraph
    detection_graph: InteractionGraph  # aggregate restricted to eligible units
    sigma: float
    bandwidths: Mapping[str, float]


def prepare(city: City, config: PipelineConfig, apply_size: bool = True) -> Prepared:
    if city.od is None:
        raise ConfigurationError("pipeline requires an interaction (od) matrix")
    for name in (config.population_field, config.traffic_field):
        if name not in city.fields:
            raise ConfigurationError(f"city has no attribute field {name!r}")

    adjacency = compute_adjacency(city.units, config.gap_threshold)
    bounds = SizeBounds(a_min=config.a_min, a_max=config.a_max)
    if apply_size:
        sf = apply_size_constraint(
            city.units, city.fields, bounds, adjacency, config.undersized_policy
        )
    else:
        sf = SizeFilterResult(
            eligible=tuple(city.units),
            singletons=(),
            absorbed={},
            fields=dict(city.fields),
            members={u.id: (u.id,) for u in city.units},
            warnings=(),
        )
    post_units = sf.assignable_units()
    post_ids = [u.id for u in post_units]
    post_adjacency = compute_adjacency(post_units, config.gap_threshold)

    od = city.od.remap(sf.absorbed)
    od_graph = build_od_graph(od, post_ids, known_ids=post_ids)

    sigma = config.sigma
    if sigma is None:
        positive = sorted(
            s for s in (post_adjacency.spacing[p] for p in post_adjacency.pairs) if s > 0
        )
        # all-touching tilings have no positive spacing; any sigma then gives
        # weight exp(0) = 1 on every edge
        sigma = float(median(positive)) if positive else 1.0
    proximity_graph = build_proximity_graph(post_units, post_adjacency, sigma)

    eligible_ids = [u.id for u in sf.eligible]
    eligible_by_id = {u.id: u for u in sf.eligible}
    bandwidths = dict(config.bandwidths) if config.bandwidths else {}
    for name in sorted(sf.fields):
        if name in bandwidths:
            continue
        dens = [
            sf.fields[name].values[uid] / eligible_by_id[uid].area
            for uid in sorted(eligible_by_id)
        ]
        if dens:
            mu = sum(dens) / len(dens)
            sd = math.sqrt(sum((d - mu) ** 2 for d in dens) / len(dens))
        else:
            sd = 0.0
        bandwidths[name] = sd if sd > 0 else 1.0
    attribute_graph = build_attribute_similarity_graph(
        sf.fields, post_units, post_adjacency, bandwidths
    )

    weights = LayerWeights(
        {
            "od": config.w_od,
            "proximity": config.w_proximity,
            "attribute_similarity": config.w_attribute,
        }
    )
    aggregate = aggregate_layers([od_graph, proximity_graph, attribute_graph], weights)
    detection_graph = aggregate.subgraph(eligible_ids) if eligible_ids else aggregate

    return Prepared(
        city=city,
        adjacency=adjacency,
        size_filter=sf,
        post_adjacency=post_adjacency,
        od_graph=od_graph,
        proximity_graph=proximity_graph,
        detection_graph=detection_graph,
        sigma=sigma,
        bandwidths=bandwidths,
    )


@dataclass(frozen=True)
class CoreResult:
    prepared: Prepared
    membership: MembershipTable
    consensus: HardPartition | None
    extension: ExtensionResult | None
    scheme: PartitionScheme            # over the post-filter universe
    original_assignment: dict[str, int]  # over original level-0 units
    params: dict[str, object]

    @property
    def diagnostics(self) -> tuple[str, ...]:
        ext = self.extension.diagnostics if self.extension else ()
        return tuple(self.prepared.size_filter.warnings) + tuple(ext)

    def eval_scheme(self) -> PartitionScheme:
        return PartitionScheme(
            assignment=self.original_assignment,
            params=self.params,
            level=self.scheme.level,
        )


def theta(config: PipelineConfig, resolution: float, level: int, sigma: float) -> dict[str, object]:
    """The provenance parameter set recorded on every scheme."""
    return {
        "resolution": resolution,
        "membership_threshold": config.membership_threshold,
        "w_od": config.w_od,
        "w_proximity": config.w_proximity,
        "w_attribute": config.w_attribute,
        "sigma": sigma,
        "gap_threshold": config.gap_threshold,
        "a_min": config.a_min,
        "a_max": config.a_max,
        "n_runs": config.n_runs,
        "seed": config.seed,
        "level": level,
    }


def detect_and_extend(
    prepared: Prepared,
    config: PipelineConfig,
    resolution: float | None = None,
    level: int = 0,
) -> CoreResult:
    resolution = config.resolution if resolution is None else resolution
    sf = prepared.size_filter
    eligible = {u.id: u for u in sf.eligible}

    if eligible:
        membership, consensus = ensemble_membership(
            prepared.detection_graph,
            resolution,
            n_runs=config.n_runs,
            seed=config.seed,
        )
        split = split_kernel_marginal(membership, config.membership_threshold)
        extension = extend_kernels(
            split, eligible, sf.fields, prepared.post_adjacency
        )
        assignment = dict(extension.scheme.assignment)
    else:
        membership = MembershipTable(memberships={})
        consensus = None
        extension = None
        assignment = {}

    next_rid = (max(assignment.values()) + 1) if assignment else 0
    for u in sf.singletons:
        assignment[u.id] = next_rid
        next_rid += 1
    assignment = relabel_regions(assignment)

    params = theta(config, resolution, level, prepared.sigma)
    scheme = PartitionScheme(assignment=assignment, params=params, level=level)

    original_assignment = {}
    for post_id, rid in assignment.items():
        for orig in sf.original_of(post_id):
            original_assignment[orig] = rid

    return CoreResult(
        prepared=prepared,
        membership=membership,
        consensus=consensus,
        extension=extension,
        scheme=scheme,
        original_assignment=original_assignment,
        params=params,
    )


def core_partition(city: City, config: PipelineConfig, apply_size: bool = True) -> CoreResult:
    return detect_and_extend(prepare(city, config, apply_size), config)


def evaluation_inputs(prepared: Prepared, config: PipelineConfig) -> EvaluationInputs:
    city = prepared.city
    return EvaluationInputs(
        units=city.units_by_id(),
        semantics=city.semantics,
        population=city.fields[config.population_field],
        traffic=city.fields[config.traffic_field],
        adjacency=prepared.adjacency,
        od_graph=prepared.od_graph,
        proximity_graph=prepared.proximity_graph,
    )


def evaluate_core(core: CoreResult, config: PipelineConfig) -> ObjectiveVector:
    return evaluate(core.eval_scheme(), evaluation_inputs(core.prepared, config))


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunReport:
    core: CoreResult
    vector: ObjectiveVector
    out_dir: Path


def run_pipeline(config: PipelineConfig) -> RunReport:
    """Single end-to-end run; writes partition files, objectives, and report."""
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    city = load_city(config)
    core = core_partition(city, config)
    vector = evaluate_core(core, config)

    tio.write_partition_geojson(city, core.original_assignment, 0, out / "partition.geojson")
    tio.write_partition_csv(core.original_assignment, 0, out / "partition.csv")
    row = {"scheme_id": "run", "n_regions": vector.n_regions, "pareto": 1, **vector.as_row()}
    tio.write_objectives_csv([row], out / "objectives.csv")

    diag = list(core.diagnostics)
    trep.write_report(
        out / "report.txt",
        [
            ("Partition run", [
                f"units          : {len(city.units)}",
                f"eligible       : {len(core.prepared.size_filter.eligible)}",
                f"singletons     : {len(core.prepared.size_filter.singletons)}",
                f"absorbed       : {len(core.prepared.size_filter.absorbed)}",
                *trep.objective_lines(vector),
            ]),
            ("Parameters", trep.params_lines(core.params)),
            ("Diagnostics", diag or ["none"]),
        ],
    )
    return RunReport(core=core, vector=vector, out_dir=out)


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def sweep_combinations(config: PipelineConfig) -> list[dict[str, object]]:
    """Cartesian product of the configured sweep lists; defaults to the
    resolution grid when no sweep section is configured."""
    grid = {k: list(v) for k, v in sorted(config.sweep.items())}
    if not grid:
        grid = {"resolution": config.resolution_grid()}
    for key, values in grid.items():
        if not values:
            raise ConfigurationError(f"sweep key {key!r} has an empty value list")
    keys = sorted(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def _apply_combo(config: PipelineConfig, combo: Mapping[str, object]) -> PipelineConfig:
    clean = {k: (int(v) if k == "n_runs" else float(v)) for k, v in combo.items()}
    return replace(config, **clean)


def evaluate_combo(config_dict: dict, combo: dict) -> dict:
    """Worker entry point: one sweep grid point, evaluated in isolation."""
    config = PipelineConfig.from_dict(config_dict)
    cfg = _apply_combo(config, combo)
    city = load_city(cfg)
    core = core_partition(city, cfg)
    vector = evaluate_core(core, cfg)
    return {"combo": dict(combo), "vector": vector, "error": None}


def _evaluate_combo_safe(config_dict: dict, combo: dict) -> dict:
    try:
        return evaluate_combo(config_dict, combo)
    except TazoneError as exc:
        return {"combo": dict(combo), "vector": None, "error": f"{type(exc).__name__}: {exc}"}


@dataclass(frozen=True)
class SweepReport:
    vectors: list[ObjectiveVector]
    flags: list[bool]
    failures: list[dict]
    records: list[SweepRecord]
    scales: list
    out_dir: Path


def run_sweep(config: PipelineConfig) -> SweepReport:
    """Evaluate every parameter combination, flag the Pareto front, detect
    characteristic scales from a resolution sweep, and render the figures."""
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    combos = sweep_combinations(config)

    config_dict = config.to_dict()
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(
                pool.map(_evaluate_combo_safe, [config_dict] * len(combos), combos)
            )
    else:
        results = [_evaluate_combo_safe(config_dict, combo) for combo in combos]

    succeeded = [(i, r["vector"]) for i, r in enumerate(results) if r["error"] is None]
    failures = [
        {"scheme_id": f"s{i:04d}", "combo": results[i]["combo"], "error": results[i]["error"]}
        for i, r in enumerate(results)
        if r["error"] is not None
    ]
    if not succeeded:
        raise TazoneError(
            f"all {len(combos)} sweep combinations failed; first error: "
            f"{failures[0]['error'] if failures else 'none'}"
        )

    vectors = [v for _, v in succeeded]
    front = pareto_front(vectors, GROUP_AXES)
    front_ids = {id(v) for v in front}
    flags = [id(v) in front_ids for v in vectors]

    rows = []
    for (i, v), flag in zip(succeeded, flags):
        rows.append(
            {
                "scheme_id": f"s{i:04d}",
                "n_regions": v.n_regions,
                "pareto": int(flag),
                **v.as_row(),
            }
        )
    tio.write_objectives_csv(rows, out / "objectives.csv")

    # Characteristic scales from a resolution sweep at the base parameters.
    city = load_city(config)
    prepared = prepare(city, config)
    records = resolution_sweep(
        prepared.detection_graph,
        config.resolution_grid(),
        seed=config.seed,
        n_runs=config.n_runs,
    )
    scales = detect_characteristic_scales(records, config.stability_tol, config.min_span)
    tio.write_sweep_csv(records, out / "sweep.csv")
    tio.write_scales_csv(scales, out / "scales.csv")

    if config.figures:
        trep.render_sweep_figure(records, scales, out / "sweep.png")
        trep.render_pareto_figure(vectors, flags, out / "pareto.png")

    # Report: Pareto summary, band grouping, scenario picks, scales, failures.
    bands: dict[str, list[str]] = {}
    for row in rows:
        bands.setdefault(trep.band_label(row["n_regions"], config.region_bands), []).append(
            row["scheme_id"]
        )
    band_lines = [
        f"{label}: {len(ids)} scheme(s): {', '.join(ids)}" for label, ids in sorted(bands.items())
    ]
    scenario_lines = []
    for scen in sorted(SCENARIOS):
        pick = select_scenario(front, scen)
        pick_idx = next(i for (i, v) in succeeded if v is pick)
        scenario_lines.append(
            f"{scen:22s} -> s{pick_idx:04d} (regions={pick.n_regions}, "
            f"f_sem={pick.f_sem:.3f}, f_pop={pick.f_pop:.3f}, f_od={pick.f_od:.3f})"
        )
    scale_lines = [
        f"{s.label:13s} resolution [{s.resolution_low:.4g}, {s.resolution_high:.4g}] "
        f"~{s.stable_count} regions"
        for s in scales
    ] or ["none detected"]
    failure_lines = [
        f"{f['scheme_id']}: {f['combo']} -> {f['error']}" for f in failures
    ] or ["none"]
    trep.write_report(
        out / "report.txt",
        [
            ("Sweep", [
                f"combinations   : {len(combos)}",
                f"succeeded      : {len(vectors)}",
                f"failed         : {len(failures)}",
                f"pareto members : {sum(flags)}",
            ]),
            ("Region-count bands", band_lines),
            ("Scenario selections", scenario_lines),
            ("Characteristic scales", scale_lines),
            ("Failures", failure_lines),
        ],
    )
    return SweepReport(
        vectors=vectors, flags=flags, failures=failures, records=records,
        scales=scales, out_dir=out,
    )


# ---------------------------------------------------------------------------
# multilevel
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MultilevelReport:
    levels: list[dict]            # per level: assignment over original units + params
    nested: bool | None           # None when nesting is not asserted (method 3)
    out_dir: Path
    notices: list[str]


def check_nesting(per_level: Sequence[Mapping[str, int]]) -> bool:
    """True when each level's region is a function of the previous level's."""
    for parent, child in zip(per_level, per_level[1:]):
        seen: dict[int, int] = {}
        for uid, rid in parent.items():
            crid = child[uid]
            if rid in seen and seen[rid] != crid:
                return False
            seen[rid] = crid
    return True


def multilevel_method1(city: City, config: PipelineConfig) -> tuple[list[dict], list[str]]:
    """Re-detect on aggregated regions, level by level.

    ``assignment`` always maps the ORIGINAL units; ``local`` maps the current
    level's aggregated units and drives the next aggregation step.
    """
    notices: list[str] = []
    core = core_partition(city, config)
    mapping = dict(core.original_assignment)   # original unit -> current region
    local = dict(core.original_assignment)     # current city's unit -> region
    levels: list[dict] = [{"assignment": mapping, "params": core.params}]
    current_city = city
    for level in range(1, config.levels):
        n_regions = len(set(mapping.values()))
        if n_regions < 3:
            notices.append(
                f"level {level}: only {n_regions} region(s); nothing to aggregate, stopping"
            )
            break
        agg_city, unit_to_region = aggregate_scheme_to_city(
            current_city, local, levels[-1]["params"]
        )
        core = detect_and_extend(
            prepare(agg_city, config, apply_size=False),
            config,
            config.method1_resolution,
            level,
        )
        # compose: original unit -> previous region -> aggregated unit -> new region
        region_to_new_unit = {rid: nid for nid, rid in unit_to_region.items()}
        mapping = {
            uid: core.original_assignment[region_to_new_unit[rid]]
            for uid, rid in mapping.items()
        }
        local = dict(core.original_assignment)
        levels.append({"assignment": mapping, "params": core.params})
        current_city = agg_city
    return levels, notices


def run_multilevel(config: PipelineConfig, method: int | None = None) -> MultilevelReport:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    method = config.method if method is None else method
    if method not in (1, 2, 3):
        raise ConfigurationError(f"method must be 1, 2, or 3, got {method}")
    city = load_city(config)
    notices: list[str] = []

    if method == 1:
        levels, notices = multilevel_method1(city, config)
        nested: bool | None = check_nesting([l["assignment"] for l in levels])
    elif method == 2:
        if not city.blocks:
            raise ConfigurationError("method 2 requires a block hierarchy")
        schemes = multilevel_method2(city)
        levels = [
            {"assignment": dict(s.assignment), "params": dict(s.params)} for s in schemes
        ]
        nested = check_nesting([l["assignment"] for l in levels])
    else:
        prepared = prepare(city, config)
        records = resolution_sweep(
            prepared.detection_graph,
            config.resolution_grid(),
            seed=config.seed,
            n_runs=config.n_runs,
        )
        scales = detect_characteristic_scales(records, config.stability_tol, config.min_span)
        if not scales:
            raise TazoneError("no characteristic scales detected; cannot run method 3")
        levels = []
        # coarse scales first: lowest resolution produces the fewest regions
        for k, scale in enumerate(scales):
            resolution = math.sqrt(scale.resolution_low * scale.resolution_high)
            core = detect_and_extend(prepared, config, resolution, level=k)
            params = dict(core.params)
            params.update(
                {
                    "scale_label": scale.label,
                    "scale_low": scale.resolution_low,
                    "scale_high": scale.resolution_high,
                }
            )
            levels.append({"assignment": dict(core.original_assignment), "params": params})
        nested = None

    per_level = [l["assignment"] for l in levels]
    if method in (1, 2) and not nested:
        raise TazoneError(f"method {method} produced a non-nested hierarchy")

    for k, level in enumerate(levels):
        tio.write_partition_csv(level["assignment"], k, out / f"partition_l{k}.csv")
        tio.write_partition_geojson(city, level["assignment"], k, out / f"partition_l{k}.geojson")
    tio.write_nesting_csv(city.unit_ids(), per_level, out / "nesting.csv")
    (out / "levels.json").write_text(
        json.dumps(
            [
                {"level": k, "n_regions": len(set(l["assignment"].values())), "params": l["params"]}
                for k, l in enumerate(levels)
            ],
            sort_keys=True,
            indent=2,
        )
        + "\n"
    )
    trep.write_report(
        out / "report.txt",
        [
            ("Multilevel run", [
                f"method         : {method}",
                f"levels         : {len(levels)}",
                f"regions/level  : {[len(set(l['assignment'].values())) for l in levels]}",
                f"nested         : {'n/a (method 3)' if nested is None else nested}",
            ]),
            ("Notices", notices or ["none"]),
        ],
    )
    return MultilevelReport(levels=levels, nested=nested, out_dir=out, notices=notices)
