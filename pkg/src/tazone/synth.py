"""Seeded synthetic cities for desk-scale runs and tests.

Geometry is a rectangular grid of square units grouped into blocks, with
minor-road gaps between units and major-road gaps between blocks. Population
follows a polycentric negative-exponential density model, traffic tracks
population with multiplicative noise, semantics come from planted zones, and
OD flows follow a gravity model on unit centroids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from shapely.geometry import Point, Polygon, box

from .errors import ConfigurationError
from .spatial import (
    AttributeField,
    BasicSpatialUnit,
    City,
    InteractionMatrix,
    SemanticField,
)


@dataclass(frozen=True)
class Center:
    """One population center: position, peak density, decay radius."""

    x: float
    y: float
    peak: float
    radius: float

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ConfigurationError("center decay radius must be positive")
        if self.peak < 0:
            raise ConfigurationError("center peak density must be >= 0")


@dataclass(frozen=True)
class SemanticZone:
    """A planted zone: polygon, category, and label purity in (0, 1]."""

    polygon: Polygon
    category: str
    purity: float

    def __post_init__(self) -> None:
        if not (0 < self.purity <= 1):
            raise ConfigurationError("zone purity must lie in (0, 1]")


@dataclass(frozen=True)
class CityConfig:
    # road widths default below the pipeline's 30 m adjacency gap so blocks
    # stay mutually reachable in the unit adjacency relation
    blocks_per_side: int = 3
    units_per_block_side: int = 3
    unit_size: float = 100.0
    road_widths: tuple[float, float] = (25.0, 28.0)  # (minor, major)
    centers: tuple[Center, ...] = ()
    semantic_zones: tuple[SemanticZone, ...] = ()
    od_exponent: float = 2.0
    od_total: float = 10_000.0
    noise: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.blocks_per_side < 2 or self.units_per_block_side < 2:
            raise ConfigurationError("grid dimensions must be >= 2")
        if self.unit_size <= 0 or any(w <= 0 for w in self.road_widths):
            raise ConfigurationError("unit size and road widths must be positive")
        if self.noise < 0:
            raise ConfigurationError("noise amplitude must be >= 0")

    @property
    def block_pitch(self) -> float:
        minor, major = self.road_widths
        inner = self.units_per_block_side * self.unit_size + (self.units_per_block_side - 1) * minor
        return inner + major

    @property
    def block_inner(self) -> float:
        minor, _ = self.road_widths
        return self.units_per_block_side * self.unit_size + (self.units_per_block_side - 1) * minor

    @property
    def extent(self) -> float:
        return self.blocks_per_side * self.block_pitch - self.road_widths[1]


def default_city_config(seed: int = 0, **overrides) -> CityConfig:
    """A polycentric 3x3-block city with three planted semantic quadrant zones."""
    base = CityConfig(seed=seed)
    ext = base.extent
    centers = (
        Center(x=0.25 * ext, y=0.30 * ext, peak=8.0e-3, radius=0.35 * ext),
        Center(x=0.75 * ext, y=0.70 * ext, peak=5.0e-3, radius=0.25 * ext),
    )
    zones = (
        SemanticZone(box(-1.0, -1.0, 0.55 * ext, 0.55 * ext), "residential", 0.9),
        SemanticZone(box(0.55 * ext, -1.0, ext + 1.0, 0.55 * ext), "industrial", 0.9),
        SemanticZone(box(-1.0, 0.55 * ext, ext + 1.0, ext + 1.0), "commercial", 0.9),
    )
    kwargs = dict(seed=seed, centers=centers, semantic_zones=zones)
    kwargs.update(overrides)
    return CityConfig(**{**base.__dict__, **kwargs})


def generate_units(config: CityConfig) -> tuple[tuple[BasicSpatialUnit, ...], tuple[BasicSpatialUnit, ...]]:
    """Unit and block polygons on the road grid; geometry is config-determined."""
    minor, _major = config.road_widths
    bp = config.blocks_per_side
    ups = config.units_per_block_side
    pitch_u = config.unit_size + minor
    units = []
    blocks = []
    for bi in range(bp):
        for bj in range(bp):
            bx = bi * config.block_pitch
            by = bj * config.block_pitch
            block_id = f"b{bi:02d}{bj:02d}"
            blocks.append(
                BasicSpatialUnit(
                    id=block_id,
                    polygon=box(bx, by, bx + config.block_inner, by + config.block_inner),
                    block_id="",
                    level=1,
                )
            )
            for ui in range(ups):
                for uj in range(ups):
                    x0 = bx + ui * pitch_u
                    y0 = by + uj * pitch_u
                    units.append(
                        BasicSpatialUnit(
                            id=f"u{bi:02d}{bj:02d}-{ui:02d}{uj:02d}",
                            polygon=box(x0, y0, x0 + config.unit_size, y0 + config.unit_size),
                            block_id=block_id,
                            level=0,
                        )
                    )
    return tuple(units), tuple(blocks)


def generate_fields(
    config: CityConfig, units: Sequence[BasicSpatialUnit]
) -> tuple[AttributeField, AttributeField, SemanticField]:
    """Population, traffic, and semantics for the given units.

    Population density at a unit centroid is the sum over centers of
    peak * exp(-distance / radius); the unit value is density times area.
    Traffic is population times (1 + noise * N(0, 1)), clipped at zero.
    """
    if not config.centers:
        raise ConfigurationError("city config has no population centers")
    ordered = sorted(units, key=lambda u: u.id)
    pop: dict[str, float] = {}
    for u in ordered:
        cx, cy = u.centroid
        density = sum(
            c.peak * math.exp(-math.hypot(cx - c.x, cy - c.y) / c.radius)
            for c in config.centers
        )
        pop[u.id] = density * u.area

    rng = np.random.default_rng([config.seed, 0])
    eps = rng.standard_normal(len(ordered))
    traffic = {
        u.id: max(0.0, pop[u.id] * (1.0 + config.noise * float(eps[i])))
        for i, u in enumerate(ordered)
    }

    categories: list[str] = []
    for z in config.semantic_zones:
        if z.category not in categories:
            categories.append(z.category)
    if not categories:
        categories = ["generic"]
    rng_sem = np.random.default_rng([config.seed, 1])
    assignment: dict[str, int] = {}
    for u in ordered:
        cx, cy = u.centroid
        zone = next(
            (z for z in config.semantic_zones if z.polygon.covers(Point(cx, cy))),
            None,
        )
        if zone is None:
            assignment[u.id] = int(rng_sem.integers(0, len(categories)))
            continue
        zc = categories.index(zone.category)
        if len(categories) == 1 or rng_sem.random() < zone.purity:
            assignment[u.id] = zc
        else:
            others = [i for i in range(len(categories)) if i != zc]
            assignment[u.id] = others[int(rng_sem.integers(0, len(others)))]

    return (
        AttributeField(name="population", values=pop),
        AttributeField(name="traffic", values=traffic),
        SemanticField(categories=tuple(categories), assignment=assignment),
    )


def generate_od(
    config: CityConfig, units: Sequence[BasicSpatialUnit], population: AttributeField
) -> InteractionMatrix:
    """Gravity-model flows P_a * P_b / d(a, b)^beta on centroid distances,
    rescaled so the total flow equals ``config.od_total``."""
    if config.od_exponent <= 0:
        raise ConfigurationError(f"gravity exponent must be positive, got {config.od_exponent}")
    ordered = sorted(units, key=lambda u: u.id)
    raw: dict[tuple[str, str], float] = {}
    for i, a in enumerate(ordered):
        ax, ay = a.centroid
        for b in ordered[i + 1 :]:
            bx, by = b.centroid
            d = math.hypot(ax - bx, ay - by)
            if d == 0:
                continue
            w = population.values[a.id] * population.values[b.id] / d**config.od_exponent
            if w > 0:
                raw[(a.id, b.id)] = w
    total = sum(raw[p] for p in sorted(raw))
    if total <= 0:
        raise ConfigurationError("gravity model produced no flow; check populations")
    scale = config.od_total / total
    return InteractionMatrix(
        kind="od", entries={p: w * scale for p, w in raw.items()}
    )


def make_city(config: CityConfig) -> City:
    """Generate a complete, validated synthetic city."""
    units, blocks = generate_units(config)
    population, traffic, semantics = generate_fields(config, units)
    od = generate_od(config, units, population)
    city = City(
        units=units,
        blocks=blocks,
        fields={"population": population, "traffic": traffic},
        semantics=semantics,
        od=od,
    )
    city.validate()
    return city
