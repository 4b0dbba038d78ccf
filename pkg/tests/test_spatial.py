import math

import pytest
from shapely.geometry import box

from tazone.errors import ConfigurationError, ConsistencyError, GeometryError
from tazone.spatial import (
    AttributeField,
    BasicSpatialUnit,
    SizeBounds,
    apply_size_constraint,
    compute_adjacency,
    compute_spacing,
    region_adjacency,
)

from conftest import grid_units, sampled_boundary_distance, square_unit


class TestSpacing:
    def test_touching_squares_zero(self):
        a = square_unit("a", 0, 0)
        b = square_unit("b", 1, 0)
        assert compute_spacing(a, b) == 0.0

    def test_axis_aligned_gap(self):
        a = square_unit("a", 0, 0)
        b = square_unit("b", 2, 0)
        assert compute_spacing(a, b) == pytest.approx(1.0, abs=1e-12)

    def test_diagonal_gap_matches_sampling_oracle(self):
        a = square_unit("a", 0, 0)
        b = square_unit("b", 2, 2)
        d = compute_spacing(a, b)
        assert d == pytest.approx(math.sqrt(2), abs=1e-9)
        oracle = sampled_boundary_distance(a.polygon, b.polygon, step=1e-3)
        assert d == pytest.approx(oracle, abs=1e-2)

    def test_symmetry_and_nonnegativity(self, rng):
        for _ in range(20):
            x, y = rng.uniform(0, 10, 2)
            a = square_unit("a", 0, 0, 2.0)
            b = square_unit("b", 2 + x, y)
            assert compute_spacing(a, b) == compute_spacing(b, a)
            assert compute_spacing(a, b) >= 0

    def test_zero_iff_touching(self):
        touching = square_unit("b", 1, 0.5)
        apart = square_unit("c", 1.25, 0)
        a = square_unit("a", 0, 0)
        assert compute_spacing(a, touching) == 0.0
        assert a.polygon.touches(touching.polygon)
        assert compute_spacing(a, apart) > 0.0

    def test_overlap_is_an_error(self):
        a = square_unit("a", 0, 0, 2.0)
        b = square_unit("b", 1, 1, 2.0)
        with pytest.raises(GeometryError, match="overlap"):
            compute_spacing(a, b)


class TestAdjacency:
    def test_touching_pair_adjacent(self):
        units = [square_unit("a", 0, 0), square_unit("b", 1, 0)]
        adj = compute_adjacency(units, 5.0)
        assert ("a", "b") in adj and len(adj) == 1

    def test_corridor_separates(self):
        units = [square_unit("a", 0, 0), square_unit("b", 11, 0)]
        adj = compute_adjacency(units, 5.0)
        assert len(adj) == 0

    def test_grid_rook_pairs_match_bruteforce(self):
        units = grid_units(3, size=100.0, road=20.0)
        adj = compute_adjacency(units, 25.0)

        def box_distance(u, v):
            ax0, ay0, ax1, ay1 = u.polygon.bounds
            bx0, by0, bx1, by1 = v.polygon.bounds
            dx = max(0.0, max(ax0, bx0) - min(ax1, bx1))
            dy = max(0.0, max(ay0, by0) - min(ay1, by1))
            return math.hypot(dx, dy)

        expected = set()
        for i, u in enumerate(units):
            for v in units[i + 1 :]:
                if box_distance(u, v) <= 25.0:
                    expected.add(tuple(sorted((u.id, v.id))))
        assert len(expected) == 12
        assert set(adj.pairs) == expected

    def test_monotone_in_threshold(self):
        units = grid_units(3, size=100.0, road=20.0)
        small = compute_adjacency(units, 21.0)
        large = compute_adjacency(units, 30.0)
        assert set(small.pairs) <= set(large.pairs)

    def test_bad_threshold(self):
        with pytest.raises(ConfigurationError):
            compute_adjacency([square_unit("a", 0, 0)], 0.0)


def _field(values):
    return {"mass": AttributeField(name="mass", values=values)}


class TestSizeConstraint:
    def test_oversized_becomes_singleton(self):
        units = [
            square_unit("a", 0, 0, math.sqrt(5)),
            square_unit("b", 3, 0, math.sqrt(7)),
            square_unit("c", 7, 0, math.sqrt(20)),
        ]
        adj = compute_adjacency(units, 10.0)
        res = apply_size_constraint(
            units, _field({"a": 1, "b": 2, "c": 3}), SizeBounds(1, 10), adj
        )
        assert sorted(u.id for u in res.eligible) == ["a", "b"]
        assert [u.id for u in res.singletons] == ["c"]
        assert res.absorbed == {}

    def test_undersized_absorbed_into_nearest(self):
        units = [
            square_unit("small", 0, 0, math.sqrt(0.5)),
            square_unit("host", 1, 0, math.sqrt(5)),
        ]
        adj = compute_adjacency(units, 5.0)
        res = apply_size_constraint(
            units, _field({"small": 1.0, "host": 2.0}), SizeBounds(1, 10), adj
        )
        assert res.absorbed == {"small": "host"}
        (merged,) = res.eligible
        assert merged.id == "host"
        assert merged.area == pytest.approx(5.5, rel=1e-9)
        assert res.fields["mass"].values["host"] == pytest.approx(3.0)
        assert res.members["host"] == ("host", "small")

    def test_identity_when_all_within_bounds(self):
        units = [square_unit("a", 0, 0, 2.0), square_unit("b", 3, 0, 2.0)]
        adj = compute_adjacency(units, 5.0)
        res = apply_size_constraint(units, _field({"a": 1, "b": 1}), SizeBounds(1, 10), adj)
        assert sorted(u.id for u in res.eligible) == ["a", "b"]
        assert not res.singletons and not res.absorbed

    def test_undersized_without_neighbor_is_singleton_with_warning(self):
        units = [
            square_unit("lonely", 0, 0, math.sqrt(0.5)),
            square_unit("far", 50, 0, 2.0),
        ]
        adj = compute_adjacency(units, 5.0)
        res = apply_size_constraint(units, _field({"lonely": 1, "far": 1}), SizeBounds(1, 10), adj)
        assert [u.id for u in res.singletons] == ["lonely"]
        assert any("lonely" in w for w in res.warnings)

    def test_singleton_policy_keeps_undersized_separate(self):
        units = [
            square_unit("small", 0, 0, math.sqrt(0.5)),
            square_unit("host", 1, 0, math.sqrt(5)),
        ]
        adj = compute_adjacency(units, 5.0)
        res = apply_size_constraint(
            units, _field({"small": 1, "host": 2}), SizeBounds(1, 10), adj,
            undersized_policy="singleton",
        )
        assert res.absorbed == {}
        assert [u.id for u in res.singletons] == ["small"]

    def test_mass_conservation_and_coverage(self, rng):
        for _ in range(10):
            n = int(rng.integers(4, 8))
            units = []
            values = {}
            for k in range(n):
                side = float(rng.uniform(0.5, 4.0))
                units.append(square_unit(f"u{k}", 5.0 * k, 0, side))
                values[f"u{k}"] = float(rng.uniform(0, 100))
            adj = compute_adjacency(units, 6.0)
            res = apply_size_constraint(units, _field(values), SizeBounds(1, 10), adj)
            kept = res.fields["mass"]
            assert sum(kept.values.values()) == pytest.approx(sum(values.values()), rel=1e-9)
            eligible = {u.id for u in res.eligible}
            singles = {u.id for u in res.singletons}
            absorbed = set(res.absorbed)
            assert eligible | singles | absorbed == {u.id for u in units}
            assert not (eligible & singles) and not (eligible & absorbed) and not (singles & absorbed)


class TestRegionAdjacency:
    def test_two_regions_touching_pair(self):
        units = [square_unit("a", 0, 0), square_unit("b", 1, 0)]
        adj = compute_adjacency(units, 5.0)
        assert region_adjacency({"a": 0, "b": 1}, adj) == frozenset({(0, 1)})

    def test_single_region_empty_relation(self):
        units = [square_unit("a", 0, 0), square_unit("b", 1, 0)]
        adj = compute_adjacency(units, 5.0)
        assert region_adjacency({"a": 0, "b": 0}, adj) == frozenset()

    def test_three_regions_on_path(self):
        units = [square_unit("a", 0, 0), square_unit("b", 1.5, 0), square_unit("c", 3.0, 0)]
        adj = compute_adjacency(units, 0.6)
        rel = region_adjacency({"a": 0, "b": 1, "c": 2}, adj)
        assert rel == frozenset({(0, 1), (1, 2)})

    def test_unknown_unit_errors(self):
        units = [square_unit("a", 0, 0)]
        adj = compute_adjacency(units, 5.0)
        with pytest.raises(ConsistencyError):
            region_adjacency({"a": 0, "ghost": 1}, adj)


class TestUnitInvariants:
    def test_cached_area_validated(self):
        with pytest.raises(GeometryError, match="area"):
            BasicSpatialUnit(id="x", polygon=box(0, 0, 1, 1), area=2.0)

    def test_zero_area_rejected(self):
        from shapely.geometry import Polygon

        with pytest.raises(GeometryError):
            BasicSpatialUnit(id="x", polygon=Polygon([(0, 0), (1, 0), (0, 0)]))

    def test_self_intersection_rejected(self):
        from shapely.geometry import Polygon

        bowtie = Polygon([(0, 0), (1, 1), (1, 0), (0, 1)])
        with pytest.raises(GeometryError):
            BasicSpatialUnit(id="x", polygon=bowtie)

    def test_negative_attribute_rejected(self):
        from tazone.errors import IngestionError

        with pytest.raises(IngestionError):
            AttributeField(name="pop", values={"a": -1.0})

    def test_missing_attribute_is_ingestion_error(self):
        from tazone.errors import IngestionError

        f = AttributeField(name="pop", values={"a": 1.0})
        with pytest.raises(IngestionError):
            f.require_complete(["a", "b"])
