import io
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from safeguard.errors import EmptyIndex, InvalidCoordinates, InvalidValue, UnreadableFile
from safeguard import geo
from safeguard.geo import (
    EARTH_RADIUS_M,
    GeoPoint,
    GeoService,
    Poi,
    SpatialIndex,
    haversine,
    read_pois_csv,
)

# Frozen before the implementation: spherical-law-of-cosines distance
# Dhaka (23.8103, 90.4125) -> Sylhet (24.8949, 91.8687) on R = 6,371,000 m,
# cross-checked against the sphere Vincenty formula (agreement 2e-8 m).
DHAKA = (23.8103, 90.4125)
SYLHET = (24.8949, 91.8687)
DHAKA_SYLHET_M = 190536.8456


def brute_force_nearby(pois, center, category, k, radius_m):
    """Independent full-scan oracle; shares only the distance kernel."""
    rows = []
    for poi in pois:
        if category is not None and poi.category != category:
            continue
        d = haversine(center, poi.location)
        if d <= radius_m:
            rows.append((d, poi.id, poi))
    rows.sort(key=lambda t: (t[0], t[1]))
    return [(poi, d) for d, _, poi in rows[:k]]


def random_pois(rng, n, lat_range=(23.0, 25.0), lon_range=(90.0, 92.0)):
    cats = ["hospital", "police", "fire"]
    return [
        Poi(
            f"p{i:05d}",
            f"place {i}",
            rng.choice(cats),
            GeoPoint(rng.uniform(*lat_range), rng.uniform(*lon_range)),
        )
        for i in range(n)
    ]


class TestGeoPoint:
    def test_bounds_enforced(self):
        for lat in [-90.1, 90.1, 123, float("nan")]:
            with pytest.raises(InvalidCoordinates):
                GeoPoint(lat, 0)

    def test_lon_normalized_into_half_open_range(self):
        assert GeoPoint(0, 180).lon == 180.0
        assert GeoPoint(0, -180).lon == 180.0
        assert GeoPoint(0, 190).lon == -170.0
        assert GeoPoint(0, 540).lon == 180.0
        assert GeoPoint(0, -170.5).lon == -170.5

    def test_poles_allowed(self):
        assert GeoPoint(90, 0).lat == 90.0
        assert GeoPoint(-90, 0).lat == -90.0


class TestHaversine:
    def test_identity_is_zero(self):
        p = GeoPoint(*DHAKA)
        assert haversine(p, p) == 0.0

    def test_antipodal_is_half_circumference(self):
        d = haversine(GeoPoint(0, 0), GeoPoint(0, 180))
        assert d == pytest.approx(math.pi * EARTH_RADIUS_M, abs=1e-6)

    def test_dhaka_sylhet_matches_precomputed_oracle(self):
        d = haversine(GeoPoint(*DHAKA), GeoPoint(*SYLHET))
        assert abs(d - DHAKA_SYLHET_M) <= 0.5

    def test_one_degree_latitude_arc(self):
        d = haversine(GeoPoint(10, 20), GeoPoint(11, 20))
        assert d == pytest.approx(EARTH_RADIUS_M * math.pi / 180, rel=1e-12)

    @settings(max_examples=300, deadline=None)
    @given(
        st.floats(-90, 90), st.floats(-179.999, 180),
        st.floats(-90, 90), st.floats(-179.999, 180),
    )
    def test_symmetry(self, lat1, lon1, lat2, lon2):
        a, b = GeoPoint(lat1, lon1), GeoPoint(lat2, lon2)
        assert haversine(a, b) == haversine(b, a)
        assert haversine(a, b) >= 0.0

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.tuples(st.floats(-89, 89), st.floats(-179, 179)), min_size=3, max_size=3))
    def test_triangle_inequality(self, pts):
        a, b, c = (GeoPoint(lat, lon) for lat, lon in pts)
        ab, bc, ac = haversine(a, b), haversine(b, c), haversine(a, c)
        assert ac <= ab + bc + 1e-6 * max(1.0, ac)

    def test_kernels_agree(self):
        from safeguard import _geokernel_py as pure
        if geo.kernel_name() == "pure":
            pytest.skip("compiled kernel not built")
        from safeguard import _geokernel as compiled
        rng = random.Random(5)
        for _ in range(2000):
            args = (rng.uniform(-90, 90), rng.uniform(-180, 180),
                    rng.uniform(-90, 90), rng.uniform(-180, 180))
            dc = compiled.haversine_m(*args)
            dp = pure.haversine_m(*args)
            assert dp == pytest.approx(dc, rel=1e-12, abs=1e-9)

    def test_batch_matches_scalar(self):
        rng = random.Random(6)
        lats = [rng.uniform(-90, 90) for _ in range(100)]
        lons = [rng.uniform(-180, 180) for _ in range(100)]
        center = GeoPoint(10, 10)
        batch = geo.haversine_many(center, lats, lons)
        for i in range(100):
            assert batch[i] == haversine(center, GeoPoint(lats[i], lons[i]))


class TestIngest:
    def test_happy_path(self):
        svc = GeoService()
        csv_text = (
            "id,name,category,lat,lon\n"
            "h1,City Hospital,hospital,23.81,90.41\n"
            "p1,Central Police,police,23.82,90.42\n"
            "f1,North Fire Service,fire,23.83,90.43\n"
        )
        accepted, rejected = svc.ingest_pois(io.StringIO(csv_text))
        assert (accepted, rejected) == (3, [])
        assert svc.poi_count == 3

    def test_bad_rows_reported_with_line_numbers(self):
        svc = GeoService()
        csv_text = (
            "id,name,category,lat,lon\n"
            "h1,Ok Hospital,hospital,23.81,90.41\n"
            "h2,Too Far North,hospital,123,90.41\n"
            "h3,Bad Category,clinic,23.81,90.41\n"
            "h1,Duplicate Id,police,23.81,90.41\n"
            "h4,Not A Number,fire,abc,90.41\n"
            "h5,Short Row,fire\n"
        )
        accepted, rejected = svc.ingest_pois(io.StringIO(csv_text))
        assert accepted == 1
        assert [line for line, _ in rejected] == [3, 4, 5, 6, 7]

    def test_header_required(self):
        with pytest.raises(UnreadableFile):
            read_pois_csv(io.StringIO("h1,NoHeader,hospital,1,2\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(UnreadableFile):
            read_pois_csv(tmp_path / "nope.csv")

    def test_large_generated_batch_count(self):
        rng = random.Random(42)
        lines = ["id,name,category,lat,lon"]
        for i in range(10_000):
            lines.append(
                f"g{i},Generated {i},{rng.choice(['hospital', 'police', 'fire'])},"
                f"{rng.uniform(-89, 89):.6f},{rng.uniform(-179, 179):.6f}"
            )
        accepted, rejected = GeoService().ingest_pois(io.StringIO("\n".join(lines) + "\n"))
        assert accepted == 10_000
        assert rejected == []

    def test_reingestion_replaces_index(self):
        svc = GeoService()
        svc.ingest_pois(io.StringIO("id,name,category,lat,lon\na,A,hospital,1,1\nb,B,hospital,1,1\n"))
        assert svc.poi_count == 2
        svc.ingest_pois(io.StringIO("id,name,category,lat,lon\nc,C,police,2,2\n"))
        assert svc.poi_count == 1


class TestNearby:
    def test_single_hospital_found(self):
        idx = SpatialIndex()
        # ~100 m north of the center
        idx.add(Poi("h1", "Near Hospital", "hospital", GeoPoint(23.8103 + 0.0009, 90.4125)))
        got = idx.nearby(GeoPoint(23.8103, 90.4125), "hospital", k=5, radius_m=5000)
        assert [p.id for p, _ in got] == ["h1"]
        assert 90 < got[0][1] < 110

    def test_radius_boundary_excludes_strictly_farther(self):
        center = GeoPoint(23.8103, 90.4125)
        poi = Poi("h1", "Edge Hospital", "hospital", GeoPoint(23.9, 90.4125))
        d = haversine(center, poi.location)
        idx = SpatialIndex()
        idx.add(poi)
        assert idx.nearby(center, "hospital", 5, d) != []
        assert idx.nearby(center, "hospital", 5, d - 1.0) == []

    def test_category_filter_and_all(self):
        idx = SpatialIndex()
        idx.add(Poi("h1", "H", "hospital", GeoPoint(0.001, 0)))
        idx.add(Poi("p1", "P", "police", GeoPoint(0.002, 0)))
        center = GeoPoint(0, 0)
        assert [p.id for p, _ in idx.nearby(center, "police", 5, 10_000)] == ["p1"]
        assert [p.id for p, _ in idx.nearby(center, None, 5, 10_000)] == ["h1", "p1"]

    def test_equidistant_ties_break_by_id(self):
        idx = SpatialIndex()
        idx.add(Poi("b", "East", "fire", GeoPoint(0, 0.01)))
        idx.add(Poi("a", "West", "fire", GeoPoint(0, -0.01)))
        got = idx.nearby(GeoPoint(0, 0), "fire", 2, 10_000)
        assert [p.id for p, _ in got] == ["a", "b"]

    def test_k_truncates(self):
        idx = SpatialIndex()
        for i in range(20):
            idx.add(Poi(f"h{i:02d}", f"H{i}", "hospital", GeoPoint(0.001 * (i + 1), 0)))
        got = idx.nearby(GeoPoint(0, 0), "hospital", 7, 1_000_000)
        assert len(got) == 7
        dists = [d for _, d in got]
        assert dists == sorted(dists)

    def test_empty_index_error_distinct_from_empty_result(self):
        svc = GeoService()
        with pytest.raises(EmptyIndex):
            svc.nearby(GeoPoint(0, 0))
        svc.ingest_pois(io.StringIO("id,name,category,lat,lon\na,A,fire,50,50\n"))
        assert svc.nearby(GeoPoint(0, 0), "fire", 5, 1000) == []

    def test_parameter_validation(self):
        idx = SpatialIndex()
        idx.add(Poi("a", "A", "fire", GeoPoint(0, 0)))
        with pytest.raises(InvalidValue):
            idx.nearby(GeoPoint(0, 0), "fire", 0, 100)
        with pytest.raises(InvalidValue):
            idx.nearby(GeoPoint(0, 0), "fire", 1, 0)
        with pytest.raises(InvalidValue):
            idx.nearby(GeoPoint(0, 0), "mall", 1, 100)

    def test_matches_brute_force_on_random_instances(self):
        rng = random.Random(20240602)
        pois = random_pois(rng, 1000)
        idx = SpatialIndex()
        for poi in pois:
            idx.add(poi)
        for _ in range(200):
            center = GeoPoint(rng.uniform(22.8, 25.2), rng.uniform(89.8, 92.2))
            category = rng.choice(["hospital", "police", "fire", None])
            k = rng.randint(1, 15)
            radius = rng.uniform(200, 80_000)
            got = idx.nearby(center, category, k, radius)
            want = brute_force_nearby(pois, center, category, k, radius)
            assert got == want

    def test_matches_brute_force_across_antimeridian_and_poles(self):
        rng = random.Random(77)
        pois = [
            Poi(f"x{i:03d}", f"X{i}", "police",
                GeoPoint(rng.uniform(-89.9, 89.9), rng.uniform(-180, 180) or 1.0))
            for i in range(300)
        ]
        idx = SpatialIndex()
        for poi in pois:
            idx.add(poi)
        for center_lat, center_lon in [(0, 179.9), (0, -179.9), (89.5, 0), (-89.5, 10), (45, 0)]:
            center = GeoPoint(center_lat, center_lon)
            got = idx.nearby(center, "police", 8, 3_000_000)
            want = brute_force_nearby(pois, center, "police", 8, 3_000_000)
            assert got == want

    def test_huge_radius_falls_back_to_full_scan(self):
        idx = SpatialIndex()
        idx.add(Poi("far", "Far", "fire", GeoPoint(-45, -120)))
        idx.add(Poi("near", "Near", "fire", GeoPoint(1, 1)))
        got = idx.nearby(GeoPoint(0, 0), "fire", 5, 25_000_000)
        assert [p.id for p, _ in got] == ["near", "far"]

    def test_index_completeness(self):
        rng = random.Random(9)
        pois = random_pois(rng, 500)
        idx = SpatialIndex()
        for poi in pois:
            idx.add(poi)
        assert sum(idx.cell_populations().values()) == len(pois) == len(idx)
