"""Nearby-place lookup: POI ingestion, haversine distance, grid index.

Distance math lives in a small kernel that exists twice: a Cython extension
for speed and a pure-Python fallback, picked at import time. Both produce
identical doubles; benchmarks/bench_geo.py compares them.
"""

from __future__ import annotations

import csv
import math
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, TextIO, Union

from .errors import EmptyIndex, InvalidCoordinates, InvalidValue, UnreadableFile

try:
    from . import _geokernel as _kernel
except ImportError:  # extension not built; fall back to pure Python
    from . import _geokernel_py as _kernel

EARTH_RADIUS_M = 6371000.0
CATEGORIES = ("hospital", "police", "fire")

POI_CSV_HEADER = ["id", "name", "category", "lat", "lon"]


def kernel_name() -> str:
    return _kernel.KERNEL


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        try:
            lat = float(self.lat)
            lon = float(self.lon)
        except (TypeError, ValueError):
            raise InvalidCoordinates("latitude/longitude must be numbers") from None
        if not (math.isfinite(lat) and math.isfinite(lon)):
            raise InvalidCoordinates("latitude/longitude must be finite")
        if not -90.0 <= lat <= 90.0:
            raise InvalidCoordinates(f"latitude {lat} outside [-90, 90]")
        lon = ((lon + 180.0) % 360.0) - 180.0
        if lon == -180.0:
            lon = 180.0
        object.__setattr__(self, "lat", lat)
        object.__setattr__(self, "lon", lon)


@dataclass(frozen=True)
class Poi:
    id: str
    name: str
    category: str
    location: GeoPoint

    def __post_init__(self):
        if not self.id:
            raise InvalidValue("poi id must be non-empty")
        if self.category not in CATEGORIES:
            raise InvalidValue(f"unknown category {self.category!r}")


def haversine(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle meters between two points (sphere radius 6,371,000 m)."""
    return _kernel.haversine_m(a.lat, a.lon, b.lat, b.lon)


def haversine_many(center: GeoPoint, lats, lons) -> list[float]:
    return _kernel.haversine_many(center.lat, center.lon, lats, lons)


def read_pois_csv(source: Union[str, Path, TextIO]):
    """Parse the documented POI CSV: header `id,name,category,lat,lon`.

    Returns (pois, rejected) where rejected is a list of (line_number,
    reason) pairs; malformed rows never abort the batch.
    """
    if isinstance(source, (str, Path)):
        try:
            with open(source, "r", encoding="utf-8", newline="") as fh:
                return _read_poi_rows(fh)
        except OSError as exc:
            raise UnreadableFile(f"cannot read {source}: {exc.strerror or exc}") from exc
        except UnicodeDecodeError as exc:
            raise UnreadableFile(f"{source} is not valid UTF-8") from exc
    return _read_poi_rows(source)


def _read_poi_rows(stream):
    reader = csv.reader(stream)
    try:
        header = next(reader, None)
    except (csv.Error, UnicodeDecodeError) as exc:
        raise UnreadableFile(f"unreadable CSV: {exc}") from exc
    if header is None:
        raise UnreadableFile("empty file, expected a header row")
    header = [h.strip().lstrip("﻿") for h in header]
    if header != POI_CSV_HEADER:
        raise UnreadableFile(f"expected header {','.join(POI_CSV_HEADER)!r}, got {','.join(header)!r}")

    pois: list[Poi] = []
    rejected: list[tuple[int, str]] = []
    seen_ids: set[str] = set()
    try:
        for row in reader:
            lineno = reader.line_num
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 5:
                rejected.append((lineno, f"expected 5 columns, got {len(row)}"))
                continue
            poi_id, name, category, lat_s, lon_s = (field.strip() for field in row)
            if not poi_id:
                rejected.append((lineno, "empty id"))
                continue
            if poi_id in seen_ids:
                rejected.append((lineno, f"duplicate id {poi_id!r}"))
                continue
            if not name:
                rejected.append((lineno, "empty name"))
                continue
            if category not in CATEGORIES:
                rejected.append((lineno, f"unknown category {category!r}"))
                continue
            try:
                lat = float(lat_s)
                lon = float(lon_s)
            except ValueError:
                rejected.append((lineno, f"non-numeric coordinates {lat_s!r},{lon_s!r}"))
                continue
            try:
                location = GeoPoint(lat, lon)
            except InvalidCoordinates as exc:
                rejected.append((lineno, exc.message))
                continue
            pois.append(Poi(poi_id, name, category, location))
            seen_ids.add(poi_id)
    except (csv.Error, UnicodeDecodeError) as exc:
        raise UnreadableFile(f"unreadable CSV near line {reader.line_num}: {exc}") from exc
    return pois, rejected


class SpatialIndex:
    """Fixed-size lat/lon grid over POIs.

    Queries expand square rings of cells outward from the center cell and
    stop once no unexplored cell can possibly beat the current cutoff, so
    results match a brute-force scan exactly (same distances, same order).
    """

    def __init__(self, cell_size_deg: float = 0.25):
        if not 0 < cell_size_deg <= 45:
            raise InvalidValue("cell size must be in (0, 45] degrees")
        self.cell = float(cell_size_deg)
        self.nrows = math.ceil(180.0 / self.cell)
        self.ncols = math.ceil(360.0 / self.cell)
        self._grid: dict[tuple[int, int], list[Poi]] = {}
        self._pois: list[Poi] = []

    def __len__(self):
        return len(self._pois)

    def cell_populations(self) -> dict[tuple[int, int], int]:
        return {cell: len(pois) for cell, pois in self._grid.items()}

    def cell_of(self, point: GeoPoint) -> tuple[int, int]:
        row = min(int((point.lat + 90.0) / self.cell), self.nrows - 1)
        col = min(int((point.lon + 180.0) / self.cell), self.ncols - 1)
        return row, col

    def add(self, poi: Poi):
        self._grid.setdefault(self.cell_of(poi.location), []).append(poi)
        self._pois.append(poi)

    def nearby(
        self,
        center: GeoPoint,
        category: Optional[str] = None,
        k: int = 10,
        radius_m: float = 5000.0,
    ) -> list[tuple[Poi, float]]:
        """The <= k closest matching POIs within radius_m, ascending distance,
        ties broken by id."""
        if category in ("", "all"):
            category = None
        if category is not None and category not in CATEGORIES:
            raise InvalidValue(f"unknown category {category!r}")
        if k < 1:
            raise InvalidValue("k must be >= 1")
        if not radius_m > 0:
            raise InvalidValue("radius must be positive")

        row0, col0 = self.cell_of(center)
        matches: list[tuple[float, str, Poi]] = []
        r = 0
        while True:
            if 2 * r + 1 >= self.ncols or r > self.nrows:
                return self._full_scan(center, category, k, radius_m)
            for cell in self._ring_cells(row0, col0, r):
                for poi in self._grid.get(cell, ()):
                    if category is not None and poi.category != category:
                        continue
                    d = haversine(center, poi.location)
                    if d <= radius_m:
                        matches.append((d, poi.id, poi))
            matches.sort(key=lambda t: (t[0], t[1]))
            del matches[k:]
            cutoff = radius_m if len(matches) < k else matches[-1][0]
            if self._ring_min_distance(row0, r + 1) > cutoff:
                break
            r += 1
        return [(poi, d) for d, _, poi in matches]

    def _full_scan(self, center, category, k, radius_m):
        matches = []
        for poi in self._pois:
            if category is not None and poi.category != category:
                continue
            d = haversine(center, poi.location)
            if d <= radius_m:
                matches.append((d, poi.id, poi))
        matches.sort(key=lambda t: (t[0], t[1]))
        return [(poi, d) for d, _, poi in matches[:k]]

    def _ring_cells(self, row0: int, col0: int, r: int) -> Iterable[tuple[int, int]]:
        # assumes 2r+1 < ncols (guarded in nearby), so wrapped columns never collide
        if r == 0:
            yield (row0, col0)
            return
        for row in (row0 - r, row0 + r):
            if 0 <= row < self.nrows:
                for dc in range(-r, r + 1):
                    yield (row, (col0 + dc) % self.ncols)
        for row in range(max(0, row0 - r + 1), min(self.nrows, row0 + r)):
            yield (row, (col0 - r) % self.ncols)
            yield (row, (col0 + r) % self.ncols)

    def _ring_min_distance(self, row0: int, r: int) -> float:
        """Lower bound on the distance to anything outside the explored
        square of rings < r.

        Any such point either differs in latitude by >= (r-1) cells (bounded
        by the meridian arc) or differs in longitude by >= (r-1) cells while
        its latitude stays inside the square's row band (bounded through the
        haversine longitude term with the band's worst-case cosine). Valid
        for every unexplored cell at once, so it is a sound stop test.
        """
        c = self.cell
        gap = max(0.0, (r - 1) * c)
        lat_bound = EARTH_RADIUS_M * math.radians(gap)
        band_lo = max(-90.0, (row0 - (r - 1)) * c - 90.0)
        band_hi = min(90.0, (row0 + r) * c - 90.0)
        cos_min = max(0.0, math.cos(math.radians(max(abs(band_lo), abs(band_hi)))))
        x = cos_min * math.sin(math.radians(min(180.0, gap)) / 2.0)
        lon_bound = 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, x))
        return min(lat_bound, lon_bound)


class GeoService:
    """Holds the current POI index; re-ingestion swaps it atomically."""

    def __init__(self, cell_size_deg: float = 0.25, default_k: int = 10,
                 default_radius_m: float = 5000.0):
        self.cell_size_deg = cell_size_deg
        self.default_k = default_k
        self.default_radius_m = default_radius_m
        self._index = SpatialIndex(cell_size_deg)
        self._swap_lock = threading.Lock()

    @property
    def poi_count(self) -> int:
        return len(self._index)

    def ingest_pois(self, source) -> tuple[int, list[tuple[int, str]]]:
        pois, rejected = read_pois_csv(source)
        index = SpatialIndex(self.cell_size_deg)
        for poi in pois:
            index.add(poi)
        with self._swap_lock:
            self._index = index
        return len(pois), rejected

    def nearby(self, center: GeoPoint, category: Optional[str] = None,
               k: Optional[int] = None, radius_m: Optional[float] = None):
        index = self._index
        if len(index) == 0:
            raise EmptyIndex("no POIs ingested")
        return index.nearby(
            center,
            category,
            self.default_k if k is None else k,
            self.default_radius_m if radius_m is None else radius_m,
        )
