"""Pure-Python distance kernel.

Fallback used when the compiled extension is unavailable. Keep the floating
point operation order identical to _geokernel.pyx so both kernels produce
the same doubles.
"""

import math
from math import asin, cos, sin, sqrt

KERNEL = "pure"

EARTH_RADIUS_M = 6371000.0
_DEG = math.pi / 180.0


def haversine_m(lat1, lon1, lat2, lon2):
    """Great-circle distance in meters on the mean-radius sphere."""
    p1 = lat1 * _DEG
    p2 = lat2 * _DEG
    s1 = sin((lat2 - lat1) * _DEG * 0.5)
    s2 = sin((lon2 - lon1) * _DEG * 0.5)
    h = s1 * s1 + cos(p1) * cos(p2) * (s2 * s2)
    if h > 1.0:
        h = 1.0
    return 2.0 * EARTH_RADIUS_M * asin(sqrt(h))


def haversine_many(lat, lon, lats, lons):
    """Distances from one point to each (lats[i], lons[i]) pair."""
    if len(lats) != len(lons):
        raise ValueError("coordinate arrays differ in length")
    return [haversine_m(lat, lon, lats[i], lons[i]) for i in range(len(lats))]
