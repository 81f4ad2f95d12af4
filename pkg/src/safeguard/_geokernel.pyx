# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled distance kernel.

Mirrors _geokernel_py operation for operation; keep the two in sync so the
pure fallback produces the same doubles.
"""

from libc.math cimport M_PI, asin, cos, sin, sqrt

KERNEL = "compiled"

EARTH_RADIUS_M = 6371000.0

cdef double _R = 6371000.0
cdef double _DEG = M_PI / 180.0


cpdef double haversine_m(double lat1, double lon1, double lat2, double lon2):
    """Great-circle distance in meters on the mean-radius sphere."""
    cdef double p1 = lat1 * _DEG
    cdef double p2 = lat2 * _DEG
    cdef double s1 = sin((lat2 - lat1) * _DEG * 0.5)
    cdef double s2 = sin((lon2 - lon1) * _DEG * 0.5)
    cdef double h = s1 * s1 + cos(p1) * cos(p2) * (s2 * s2)
    if h > 1.0:
        h = 1.0
    return 2.0 * _R * asin(sqrt(h))


def haversine_many(double lat, double lon, lats, lons):
    """Distances from one point to each (lats[i], lons[i]) pair."""
    cdef Py_ssize_t i, n = len(lats)
    if len(lons) != n:
        raise ValueError("coordinate arrays differ in length")
    out = [0.0] * n
    for i in range(n):
        out[i] = haversine_m(lat, lon, lats[i], lons[i])
    return out
