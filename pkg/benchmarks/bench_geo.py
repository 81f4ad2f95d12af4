#!/usr/bin/env python3
"""Benchmark the compiled distance kernel against the pure-Python fallback.

Times raw haversine evaluation (scalar and batch) and the end-to-end nearby
query path with each kernel swapped in. Run from the repo root:

    python3 benchmarks/bench_geo.py [--distances N] [--pois N] [--queries N]
"""

import argparse
import random
import time

from safeguard import _geokernel_py as pure
from safeguard import geo
from safeguard.geo import GeoPoint, Poi, SpatialIndex

try:
    from safeguard import _geokernel as compiled
except ImportError:
    compiled = None


def timeit(fn, *args):
    start = time.perf_counter()
    fn(*args)
    return time.perf_counter() - start


def bench_scalar(kernel, pairs):
    hav = kernel.haversine_m
    for lat1, lon1, lat2, lon2 in pairs:
        hav(lat1, lon1, lat2, lon2)


def bench_batch(kernel, lats, lons):
    kernel.haversine_many(23.8103, 90.4125, lats, lons)


def bench_nearby(kernel, index, queries):
    previous = geo._kernel
    geo._kernel = kernel
    try:
        for center, category, k, radius in queries:
            index.nearby(center, category, k, radius)
    finally:
        geo._kernel = previous


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--distances", type=int, default=200_000)
    parser.add_argument("--pois", type=int, default=10_000)
    parser.add_argument("--queries", type=int, default=200)
    args = parser.parse_args()

    rng = random.Random(42)
    pairs = [
        (rng.uniform(-90, 90), rng.uniform(-180, 180),
         rng.uniform(-90, 90), rng.uniform(-180, 180))
        for _ in range(args.distances)
    ]
    lats = [p[0] for p in pairs]
    lons = [p[1] for p in pairs]

    index = SpatialIndex(0.25)
    cats = ["hospital", "police", "fire"]
    for i in range(args.pois):
        index.add(Poi(f"p{i}", f"P{i}", rng.choice(cats),
                      GeoPoint(rng.uniform(23, 25), rng.uniform(90, 92))))
    queries = [
        (GeoPoint(rng.uniform(23, 25), rng.uniform(90, 92)),
         rng.choice(cats + [None]), rng.randint(1, 20), rng.uniform(500, 50_000))
        for _ in range(args.queries)
    ]

    kernels = [("pure", pure)]
    if compiled is not None:
        kernels.append(("compiled", compiled))
    else:
        print("compiled kernel not built; timing pure only\n")

    rows = []
    for name, kernel in kernels:
        scalar = timeit(bench_scalar, kernel, pairs)
        batch = timeit(bench_batch, kernel, lats, lons)
        nearby = timeit(bench_nearby, kernel, index, queries)
        rows.append((name, scalar, batch, nearby))

    print(f"{args.distances} scalar evals | {args.distances} batch evals | "
          f"{args.queries} nearby queries over {args.pois} POIs\n")
    print(f"{'kernel':<10} {'scalar':>10} {'batch':>10} {'nearby':>10}")
    for name, scalar, batch, nearby in rows:
        print(f"{name:<10} {scalar * 1e3:>8.1f}ms {batch * 1e3:>8.1f}ms {nearby * 1e3:>8.1f}ms")
    if len(rows) == 2:
        (_, s0, b0, n0), (_, s1, b1, n1) = rows
        print(f"\nspeedup    {s0 / s1:>8.1f}x {b0 / b1:>8.1f}x {n0 / n1:>8.1f}x")

    # sanity: both kernels agree on a sample
    if compiled is not None:
        for sample in pairs[:1000]:
            dp = pure.haversine_m(*sample)
            dc = compiled.haversine_m(*sample)
            assert abs(dp - dc) <= 1e-9 + 1e-12 * dp, (sample, dp, dc)
        print("\nkernels agree on 1000 sampled pairs")


if __name__ == "__main__":
    main()
