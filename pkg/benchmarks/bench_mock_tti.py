"""Benchmark the offline image kernel: numba jit vs pure-numpy fallback.

Run: python benchmarks/bench_mock_tti.py [tiles]

The jitted path is the default at runtime; GENSHEET_NO_NUMBA=1 selects the
vectorized numpy fallback. Both produce byte-identical tiles (asserted
here before timing).
"""

import sys
import time

import numpy as np

from gensheet.functions.images import HAS_NUMBA, encode_png_rgb, render_pixels


def bench(backend: str, tiles: int) -> float:
    # first call untimed: jit compilation / cache warm-up
    render_pixels(0, 7.0, backend=backend)
    start = time.perf_counter()
    for i in range(tiles):
        render_pixels(i * 7919 + 13, 7.0, backend=backend)
    return time.perf_counter() - start


def main() -> None:
    tiles = int(sys.argv[1]) if len(sys.argv) > 1 else 50

    sample_numpy = render_pixels(123456789, 13.5, backend="numpy")
    backends = ["numpy"]
    if HAS_NUMBA:
        sample_numba = render_pixels(123456789, 13.5, backend="numba")
        assert np.array_equal(sample_numpy, sample_numba), "backend outputs differ"
        backends.append("numba")
    else:
        print("numba not available; timing the numpy path only")

    print(f"rendering {tiles} tiles of 512x512x3")
    timings = {}
    for backend in backends:
        elapsed = bench(backend, tiles)
        timings[backend] = elapsed
        print(
            f"  {backend:>6}: {elapsed:7.3f}s total, "
            f"{1000 * elapsed / tiles:7.2f} ms/tile"
        )
    if len(timings) == 2:
        print(f"  speedup: {timings['numpy'] / timings['numba']:.1f}x")

    start = time.perf_counter()
    encode_png_rgb(sample_numpy)
    print(f"  png encode: {1000 * (time.perf_counter() - start):.2f} ms/tile")


if __name__ == "__main__":
    main()
