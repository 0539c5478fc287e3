"""Benchmark the compiled kernels against the NumPy fallback.

Run: python benchmarks/bench_kernels.py [--repeats 5] [--stack 64]

Times the two hot per-pixel operations at production geometry (800x800
canvas, RGB) and reports per-call wall time and the speedup of the native
extension. Also asserts the backends agree byte for byte on the inputs
used, so the numbers are comparing identical work.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from glean import kernels
from glean.align import AlignmentTarget, compute_alignment
from glean.landmarks import FaceAnchors


def _timeit(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_warp(backends, repeats: int):
    rng = np.random.default_rng(0)
    src = rng.integers(0, 256, (1024, 1024, 3), dtype=np.uint8)
    anchors = FaceAnchors(
        nose=(512, 560), left_eye=(420, 470), right_eye=(610, 455),
        image_width=1024, image_height=1024,
    )
    target = AlignmentTarget()
    coeffs = compute_alignment(anchors, target).inverse_coeffs()

    outputs = {}
    times = {}
    for name, mod in backends.items():
        outputs[name] = mod.warp_bilinear(src, coeffs, 800, 800, (0, 0, 0))
        times[name] = _timeit(
            lambda m=mod: m.warp_bilinear(src, coeffs, 800, 800, (0, 0, 0)), repeats
        )
    if len(outputs) == 2 and not np.array_equal(*outputs.values()):
        raise AssertionError("backends disagree on the warp benchmark input")
    return times


def bench_median(backends, repeats: int, n_images: int):
    rng = np.random.default_rng(1)
    stack = rng.integers(0, 256, (n_images, 800, 800, 3), dtype=np.uint8)
    outputs = {}
    times = {}
    for name, mod in backends.items():
        outputs[name] = mod.median_reduce(stack)
        times[name] = _timeit(lambda m=mod: m.median_reduce(stack), repeats)
    if len(outputs) == 2 and not np.array_equal(*outputs.values()):
        raise AssertionError("backends disagree on the median benchmark input")
    return times


def _report(label: str, times: dict[str, float]):
    print(f"\n{label}")
    for name, t in sorted(times.items()):
        print(f"  {name:8s} {t * 1e3:9.2f} ms/call")
    if "native" in times and "python" in times:
        print(f"  speedup  {times['python'] / times['native']:9.2f}x (native over python)")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--stack", type=int, default=64,
                        help="images in the median-reduction stack")
    args = parser.parse_args()

    backends = kernels.available_backends()
    print(f"selected backend: {kernels.BACKEND}; benchmarking: {sorted(backends)}")
    _report("bilinear warp 1024^2 -> 800^2 RGB", bench_warp(backends, args.repeats))
    _report(
        f"median reduction over {args.stack} x 800 x 800 x 3",
        bench_median(backends, args.repeats, args.stack),
    )


if __name__ == "__main__":
    main()
