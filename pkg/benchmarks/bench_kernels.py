#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

Times the three hot elementwise kernels in isolation and a full training
step (forward + backward + Adam) with each backend wired in.

Usage: python benchmarks/bench_kernels.py [--batch 32] [--n 256] [--repeats 20]
"""

import argparse
import time

import numpy as np

import emwavenet.kernels as kernels_mod
from emwavenet.kernels import _fallback

try:
    from emwavenet.kernels import _core
except ImportError:
    _core = None


def timeit(fn, repeats):
    fn()  # warm up
    started = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - started) / repeats * 1e3  # ms


def bench_kernels(batch, n, repeats):
    rng = np.random.default_rng(0)
    u = rng.standard_normal((batch, n, n)) + 1j * rng.standard_normal((batch, n, n))
    g = rng.standard_normal((batch, n, n)) + 1j * rng.standard_normal((batch, n, n))
    amp = rng.uniform(0.5, 1.5, (n, n))
    phase = rng.uniform(0.0, 0.03, (n, n))
    grad = rng.standard_normal((n, n))
    k = 2 * np.pi / 0.03

    backends = [("numpy", _fallback)] + ([("cython", _core)] if _core else [])
    rows = []
    for label, case in (
        ("modulate", lambda impl: impl.modulate(u, amp, phase, k)),
        ("modulation_backward", lambda impl: impl.modulation_backward(g, u, amp, phase, k)),
        (
            "adam_update",
            lambda impl: impl.adam_update(
                amp.copy(), grad, np.zeros((n, n)), np.zeros((n, n)), 0.01, 0.9, 0.999, 1e-8, 0.1, 0.002
            ),
        ),
    ):
        timings = {name: timeit(lambda impl=impl: case(impl), repeats) for name, impl in backends}
        rows.append((label, timings))
    return rows


def bench_training_step(batch, repeats):
    from emwavenet import NetConfig, init_layers
    from emwavenet.autograd import backward_arrays
    from emwavenet.classify import batch_losses, cotangent_arrays, default_layout, region_energies_arrays
    from emwavenet.network import forward_arrays

    cfg = NetConfig(freq_hz=9.6e9, wavelength=0.03, num_layers=3, grid_size=64, spacing=0.5, pitch=0.01)
    layout = default_layout(64, 4)
    layers = init_layers(cfg, seed=0)
    h = cfg.transfer().values
    rng = np.random.default_rng(1)
    x = rng.standard_normal((batch, 64, 64)) + 1j * rng.standard_normal((batch, 64, 64))
    y = rng.integers(0, 4, batch)

    def step():
        detector, cache = forward_arrays(x, h, layers, cfg.wavenumber)
        per_class, totals = region_energies_arrays(detector, layout)
        batch_losses(per_class, totals, y)
        cot = cotangent_arrays(detector, per_class, totals, y, layout)
        backward_arrays(cot, cache, layers, cfg.wavenumber, h)

    backends = [("numpy", _fallback)] + ([("cython", _core)] if _core else [])
    timings = {}
    saved = (kernels_mod.modulate, kernels_mod.modulation_backward, kernels_mod.adam_update)
    try:
        for name, impl in backends:
            kernels_mod.modulate = impl.modulate
            kernels_mod.modulation_backward = impl.modulation_backward
            kernels_mod.adam_update = impl.adam_update
            timings[name] = timeit(step, repeats)
    finally:
        kernels_mod.modulate, kernels_mod.modulation_backward, kernels_mod.adam_update = saved
    return timings


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--batch", type=int, default=32)
    parser.add_argument("--n", type=int, default=256)
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    if _core is None:
        print("compiled extension not available; benchmarking the NumPy fallback only")
    print(f"\nkernels on batch={args.batch}, n={args.n} (mean of {args.repeats} runs)")
    print(f"{'kernel':24s} {'numpy ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for label, timings in bench_kernels(args.batch, args.n, args.repeats):
        numpy_ms = timings["numpy"]
        if "cython" in timings:
            print(f"{label:24s} {numpy_ms:10.3f} {timings['cython']:10.3f} {numpy_ms / timings['cython']:7.2f}x")
        else:
            print(f"{label:24s} {numpy_ms:10.3f} {'-':>10s} {'-':>8s}")

    timings = bench_training_step(args.batch, args.repeats)
    print(f"\nfull train step (forward+backward, batch={args.batch}, n=64, M=3)")
    for name, ms in timings.items():
        print(f"  {name:8s} {ms:8.3f} ms")
    if "cython" in timings:
        print(f"  speedup  {timings['numpy'] / timings['cython']:.2f}x")


if __name__ == "__main__":
    main()
