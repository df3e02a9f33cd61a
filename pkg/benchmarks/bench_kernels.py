"""Benchmark: compiled kernels vs the pure-Python fallback.

Times the hot loops on realistic workloads (first-passage scans, battery
paths, ladder replications) plus one end-to-end delay experiment per backend,
and prints throughput with the compiled/python speedup.

Usage: python benchmarks/bench_kernels.py [--quick]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from gatedcusum import (
    ChangeModel,
    ExperimentConfig,
    HarvestModel,
    run_delay_experiment,
    run_fa_experiment,
)
from gatedcusum import _kernel


def _time(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_fp_ungated(impl, n):
    rng = np.random.default_rng(1)
    z = rng.normal(-0.125, 0.5, n)

    def run():
        impl.fp_ungated(z, 0.0, 0.0, 1e18)

    return n, _time(run)


def bench_fp_battery(impl, n):
    rng = np.random.default_rng(2)
    z = rng.normal(-0.125, 0.5, n)
    hv = rng.exponential(0.4, n)

    def run():
        impl.fp_battery(z, hv, 0.5, 0.5, 0.0, 0.0, 1e18)

    return n, _time(run)


def bench_fp_chain(impl, n):
    rng = np.random.default_rng(3)
    z = rng.normal(-0.125, 0.5, n)
    u = rng.random(n)

    def run():
        impl.fp_chain(z, u, 0.33, 0.83, 1, 0.0, 0.0, 1e18)

    return n, _time(run)


def bench_battery_hist(impl, n):
    rng = np.random.default_rng(4)
    hv = rng.exponential(0.4, n)
    counts = np.zeros(4096, np.int64)
    trans = np.zeros((2, 2), np.int64)

    def run():
        impl.battery_hist(hv, 0.5, 0.5, counts, 1 / 0.005, trans, -1)

    return n, _time(run)


def bench_ladder(impl, n_reps):
    rng = np.random.default_rng(5)
    z = rng.normal(0.125, 0.5, n_reps * 8)
    heights = np.empty(n_reps)
    epochs = np.empty(n_reps, np.int64)

    def run():
        impl.ladder_walk(z, 1, 0.0, heights, epochs, 0, 0.0, 0, n_reps, 10**6)

    # steps consumed vary; report per replication
    return n_reps, _time(run)


def bench_experiment(backend, kind, n_runs):
    model = ChangeModel(0.0, 0.5, 1.0)
    cfg = ExperimentConfig(
        model=model,
        harvest=HarvestModel(family="exponential", mean=0.4),
        e_s=0.5, h=6.0, n_runs=n_runs, master_seed=99,
        gate_mode="full-battery", battery_init="fixed",
        change_point=1 if kind == "delay" else None,
    )
    runner = run_delay_experiment if kind == "delay" else run_fa_experiment

    def run():
        with _kernel.forced(backend):
            runner(cfg)

    return n_runs, _time(run, repeats=1)


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true", help="smaller workloads")
    args = ap.parse_args()
    scale = 10 if args.quick else 1

    backends = _kernel.available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; benchmarking the fallback only")

    slot_benches = [
        ("fp_ungated (slots)", bench_fp_ungated, 2_000_000 // scale),
        ("fp_battery (slots)", bench_fp_battery, 2_000_000 // scale),
        ("fp_chain (slots)", bench_fp_chain, 2_000_000 // scale),
        ("battery_hist (slots)", bench_battery_hist, 2_000_000 // scale),
        ("ladder_walk (reps)", bench_ladder, 200_000 // scale),
    ]

    header = f"{'kernel':<24}{'units':>12}"
    for name in backends:
        header += f"{name + ' M/s':>16}"
    print(header + f"{'speedup':>10}")
    for label, fn, n in slot_benches:
        rates = {}
        for name, impl in backends.items():
            units, secs = fn(impl, n)
            rates[name] = units / secs / 1e6
        row = f"{label:<24}{n:>12}"
        for name in backends:
            row += f"{rates[name]:>16.2f}"
        if "compiled" in rates and "python" in rates:
            row += f"{rates['compiled'] / rates['python']:>10.1f}x"
        print(row)

    print()
    for kind, n_runs, note in (
        ("delay", 20_000 // scale, "short runs, driver-bound"),
        ("fa", 2_000 // scale, "long runs, kernel-bound"),
    ):
        times = {}
        for name in backends:
            _, secs = bench_experiment(name, kind, n_runs)
            times[name] = secs
            print(f"battery-gated {kind} experiment ({n_runs} runs, h=6, {note}) "
                  f"on {name}: {secs:.2f}s")
        if len(times) == 2:
            print(f"  end-to-end speedup: {times['python'] / times['compiled']:.1f}x")


if __name__ == "__main__":
    main()
