"""Time the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel runs on the same inputs under both backends; the script
checks the outputs agree before reporting the median wall time and the
speed-up.
"""
import argparse
import statistics
import time

import numpy as np

from eegdecode import kernels


def _problems(rng):
    X = rng.standard_normal((39, 16))
    y = (X[:, 0] + 0.5 * rng.standard_normal(39) > 0).astype(np.float64)
    stat = rng.standard_normal((1000, 220))
    mask = (np.abs(stat) > 1.0).astype(np.uint8)
    trials = rng.standard_normal((320, 16 * 28))
    idx = rng.integers(0, 320, (200, 20))
    return {
        "logreg_ista (39x16, lam 0.1)":
            lambda: kernels.logreg_ista(X, y, 0.1, 2000, 1e-7, np.zeros(16), 0.0)[:2],
        "max_cluster_mass (1000 perms x 220)":
            lambda: kernels.max_cluster_mass(stat, mask, 4),
        "bootstrap_means (200 x 20 of 320 trials)":
            lambda: kernels.bootstrap_means(trials, idx),
    }


def _time(fn, repeat):
    fn()
    samples = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=1e-9, atol=1e-12)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=20)
    args = parser.parse_args()
    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)}")
    problems = _problems(np.random.default_rng(0))
    print(f"{'kernel':44s} " + " ".join(f"{b:>12s}" for b in backends) + "   speed-up")
    for name, fn in problems.items():
        times, outputs = {}, {}
        for b in backends:
            with kernels.use_backend(b):
                outputs[b] = fn()
                times[b] = _time(fn, args.repeat)
        if len(backends) == 2:
            assert _same(outputs["cython"], outputs["python"]), f"{name}: backends disagree"
            ratio = f"{times['python'] / times['cython']:9.1f}x"
        else:
            ratio = "        -"
        print(f"{name:44s} " + " ".join(f"{times[b] * 1e3:10.3f}ms" for b in backends) + f"   {ratio}")


if __name__ == "__main__":
    main()
