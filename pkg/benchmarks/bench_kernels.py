"""Compare the numba and numpy back ends of the clique-cover kernel.

Part 1 times ``first_uncovered`` directly on random bitmask batches.
Part 2 times an end-to-end decision workload in two subprocesses, one with
``WEQ_NUMBA=1`` and one with ``WEQ_NUMBA=0``.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--skip-e2e]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from weq import kernels

E2E = """
import time
from weq import kernels
from weq.suites import run_suite
t0 = time.perf_counter()
res = run_suite("qbf", quick=True)
print(kernels.BACKEND, res.passed, res.failed, f"{time.perf_counter() - t0:.3f}")
"""


def batch(rng, n_images, n_targets, bits=40, density=0.6):
    # images are dense, targets sparse, so most images are covered and the scan runs long
    images = np.zeros(n_images, dtype=np.int64)
    targets = np.zeros(n_targets, dtype=np.int64)
    for i in range(n_images):
        for b in range(bits):
            if rng.random() < density:
                images[i] |= 1 << b
    for j in range(n_targets):
        for b in rng.choice(bits, size=3, replace=False):
            targets[j] |= 1 << int(b)
    return images, targets


def best_of(fn, repeat, inner):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        best = min(best, (time.perf_counter() - t0) / inner)
    return best


def bench_direct(repeat):
    rng = np.random.default_rng(0)
    nb = getattr(kernels, "_first_uncovered_nb", None)
    if nb is None:
        print("numba back end unavailable (WEQ_NUMBA=0 or numba missing); direct numba timing skipped")
    print(f"{'images':>7} {'targets':>8} {'numpy us':>10} {'numba us':>10} {'python us':>10}")
    for n_images, n_targets in [(8, 8), (64, 32), (512, 128), (4096, 256)]:
        images, targets = batch(rng, n_images, n_targets)
        expect = kernels.first_uncovered_numpy(images, targets)
        inner = max(1, 20000 // (n_images * n_targets // 8 + 1))
        t_np = best_of(lambda: kernels.first_uncovered_numpy(images, targets), repeat, inner)
        if nb is not None:
            assert int(nb(images, targets)) == expect
            t_nb = best_of(lambda: nb(images, targets), repeat, inner)
        else:
            t_nb = float("nan")
        pi, pt = images.tolist(), targets.tolist()
        assert kernels.first_uncovered_py(pi, pt) == expect
        t_py = best_of(lambda: kernels.first_uncovered_py(pi, pt), repeat, inner)
        print(f"{n_images:>7} {n_targets:>8} {t_np * 1e6:>10.1f} {t_nb * 1e6:>10.1f} {t_py * 1e6:>10.1f}")


def bench_e2e():
    print("\nend-to-end (quick QBF sweep):")
    for flag in ("1", "0"):
        env = {**os.environ, "WEQ_NUMBA": flag}
        out = subprocess.run([sys.executable, "-c", E2E], env=env, capture_output=True,
                             text=True, check=True).stdout.strip()
        backend, passed, failed, secs = out.split()
        print(f"  WEQ_NUMBA={flag}: backend={backend} passed={passed} failed={failed} {secs}s")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-e2e", action="store_true")
    args = ap.parse_args()
    print(f"in-process back end: {kernels.BACKEND}")
    bench_direct(args.repeat)
    if not args.skip_e2e:
        bench_e2e()


if __name__ == "__main__":
    main()
