"""Compare the numba and pure-numpy kernel backends.

Run:  python3 benchmarks/bench_kernels.py
The active backend is chosen at import time; this script times both
implementations directly regardless of CALMKIT_DISABLE_NUMBA.
"""

import time

import numpy as np

from calmkit.sensing import kernels


def timeit(fn, *args, repeat=5, warmup=1):
    for _ in range(warmup):
        fn(*args)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    print(f"numba enabled in package: {kernels.NUMBA_ENABLED}")

    # 5-minute window at 50 Hz = 15k samples; batch of one day's worth
    n = 15_000
    ax, ay, az = (rng.normal(0, 0.3, n) for _ in range(3))
    pairs = [("energy_rms", kernels.energy_rms, kernels.energy_rms_numpy, (ax, ay, az)),
             ("energy_integrated", kernels.energy_integrated,
              kernels.energy_integrated_numpy, (ax, ay, az))]
    for name, active, fallback, args in pairs:
        t_active = timeit(active, *args)
        t_np = timeit(fallback, *args)
        print(f"{name:>18}: active {t_active * 1e6:8.1f} us | numpy {t_np * 1e6:8.1f} us")

    # one simulated study-month of 5-minute steps
    steps = 156 * 28
    u = rng.random(steps)
    z = rng.standard_normal(steps)
    mu = np.log(np.array([0.05, 0.35]))
    sigma = np.array([0.35, 0.35])
    args = (0, 0.05, 0.08, u, z, mu, sigma)
    t_active = timeit(kernels.markov_scan, *args)
    t_np = timeit(kernels.markov_scan_numpy, *args)
    print(f"{'markov_scan':>18}: active {t_active * 1e6:8.1f} us | numpy {t_np * 1e6:8.1f} us")


if __name__ == "__main__":
    main()
