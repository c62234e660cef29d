"""Time the numba kernels against their pure-numpy twins.

    python benchmarks/bench_kernels.py [--repeat 3]

Each kernel is warmed up once (numba compiles on first call) and the
best of ``--repeat`` timings is reported, together with a check that both
backends produced identical counts.
"""
import argparse
import time

import numpy as np

from algodist import kernels
from algodist.machines import bits_to_array, tag_tables, tm_digits


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def workloads():
    rng = np.random.default_rng(0)
    tm = tm_digits(rng.choice(2985984, 2000, replace=False), 3)
    ca = np.sort(rng.choice(65536, 2000, replace=False))
    tag_bits, tag_len = tag_tables(rng.choice(50625, 2000, replace=False))

    def tm_job(b):
        def run():
            buf, s, n = b.tm_batch(tm, 0, 100)
            return b.count_windows(buf, s, n, 7, 1)
        return run

    def ca_job(b):
        def run():
            rows = b.ca_batch(ca, 0, 100)
            m, w = rows.shape
            return b.count_windows(rows, np.zeros(m, np.int64), np.full(m, w, np.int64), 7, 1)
        return run

    def tag_job(b):
        def run():
            buf, s, n = b.tag_batch(tag_bits, tag_len, bits_to_array("01"), 100)
            return b.count_windows(buf, s, n, 7, 1)
        return run

    return {
        "TM 2000 x t=100 + count k=7": tm_job,
        "CA 2000 x t=100 + count k=7": ca_job,
        "TS 2000 x t=100 + count k=7": tag_job,
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if kernels.nb_backend is None:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'workload':<32} {'numpy s':>10} {'numba s':>10} {'speedup':>8}  same")
    for name, job in workloads().items():
        t_np, out_np = best_of(job(kernels.np_backend), args.repeat)
        t_nb, out_nb = best_of(job(kernels.nb_backend), args.repeat)
        same = np.array_equal(out_np, out_nb)
        print(f"{name:<32} {t_np:>10.4f} {t_nb:>10.4f} {t_np / t_nb:>7.1f}x  {same}")


if __name__ == "__main__":
    main()
