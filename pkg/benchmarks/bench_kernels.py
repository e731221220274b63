"""Benchmark the hot kernels: compiled path vs pure-NumPy fallback.

Run with `python3 benchmarks/bench_kernels.py`.  The same comparison with the
compiled path disabled entirely (import-time fallback) is
`MOESWITCHSIM_NO_NUMBA=1 python3 benchmarks/bench_kernels.py`, which times only
the "py" column.

Sizes mirror the heaviest acceptance workloads: 16K tokens routed over 256
experts, and a translation-cache replay trace of a full desk run.
"""

import time

import numpy as np

from moeswitchsim.kernels import HAVE_NUMBA, IMPLS

SEQ = 16384
EXPERTS = 256
TOPK = 8
TRACE_LEN = SEQ * TOPK
REPS = 5


def cases(rng):
    keys = rng.random((SEQ, EXPERTS))
    tokens = np.repeat(np.arange(SEQ, dtype=np.int64), TOPK)
    experts = rng.integers(0, EXPERTS, size=TRACE_LEN).astype(np.int64)
    tags = (experts << 32) | (tokens % 4096)
    words = rng.integers(0, 2**63, size=TRACE_LEN, dtype=np.int64).astype(np.uint64)
    return {
        "mix64": lambda impl: impl["mix64"](tokens, experts, 0xD1B54A32D192ED03),
        "fold_u64": lambda impl: impl["fold_u64"](words),
        "topk_select": lambda impl: impl["topk_select"](keys, TOPK),
        "lru_replay": lambda impl: impl["lru_replay"](tags, 512),
        "splitmix64_arr": lambda impl: impl["splitmix64_arr"](words),
    }


def best_of(fn, impl):
    fn(impl)  # warm (JIT compile / cache touch)
    best = float("inf")
    for _ in range(REPS):
        t0 = time.perf_counter()
        fn(impl)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(7)
    table = cases(rng)
    names = sorted(IMPLS)
    print(f"compiled path available: {HAVE_NUMBA}")
    print(f"{'kernel':16s}" + "".join(f"{n:>12s}" for n in names) + f"{'speedup':>10s}")
    for kernel, fn in table.items():
        times = {n: best_of(fn, IMPLS[n]) for n in names}
        ratio = times["py"] / times["nb"] if "nb" in times else float("nan")
        cells = "".join(f"{times[n]*1e3:11.3f}m" for n in names)
        print(f"{kernel:16s}{cells}{ratio:9.1f}x")

    # Both paths must agree bit for bit; a benchmark that drifts is a bug.
    if "nb" in IMPLS:
        for kernel, fn in table.items():
            a, b = fn(IMPLS["py"]), fn(IMPLS["nb"])
            assert np.array_equal(np.asarray(a), np.asarray(b)), kernel
        print("agreement: all kernels bit-identical across implementations")


if __name__ == "__main__":
    main()
