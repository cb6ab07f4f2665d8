"""Time the compiled and numpy kernel backends on representative shapes.

    python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel is checked for agreement between backends before it is timed.
"""

import argparse
import timeit

import numpy as np

from tkrank import kernels

MUS = np.array([1.0, 0.9, 0.7, 0.5, 0.3, 0.1, -0.1, -0.3, -0.5, -0.7, -0.9])


def pooling_case(B, m, n, sizes=None, seed=0):
    rng = np.random.default_rng(seed)
    M = rng.uniform(-1, 1, (B, m, n))
    mask = np.ones_like(M)
    if sizes is None:
        starts = np.zeros((B, 1), dtype=np.int64)
        ends = np.full((B, 1), n, dtype=np.int64)
    else:
        from tkrank.config import WindowConfig
        from tkrank.windowed import window_arrays

        starts, ends, _ = window_arrays([n] * B, WindowConfig(sizes=sizes))
    grad = rng.normal(size=(B, len(MUS), m, starts.shape[1]))
    return M, mask, starts, ends, grad


def bm25_case(n_docs=100_000, df=20_000, seed=0):
    rng = np.random.default_rng(seed)
    docs = np.sort(rng.choice(n_docs, df, replace=False)).astype(np.int64)
    tfs = rng.integers(1, 6, df).astype(np.float64)
    lens = rng.integers(5, 300, n_docs).astype(np.float64)
    return docs, tfs, lens


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled extension not built; only the numpy backend is available")

    cases = {
        "pool  passage 64x30x200": pooling_case(64, 30, 200),
        "pool  windowed 8x30x800": pooling_case(8, 30, 800, sizes=(20, 30, 50, 100)),
    }
    rows = []
    for label, (M, mask, starts, ends, grad) in cases.items():
        ref = None
        for name, impl in backends.items():
            out = impl.rbf_window_pool(M, mask, MUS, 0.1, starts, ends)
            if ref is None:
                ref = out
            assert np.allclose(out, ref, rtol=1e-12, atol=1e-12), f"{name} disagrees on {label}"
        for kind, fn in (
            ("fwd", lambda impl: impl.rbf_window_pool(M, mask, MUS, 0.1, starts, ends)),
            ("bwd", lambda impl: impl.rbf_window_pool_grad(M, mask, MUS, 0.1, starts, ends, grad)),
        ):
            times = {name: min(timeit.repeat(lambda: fn(impl), number=1, repeat=args.repeat))
                     for name, impl in backends.items()}
            rows.append((f"{label} {kind}", times))

    docs, tfs, lens = bm25_case()
    outs = []
    for impl in backends.values():
        s = np.zeros(len(lens))
        impl.bm25_accumulate(s, docs, tfs, lens, 1.7, 0.9, 0.4, float(lens.mean()))
        outs.append(s)
    assert all(np.array_equal(outs[0], o) for o in outs)

    def bm25_run(impl):
        s = np.zeros(len(lens))
        impl.bm25_accumulate(s, docs, tfs, lens, 1.7, 0.9, 0.4, float(lens.mean()))

    rows.append(("bm25  20k postings", {name: min(timeit.repeat(lambda: bm25_run(impl), number=1,
                                                                 repeat=args.repeat))
                                        for name, impl in backends.items()}))

    names = list(backends)
    print(f"{'kernel':<32}" + "".join(f"{n + ' ms':>12}" for n in names) + ("     speedup" if len(names) > 1 else ""))
    for label, times in rows:
        line = f"{label:<32}" + "".join(f"{times[n] * 1e3:>12.2f}" for n in names)
        if "cython" in times:
            line += f"{times['python'] / times['cython']:>11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
