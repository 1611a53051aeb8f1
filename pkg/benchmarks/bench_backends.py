"""Benchmark the compiled stream against the numpy fallback.

Times the raw primitives and the end-to-end exact sampler, and runs a
two-sample KS cross-check so a speedup never comes at the cost of a
distributional drift between backends.

Run:  python benchmarks/bench_backends.py [n_draws]
"""

import sys
import time

import numpy as np

import maxstable as ms
from maxstable.records import RecordParams
from maxstable.walk import cramer_root


def time_call(fn, reps):
    t0 = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - t0) / reps


def main():
    n_draws = int(sys.argv[1]) if len(sys.argv) > 1 else 300
    backends = ms.available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; benchmarking numpy only")

    design = ms.build_design(ms.CovarianceSpec.brownian([1 / 3, 2 / 3, 1.0]))
    params = RecordParams.for_design(design, 0.5)
    tilt = cramer_root(0.5)

    print(f"{'primitive':<28}" + "".join(f"{b:>14}" for b in backends))
    rows = [
        ("gaussian_rows (20k vecs)",
         lambda st: st.gaussian_rows(design.chol, 20000), 20),
        ("record_scan (20k vecs)",
         lambda st: st.record_scan(design.chol, 8673, 0.5, 20000), 20),
        ("exponentials (20k)", lambda st: st.exponentials(20000), 20),
        ("walk_tail (5k steps)",
         lambda st: st.walk_tail(-0.5, 0.5, tilt.theta, 5000), 20),
    ]
    for name, fn, reps in rows:
        cells = []
        for b in backends:
            st = ms.make_stream(1, 0, backend=b)
            cells.append(f"{time_call(lambda: fn(st), reps) * 1e3:11.2f} ms")
        print(f"{name:<28}" + "".join(f"{c:>14}" for c in cells))

    print(f"\nalgorithm_m, {n_draws} draws per backend:")
    samples = {}
    for b in backends:
        st = ms.make_stream(2, 0, backend=b)
        t0 = time.perf_counter()
        samples[b] = [ms.algorithm_m(design, params, tilt, st)
                      for _ in range(n_draws)]
        dt = (time.perf_counter() - t0) / n_draws
        mean_cost = np.mean([s.cost for s in samples[b]])
        print(f"  {b:>9}: {dt * 1e3:7.2f} ms/draw   mean cost "
              f"{mean_cost:9.0f} elementary variables")

    if len(backends) == 2:
        try:
            import scipy.stats as sps
        except ImportError:
            print("scipy not available; skipping the KS cross-check")
            return
        m1 = np.array([s.m for s in samples["compiled"]])
        m2 = np.array([s.m for s in samples["numpy"]])
        ps = [sps.ks_2samp(m1[:, j], m2[:, j]).pvalue for j in range(3)]
        print("\ncross-backend KS p-values per coordinate:",
              [f"{p:.3f}" for p in ps])
        if min(ps) < 1e-3:
            print("WARNING: backends disagree in law")


if __name__ == "__main__":
    main()
