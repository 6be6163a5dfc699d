"""Time the numba and numpy aggregation kernels on a batch of pixel grids.

    python benchmarks/bench_kernels.py [--graphs 32] [--radius 1] [--repeat 5]

Both paths run in the same process (the ``use_numba`` argument picks one), so
the numbers are directly comparable. ``SGCN_DISABLE_NUMBA=1`` is not needed
here; it only changes the default used by the library.
"""
import argparse
import time

import numpy as np

from sgcn import kernels
from sgcn._accel import HAVE_NUMBA
from sgcn.graph import batch, build_grid_graph, relative_positions


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--graphs", type=int, default=32)
    parser.add_argument("--size", type=int, default=28)
    parser.add_argument("--radius", type=int, default=1)
    parser.add_argument("--width", type=int, default=16, help="feature channels d")
    parser.add_argument("--filters", type=int, default=4, help="filters k")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    rng = np.random.default_rng(0)
    b = batch([build_grid_graph(rng.random((args.size, args.size)), args.radius)
               for _ in range(args.graphs)])
    rel = relative_positions(b.positions, b.indptr, b.indices)
    table, etype = kernels.edge_types(rel)
    k, d = args.filters, args.width
    h = rng.standard_normal((b.n, d))
    U = rng.standard_normal((k, 2, d))
    bias = rng.standard_normal((k, d))
    gates = np.maximum(kernels.gate_preactivation(table, U, bias), 0.0)
    gout = rng.standard_normal((b.n, k * d))
    indices = b.indices

    print(f"{b.n} nodes, {b.num_edges} edges, {len(table)} edge types, k={k}, d={d}")
    backends = [False] + ([True] if HAVE_NUMBA else [])
    results = {}
    for use in backends:
        name = "numba" if use else "numpy"
        # first call compiles (numba) or warms caches (numpy)
        kernels.scatter_forward(b.indptr, indices, etype, gates, h, use)
        fwd = best_of(lambda: kernels.scatter_forward(b.indptr, indices, etype, gates, h, use), args.repeat)
        kernels.scatter_backward(b.indptr, indices, etype, gates, h, gout, use)
        bwd = best_of(lambda: kernels.scatter_backward(b.indptr, indices, etype, gates, h, gout, use),
                      args.repeat)
        results[name] = (fwd, bwd)
        print(f"{name:6s} forward {fwd * 1e3:8.2f} ms  backward {bwd * 1e3:8.2f} ms")
    if len(results) == 2:
        diff = 0.0
        for fn, extra in ((kernels.scatter_forward, ()), (kernels.scatter_backward, (gout,))):
            a = fn(b.indptr, indices, etype, gates, h, *extra, False)
            c = fn(b.indptr, indices, etype, gates, h, *extra, True)
            for x, y in zip(*(v if isinstance(v, tuple) else (v,) for v in (a, c))):
                diff = max(diff, float(np.max(np.abs(x - y))))
        (f_np, b_np), (f_nb, b_nb) = results["numpy"], results["numba"]
        print(f"speedup forward x{f_np / f_nb:.1f}, backward x{b_np / b_nb:.1f}; "
              f"max |numba - numpy| = {diff:.1e}")
    else:
        print("numba not installed; only the numpy path was timed")


if __name__ == "__main__":
    main()
