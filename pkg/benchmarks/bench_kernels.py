"""Time the numba kernels against the numpy/scipy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--rows 20000]
"""
import argparse
import time

import numpy as np

from lowweight import kernels
from lowweight.encoder import plan_matmat
from lowweight.sparsemat import generate_random_sparse
from lowweight.verifier import support_bipartite_graph


def best_of(fn, repeat):
    fn()  # warm-up (jit compile / caches)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--rows", type=int, default=20000)
    ap.add_argument("--cols", type=int, default=500)
    ap.add_argument("--density", type=float, default=0.01)
    args = ap.parse_args()
    if not kernels.HAVE_NUMBA:
        print("numba unavailable (or LOWWEIGHT_DISABLE_JIT set): *_nb kernels run as plain python")

    blocks = [generate_random_sparse(args.rows, args.cols, args.density, i) for i in range(3)]
    coeffs = np.random.default_rng(0).standard_normal(3)
    A, B = blocks[0], blocks[1]
    x = np.random.default_rng(1).standard_normal(args.rows)
    plan = plan_matmat(27, 6, 4, 3, 2, 2, seed=0)
    graphs = [support_bipartite_graph(plan, [i for i in range(27) if i not in (j, j + 1, j + 2)])
              for j in range(0, 24, 3)]

    cases = {
        "csr_lincomb (3 blocks)": (lambda: kernels.csr_lincomb_nb(blocks, coeffs),
                                   lambda: kernels.csr_lincomb_np(blocks, coeffs)),
        "spmv_t": (lambda: kernels.spmv_t_nb(A, x), lambda: kernels.spmv_t_np(A, x)),
        "spgemm_t": (lambda: kernels.spgemm_t_nb(A, B), lambda: kernels.spgemm_t_np(A, B)),
        "max_matching (8 graphs)": (
            lambda: [kernels.max_matching_nb(g.adj_ptr, g.adj_idx, g.n_right) for g in graphs],
            lambda: [kernels.max_matching_np(g.adj_ptr, g.adj_idx, g.n_right) for g in graphs]),
    }
    print(f"{'kernel':<26}{'numba ms':>12}{'numpy ms':>12}{'speedup':>10}")
    for name, (nb, npf) in cases.items():
        t_nb = best_of(nb, args.repeat)
        t_np = best_of(npf, args.repeat)
        print(f"{name:<26}{1e3 * t_nb:>12.3f}{1e3 * t_np:>12.3f}{t_np / t_nb:>10.2f}")


if __name__ == "__main__":
    main()
