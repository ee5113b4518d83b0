"""Time the compiled and pure-Python kernels on the same seeded workload.

    python3 benchmarks/bench_kernel.py --nodes 20 --runs 200

Reports the raw kernel call and the full ``simulate_fast`` (kernel plus
report assembly) per backend, and checks both backends agree on every run.
"""

import argparse
import random
import statistics
import time

from quantcons import _pykernel, kernel
from quantcons.digraph import assign_priorities, generate_random_strongly_connected
from quantcons.engine import default_max_rounds
from quantcons.experiments import derive_seed


def workload(nodes, p, runs, seed):
    cases = []
    for i in range(runs):
        s = derive_seed(seed, i)
        g = generate_random_strongly_connected(nodes, p, s)
        rng = random.Random(s)
        cases.append((g, assign_priorities(g), [rng.randint(-50, 50) for _ in range(nodes)]))
    return cases


def timed(fn, cases, repeat):
    best = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        for case in cases:
            fn(*case)
        best.append(time.perf_counter() - t0)
    return min(best)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=20)
    ap.add_argument("--edge-prob", type=float, default=0.2)
    ap.add_argument("--runs", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    cases = workload(args.nodes, args.edge_prob, args.runs, args.seed)
    raw_impls = {"python": _pykernel.run}
    if "cython" in kernel.available_backends():
        raw_impls["cython"] = kernel._ckernel.run
    else:
        print("compiled kernel not built; timing the Python fallback only")

    def raw(impl):
        def call(g, pr, values):
            ptr, idx = kernel._csr(pr)
            return impl(ptr, idx, values, default_max_rounds(g), 2 * g.n)
        return call

    def full(backend):
        return lambda g, pr, values: kernel.simulate_fast(g, pr, values, backend=backend)

    results = {}
    for name, impl in raw_impls.items():
        results[name] = (timed(raw(impl), cases, args.repeat), timed(full(name), cases, args.repeat))

    if len(raw_impls) == 2:
        for g, pr, values in cases:
            a = kernel.simulate_fast(g, pr, values, backend="python").to_dict()
            b = kernel.simulate_fast(g, pr, values, backend="cython").to_dict()
            a.pop("backend"), b.pop("backend")
            assert a == b, "backends disagree"

    rounds = statistics.fmean(
        kernel.simulate_fast(g, pr, v).rounds_executed for g, pr, v in cases
    )
    print(f"{args.runs} runs, n={args.nodes}, p={args.edge_prob}, mean rounds executed {rounds:.1f}")
    print(f"{'backend':<8}{'kernel ms/run':>16}{'simulate ms/run':>18}")
    for name, (k, f) in results.items():
        print(f"{name:<8}{1e3 * k / args.runs:>16.3f}{1e3 * f / args.runs:>18.3f}")
    if len(results) == 2:
        print(f"speedup: kernel {results['python'][0] / results['cython'][0]:.1f}x, "
              f"simulate {results['python'][1] / results['cython'][1]:.1f}x")


if __name__ == "__main__":
    main()
