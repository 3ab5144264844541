"""Compare the compiled and numpy kernel backends on random coherent trees.

    python3 benchmarks/bench_kernels.py --events 16 --repeat 5

Prints one CSV row per (kernel, backend) with the median wall time and
checks that both backends return identical results.
"""
import argparse
import statistics
import sys
import time

import numpy as np

from fvkit import _kernels, quant
from fvkit._kernels import _pykernels
from fvkit.ftree import BasicEvent, FaultTree, Gate, Probability


def random_tree(n_events, n_gates, rng):
    events = [BasicEvent(f"E{i}", Probability(float(rng.uniform(1e-4, 1e-2)))) for i in range(n_events)]
    gates = []
    pool = [e.name for e in events]
    for g in range(n_gates):
        k = int(rng.integers(2, 5))
        kids = tuple(rng.choice(pool, size=min(k, len(pool)), replace=False))
        gates.append(Gate(f"G{g}", "AND" if rng.random() < 0.4 else "OR", kids))
        pool.append(f"G{g}")
    used = {c for g in gates for c in g.children}
    roots = tuple(name for name in pool if name not in used)
    top = Gate("TOP", "OR", roots)
    return FaultTree(tuple(events), tuple(gates) + (top,), "TOP")


def timed(fn, repeat):
    out, times = None, []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return out, statistics.median(times) * 1e3


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--events", type=int, default=16)
    ap.add_argument("--gates", type=int, default=8)
    ap.add_argument("--cuts", type=int, default=16, help="cut sets for inclusion-exclusion (<= 20)")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = {"python": _pykernels}
    if _kernels.BACKEND == "cython":
        backends["cython"] = _kernels.impl
    else:
        print("compiled extension not built; timing the numpy fallback only", file=sys.stderr)

    rng = np.random.default_rng(args.seed)
    tree = random_tree(args.events, args.gates, rng)
    n = len(tree.events)
    prog = quant._gate_program(tree)
    qv = np.array([tree.unavailabilities()[e] for e in tree.event_names])
    fail = _pykernels.failure_table(n, *prog)
    masks = np.asarray(_pykernels.minimal_states(fail, n), dtype=np.uint64)
    ie_q = rng.uniform(1e-3, 1e-1, size=12)
    ie_masks = np.array(sorted({int(m) for m in rng.integers(1, 1 << 12, size=args.cuts)}), dtype=np.uint64)
    absorb_in = np.array(sorted({int(m) for m in rng.integers(1, 1 << 20, size=4000)},
                                key=lambda m: (bin(m).count("1"), m)), dtype=np.uint64)

    cases = {
        "failure_table": lambda k: k.failure_table(n, *prog),
        "minimal_states": lambda k: k.minimal_states(fail, n),
        "state_sums": lambda k: k.state_sums(qv, masks, fail, n),
        "inclusion_exclusion": lambda k: k.inclusion_exclusion(ie_q, ie_masks),
        "absorb": lambda k: k.absorb(absorb_in),
    }
    print("kernel,backend,median_ms,speedup,identical")
    for name, fn in cases.items():
        results = {b: timed(lambda: fn(k), args.repeat) for b, k in backends.items()}
        ref, base = results["python"]
        for b, (out, ms) in results.items():
            print(f"{name},{b},{ms:.3f},{base / ms:.1f},{same(out, ref)}")


if __name__ == "__main__":
    main()
