"""Compare the compiled and pure-Python kernel backends.

Times the per-vertex seeding stage and a block of Gibbs sweeps on a planted
benchmark graph, checks that both backends agree bitwise, and prints one line
per (kernel, backend).

    python3 benchmarks/bench_kernels.py --vertices 2000 --sweeps 20
"""

import argparse
import time

import numpy as np

from giohms import _kernels
from giohms.inference import EnergyParams, _compiled
from giohms.merge import merge_all
from giohms.ohms import build_ohms
from giohms.seeding import SeedConfig, seed_all
from giohms.synth import planted_for_size, planted_overlap


def bench_seeding(g, name, repeat):
    best, table = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        table = seed_all(g, SeedConfig(rng_seed=1), threads=1, backend=name)
        best = min(best, time.perf_counter() - t0)
    return best, table.comm


def bench_gibbs(net, name, sweeps, repeat):
    comp = _compiled(net)
    vec = EnergyParams.constant(net).to_vector(net)
    wu, wb = vec[:comp.n].copy(), vec[comp.n:].copy()
    kern = comp.kernel(name)
    best, pos = float("inf"), None
    for _ in range(repeat):
        pos = np.zeros(comp.n, dtype=np.int32)
        state = np.array([7], dtype=np.uint64)
        t0 = time.perf_counter()
        for _ in range(sweeps):
            kern.sweep(wu, wb, pos, state)
        best = min(best, time.perf_counter() - t0)
    return best, pos


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--vertices", type=int, default=2000)
    p.add_argument("--sweeps", type=int, default=20)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)

    cfg = planted_for_size(args.vertices, 50, 5, 20.0, 0.002, rng_seed=3)
    g, _ = planted_overlap(cfg)
    net = build_ohms(g, merge_all(seed_all(g)), 2)
    print(f"graph: {g.num_vertices} vertices, {g.num_edges} edges; "
          f"ohms: {net.num_hidden} hidden, {net.cand_lab.size} candidate slots")

    backends = _kernels.available()
    results = {}
    for name in backends:
        t_seed, comm = bench_seeding(g, name, args.repeat)
        t_gibbs, pos = bench_gibbs(net, name, args.sweeps, args.repeat)
        results[name] = (t_seed, t_gibbs, comm, pos)
        print(f"{name:>7}  seeding {t_seed:8.3f} s   gibbs x{args.sweeps} {t_gibbs:8.3f} s")
    if len(backends) > 1:
        a, b = results["python"], results["cython"]
        same = np.array_equal(a[2], b[2]) and np.array_equal(a[3], b[3])
        print(f"speedup  seeding {a[0] / b[0]:6.1f}x   gibbs {a[1] / b[1]:6.1f}x   "
              f"outputs identical: {same}")


if __name__ == "__main__":
    main()
