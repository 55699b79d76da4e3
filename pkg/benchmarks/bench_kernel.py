"""Compiled core versus pure-Python fallback.

Two measurements:
  kernel  per-slot flow selection plus activation on random instances,
          both backends in this process
  run     whole simulations in fresh interpreters, with and without
          TCPBP_PURE=1

Usage: python benchmarks/bench_kernel.py [--instances N] [--horizon H]
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from tcpbp import _pykernel, kernel


def random_instance(rng, n_nodes, n_links, n_flows):
    pairs = [(a, b) for a in range(n_nodes) for b in range(n_nodes) if a != b]
    idx = rng.choice(len(pairs), size=min(n_links, len(pairs)), replace=False)
    L = len(idx)
    return (
        rng.integers(0, 50, (n_nodes, n_flows)).astype(np.int64),
        rng.integers(0, 50, (n_nodes, n_flows)).astype(np.int64),
        np.full(n_nodes, 10.0),
        np.array([pairs[k][0] for k in idx], dtype=np.int64),
        np.array([pairs[k][1] for k in idx], dtype=np.int64),
        np.ones(L),
        (rng.random(L) < 0.8).astype(np.uint8),
        np.ones((L, n_flows), dtype=np.uint8),
        rng.random(n_flows),
        rng.random(L),
        n_nodes,
        16,
    )


def bench_kernel(instances: int, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    cases = [random_instance(rng, 13, 36, 4) for _ in range(instances)]
    out = {}
    for name in kernel.available():
        mod = kernel.get(name)
        start = time.perf_counter()
        for args in cases:
            mod.decide(*args)
        out[name] = (time.perf_counter() - start) / instances * 1e6
    return out


RUN = """
import json, time
from tcpbp import kernel
from tcpbp.sim import run
from tcpbp.topology import preset
t = {}
for name in ("onehop_downlink", "diamond", "grid"):
    start = time.perf_counter()
    run(preset(name).replace(horizon_slots=HORIZON))
    t[name] = time.perf_counter() - start
print(json.dumps(dict(backend=kernel.backend_name(), times=t)))
"""


def bench_runs(horizon: int) -> list[dict]:
    out = []
    for pure in (False, True):
        env = dict(os.environ)
        env.pop("TCPBP_PURE", None)
        if pure:
            env["TCPBP_PURE"] = "1"
        proc = subprocess.run([sys.executable, "-c", RUN.replace("HORIZON", str(horizon))], env=env,
                              capture_output=True, text=True, check=True)
        out.append(json.loads(proc.stdout))
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--instances", type=int, default=2000)
    parser.add_argument("--horizon", type=int, default=20_000)
    args = parser.parse_args(argv)

    k = bench_kernel(args.instances)
    print(f"kernel decide, 13 nodes / 36 links / 4 flows ({args.instances} instances)")
    for name, us in k.items():
        print(f"  {name:7s} {us:9.1f} us/slot")
    if "cython" in k:
        print(f"  speedup {k[_pykernel.NAME] / k['cython']:.1f}x")

    runs = bench_runs(args.horizon)
    print(f"\nfull runs, {args.horizon} slots")
    names = list(runs[0]["times"])
    print(f"  {'backend':8s}" + "".join(f"{n:>17s}" for n in names))
    for r in runs:
        print(f"  {r['backend']:8s}" + "".join(f"{r['times'][n]:16.2f}s" for n in names))
    if len(runs) == 2 and runs[0]["backend"] != runs[1]["backend"]:
        ratio = [runs[1]["times"][n] / runs[0]["times"][n] for n in names]
        print("  speedup " + "".join(f"{x:16.1f}x" for x in ratio))
    return 0


if __name__ == "__main__":
    sys.exit(main())
