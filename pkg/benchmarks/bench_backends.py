"""Compare the numba and plain-Python kernel backends.

Runs the same seeded batch in two subprocesses, one per backend, checks
the results agree bit for bit, and reports wall-clock timings.

    python benchmarks/bench_backends.py [--paths 50] [--blocks 1440]
"""

import argparse
import json
import os
import subprocess
import sys
import time

_CHILD_SNIPPET = """
import json, sys, time
import ammfeelab as al

n_paths, n_blocks = int(sys.argv[1]), int(sys.argv[2])
config = al.SimConfig(
    policy=al.PolicySpec(kind="ba"),
    source=al.SyntheticSource(n_paths=n_paths, n_blocks=n_blocks, regime="high_vol"),
    master_seed=7,
)
al.run_batch(al.SimConfig(
    source=al.SyntheticSource(n_paths=1, n_blocks=16), master_seed=7))  # warm JIT

t0 = time.perf_counter()
batch = al.run_batch(config)
elapsed = time.perf_counter() - t0

# Path-loop timing alone, with price paths pre-generated.
paths = [config.source.make_path(config.master_seed, i) for i in range(n_paths)]
t0 = time.perf_counter()
for i, path in enumerate(paths):
    al.run_path(config, path, i)
kernel_elapsed = time.perf_counter() - t0

print(json.dumps({
    "backend": al.BACKEND,
    "elapsed": elapsed,
    "kernel_elapsed": kernel_elapsed,
    "mean": batch.mean,
    "finals": [(r.final_pool.reserve_a, r.final_pool.reserve_b) for r in batch.results],
}))
"""


def run_backend(backend: str, n_paths: int, n_blocks: int) -> dict:
    env = dict(os.environ, AMMFEELAB_BACKEND=backend)
    out = subprocess.run(
        [sys.executable, "-c", _CHILD_SNIPPET, str(n_paths), str(n_blocks)],
        env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--paths", type=int, default=50)
    parser.add_argument("--blocks", type=int, default=1440)
    args = parser.parse_args()

    t0 = time.perf_counter()
    numba = run_backend("numba", args.paths, args.blocks)
    numba_total = time.perf_counter() - t0
    numpy = run_backend("numpy", args.paths, args.blocks)

    match = (numba["mean"] == numpy["mean"] and numba["finals"] == numpy["finals"])
    blocks = args.paths * args.blocks
    print(f"batch: {args.paths} paths x {args.blocks} blocks = {blocks} blocks")
    print(f"numba backend: batch {numba['elapsed']:.3f}s, path loop "
          f"{numba['kernel_elapsed']:.3f}s "
          f"({1e9 * numba['kernel_elapsed'] / blocks:.0f} ns/block; "
          f"{numba_total:.1f}s including interpreter+JIT startup)")
    print(f"numpy backend: batch {numpy['elapsed']:.3f}s, path loop "
          f"{numpy['kernel_elapsed']:.3f}s "
          f"({1e9 * numpy['kernel_elapsed'] / blocks:.0f} ns/block)")
    print(f"path-loop speedup: "
          f"{numpy['kernel_elapsed'] / numba['kernel_elapsed']:.1f}x")
    print(f"bit-identical results: {match}")
    return 0 if match else 1


if __name__ == "__main__":
    sys.exit(main())
