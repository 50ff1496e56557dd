"""Cross-backend equivalence: the JIT and plain-Python paths agree bitwise."""

import json
import os
import subprocess
import sys

import pytest

_SNIPPET = """
import json
import ammfeelab as al
config = al.SimConfig(
    policy=al.PolicySpec(kind="%s"),
    source=al.SyntheticSource(n_paths=2, n_blocks=150, regime="high_vol"),
    master_seed=1234,
    alpha=0.01,
)
batch = al.run_batch(config)
print(json.dumps({
    "backend": al.BACKEND,
    "mean": batch.mean,
    "pools": [[r.final_pool.reserve_a, r.final_pool.reserve_b,
               r.final_pool.fees_accrued_a, r.final_pool.fees_accrued_b]
              for r in batch.results],
    "counts": [[r.iu_trades, r.uu_trades] for r in batch.results],
}))
"""


def run_with_backend(backend: str, policy: str) -> dict:
    env = dict(os.environ, AMMFEELAB_BACKEND=backend)
    proc = subprocess.run([sys.executable, "-c", _SNIPPET % policy],
                          env=env, capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return json.loads(proc.stdout.strip().splitlines()[-1])


@pytest.mark.parametrize("policy", ["fx", "ob"])
def test_backends_bit_identical(policy):
    numba = run_with_backend("numba", policy)
    numpy = run_with_backend("numpy", policy)
    assert numba["backend"] == "numba"
    assert numpy["backend"] == "numpy"
    assert numba["mean"] == numpy["mean"]
    assert numba["pools"] == numpy["pools"]
    assert numba["counts"] == numpy["counts"]


def test_backend_env_validation():
    env = dict(os.environ, AMMFEELAB_BACKEND="fortran")
    proc = subprocess.run([sys.executable, "-c", "import ammfeelab"],
                          env=env, capture_output=True, text=True)
    assert proc.returncode != 0
    assert "AMMFEELAB_BACKEND" in proc.stderr
