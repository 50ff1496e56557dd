import pytest

import ammfeelab as al


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the JIT kernels once so timed tests measure steady state."""
    config = al.SimConfig(
        policy=al.PolicySpec(kind="da"),
        uu=al.UUParams(prob_trade_per_block=1.0),
        source=al.SyntheticSource(n_paths=1, n_blocks=8),
        master_seed=0,
        keep_trades=True,
    )
    al.run_batch(config)


def tick(p_a=1.0, p_b=1.0, block_index=0):
    return al.PriceTick(block_index=block_index, p_a=p_a, p_b=p_b)
