"""Fee-policy state machines: examples and the exact-integer invariants."""

import numpy as np
import pytest

import ammfeelab as al
from ammfeelab.amm import Direction
from ammfeelab.fees import BlockObservation


def obs(start, end, oracle=None):
    return BlockObservation(pool_rate_start=start, pool_rate_end=end,
                            oracle_rate=oracle)


def reference_ba(moves, f_init=30, f_step=1):
    """Re-derivation of the block-adaptive rule for cross-checking.

    ``moves`` is a sequence of -1 (pool rate fell), +1 (rose), 0.
    """
    ab, ba = f_init, f_init
    for move in moves:
        if move < 0 and ba >= f_step:
            ab, ba = ab + f_step, ba - f_step
        elif move > 0 and ab >= f_step:
            ab, ba = ab - f_step, ba + f_step
    return ab, ba


class TestFixed:
    def test_constant_schedule(self):
        policy = al.policy_fixed(30)
        assert (policy.fee_a_to_b, policy.fee_b_to_a) == (30, 30)
        assert policy.fee_for(Direction.A_TO_B) == 30
        assert policy.fee_for(Direction.B_TO_A) == 30

    def test_zero_fee(self):
        policy = al.policy_fixed(0)
        assert policy.schedule() == al.FeeSchedule(0, 0)

    def test_stateless_after_many_events(self):
        policy = al.policy_fixed(30)
        for i in range(1000):
            policy.on_trade(Direction.A_TO_B if i % 2 else Direction.B_TO_A)
            policy.on_block_start(obs(1.0, 0.5 + (i % 3)))
        assert policy.schedule() == al.FeeSchedule(30, 30)

    def test_fraction(self):
        assert al.FeeSchedule(30, 30).fraction(Direction.A_TO_B) == pytest.approx(0.003)


class TestBlockAdaptive:
    def test_single_decrease(self):
        policy = al.policy_block_adaptive()
        policy.on_block_start(obs(1.0, 0.99))
        assert (policy.fee_a_to_b, policy.fee_b_to_a) == (31, 29)

    def test_unchanged_rate(self):
        policy = al.policy_block_adaptive()
        policy.on_block_start(obs(1.0, 1.0))
        assert (policy.fee_a_to_b, policy.fee_b_to_a) == (30, 30)

    def test_saturation_at_the_boundary(self):
        policy = al.policy_block_adaptive()
        for i in range(29):
            policy.on_block_start(obs(1.0, 0.9))
        assert (policy.fee_a_to_b, policy.fee_b_to_a) == (59, 1)
        assert (59, 1) == reference_ba([-1] * 29)
        policy.on_block_start(obs(1.0, 0.9))
        assert (policy.fee_a_to_b, policy.fee_b_to_a) == (60, 0)
        policy.on_block_start(obs(1.0, 0.9))
        assert (policy.fee_a_to_b, policy.fee_b_to_a) == (60, 0)
        assert (60, 0) == reference_ba([-1] * 31)


class TestDealAdaptive:
    def test_single_trade(self):
        policy = al.policy_deal_adaptive()
        policy.on_trade(Direction.A_TO_B)
        assert (policy.fee_a_to_b, policy.fee_b_to_a) == (31, 29)

    def test_inverse_step(self):
        policy = al.policy_deal_adaptive()
        policy.on_trade(Direction.A_TO_B)
        policy.on_trade(Direction.B_TO_A)
        assert (policy.fee_a_to_b, policy.fee_b_to_a) == (30, 30)

    def test_clamp_at_boundary(self):
        policy = al.policy_deal_adaptive()
        for _ in range(30):
            policy.on_trade(Direction.A_TO_B)
        assert (policy.fee_a_to_b, policy.fee_b_to_a) == (60, 0)
        policy.on_trade(Direction.A_TO_B)
        assert (policy.fee_a_to_b, policy.fee_b_to_a) == (60, 0)


class TestOracleBased:
    def test_cheap_b_on_pool(self):
        policy = al.policy_oracle_based()
        policy.on_block_start(obs(1.0, 1.0, oracle=1.2))
        assert (policy.fee_a_to_b, policy.fee_b_to_a) == (45, 15)

    def test_mirror(self):
        policy = al.policy_oracle_based()
        policy.on_block_start(obs(1.0, 1.0 / 1.2, oracle=1.0))
        assert (policy.fee_a_to_b, policy.fee_b_to_a) == (15, 45)

    def test_tie_keeps_previous_schedule(self):
        policy = al.policy_oracle_based()
        policy.on_block_start(obs(1.0, 1.0, oracle=1.2))
        policy.on_block_start(obs(1.0, 1.0, oracle=1.0))
        assert (policy.fee_a_to_b, policy.fee_b_to_a) == (45, 15)

    def test_missing_oracle_rate(self):
        policy = al.policy_oracle_based()
        with pytest.raises(ValueError):
            policy.on_block_start(obs(1.0, 1.0))

    def test_sign_only_dependence(self):
        narrow = al.policy_oracle_based()
        wide = al.policy_oracle_based()
        for start_rate, fair in [(1.0, 1.02), (1.0, 0.97), (1.1, 1.3)]:
            narrow.on_block_start(obs(start_rate, start_rate, oracle=fair))
            spot = 1.0 / start_rate
            wide.on_block_start(obs(start_rate, start_rate,
                                    oracle=spot + 10.0 * (fair - spot)))
            assert narrow.schedule() == wide.schedule()


class TestAdaptiveInvariants:
    def test_sum_and_bounds_over_random_update_storm(self):
        rng = np.random.default_rng(314)
        moves = rng.integers(-1, 2, size=100_000)
        ba = al.policy_block_adaptive()
        da = al.policy_deal_adaptive()
        for move in moves:
            ba.on_block_start(obs(1.0, 1.0 + 0.01 * float(move)))
            if move != 0:
                da.on_trade(Direction.A_TO_B if move < 0 else Direction.B_TO_A)
            for policy in (ba, da):
                assert policy.fee_a_to_b + policy.fee_b_to_a == 60
                assert 0 <= policy.fee_a_to_b <= 60
                assert 0 <= policy.fee_b_to_a <= 60
        assert (ba.fee_a_to_b, ba.fee_b_to_a) == reference_ba(list(moves))

    def test_determinism(self):
        rng = np.random.default_rng(7)
        rates = rng.uniform(0.9, 1.1, size=500)
        schedules = []
        for _ in range(2):
            policy = al.policy_block_adaptive()
            seq = []
            prev = 1.0
            for rate in rates:
                policy.on_block_start(obs(prev, rate))
                prev = rate
                seq.append(policy.schedule())
            schedules.append(seq)
        assert schedules[0] == schedules[1]
