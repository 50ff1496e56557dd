"""Directional fee policies behind one small state-machine interface.

A policy owns the current integer basis-point pair
``(fee_a_to_b, fee_b_to_a)`` and advances it from block observations
and/or executed trades.  Fees stay integers internally so the adaptive
policies' sum and bound invariants hold exactly; they turn into
fractions only at swap time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import kernels
from .amm import Direction


@dataclass(frozen=True)
class FeeSchedule:
    """Snapshot of the two directional fees, in basis points."""

    fee_a_to_b: int
    fee_b_to_a: int

    def fraction(self, direction: Direction) -> float:
        bps = self.fee_a_to_b if direction == Direction.A_TO_B else self.fee_b_to_a
        return bps * kernels.BPS


@dataclass(frozen=True)
class BlockObservation:
    """What a policy may see when a block opens.

    ``pool_rate_start`` and ``pool_rate_end`` are the pool rate
    (reserve_b per reserve_a) at the start and end of the block that
    just closed; ``oracle_rate`` is the fair price of token B in token A
    for the block being opened, supplied only to the oracle policy.
    """

    pool_rate_start: float
    pool_rate_end: float
    oracle_rate: Optional[float] = None


class FeePolicy:
    """Shared interface; concrete policies override the update hooks."""

    kind = "fx"
    kernel_kind = kernels.POLICY_FX

    def __init__(self, fee_a_to_b: int, fee_b_to_a: int):
        if fee_a_to_b < 0 or fee_b_to_a < 0:
            raise ValueError("fees must be non-negative basis points")
        self.fee_a_to_b = int(fee_a_to_b)
        self.fee_b_to_a = int(fee_b_to_a)

    def schedule(self) -> FeeSchedule:
        return FeeSchedule(self.fee_a_to_b, self.fee_b_to_a)

    def fee_for(self, direction: Direction) -> int:
        return self.fee_a_to_b if direction == Direction.A_TO_B else self.fee_b_to_a

    def on_block_start(self, obs: BlockObservation) -> FeeSchedule:
        return self.schedule()

    def on_trade(self, direction: Direction) -> FeeSchedule:
        return self.schedule()

    # Parameters handed to the fused path kernel: (step, f_ad, f_nad).
    def kernel_params(self) -> tuple[int, int, int]:
        return (0, 0, 0)

    def set_state(self, fee_a_to_b: int, fee_b_to_a: int) -> None:
        self.fee_a_to_b = int(fee_a_to_b)
        self.fee_b_to_a = int(fee_b_to_a)


class FixedFee(FeePolicy):
    """Same constant fee in both directions, forever."""

    kind = "fx"
    kernel_kind = kernels.POLICY_FX

    def __init__(self, f_fx: int = 30):
        super().__init__(f_fx, f_fx)


class BlockAdaptiveFee(FeePolicy):
    """Shifts fee toward the direction the pool rate moved last block."""

    kind = "ba"
    kernel_kind = kernels.POLICY_BA

    def __init__(self, f_init: int = 30, f_step: int = 1):
        super().__init__(f_init, f_init)
        if f_step < 0:
            raise ValueError("f_step must be non-negative")
        self.f_step = int(f_step)

    def on_block_start(self, obs: BlockObservation) -> FeeSchedule:
        self.fee_a_to_b, self.fee_b_to_a = kernels.ba_shift(
            self.fee_a_to_b, self.fee_b_to_a,
            obs.pool_rate_start, obs.pool_rate_end, self.f_step)
        return self.schedule()

    def kernel_params(self):
        return (self.f_step, 0, 0)


class DealAdaptiveFee(FeePolicy):
    """Shifts fee toward the direction of each executed trade."""

    kind = "da"
    kernel_kind = kernels.POLICY_DA

    def __init__(self, f_init: int = 30, f_step: int = 1):
        super().__init__(f_init, f_init)
        if f_step < 0:
            raise ValueError("f_step must be non-negative")
        self.f_step = int(f_step)

    def on_trade(self, direction: Direction) -> FeeSchedule:
        self.fee_a_to_b, self.fee_b_to_a = kernels.da_shift(
            self.fee_a_to_b, self.fee_b_to_a, int(direction), self.f_step)
        return self.schedule()

    def kernel_params(self):
        return (self.f_step, 0, 0)


class OracleBasedFee(FeePolicy):
    """Charges ``f_ad`` in the arbitrage direction the oracle reveals.

    The arbitrage direction is A-to-B when the pool's spot price of B
    (in A units) sits below the oracle's fair rate, B-to-A when above;
    an exact tie keeps the previous schedule.
    """

    kind = "ob"
    kernel_kind = kernels.POLICY_OB

    def __init__(self, f_ad: int = 45, f_nad: int = 15):
        if f_ad < 0 or f_nad < 0:
            raise ValueError("fees must be non-negative basis points")
        # Neutral midpoint until the first observation resolves a direction
        # (or while the spot sits exactly on the fair rate).
        mid = (int(f_ad) + int(f_nad)) // 2
        super().__init__(mid, mid)
        self.f_ad = int(f_ad)
        self.f_nad = int(f_nad)

    def on_block_start(self, obs: BlockObservation) -> FeeSchedule:
        if obs.oracle_rate is None:
            raise ValueError("oracle-based policy needs oracle_rate in the observation")
        spot = 1.0 / obs.pool_rate_end
        self.fee_a_to_b, self.fee_b_to_a = kernels.ob_select(
            self.fee_a_to_b, self.fee_b_to_a, spot, obs.oracle_rate,
            self.f_ad, self.f_nad)
        return self.schedule()

    def kernel_params(self):
        return (0, self.f_ad, self.f_nad)


def policy_fixed(f_fx: int = 30) -> FixedFee:
    return FixedFee(f_fx)


def policy_block_adaptive(f_init: int = 30, f_step: int = 1) -> BlockAdaptiveFee:
    return BlockAdaptiveFee(f_init, f_step)


def policy_deal_adaptive(f_init: int = 30, f_step: int = 1) -> DealAdaptiveFee:
    return DealAdaptiveFee(f_init, f_step)


def policy_oracle_based(f_ad: int = 45, f_nad: int = 15) -> OracleBasedFee:
    return OracleBasedFee(f_ad, f_nad)
