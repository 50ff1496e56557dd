"""Constant-product pool state, swaps, and capital accounting.

Pool operations are pure: they take a state and return a new one, so a
``PoolState`` can be shared freely as long as each simulation path owns
its own copy.  All quantities are continuous float64 token amounts; the
fee portion of every input stays inside the reserves (growing the
invariant product) and is additionally tracked in ``fees_accrued_*`` so
the divergence-style impermanent loss can strip it back out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

from . import kernels


class Direction(IntEnum):
    A_TO_B = kernels.DIR_A_TO_B
    B_TO_A = kernels.DIR_B_TO_A


@dataclass(frozen=True)
class PriceTick:
    """One block's fair prices, in base currency per token unit."""

    block_index: int
    p_a: float
    p_b: float

    def __post_init__(self):
        if not (self.p_a > 0.0 and math.isfinite(self.p_a)):
            raise ValueError(f"p_a must be positive and finite, got {self.p_a}")
        if not (self.p_b > 0.0 and math.isfinite(self.p_b)):
            raise ValueError(f"p_b must be positive and finite, got {self.p_b}")

    @property
    def rate(self) -> float:
        """Fair price of token B in token A units."""
        return self.p_b / self.p_a


@dataclass(frozen=True)
class PoolState:
    reserve_a: float
    reserve_b: float
    fees_accrued_a: float = 0.0
    fees_accrued_b: float = 0.0

    def __post_init__(self):
        if not (self.reserve_a > 0.0 and self.reserve_b > 0.0):
            raise ValueError("reserves must be positive")


@dataclass(frozen=True)
class SwapResult:
    direction: Direction
    amount_in: float
    amount_out: float
    fee_amount: float
    pool_after: PoolState


def init_pool(total_value: float, tick: PriceTick) -> PoolState:
    """Pool seeded with ``total_value`` split evenly between the tokens."""
    if not (total_value > 0.0 and math.isfinite(total_value)):
        raise ValueError(f"total_value must be positive and finite, got {total_value}")
    half = total_value / 2.0
    return PoolState(reserve_a=half / tick.p_a, reserve_b=half / tick.p_b)


def swap(pool: PoolState, direction: Direction, amount_in: float,
         fee_rate: float) -> SwapResult:
    """Execute a swap with the fee charged on the input token.

    ``fee_rate`` is a fraction in [0, 1).  The full input (fee included)
    is added to the input-side reserve, so the reserve product never
    decreases and grows strictly whenever ``fee_rate > 0``.
    """
    if not (amount_in > 0.0 and math.isfinite(amount_in)):
        raise ValueError(f"amount_in must be positive and finite, got {amount_in}")
    if not (0.0 <= fee_rate < 1.0):
        raise ValueError(f"fee_rate must be in [0, 1), got {fee_rate}")
    x, y, fees_a, fees_b, amount_out, fee_amount = kernels.swap_apply(
        pool.reserve_a, pool.reserve_b,
        pool.fees_accrued_a, pool.fees_accrued_b,
        int(direction), amount_in, fee_rate)
    if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(amount_out)):
        raise ArithmeticError("swap produced non-finite reserves")
    return SwapResult(
        direction=Direction(int(direction)),
        amount_in=amount_in,
        amount_out=amount_out,
        fee_amount=fee_amount,
        pool_after=PoolState(x, y, fees_a, fees_b),
    )


def spot_rate(pool: PoolState) -> float:
    """Marginal pool price of token B in token A units."""
    return pool.reserve_a / pool.reserve_b


def capital(a: float, b: float, tick: PriceTick) -> float:
    """Base-currency value of a token bundle at the tick's prices."""
    return a * tick.p_a + b * tick.p_b


def delta_p(delta_a: float, delta_b: float, fee_value: float, alpha: float,
            tick: PriceTick) -> float:
    """Capital change of a trader from a signed trade.

    Positive components are tokens received from the pool, negative are
    tokens paid in.  ``fee_value`` is an explicit base-currency fee term
    for callers whose amounts do not already embed the fee; when the
    amounts come from :func:`swap` the fee is already inside
    ``amount_out`` and ``fee_value`` should be 0.
    """
    return capital(delta_a, delta_b, tick) - fee_value - alpha
