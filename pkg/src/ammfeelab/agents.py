"""Trader models: the informed arbitrageur and the uninformed noise trader.

The informed trader sizes its trade with the closed form in
``kernels.iu_optimal``; :func:`iu_brute_force_oracle` is a deliberately
independent numeric maximizer of the same objective, kept free of the
closed form so tests and calibration can certify one against the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Optional

from . import kernels
from .amm import Direction, PoolState, PriceTick, capital
from .fees import FeeSchedule
from .rng import Stream


class AgentClass(IntEnum):
    INFORMED = kernels.AGENT_INFORMED
    UNINFORMED = kernels.AGENT_UNINFORMED


@dataclass(frozen=True)
class TradeIntent:
    direction: Direction
    amount_in: float
    agent_class: AgentClass


@dataclass(frozen=True)
class UUParams:
    """Uninformed-trader calibration.

    ``size_mean``/``size_std`` parameterize the normal the trade size is
    drawn from, as a fraction of the input-side reserve, rejected back
    into ``(0, max_fraction]``.  Defaults are this artifact's own
    calibration, not published values; every field is a config key.
    """

    prob_trade_per_block: float = 0.5
    size_mean: float = 0.001
    size_std: float = 0.0005
    max_fraction: float = 0.05

    def __post_init__(self):
        if not 0.0 <= self.prob_trade_per_block <= 1.0:
            raise ValueError("prob_trade_per_block must be in [0, 1]")
        if not self.size_mean > 0.0:
            raise ValueError("size_mean must be positive")
        if self.size_std < 0.0:
            raise ValueError("size_std must be non-negative")
        if not 0.0 < self.max_fraction < 1.0:
            raise ValueError("max_fraction must be in (0, 1)")
        if self.size_std == 0.0 and self.size_mean > self.max_fraction:
            raise ValueError("size_mean above max_fraction with zero std never accepts")
        if self.size_std > 0.0 and self.size_mean - 6.0 * self.size_std > self.max_fraction:
            raise ValueError("size distribution has negligible mass in (0, max_fraction]")


def iu_optimal_trade(pool: PoolState, tick: PriceTick, fees: FeeSchedule,
                     alpha: float = 0.0) -> Optional[TradeIntent]:
    """The informed trader's profit-maximizing trade, or None.

    Returns a trade only when its capital change at the tick's prices,
    after the directional fee and the network charge ``alpha``, is
    strictly positive.
    """
    found, direction, amount_in, _out, _fee = kernels.iu_optimal(
        pool.reserve_a, pool.reserve_b, tick.p_a, tick.p_b,
        fees.fee_a_to_b, fees.fee_b_to_a, alpha)
    if not found:
        return None
    return TradeIntent(Direction(int(direction)), amount_in, AgentClass.INFORMED)


def _golden_max(profit, lo: float, hi: float) -> tuple[float, float]:
    # Golden-section search for the max of a unimodal function on [lo, hi].
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = profit(c), profit(d)
    for _ in range(200):
        if b - a <= 1e-14 * max(1.0, abs(a) + abs(b)):
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = profit(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = profit(d)
    best = (a + b) / 2.0
    return best, profit(best)


def _parabolic_polish(profit, a: float, h: float) -> float:
    # Comparison-based search localizes a flat quadratic maximum only to
    # ~sqrt(eps); one parabola fit through well-separated samples does
    # far better.  Keeps the input point when the fit is degenerate.
    f0, fp, fm = profit(a), profit(a + h), profit(a - h)
    denom = fp - 2.0 * f0 + fm
    if not denom < 0.0:
        return a
    vertex = a - h * (fp - fm) / (2.0 * denom)
    return vertex if vertex > 0.0 else a


def iu_brute_force_oracle(pool: PoolState, tick: PriceTick, fees: FeeSchedule,
                          alpha: float = 0.0,
                          grid_resolution: int = 2000) -> Optional[TradeIntent]:
    """Numeric maximizer of the informed trader's capital change.

    Scans a linear grid of input sizes per direction, then refines the
    best bracket by golden-section search.  The quote formula is written
    out locally so this stays an independent check on the closed form.
    Slow by design; for tests and calibration only.
    """
    if grid_resolution < 10:
        raise ValueError("grid_resolution too small to bracket a maximum")
    x, y = pool.reserve_a, pool.reserve_b

    best: Optional[tuple[float, Direction, float]] = None
    for direction in (Direction.A_TO_B, Direction.B_TO_A):
        # The quote is evaluated in the cancellation-free product form
        # (out = reserve_out * g * a / (reserve_in + g * a), identical to
        # solving the invariant) so tiny near-band optima stay resolvable.
        if direction == Direction.A_TO_B:
            g = 1.0 - fees.fee_a_to_b * kernels.BPS
            reserve_in, p_in, p_out = x, tick.p_a, tick.p_b

            def profit(a, _g=g):
                out = y * _g * a / (x + _g * a)
                return out * p_out - a * p_in - alpha
        else:
            g = 1.0 - fees.fee_b_to_a * kernels.BPS
            reserve_in, p_in, p_out = y, tick.p_b, tick.p_a

            def profit(a, _g=g):
                out = x * _g * a / (y + _g * a)
                return out * p_out - a * p_in - alpha

        lo = kernels.TRADE_FLOOR * reserve_in
        hi = reserve_in
        step = (hi - lo) / grid_resolution
        grid_best_i, grid_best_v = 0, profit(lo)
        for i in range(1, grid_resolution + 1):
            v = profit(lo + i * step)
            if v > grid_best_v:
                grid_best_i, grid_best_v = i, v
        bracket_lo = lo + max(0, grid_best_i - 1) * step
        bracket_hi = lo + min(grid_resolution, grid_best_i + 1) * step
        amount, value = _golden_max(profit, bracket_lo, bracket_hi)
        amount = _parabolic_polish(profit, amount, 1e-3 * amount)
        value = profit(amount)
        if value > 0.0 and (best is None or value > best[0]):
            best = (value, direction, amount)

    if best is None:
        return None
    return TradeIntent(best[1], best[2], AgentClass.INFORMED)


def uu_propose_trade(pool: PoolState, params: UUParams,
                     stream: Stream) -> Optional[TradeIntent]:
    """The uninformed trader's proposal for one block, or None.

    Consumes draws in the fixed order arrival, direction, size; the
    acceptance gate (:func:`uu_accepts`) is applied separately by the
    caller after pricing the proposal.
    """
    if not stream.uniform() < params.prob_trade_per_block:
        return None
    direction = Direction.A_TO_B if stream.uniform() < 0.5 else Direction.B_TO_A
    fraction = kernels.uu_fraction(
        stream.state, params.size_mean, params.size_std, params.max_fraction)
    reserve_in = pool.reserve_a if direction == Direction.A_TO_B else pool.reserve_b
    return TradeIntent(direction, fraction * reserve_in, AgentClass.UNINFORMED)


def uu_relative_loss(delta_a: float, delta_b: float, fee_value: float,
                     alpha: float, tick: PriceTick,
                     literal_denominator: bool = False) -> float:
    """Relative loss factor of a signed trade: capital change over volume.

    The numerator is the trader's capital change (fee and network charge
    included); the denominator is the gross transaction volume
    ``capital(|delta_a|, |delta_b|)``.  ``literal_denominator`` switches
    to re-applying the fee and alpha terms inside the denominator as
    well, for sensitivity checks.
    """
    if abs(delta_a) + abs(delta_b) == 0.0:
        raise ValueError("degenerate trade has no volume")
    numerator = capital(delta_a, delta_b, tick) - fee_value - alpha
    denominator = capital(abs(delta_a), abs(delta_b), tick)
    if literal_denominator:
        denominator = denominator - fee_value - alpha
    if denominator == 0.0:
        raise ValueError("zero transaction volume")
    return numerator / denominator


def uu_accepts(r: float, stream: Stream) -> bool:
    """Acceptance gate: the trade goes through with probability exp(-|r|)."""
    if not math.isfinite(r):
        raise ValueError("relative loss must be finite")
    return stream.uniform() < math.exp(-abs(r))
