"""Scalar simulation kernels.

Everything here is written as plain scalar Python on floats, int fee
state, and preallocated numpy output arrays, so the same source runs
either JIT-compiled or interpreted (see ``_backend``).  The module is
the single implementation of swap mechanics, fee-state updates, trader
behavior, and the per-block event loop; the object-level API in
``amm``/``fees``/``agents``/``engine`` delegates to these functions.

Block event order (``block_step``):

1. fee-state update for the opening block (block-adaptive compares the
   pool rate at the previous block's start against the rate now;
   oracle-based compares the current spot against the block's fair rate),
2. the uninformed trader: arrival, direction, size, relative-loss
   acceptance gate, execution,
3. the informed trader: closed-form optimal arbitrage, executed only if
   strictly profitable after fees and the network charge,
4. markout accrual at the block's fair prices, per executed trade.

Steps 2 and 3 swap places when ``iu_first`` is set.  The deal-adaptive
fee state advances immediately after every executed trade.

Random draw order per block, from the path's trade stream: arrival
uniform (always consumed); then, only when a trade arrives: direction
uniform, size normals (two raw draws per attempt, redrawn until the
fraction lands in ``(0, max_fraction]``), acceptance uniform.  The
informed trader consumes no draws.
"""

from __future__ import annotations

import math

from ._backend import kernel
from .rng import rand_normal, rand_u01

DIR_A_TO_B = 0
DIR_B_TO_A = 1

AGENT_INFORMED = 0
AGENT_UNINFORMED = 1

POLICY_FX = 0
POLICY_BA = 1
POLICY_DA = 2
POLICY_OB = 3

BPS = 1e-4

# Relative floor below which a candidate arbitrage trade is float dust,
# not a real opportunity; keeps the post-trade state inside the no-trade
# region instead of re-trading on rounding noise.
TRADE_FLOOR = 1e-12

_MAX_SIZE_ATTEMPTS = 1 << 20


@kernel
def swap_quote(x, y, direction, amount_in, fee_frac):
    """Output amount and fee for a swap against reserves (x, y).

    The fee is charged on the input: only ``amount_in * (1 - fee_frac)``
    moves the invariant, but the full input (fee included) enters the
    reserves when the swap is applied.
    """
    effective = amount_in * (1.0 - fee_frac)
    if direction == DIR_A_TO_B:
        amount_out = y - x * y / (x + effective)
    else:
        amount_out = x - x * y / (y + effective)
    return amount_out, amount_in * fee_frac


@kernel
def swap_apply(x, y, fees_a, fees_b, direction, amount_in, fee_frac):
    """Execute a swap; returns updated reserves, fee accruals, output, fee."""
    amount_out, fee_amount = swap_quote(x, y, direction, amount_in, fee_frac)
    if direction == DIR_A_TO_B:
        x += amount_in
        y -= amount_out
        fees_a += fee_amount
    else:
        y += amount_in
        x -= amount_out
        fees_b += fee_amount
    return x, y, fees_a, fees_b, amount_out, fee_amount


@kernel
def ba_shift(fee_ab, fee_ba, q_prev, q_cur, step):
    """Block-adaptive update from the pool rate move over the last block.

    ``q`` is reserve_b / reserve_a.  A drop means net A-to-B flow, so the
    A-to-B fee rises by ``step`` at the other direction's expense; a rise
    shifts the other way; unchanged leaves the schedule alone.  A shift
    only happens while the decremented side stays non-negative, which
    also pins the sum of the two fees exactly.
    """
    if q_cur < q_prev and fee_ba >= step:
        return fee_ab + step, fee_ba - step
    if q_cur > q_prev and fee_ab >= step:
        return fee_ab - step, fee_ba + step
    return fee_ab, fee_ba


@kernel
def da_shift(fee_ab, fee_ba, direction, step):
    """Deal-adaptive update after an executed trade in ``direction``.

    The traded direction's fee rises by ``step`` and the opposite falls;
    the whole update is skipped when the decrement would go negative, so
    both fees stay in [0, sum] with the sum exact.
    """
    if direction == DIR_A_TO_B:
        if fee_ba >= step:
            return fee_ab + step, fee_ba - step
    else:
        if fee_ab >= step:
            return fee_ab - step, fee_ba + step
    return fee_ab, fee_ba


@kernel
def ob_select(fee_ab, fee_ba, spot, fair, f_ad, f_nad):
    """Oracle-based schedule for a block.

    ``spot`` and ``fair`` are both prices of token B in token A units.
    The direction an arbitrageur would trade gets ``f_ad``, the other
    ``f_nad``; an exact tie keeps the previous schedule.
    """
    if spot < fair:
        return f_ad, f_nad
    if spot > fair:
        return f_nad, f_ad
    return fee_ab, fee_ba


@kernel
def iu_optimal(x, y, p_a, p_b, fee_ab, fee_ba, alpha):
    """Best arbitrage trade against fair prices, or no trade.

    With ``m = p_b / p_a`` and ``g`` the traded direction's retained
    fraction ``1 - fee``, the profit-maximizing input solves the
    first-order condition of the trader's capital change under the
    constant-product quote:

        A to B:  (sqrt(x * y * g * m) - x) / g
        B to A:  (sqrt(x * y * g / m) - y) / g

    At most one candidate is positive.  A candidate trades only when it
    clears the dust floor and its capital change, fees and the network
    charge included, is strictly positive.  Returns
    ``(found, direction, amount_in, amount_out, fee_amount)``.
    """
    m = p_b / p_a

    g = 1.0 - fee_ab * BPS
    dx = (math.sqrt(x * y * g * m) - x) / g
    if dx > TRADE_FLOOR * x:
        amount_out, fee_amount = swap_quote(x, y, DIR_A_TO_B, dx, fee_ab * BPS)
        if amount_out * p_b - dx * p_a - alpha > 0.0:
            return True, DIR_A_TO_B, dx, amount_out, fee_amount

    g = 1.0 - fee_ba * BPS
    dy = (math.sqrt(x * y * g / m) - y) / g
    if dy > TRADE_FLOOR * y:
        amount_out, fee_amount = swap_quote(x, y, DIR_B_TO_A, dy, fee_ba * BPS)
        if amount_out * p_a - dy * p_b - alpha > 0.0:
            return True, DIR_B_TO_A, dy, amount_out, fee_amount

    return False, DIR_A_TO_B, 0.0, 0.0, 0.0


@kernel
def uu_fraction(state, mean, std, max_fraction):
    """Trade-size fraction: normal draw redrawn until in (0, max_fraction]."""
    for _ in range(_MAX_SIZE_ATTEMPTS):
        f = mean + std * rand_normal(state)
        if 0.0 < f <= max_fraction:
            return f
    raise RuntimeError("trade size rejection sampling did not terminate")


@kernel
def _execute(block_index, x, y, fees_a, fees_b, p_a, p_b, agent, direction,
             amount_in, amount_out, fee_amount, alpha, n,
             tr_block, tr_agent, tr_dir, tr_in, tr_out, tr_fee, tr_tmo, tr_pmo):
    if direction == DIR_A_TO_B:
        x += amount_in
        y -= amount_out
        fees_a += fee_amount
        value_in = amount_in * p_a
        value_out = amount_out * p_b
    else:
        y += amount_in
        x -= amount_out
        fees_b += fee_amount
        value_in = amount_in * p_b
        value_out = amount_out * p_a
    tr_block[n] = block_index
    tr_agent[n] = agent
    tr_dir[n] = direction
    tr_in[n] = amount_in
    tr_out[n] = amount_out
    tr_fee[n] = fee_amount
    tr_tmo[n] = value_out - value_in - alpha
    tr_pmo[n] = value_in - value_out
    return x, y, fees_a, fees_b, n + 1


@kernel
def block_step(block_index, x, y, fees_a, fees_b, p_a, p_b,
               policy_kind, fee_ab, fee_ba, f_step, f_ad, f_nad, prev_q,
               uu_prob, uu_mean, uu_std, uu_max_fraction, alpha, iu_first,
               state, n,
               tr_block, tr_agent, tr_dir, tr_in, tr_out, tr_fee, tr_tmo, tr_pmo):
    """One block of the event loop; appends executed trades at index ``n``.

    ``prev_q`` is the pool rate (reserve_b / reserve_a) at the previous
    block's start, NaN on the first block.  Returns
    ``(x, y, fees_a, fees_b, fee_ab, fee_ba, q_start, n)`` where
    ``q_start`` feeds the next block's ``prev_q``.
    """
    q_start = y / x
    if policy_kind == POLICY_BA:
        if not math.isnan(prev_q):
            fee_ab, fee_ba = ba_shift(fee_ab, fee_ba, prev_q, q_start, f_step)
    elif policy_kind == POLICY_OB:
        fee_ab, fee_ba = ob_select(fee_ab, fee_ba, x / y, p_b / p_a, f_ad, f_nad)

    for phase in range(2):
        if (phase == 0) == iu_first:
            found, d, amount_in, amount_out, fee_amount = iu_optimal(
                x, y, p_a, p_b, fee_ab, fee_ba, alpha)
            if found:
                x, y, fees_a, fees_b, n = _execute(
                    block_index, x, y, fees_a, fees_b, p_a, p_b,
                    AGENT_INFORMED, d, amount_in, amount_out, fee_amount,
                    alpha, n,
                    tr_block, tr_agent, tr_dir, tr_in, tr_out, tr_fee,
                    tr_tmo, tr_pmo)
                if policy_kind == POLICY_DA:
                    fee_ab, fee_ba = da_shift(fee_ab, fee_ba, d, f_step)
        else:
            if rand_u01(state) < uu_prob:
                d = DIR_A_TO_B if rand_u01(state) < 0.5 else DIR_B_TO_A
                fraction = uu_fraction(state, uu_mean, uu_std, uu_max_fraction)
                amount_in = fraction * (x if d == DIR_A_TO_B else y)
                fee_frac = (fee_ab if d == DIR_A_TO_B else fee_ba) * BPS
                amount_out, fee_amount = swap_quote(x, y, d, amount_in, fee_frac)
                if d == DIR_A_TO_B:
                    value_in = amount_in * p_a
                    value_out = amount_out * p_b
                else:
                    value_in = amount_in * p_b
                    value_out = amount_out * p_a
                r = (value_out - value_in - alpha) / (value_in + value_out)
                if rand_u01(state) < math.exp(-abs(r)):
                    x, y, fees_a, fees_b, n = _execute(
                        block_index, x, y, fees_a, fees_b, p_a, p_b,
                        AGENT_UNINFORMED, d, amount_in, amount_out, fee_amount,
                        alpha, n,
                        tr_block, tr_agent, tr_dir, tr_in, tr_out, tr_fee,
                        tr_tmo, tr_pmo)
                    if policy_kind == POLICY_DA:
                        fee_ab, fee_ba = da_shift(fee_ab, fee_ba, d, f_step)

    return x, y, fees_a, fees_b, fee_ab, fee_ba, q_start, n


@kernel
def run_path_kernel(prices_a, prices_b, x, y,
                    policy_kind, fee_ab, fee_ba, f_step, f_ad, f_nad,
                    uu_prob, uu_mean, uu_std, uu_max_fraction,
                    alpha, iu_first, state,
                    tr_block, tr_agent, tr_dir, tr_in, tr_out, tr_fee,
                    tr_tmo, tr_pmo):
    """Full path loop over ``block_step``; the hot kernel of the batch runner.

    Returns ``(n_trades, x, y, fees_a, fees_b)``.  Trade output arrays
    must hold at least ``2 * len(prices_a)`` entries.
    """
    fees_a = 0.0
    fees_b = 0.0
    prev_q = math.nan
    n = 0
    for t in range(prices_a.shape[0]):
        x, y, fees_a, fees_b, fee_ab, fee_ba, prev_q, n = block_step(
            t, x, y, fees_a, fees_b, prices_a[t], prices_b[t],
            policy_kind, fee_ab, fee_ba, f_step, f_ad, f_nad, prev_q,
            uu_prob, uu_mean, uu_std, uu_max_fraction, alpha, iu_first,
            state, n,
            tr_block, tr_agent, tr_dir, tr_in, tr_out, tr_fee, tr_tmo, tr_pmo)
    return n, x, y, fees_a, fees_b
