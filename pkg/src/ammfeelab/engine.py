"""Block-granular simulation engine and seeded batch runner.

Reproducibility contract: all randomness for path ``i`` of a run derives
from the master seed by the chain ``derive_seed(derive_seed(master, i),
stream_id)`` with stream ids 0 (token-A prices), 1 (token-B prices), and
2 (trades); fee-sweep trials for grid level ``i`` use stream id 3 under
the same chain.  Given a config and master seed, every output bit is
determined, regardless of how many worker threads execute the batch.

Because per-block draw counts never depend on the fee policy, running
several policies from the same master seed reuses identical price paths
and trade streams (common random numbers), which sharpens paired policy
comparisons.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import kernels
from .agents import UUParams
from .amm import Direction, PoolState, PriceTick, capital, init_pool
from .fees import (BlockAdaptiveFee, DealAdaptiveFee, FeePolicy, FixedFee,
                   OracleBasedFee)
from .metrics import MetricLedger, SimResult, TradeRecord, aggregate
from .pricefeed import (REGIMES, PricePath, gbm_generate, load_historical,
                        load_historical_pair, make_path)
from .rng import Stream, derive_seed

STREAM_PRICE_A = 0
STREAM_PRICE_B = 1
STREAM_TRADES = 2
STREAM_SWEEP = 3

POLICY_KINDS = ("fx", "ba", "da", "ob")


def substream(master_seed: int, path_index: int, stream_id: int) -> Stream:
    return Stream(derive_seed(derive_seed(master_seed, path_index), stream_id))


@dataclass(frozen=True)
class PolicySpec:
    """Declarative fee-policy selection; ``build`` makes a fresh instance."""

    kind: str = "fx"
    f_fx: int = 30
    f_init: int = 30
    f_step: int = 1
    f_ad: int = 45
    f_nad: int = 15

    def build(self) -> FeePolicy:
        if self.kind == "fx":
            return FixedFee(self.f_fx)
        if self.kind == "ba":
            return BlockAdaptiveFee(self.f_init, self.f_step)
        if self.kind == "da":
            return DealAdaptiveFee(self.f_init, self.f_step)
        if self.kind == "ob":
            return OracleBasedFee(self.f_ad, self.f_nad)
        raise ValueError(f"unknown fee policy kind {self.kind!r}")

    def kernel_args(self) -> tuple[int, int, int, int, int, int]:
        policy = self.build()
        step, f_ad, f_nad = policy.kernel_params()
        return (policy.kernel_kind, policy.fee_a_to_b, policy.fee_b_to_a,
                step, f_ad, f_nad)


@dataclass(frozen=True)
class SyntheticSource:
    """GBM path generation parameters; explicit mus/sigmas override the regime."""

    n_paths: int = 100
    n_blocks: int = 1440
    regime: str = "high_vol"
    p0_a: float = 1.0
    p0_b: float = 1.0
    mu_a: Optional[float] = None
    sigma_a: Optional[float] = None
    mu_b: Optional[float] = None
    sigma_b: Optional[float] = None

    def params(self) -> tuple[float, float, float, float]:
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}; "
                             f"choose from {sorted(REGIMES)}")
        mu_a, sigma_a, mu_b, sigma_b = REGIMES[self.regime]
        if self.mu_a is not None:
            mu_a = self.mu_a
        if self.sigma_a is not None:
            sigma_a = self.sigma_a
        if self.mu_b is not None:
            mu_b = self.mu_b
        if self.sigma_b is not None:
            sigma_b = self.sigma_b
        return mu_a, sigma_a, mu_b, sigma_b

    def make_path(self, master_seed: int, path_index: int) -> PricePath:
        mu_a, sigma_a, mu_b, sigma_b = self.params()
        series_a = gbm_generate(self.p0_a, mu_a, sigma_a, self.n_blocks,
                                substream(master_seed, path_index, STREAM_PRICE_A))
        series_b = gbm_generate(self.p0_b, mu_b, sigma_b, self.n_blocks,
                                substream(master_seed, path_index, STREAM_PRICE_B))
        return make_path(series_a, series_b,
                         source_label=f"synthetic:{self.regime}:{path_index}",
                         gbm_params={"mu_a": mu_a, "sigma_a": sigma_a,
                                     "mu_b": mu_b, "sigma_b": sigma_b,
                                     "dt": 1.0})


@dataclass(frozen=True)
class HistoricalSource:
    file: Optional[str] = None
    file_a: Optional[str] = None
    file_b: Optional[str] = None

    def load(self) -> PricePath:
        if self.file is not None:
            return load_historical(self.file)
        if self.file_a is not None and self.file_b is not None:
            return load_historical_pair(self.file_a, self.file_b)
        raise ValueError("historical source needs 'file' or both 'file_a' and 'file_b'")


@dataclass(frozen=True)
class SimConfig:
    policy: PolicySpec = PolicySpec()
    uu: UUParams = UUParams()
    source: Union[SyntheticSource, HistoricalSource] = SyntheticSource()
    initial_pool_value: float = 25_000_000.0
    alpha: float = 0.0
    master_seed: int = 1
    iu_before_uu: bool = False
    keep_trades: bool = False

    def __post_init__(self):
        if not self.initial_pool_value > 0.0:
            raise ValueError("initial_pool_value must be positive")
        if self.alpha < 0.0:
            raise ValueError("alpha must be non-negative")

    @property
    def regime_label(self) -> str:
        if isinstance(self.source, SyntheticSource):
            return self.source.regime
        return "historical"

    def n_paths(self) -> int:
        if isinstance(self.source, SyntheticSource):
            return self.source.n_paths
        return 1


def run_block(pool: PoolState, tick: PriceTick, policy: FeePolicy,
              uu_params: UUParams, alpha: float, stream: Stream,
              ledger: Optional[MetricLedger] = None, *,
              prev_q: Optional[float] = None,
              iu_first: bool = False) -> tuple[PoolState, float]:
    """Advance one block: fee update, uninformed step, informed step, metrics.

    ``prev_q`` is the pool rate at the previous block's start (None on
    the first block).  Mutates ``policy``'s fee state, appends executed
    trades to ``ledger``, and returns the new pool plus this block's
    opening rate for the caller to thread into the next call.
    """
    step, f_ad, f_nad = policy.kernel_params()
    blocks = np.empty(2, dtype=np.int64)
    agents = np.empty(2, dtype=np.int64)
    dirs = np.empty(2, dtype=np.int64)
    amounts_in = np.empty(2, dtype=np.float64)
    amounts_out = np.empty(2, dtype=np.float64)
    fee_amounts = np.empty(2, dtype=np.float64)
    trader_mo = np.empty(2, dtype=np.float64)
    pool_mo = np.empty(2, dtype=np.float64)

    x, y, fees_a, fees_b, fee_ab, fee_ba, q_start, n = kernels.block_step(
        tick.block_index, pool.reserve_a, pool.reserve_b,
        pool.fees_accrued_a, pool.fees_accrued_b, tick.p_a, tick.p_b,
        policy.kernel_kind, policy.fee_a_to_b, policy.fee_b_to_a,
        step, f_ad, f_nad,
        math.nan if prev_q is None else prev_q,
        uu_params.prob_trade_per_block, uu_params.size_mean,
        uu_params.size_std, uu_params.max_fraction,
        alpha, iu_first, stream.state, 0,
        blocks, agents, dirs, amounts_in, amounts_out, fee_amounts,
        trader_mo, pool_mo)

    policy.set_state(fee_ab, fee_ba)
    new_pool = PoolState(x, y, fees_a, fees_b)
    if ledger is not None:
        for i in range(n):
            ledger.add(_record_from_arrays(
                blocks, agents, dirs, amounts_in, amounts_out, fee_amounts,
                trader_mo, pool_mo, i))
    return new_pool, q_start


def _record_from_arrays(blocks, agents, dirs, amounts_in, amounts_out,
                        fee_amounts, trader_mo, pool_mo, i) -> TradeRecord:
    direction = Direction(int(dirs[i]))
    if direction == Direction.A_TO_B:
        delta_a, delta_b = float(amounts_in[i]), -float(amounts_out[i])
    else:
        delta_a, delta_b = -float(amounts_out[i]), float(amounts_in[i])
    return TradeRecord(
        block_index=int(blocks[i]),
        agent_class=int(agents[i]),
        direction=direction,
        delta_a=delta_a,
        delta_b=delta_b,
        fee_amount=float(fee_amounts[i]),
        trader_markout=float(trader_mo[i]),
        pool_markout=float(pool_mo[i]),
    )


def run_path(config: SimConfig, path: PricePath, path_index: int = 0) -> SimResult:
    """Simulate one full price path; deterministic in (master_seed, path_index)."""
    if len(path) == 0:
        raise ValueError("price path is empty")
    n_blocks = len(path)
    tick0 = path.tick(0)
    pool0 = init_pool(config.initial_pool_value, tick0)

    kind, fee_ab, fee_ba, step, f_ad, f_nad = config.policy.kernel_args()
    stream = substream(config.master_seed, path_index, STREAM_TRADES)

    cap = 2 * n_blocks
    blocks = np.empty(cap, dtype=np.int64)
    agents = np.empty(cap, dtype=np.int64)
    dirs = np.empty(cap, dtype=np.int64)
    amounts_in = np.empty(cap, dtype=np.float64)
    amounts_out = np.empty(cap, dtype=np.float64)
    fee_amounts = np.empty(cap, dtype=np.float64)
    trader_mo = np.empty(cap, dtype=np.float64)
    pool_mo = np.empty(cap, dtype=np.float64)

    prices_a = np.ascontiguousarray(path.prices_a, dtype=np.float64)
    prices_b = np.ascontiguousarray(path.prices_b, dtype=np.float64)

    n, x, y, fees_a, fees_b = kernels.run_path_kernel(
        prices_a, prices_b, pool0.reserve_a, pool0.reserve_b,
        kind, fee_ab, fee_ba, step, f_ad, f_nad,
        config.uu.prob_trade_per_block, config.uu.size_mean,
        config.uu.size_std, config.uu.max_fraction,
        config.alpha, config.iu_before_uu, stream.state,
        blocks, agents, dirs, amounts_in, amounts_out, fee_amounts,
        trader_mo, pool_mo)

    final_pool = PoolState(x, y, fees_a, fees_b)
    final_tick = path.tick(n_blocks - 1)

    informed = agents[:n] == kernels.AGENT_INFORMED
    iu_mo = float(trader_mo[:n][informed].sum())
    uu_mo = float(trader_mo[:n][~informed].sum())
    iu_trades = int(informed.sum())
    uu_trades = int(n - iu_trades)

    lp_mo = (capital(x, y, final_tick)
             - capital(pool0.reserve_a, pool0.reserve_b, final_tick))
    il_div = (capital(pool0.reserve_a, pool0.reserve_b, final_tick)
              - capital(x - fees_a, y - fees_b, final_tick))

    ledger = None
    if config.keep_trades:
        ledger = MetricLedger(pool0=pool0, tick0=tick0)
        for i in range(n):
            ledger.add(_record_from_arrays(
                blocks, agents, dirs, amounts_in, amounts_out, fee_amounts,
                trader_mo, pool_mo, i))
        ledger.finalize(final_pool, final_tick)
        _check_totals(ledger, iu_mo, uu_mo)

    return SimResult(
        path_index=path_index,
        iu_mo=iu_mo,
        uu_mo=uu_mo,
        lp_mo=float(lp_mo),
        il_divergence=float(il_div),
        il_hold=float(-lp_mo),
        iu_trades=iu_trades,
        uu_trades=uu_trades,
        final_pool=final_pool,
        ledger=ledger,
    )


def _check_totals(ledger: MetricLedger, iu_mo: float, uu_mo: float) -> None:
    for cls, total in ((kernels.AGENT_INFORMED, iu_mo),
                       (kernels.AGENT_UNINFORMED, uu_mo)):
        folded = ledger.trader_mo_by_class.get(cls, 0.0)
        scale = max(1.0, abs(total), abs(folded))
        if abs(folded - total) > 1e-9 * scale:
            raise AssertionError(
                f"ledger total {folded} disagrees with path total {total}")


def _worker_count(n_tasks: int) -> int:
    env = os.environ.get("AMMFEELAB_THREADS")
    if env is not None:
        try:
            cap = int(env)
        except ValueError:
            raise ValueError(f"AMMFEELAB_THREADS must be an integer, got {env!r}")
        cap = max(1, cap)
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_tasks))


@dataclass(frozen=True)
class BatchResult:
    results: list[SimResult]
    mean: dict[str, float]
    std: dict[str, float]


def run_batch(config: SimConfig) -> BatchResult:
    """Run every path of the configured source and aggregate the metrics.

    Paths may execute on worker threads (capped by AMMFEELAB_THREADS);
    results are combined in path-index order, so the aggregate does not
    depend on scheduling.
    """
    if isinstance(config.source, SyntheticSource):
        n_paths = config.source.n_paths
        if n_paths < 1:
            raise ValueError("n_paths must be at least 1")

        def job(i: int) -> SimResult:
            return run_path(config, config.source.make_path(config.master_seed, i), i)
    else:
        shared = config.source.load()
        n_paths = 1

        def job(i: int) -> SimResult:
            return run_path(config, shared, i)

    workers = _worker_count(n_paths)
    if workers == 1:
        results = [job(i) for i in range(n_paths)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, range(n_paths)))

    rows = aggregate(results)
    return BatchResult(
        results=results,
        mean=dict((name, mean) for name, mean, _ in rows),
        std=dict((name, std) for name, _, std in rows),
    )


@dataclass(frozen=True)
class SweepConfig:
    """Fixed-trade fee sweep: one trade size, constant prices, a fee grid."""

    pool_value: float = 25_000_000.0
    p_a: float = 1.0
    p_b: float = 1.0
    trade_fraction: float = 0.05
    alpha: float = 0.0
    fee_min: float = 0.0
    fee_max: float = 1.0
    fee_step: float = 0.0025
    n_trials: int = 100_000
    seed: int = 1

    def __post_init__(self):
        if not self.pool_value > 0.0:
            raise ValueError("pool_value must be positive")
        if not (self.p_a > 0.0 and self.p_b > 0.0):
            raise ValueError("prices must be positive")
        if not 0.0 < self.trade_fraction:
            raise ValueError("trade_fraction must be positive")
        if not (0.0 <= self.fee_min <= self.fee_max <= 1.0):
            raise ValueError("fee grid must satisfy 0 <= fee_min <= fee_max <= 1")
        if not self.fee_step > 0.0:
            raise ValueError("fee_step must be positive")
        if self.n_trials < 1:
            raise ValueError("n_trials must be at least 1")


@dataclass(frozen=True)
class SweepResult:
    fees: np.ndarray
    expected: np.ndarray
    mc: np.ndarray
    mc_se: np.ndarray
    argmax_fee: float
    argmax_profit: float


def fee_sweep(cfg: SweepConfig) -> SweepResult:
    """Expected LP fee revenue against the fee level, for one fixed trade.

    For each fee the output amount follows the constant-product quote,
    the trader's relative loss sets the acceptance probability
    ``exp(-|r|)``, and the LP's revenue is the fee value of the input.
    The closed-form expectation is reported alongside a Monte-Carlo
    estimate over ``n_trials`` Bernoulli acceptance draws per fee level.
    """
    x = cfg.pool_value / 2.0 / cfg.p_a
    y = cfg.pool_value / 2.0 / cfg.p_b
    dx = cfg.trade_fraction * x

    n_levels = int(math.floor((cfg.fee_max - cfg.fee_min) / cfg.fee_step + 0.5)) + 1
    fees = cfg.fee_min + cfg.fee_step * np.arange(n_levels)

    amount_out = y - x * y / (x + dx * (1.0 - fees))
    value_in = dx * cfg.p_a
    value_out = amount_out * cfg.p_b
    r = (value_out - value_in - cfg.alpha) / (value_in + value_out)
    p_accept = np.exp(-np.abs(r))
    fee_value = fees * dx * cfg.p_a
    expected = p_accept * fee_value

    mc = np.empty(n_levels)
    mc_se = np.empty(n_levels)
    for i in range(n_levels):
        stream = substream(cfg.seed, i, STREAM_SWEEP)
        accepted = stream.uniforms(cfg.n_trials) < p_accept[i]
        mc[i] = accepted.mean() * fee_value[i]
        mc_se[i] = fee_value[i] * math.sqrt(
            p_accept[i] * (1.0 - p_accept[i]) / cfg.n_trials)

    best = int(np.argmax(expected))
    return SweepResult(
        fees=fees, expected=expected, mc=mc, mc_se=mc_se,
        argmax_fee=float(fees[best]), argmax_profit=float(expected[best]),
    )
